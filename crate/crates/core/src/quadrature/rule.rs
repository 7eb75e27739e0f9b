//! Product rules for dv_lambda on the disk (n = 1) and on B^2 (n = 2).
//!
//! The radial variable is r = |z|. The radial density is
//! r^(2n-1) (1-r^2)^alpha = r^(2n-1) (1-r)^alpha (1+r)^alpha; Gauss-Jacobi
//! handles r^(2n-1) (1-r)^alpha and the smooth factor (1+r)^alpha is folded
//! into the weights. Working in r instead of s = r^2 keeps profiles that are
//! odd in r (sin of the Bergman distance, say) spectrally convergent.
//!
//! n = 2 uses z = (r sqrt(t) e^{i t1}, r sqrt(1-t) e^{i t2}); the normalized
//! volume is then 4 r^3 dr dt dt1 dt2 / (4 pi^2) with t Gauss-Legendre.

use rayon::prelude::*;

use super::gauss::{gauss_jacobi, gauss_legendre};
use crate::bergman::{Point, Weight};
use crate::error::{Error, Result};
use crate::special::pairwise_sum;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleSize {
    pub radial: usize,
    pub angular: usize,
    /// Gauss-Legendre nodes in the simplex variable t (n = 2 only).
    pub simplex: usize,
}

impl RuleSize {
    pub fn for_degree(n: usize, weight: &Weight, degree: usize) -> Self {
        let radial = (degree + alpha_degree(weight) + 1) / 2 + 8;
        match n {
            1 => Self { radial, angular: (2 * degree + 8).max(64), simplex: 1 },
            _ => Self { radial, angular: (degree + 4).max(16), simplex: degree / 4 + 6 },
        }
    }

    fn exactness(&self, n: usize, weight: &Weight) -> usize {
        // r^(2k) (1+r)^alpha must have degree below 2 * radial
        let r = (2 * self.radial).saturating_sub(1 + alpha_degree(weight));
        let a = self.angular - 1;
        if n == 1 {
            r.min(a)
        } else {
            r.min(a).min(4 * self.simplex - 2)
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProductRule {
    weight: Weight,
    size: RuleSize,
    exactness: usize,
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

impl ProductRule {
    pub fn n(&self) -> usize {
        self.weight.n()
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn size(&self) -> RuleSize {
        self.size
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

}

fn alpha_degree(weight: &Weight) -> usize {
    weight.alpha().max(0.0).ceil() as usize
}

pub fn build_rule(n: usize, weight: &Weight, target_degree: usize) -> Result<ProductRule> {
    build_rule_sized(n, weight, RuleSize::for_degree(n, weight, target_degree))
}

/// Radial nodes r and normalized weights for r^(2n-1) (1-r^2)^alpha on [0,1].
fn radial_rule(n: usize, alpha: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = gauss_jacobi(count, alpha, (2 * n - 1) as f64)?;
    let r: Vec<f64> = g.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect();
    let lw: Vec<f64> = g.weights.iter().zip(&r).map(|(w, r)| w.ln() + alpha * r.ln_1p()).collect();
    let top = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok((r, w.into_iter().map(|v| v / total).collect()))
}

pub fn build_rule_sized(n: usize, weight: &Weight, size: RuleSize) -> Result<ProductRule> {
    if weight.n() != n {
        return Err(Error::Dimension { expected: weight.n(), got: n });
    }
    let k = size.angular;
    let angles: Vec<C64> = (0..k).map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / k as f64)).collect();
    let alpha = weight.alpha();
    let (mut nodes, mut weights) = (Vec::new(), Vec::new());
    match n {
        1 => {
            let (rad, rw) = radial_rule(1, alpha, size.radial)?;
            for (&r, w) in rad.iter().zip(&rw) {
                for &e in &angles {
                    nodes.push(Point::from_coords_unchecked(smallvec::smallvec![e * r]));
                    weights.push(w / k as f64);
                }
            }
        }
        2 => {
            let (rad, rw) = radial_rule(2, alpha, size.radial)?;
            let tri = gauss_legendre(size.simplex)?;
            let kk = (k * k) as f64;
            for (&r, ws) in rad.iter().zip(&rw) {
                for (y, wt) in tri.nodes.iter().zip(&tri.weights) {
                    let t = 0.5 * (1.0 + y);
                    let (r1, r2) = (r * t.sqrt(), r * (1.0 - t).sqrt());
                    for &e1 in &angles {
                        for &e2 in &angles {
                            nodes.push(Point::from_coords_unchecked(smallvec::smallvec![e1 * r1, e2 * r2]));
                            weights.push(ws * wt / kk);
                        }
                    }
                }
            }
        }
        other => return Err(Error::UnsupportedDimension(other)),
    }
    let total = pairwise_sum(&weights);
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(ProductRule { weight: *weight, size, exactness: size.exactness(n, weight), nodes, weights })
}

/// Weighted sum of precomputed node values in a fixed pairwise order.
pub fn integrate_values(rule: &ProductRule, values: &[C64]) -> C64 {
    let terms: Vec<C64> = values.iter().zip(&rule.weights).map(|(v, w)| v * *w).collect();
    pairwise_sum(&terms)
}

pub fn integrate(f: &(dyn Fn(&[C64]) -> C64 + Sync), rule: &ProductRule) -> Result<C64> {
    let values: Vec<C64> = rule.nodes.par_iter().map(|p| f(p.coords())).collect();
    if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { index: i, location: format!("{:?}", rule.nodes[i].coords()) });
    }
    Ok(integrate_values(rule, &values))
}
