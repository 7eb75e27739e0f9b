//! One-dimensional radial integrals.
//!
//! `beta_averages` returns, for each exponent a, the mean of F(r) under the
//! probability density proportional to s^a (1-s)^b ds with s = r^2. Toeplitz
//! entries of radial and polyradial symbols reduce to such means. The rule is
//! composite in r: dyadic Gauss-Legendre panels towards r = 0 (so profiles
//! singular at the origin still converge), the mirror image towards r = 1,
//! and a final Gauss-Jacobi panel carrying (1-r)^b. Node placement does not depend on a, so one
//! set of profile values serves every exponent.

use rayon::prelude::*;

use super::gauss::{gauss_jacobi, gauss_legendre};
use crate::error::{Error, Result};
use crate::C64;

pub type RadialFn<'a> = &'a (dyn Fn(f64) -> C64 + Sync);

const DYADIC_PANELS: i32 = 40;
const START_NODES: usize = 16;
const MAX_NODES: usize = 128;
const TOL: f64 = 1e-12;
const ACCEPT: f64 = 1e-9;

/// Nodes r and log-weights for int g(r) (1-r^2)^b dr over [0,1].
fn graded_rule(q: usize, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let leg = gauss_legendre(q)?;
    let (mut r, mut lw) = (Vec::new(), Vec::new());
    let mut push_panel = |lo: f64, hi: f64| {
        let len = hi - lo;
        for (x, w) in leg.nodes.iter().zip(&leg.weights) {
            let t = lo + 0.5 * len * (1.0 + x);
            r.push(t);
            lw.push((len * w).ln() + b * (-t * t).ln_1p());
        }
    };
    push_panel(0.0, 2f64.powi(-DYADIC_PANELS));
    for k in (1..DYADIC_PANELS).rev() {
        push_panel(2f64.powi(-k - 1), 2f64.powi(-k));
    }
    // mirrored dyadic panels towards r = 1, so profiles oscillating in
    // ln(1 - r) converge too, closed by a Gauss-Jacobi panel carrying (1-r)^b
    for k in 1..DYADIC_PANELS {
        let (lo, hi) = (1.0 - 2f64.powi(-k), 1.0 - 2f64.powi(-k - 1));
        let len = hi - lo;
        for (x, w) in leg.nodes.iter().zip(&leg.weights) {
            let t = lo + 0.5 * len * (1.0 + x);
            r.push(t);
            lw.push((len * w).ln() + b * ((1.0 - t) * (1.0 + t)).ln());
        }
    }
    let jac = gauss_jacobi(q, b, 0.0)?;
    let h = 2f64.powi(-DYADIC_PANELS - 1);
    let shift = (b + 1.0) * std::f64::consts::LN_2 - (b + 1.0).ln() + (b + 1.0) * h.ln();
    for (x, w) in jac.nodes.iter().zip(&jac.weights) {
        let t = 1.0 - h * (1.0 - x);
        r.push(t);
        lw.push(w.ln() + shift + b * t.ln_1p());
    }
    Ok((r, lw))
}

fn averages_on(r: &[f64], lw: &[f64], vals: &[C64], exps: &[f64]) -> Vec<C64> {
    exps.iter()
        .map(|&a| {
            let logs: Vec<f64> = lw.iter().zip(r).map(|(l, t)| l + (2.0 * a + 1.0) * t.ln()).collect();
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
            for (l, v) in logs.iter().zip(vals) {
                let w = (l - top).exp();
                num += v * w;
                den += w;
            }
            num / den
        })
        .collect()
}

pub fn beta_averages(f: RadialFn, exps: &[f64], b: f64) -> Result<Vec<C64>> {
    if !(b > -1.0) || exps.iter().any(|&a| !(a > -1.0)) {
        return Err(Error::InvalidParameter(format!("beta average needs exponents > -1 (b = {b})")));
    }
    let mut prev: Option<Vec<C64>> = None;
    let mut q = START_NODES;
    let mut change = f64::INFINITY;
    while q <= MAX_NODES {
        let (r, lw) = graded_rule(q, b)?;
        let vals: Vec<C64> = r.par_iter().map(|&t| f(t)).collect();
        if let Some(i) = vals.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index: i, location: format!("r = {}", r[i]) });
        }
        let cur = averages_on(&r, &lw, &vals, exps);
        if let Some(p) = &prev {
            change = cur.iter().zip(p).map(|(x, y)| (x - y).norm() / x.norm().max(1.0)).fold(0.0, f64::max);
            if change < TOL {
                return Ok(cur);
            }
        }
        prev = Some(cur);
        q *= 2;
    }
    if change < ACCEPT {
        return Ok(prev.unwrap());
    }
    Err(Error::NoConvergence { tol: ACCEPT, change })
}

/// (alpha+1) int_0^1 g(s) (1-s)^alpha ds by Gauss-Jacobi with node doubling.
pub fn radial_weighted_integral(g: RadialFn, alpha: f64) -> Result<C64> {
    let mut prev: Option<C64> = None;
    let mut change = f64::INFINITY;
    let mut n = 16;
    while n <= 1024 {
        let rule = gauss_jacobi(n, alpha, 0.0)?;
        let v: C64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| g(0.5 * (1.0 + x)) * *w).sum();
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { index: 0, location: "radial integrand".into() });
        }
        if let Some(p) = prev {
            change = (v - p).norm() / v.norm().max(1e-300);
            if change < 1e-10 {
                return Ok(v);
            }
        }
        prev = Some(v);
        n *= 2;
    }
    Err(Error::NoConvergence { tol: 1e-10, change })
}

pub use super::oscillatory::beta_averages_oscillatory;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{monomial_norm, Weight};
    use crate::special::ln_beta;

    fn one(_: f64) -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn radial_integral_examples() {
        assert!((radial_weighted_integral(&one, 3.0).unwrap().re - 1.0).abs() < 1e-14);
        let v = radial_weighted_integral(&|s| C64::new(s, 0.0), 0.0).unwrap();
        assert!((v.re - 0.5).abs() < 1e-14);
        for alpha in [0.0, 6.0, 30.0] {
            let w = Weight::new(1, alpha + 2.0).unwrap();
            for m in [1u32, 5, 20] {
                let v = radial_weighted_integral(&|s| C64::new(s.powi(m as i32), 0.0), alpha).unwrap();
                let exact = monomial_norm(&w, &[m]).unwrap().powi(2);
                assert!((v.re - exact).abs() < 1e-12 * exact.max(1e-30), "{alpha} {m}");
            }
        }
    }

    #[test]
    fn radial_integral_reports_oscillation() {
        let err = radial_weighted_integral(&|s| C64::from_polar(1.0, 1.0 / s), 0.0).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn averages_of_powers_match_beta_ratios() {
        for &b in &[0.0, 6.0, 126.0] {
            let exps: Vec<f64> = (0..=64).map(|m| m as f64).collect();
            for &k in &[1i32, 2, 3] {
                let f = move |r: f64| C64::new(r.powi(k), 0.0);
                let got = beta_averages(&f, &exps, b).unwrap();
                for (&a, g) in exps.iter().zip(&got) {
                    let exact = (ln_beta(a + 1.0 + 0.5 * k as f64, b + 1.0) - ln_beta(a + 1.0, b + 1.0)).exp();
                    assert!((g.re - exact).abs() < 1e-12, "b={b} a={a} k={k}: {} vs {exact}", g.re);
                }
            }
        }
    }

    #[test]
    fn singular_profile_converges() {
        let f = |r: f64| C64::new((1.0 + 1.0 / r).ln().ln().sin(), 0.0);
        let v = beta_averages(&f, &[0.0, 10.0], 6.0).unwrap();
        assert!(v.iter().all(|x| x.norm() <= 1.0));
    }
}
