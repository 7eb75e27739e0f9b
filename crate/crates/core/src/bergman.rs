//! Geometry of the unit ball in C^n and the weighted Bergman space on it.
//!
//! Conventions: `<z,w> = sum z_i conj(w_i)`, `h(z,w) = 1 - <z,w>`, the weight
//! is `dv_lambda = c_lambda h(z,z)^(lambda-p) dv` with `dv` normalized volume,
//! and the metric is `beta(z,w) = artanh |phi_z(w)|`.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::special::{ln_factorial, ln_gamma_fn};
use crate::C64;

pub type Coords = SmallVec<[C64; 2]>;
pub type MultiIndex = SmallVec<[u32; 2]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallGeometry {
    n: usize,
}

impl BallGeometry {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Genus p = n + 1.
    pub fn genus(&self) -> usize {
        self.n + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Coords,
}

impl Point {
    pub fn new(coords: impl IntoIterator<Item = C64>) -> Result<Self> {
        let coords: Coords = coords.into_iter().collect();
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point needs at least one coordinate".into()));
        }
        let p = Self { coords };
        let norm = p.norm();
        if !(norm < 1.0) {
            return Err(Error::OutsideBall { norm });
        }
        Ok(p)
    }

    /// Point of the unit disk.
    pub fn disk(z: C64) -> Result<Self> {
        Self::new([z])
    }

    pub fn origin(n: usize) -> Self {
        Self { coords: smallvec::smallvec![C64::new(0.0, 0.0); n] }
    }

    /// Skips the norm check; used for images of interior points under maps
    /// that preserve the ball, where rounding could touch the boundary.
    pub(crate) fn from_coords_unchecked(coords: Coords) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.coords)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.coords.iter().map(|c| c * t))
    }
}

pub(crate) fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// `<z,w>`, linear in z and conjugate-linear in w.
pub fn inner(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

/// h(z,w) = 1 - <z,w>. `z` may lie on the closed ball.
pub fn jordan_h(z: &[C64], w: &[C64]) -> C64 {
    C64::new(1.0, 0.0) - inner(z, w)
}

/// h(z,z) = 1 - |z|^2 as a real number.
pub fn h_diag(z: &[C64]) -> f64 {
    1.0 - norm_sqr(z)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight {
    n: usize,
    lambda: f64,
    alpha: f64,
    ln_c: f64,
}

impl Weight {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 || !lambda.is_finite() || lambda <= n as f64 {
            return Err(Error::InvalidWeight { lambda, n });
        }
        let alpha = lambda - n as f64 - 1.0;
        let ln_c = ln_gamma_fn(n as f64 + 1.0 + alpha) - ln_factorial(n as u32) - ln_gamma_fn(alpha + 1.0);
        Ok(Self { n, lambda, alpha, ln_c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn genus(&self) -> usize {
        self.n + 1
    }

    pub fn c_lambda(&self) -> f64 {
        self.ln_c.exp()
    }

    pub fn ln_c_lambda(&self) -> f64 {
        self.ln_c
    }

    /// Factor sqrt(lambda / p) between beta_lambda and beta.
    pub fn metric_scale(&self) -> f64 {
        (self.lambda / self.genus() as f64).sqrt()
    }
}

fn principal_pow(h: C64, e: f64) -> C64 {
    (h.ln() * e).exp()
}

/// K_lambda(z,w) = h(z,w)^(-lambda), principal branch.
pub fn kernel(weight: &Weight, z: &Point, w: &Point) -> C64 {
    principal_pow(jordan_h(z.coords(), w.coords()), -weight.lambda)
}

/// k_w(z) = h(z,w)^(-lambda) h(w,w)^(lambda/2).
pub fn normalized_kernel_at(weight: &Weight, w: &Point, z: &[C64]) -> C64 {
    let hz = jordan_h(z, w.coords());
    (-weight.lambda * hz.ln() + 0.5 * weight.lambda * h_diag(w.coords()).ln()).exp()
}

pub fn normalized_kernel(weight: Weight, w: Point) -> impl Fn(&[C64]) -> C64 + Send + Sync {
    move |z| normalized_kernel_at(&weight, &w, z)
}

/// |k_z(w)|^2 = h(z,z)^lambda / |h(w,z)|^(2 lambda), evaluated in log space.
pub fn kernel_density(weight: &Weight, z: &[C64], w: &[C64]) -> f64 {
    let l = weight.lambda;
    (l * h_diag(z).ln() - l * jordan_h(w, z).norm_sqr().ln()).exp()
}

/// The involution phi_a exchanging 0 and a.
#[derive(Clone, Debug)]
pub struct Mobius {
    a: Coords,
    a_sq: f64,
    s_a: f64,
}

pub fn mobius(a: &Point) -> Mobius {
    let a_sq = a.norm_sqr();
    Mobius { a: a.coords.clone(), a_sq, s_a: (1.0 - a_sq).sqrt() }
}

impl Mobius {
    pub fn center(&self) -> &[C64] {
        &self.a
    }

    pub fn apply_coords(&self, z: &[C64]) -> Coords {
        let za = inner(z, &self.a);
        let denom = C64::new(1.0, 0.0) - za;
        if self.a_sq == 0.0 {
            return z.iter().map(|c| -c).collect();
        }
        // P_a z = <z,a>/|a|^2 a,  Q_a z = z - P_a z
        let coef = za / self.a_sq;
        self.a
            .iter()
            .zip(z)
            .map(|(&ai, &zi)| {
                let p = ai * coef;
                let q = zi - p;
                (ai - p - q * self.s_a) / denom
            })
            .collect()
    }

    pub fn apply(&self, z: &Point) -> Point {
        Point::from_coords_unchecked(self.apply_coords(z.coords()))
    }

    /// Complex Jacobian determinant of phi_a at z.
    pub fn jacobian_det(&self, z: &[C64]) -> C64 {
        let n = self.a.len();
        let d = C64::new(1.0, 0.0) - inner(z, &self.a);
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        // L = -(P_a + s Q_a); J = L/D + N conj(a)^T / D^2 with N = a + L z
        let mut lz: Coords = smallvec::smallvec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                let p = if self.a_sq > 0.0 { self.a[i] * self.a[j].conj() / self.a_sq } else { C64::new(0.0, 0.0) };
                let l = -(p + (C64::new(delta, 0.0) - p) * self.s_a);
                m[i * n + j] = l;
                lz[i] += l * z[j];
            }
        }
        for i in 0..n {
            let ni = self.a[i] + lz[i];
            for j in 0..n {
                m[i * n + j] = m[i * n + j] / d + ni * self.a[j].conj() / (d * d);
            }
        }
        complex_det(&mut m, n)
    }
}

fn complex_det(m: &mut [C64], n: usize) -> C64 {
    let mut det = C64::new(1.0, 0.0);
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i * n + k].norm().total_cmp(&m[j * n + k].norm())).unwrap();
        if m[piv * n + k].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let p = m[k * n + k];
        det *= p;
        for i in k + 1..n {
            let f = m[i * n + k] / p;
            for j in k..n {
                let v = m[k * n + j];
                m[i * n + j] -= f * v;
            }
        }
    }
    det
}

/// beta(z,w) = artanh |phi_z(w)|, computed as ln(1+x) - ln(1-x^2)/2 with
/// 1 - x^2 = h(z,z)h(w,w)/|h(z,w)|^2 so it stays accurate near the boundary.
pub fn bergman_distance(z: &Point, w: &Point) -> f64 {
    if z == w {
        return 0.0;
    }
    let x = norm_sqr(&mobius(z).apply_coords(w.coords())).sqrt().min(1.0);
    let q = h_diag(z.coords()) * h_diag(w.coords()) / jordan_h(z.coords(), w.coords()).norm_sqr();
    (x.ln_1p() - 0.5 * q.ln()).max(0.0)
}

pub fn beta_lambda(weight: &Weight, z: &Point, w: &Point) -> f64 {
    weight.metric_scale() * bergman_distance(z, w)
}

/// Normalized volume of the Bergman ball E(z, rho).
pub fn bergman_ball_volume(z: &Point, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {rho}")));
    }
    let n = z.dim() as i32;
    let t2 = rho.tanh().powi(2);
    let zz = z.norm_sqr();
    Ok(t2.powi(n) * (1.0 - zz).powi(n + 1) / (1.0 - t2 * zz).powi(n + 1))
}

/// ln ||z^beta||^2 = ln beta! + ln Gamma(n+alpha+1) - ln Gamma(n+|beta|+alpha+1).
pub fn ln_monomial_norm_sq(weight: &Weight, idx: &[u32]) -> f64 {
    let n = weight.n as f64;
    let total: u32 = idx.iter().sum();
    let facts: f64 = idx.iter().map(|&k| ln_factorial(k)).sum();
    facts + ln_gamma_fn(n + weight.alpha + 1.0) - ln_gamma_fn(n + total as f64 + weight.alpha + 1.0)
}

pub fn monomial_norm(weight: &Weight, idx: &[u32]) -> Result<f64> {
    if idx.len() != weight.n {
        return Err(Error::Dimension { expected: weight.n, got: idx.len() });
    }
    Ok((0.5 * ln_monomial_norm_sq(weight, idx)).exp())
}

/// e_beta(z) = z^beta / ||z^beta||.
pub fn basis_eval(weight: &Weight, idx: &[u32], z: &[C64]) -> C64 {
    let mut v = C64::new((-0.5 * ln_monomial_norm_sq(weight, idx)).exp(), 0.0);
    for (zi, &k) in z.iter().zip(idx) {
        v *= zi.powu(k);
    }
    v
}

/// sqrt(lambda) beta(0,z) h(z,z)^(rho lambda) at |z| = r.
pub fn growth_ratio(lambda: f64, rho: f64, r: f64) -> f64 {
    lambda.sqrt() * r.atanh() * (rho * lambda * (1.0 - r * r).ln()).exp()
}
