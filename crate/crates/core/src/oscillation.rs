//! Berezin transform, mean oscillation, oscillation seminorms and averages
//! over Bergman balls, all sampled on a metrically uniform grid.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bergman::{beta_lambda, bergman_ball_volume, h_diag, inner, mobius, norm_sqr, Coords, Point, Weight};
use crate::error::{Error, Result};
use crate::quadrature::{build_rule, integrate_adaptive_rel, ProductRule};
use crate::special::pairwise_sum;
use crate::symbols::{RadialProfile, Symbol, Tags};
use crate::C64;

/// Radii r_k = tanh(k delta) up to the beta horizon, `angles` points per circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub horizon: f64,
    pub delta: f64,
    pub angles: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { horizon: 6.0, delta: 0.25, angles: 32 }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta:{}:{}:{}", self.horizon, self.delta, self.angles)
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// "beta:<horizon>:<delta>:<angles>"
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid spec '{s}' is not beta:<horizon>:<delta>:<angles>"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 || parts[0] != "beta" {
            return Err(bad());
        }
        let horizon: f64 = parts[1].parse().map_err(|_| bad())?;
        let delta: f64 = parts[2].parse().map_err(|_| bad())?;
        let angles: usize = parts[3].parse().map_err(|_| bad())?;
        if !(horizon > 0.0 && delta > 0.0 && delta <= horizon && angles > 0 && horizon < 18.0) {
            return Err(bad());
        }
        Ok(Self { horizon, delta, angles })
    }
}

#[derive(Clone, Debug)]
pub struct EvaluationGrid {
    spec: GridSpec,
    points: Vec<Point>,
    /// Index of the first point on each circle (the origin is circle 0).
    circle_starts: Vec<usize>,
}

impl EvaluationGrid {
    /// On B^2 the circle points are (r cos psi e^{i theta}, r sin psi) with
    /// psi and theta on a small product lattice.
    pub fn new(n: usize, spec: GridSpec) -> Result<Self> {
        let count = (spec.horizon / spec.delta + 1e-9).floor() as usize;
        let mut points = vec![Point::origin(n)];
        let mut circle_starts = vec![0];
        for k in 1..=count {
            let r = (k as f64 * spec.delta).tanh();
            circle_starts.push(points.len());
            for j in 0..spec.angles {
                let frac = j as f64 / spec.angles as f64;
                let coords: Coords = match n {
                    1 => smallvec::smallvec![C64::from_polar(r, std::f64::consts::TAU * frac)],
                    2 => {
                        let psi = std::f64::consts::FRAC_PI_2 * (j % 4) as f64 / 4.0;
                        let theta = std::f64::consts::TAU * (j / 4) as f64 / spec.angles.div_ceil(4) as f64;
                        smallvec::smallvec![C64::from_polar(r * psi.cos(), theta), C64::new(r * psi.sin(), 0.0)]
                    }
                    other => return Err(Error::UnsupportedDimension(other)),
                };
                points.push(Point::from_coords_unchecked(coords));
            }
        }
        Ok(Self { spec, points, circle_starts })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices to visit for `f`: one point per circle when f is radial.
    pub fn indices_for(&self, f: &Symbol) -> Vec<usize> {
        if f.has(Tags::RADIAL) {
            self.circle_starts.clone()
        } else {
            (0..self.points.len()).collect()
        }
    }
}

/// A sampled supremum and where it was attained (first maximum in index order).
#[derive(Clone, Debug)]
pub struct SupResult {
    pub value: f64,
    pub index: usize,
    pub point: Point,
}

fn sup_over(grid: &EvaluationGrid, idx: &[usize], values: &[f64]) -> SupResult {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    SupResult { value: values[best], index: idx[best], point: grid.points()[idx[best]].clone() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BerezinPath {
    Kernel,
    Convolution,
}

/// B(f)(z), B(|f|^2)(z) and the centered second moment int |f o phi_z - B f(z)|^2 dv_lambda.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub mean: C64,
    pub second: f64,
    pub centered: f64,
}

impl Moments {
    /// B(|f|^2) - |B f|^2.
    pub fn variance_form(&self) -> f64 {
        self.second - self.mean.norm_sqr()
    }

    /// int |f o phi_z - c|^2 dv_lambda for a constant c.
    pub fn spread_about(&self, c: C64) -> f64 {
        self.centered + (self.mean - c).norm_sqr()
    }
}

/// Berezin transform on a fixed rule for dv_lambda.
#[derive(Clone, Debug)]
pub struct Berezin {
    weight: Weight,
    rule: ProductRule,
}

impl Berezin {
    pub fn default_degree(n: usize) -> usize {
        if n == 1 {
            64
        } else {
            16
        }
    }

    pub fn new(weight: &Weight, degree: usize) -> Result<Self> {
        Ok(Self { weight: *weight, rule: build_rule(weight.n(), weight, degree)? })
    }

    pub fn with_default_degree(weight: &Weight) -> Result<Self> {
        Self::new(weight, Self::default_degree(weight.n()))
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn rule(&self) -> &ProductRule {
        &self.rule
    }

    fn check(&self, f: &Symbol, z: &Point) -> Result<()> {
        if z.dim() != self.weight.n() {
            return Err(Error::Dimension { expected: self.weight.n(), got: z.dim() });
        }
        if !f.supports_dim(z.dim()) {
            return Err(Error::Dimension { expected: f.dim().unwrap_or(z.dim()), got: z.dim() });
        }
        Ok(())
    }

    /// f(phi_z(y_k)) at every rule node.
    pub fn pulled_values(&self, f: &Symbol, z: &Point) -> Result<Vec<C64>> {
        self.check(f, z)?;
        let phi = mobius(z);
        let vals: Vec<C64> = self.rule.nodes().iter().map(|y| f.eval_coords(&phi.apply_coords(y.coords()))).collect();
        if let Some(i) = vals.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { index: i, location: format!("phi_z of node {:?}", self.rule.nodes()[i].coords()) });
        }
        Ok(vals)
    }

    fn weighted_sum(&self, vals: impl Iterator<Item = C64>) -> C64 {
        let terms: Vec<C64> = vals.zip(self.rule.weights()).map(|(v, w)| v * *w).collect();
        pairwise_sum(&terms)
    }

    fn weighted_real(&self, vals: impl Iterator<Item = f64>) -> f64 {
        let terms: Vec<f64> = vals.zip(self.rule.weights()).map(|(v, w)| v * *w).collect();
        pairwise_sum(&terms)
    }

    /// Convolution path. At the origin polyradial symbols are integrated exactly.
    pub fn moments(&self, f: &Symbol, z: &Point) -> Result<Moments> {
        self.check(f, z)?;
        if z.is_origin() {
            if let Some(mean) = f.weighted_mean(&self.weight) {
                let mean = mean?;
                let second = f.conj().product(f).weighted_mean(&self.weight).expect("polyradial")?.re;
                return Ok(Moments { mean, second, centered: (second - mean.norm_sqr()).max(0.0) });
            }
        }
        let vals = self.pulled_values(f, z)?;
        let mean = self.weighted_sum(vals.iter().copied());
        let second = self.weighted_real(vals.iter().map(|v| v.norm_sqr()));
        let centered = self.weighted_real(vals.iter().map(|v| (v - mean).norm_sqr()));
        Ok(Moments { mean, second, centered })
    }

    pub fn transform(&self, f: &Symbol, z: &Point) -> Result<C64> {
        Ok(self.moments(f, z)?.mean)
    }

    /// int f |k_z|^2 dv_lambda directly. On the disk this is a nested adaptive
    /// integral in (s = |w|^2, theta) with the kernel kept in log form; on B^2
    /// it uses the rule nodes and is only reliable for moderate |z| and lambda.
    /// Direct integration against the kernel. Oscillatory symbols are only
    /// resolved at the origin, where the oscillatory evaluator applies.
    pub fn kernel_path(&self, f: &Symbol, z: &Point) -> Result<C64> {
        self.check(f, z)?;
        if f.is_oscillatory() {
            return match (z.is_origin(), f.weighted_mean(&self.weight)) {
                (true, Some(mean)) => mean,
                _ => Err(Error::OscillatoryNotRadial(format!("{} (kernel path away from the origin)", f.id()))),
            };
        }
        let lam = self.weight.lambda();
        let alpha = self.weight.alpha();
        if self.weight.n() == 1 {
            let a = z.norm();
            let rot = if a > 0.0 { z.coords()[0] / a } else { C64::new(1.0, 0.0) };
            let base = (lam - 1.0).ln() + lam * (-a * a).ln_1p();
            let inner_int = |s: f64| -> C64 {
                let rho = s.sqrt();
                let ws = if alpha == 0.0 { 0.0 } else { alpha * (-s).ln_1p() };
                let g = |th: f64| {
                    let w = C64::from_polar(rho, th) * rot;
                    let d = (1.0 - a * rho).powi(2) + 4.0 * a * rho * (0.5 * th).sin().powi(2);
                    f.eval_coords(&[w]) * (base + ws - lam * d.ln()).exp()
                };
                let pi = std::f64::consts::PI;
                integrate_with_breaks(&g, &peak_breaks(-pi, pi, 0.0, 1.0 - a), 1e-15, 1e-13) / std::f64::consts::TAU
            };
            let v = integrate_with_breaks(&inner_int, &peak_breaks(0.0, 1.0, a * a, 1.0 - a * a), 1e-13, 1e-11);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { index: 0, location: "kernel path".into() });
            }
            return Ok(v);
        }
        let zc = z.coords();
        let lz = lam * h_diag(zc).ln();
        let vals = self.rule.nodes().iter().map(|y| {
            let yc = y.coords();
            let d = (C64::new(1.0, 0.0) - inner(yc, zc)).norm_sqr();
            f.eval_coords(yc) * (lz - lam * d.ln()).exp()
        });
        Ok(self.weighted_sum(vals))
    }

    pub fn berezin(&self, f: &Symbol, z: &Point, path: BerezinPath) -> Result<C64> {
        match path {
            BerezinPath::Convolution => self.transform(f, z),
            BerezinPath::Kernel => self.kernel_path(f, z),
        }
    }

    /// MO(f)(z) from the centered form, clipped at 0.
    pub fn mean_oscillation(&self, f: &Symbol, z: &Point) -> Result<f64> {
        Ok(self.moments(f, z)?.centered.max(0.0))
    }
}

/// Breakpoints on [lo, hi] refining geometrically toward a peak at `at` of width `width`.
pub(crate) fn peak_breaks(lo: f64, hi: f64, at: f64, width: f64) -> Vec<f64> {
    let mut pts = vec![lo, at, hi];
    let mut d = width.max(1e-300);
    while d < hi - lo {
        pts.push(at - d);
        pts.push(at + d);
        d *= 2.0;
    }
    pts.retain(|p| *p >= lo && *p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

pub(crate) fn integrate_with_breaks(f: &dyn Fn(f64) -> C64, pts: &[f64], tol: f64, rel: f64) -> C64 {
    let parts: Vec<C64> = pts.windows(2).map(|w| integrate_adaptive_rel(f, w[0], w[1], tol, rel)).collect();
    pairwise_sum(&parts)
}

pub fn berezin(f: &Symbol, weight: &Weight, z: &Point, path: BerezinPath) -> Result<C64> {
    Berezin::with_default_degree(weight)?.berezin(f, z, path)
}

pub fn mean_oscillation(f: &Symbol, weight: &Weight, z: &Point) -> Result<f64> {
    Berezin::with_default_degree(weight)?.mean_oscillation(f, z)
}

/// sup over the grid of sqrt(MO(f)(z)).
pub fn bmo_seminorm(ev: &Berezin, f: &Symbol, grid: &EvaluationGrid) -> Result<SupResult> {
    let idx = grid.indices_for(f);
    let vals: Vec<f64> = idx
        .par_iter()
        .map(|&i| ev.mean_oscillation(f, &grid.points()[i]).map(f64::sqrt))
        .collect::<Result<_>>()?;
    Ok(sup_over(grid, &idx, &vals))
}

/// sup over the grid of |B f(z) - f(z)|.
pub fn berezin_deviation(ev: &Berezin, f: &Symbol, grid: &EvaluationGrid) -> Result<SupResult> {
    let idx = grid.indices_for(f);
    let vals: Vec<f64> = idx
        .par_iter()
        .map(|&i| {
            let z = &grid.points()[i];
            ev.transform(f, z).map(|b| (b - f.eval(z)).norm())
        })
        .collect::<Result<_>>()?;
    Ok(sup_over(grid, &idx, &vals))
}

const OSC_DIRECTIONS: usize = 64;
const OSC_RADII: usize = 8;

/// Sampled Osc_z(f) = sup {|f(z) - f(w)| : beta_lambda(z, w) < 1}. Points
/// are phi_z(tanh(t) u) for 64 directions u and 8 radii t inside the ball.
/// For radial f only beta(0, w) matters, and it sweeps the whole interval
/// [beta(0,z) - r, beta(0,z) + r], which is sampled directly.
pub fn osc(f: &Symbol, weight: &Weight, z: &Point) -> f64 {
    let reach = 1.0 / weight.metric_scale() * (1.0 - 1e-9);
    let fz = f.eval(z);
    if f.has(Tags::RADIAL) {
        let t0 = z.norm().atanh();
        let count = OSC_DIRECTIONS * OSC_RADII;
        let unit = if z.is_origin() { Point::origin(z.dim()).coords().to_vec() } else { z.coords().iter().map(|c| c / z.norm()).collect() };
        let unit: Vec<C64> = if z.is_origin() {
            let mut u = unit;
            u[0] = C64::new(1.0, 0.0);
            u
        } else {
            unit
        };
        return (0..=count)
            .map(|i| {
                let t = (t0 - reach + 2.0 * reach * i as f64 / count as f64).abs();
                let w: Vec<C64> = unit.iter().map(|c| c * t.tanh()).collect();
                (f.eval_coords(&w) - fz).norm()
            })
            .fold(0.0, f64::max);
    }
    let phi = mobius(z);
    let n = z.dim();
    let mut worst = 0.0f64;
    for d in 0..OSC_DIRECTIONS {
        let u: Vec<C64> = if n == 1 {
            vec![C64::from_polar(1.0, std::f64::consts::TAU * d as f64 / OSC_DIRECTIONS as f64)]
        } else {
            let psi = std::f64::consts::FRAC_PI_2 * ((d % 8) as f64 + 0.5) / 8.0;
            let theta = std::f64::consts::TAU * (d / 8) as f64 / 8.0;
            vec![C64::from_polar(psi.cos(), theta), C64::new(psi.sin(), 0.0)]
        };
        for k in 1..=OSC_RADII {
            let t = (reach * k as f64 / OSC_RADII as f64).tanh();
            let v: Vec<C64> = u.iter().map(|c| c * t).collect();
            worst = worst.max((f.eval_coords(&phi.apply_coords(&v)) - fz).norm());
        }
    }
    worst
}

/// sup over the grid of Osc_z(f).
pub fn bo_seminorm(f: &Symbol, weight: &Weight, grid: &EvaluationGrid) -> SupResult {
    let idx = grid.indices_for(f);
    let vals: Vec<f64> = idx.par_iter().map(|&i| osc(f, weight, &grid.points()[i])).collect();
    sup_over(grid, &idx, &vals)
}

/// Averages over E(x, rho) by pulling back a rule for the Euclidean unit
/// ball (normalized volume) through phi_x, whose real Jacobian is
/// (h(x,x) / |h(y,x)|^2)^(n+1).
#[derive(Clone, Debug)]
pub struct BallAverager {
    rule: ProductRule,
}

#[derive(Clone, Copy, Debug)]
pub struct BallAverage {
    pub mean: C64,
    pub aq: f64,
    pub volume_closed: f64,
    pub volume_quad: f64,
}

impl BallAverager {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        let flat = Weight::new(n, (n + 1) as f64)?;
        Ok(Self { rule: build_rule(n, &flat, degree)? })
    }

    pub fn n(&self) -> usize {
        self.rule.n()
    }

    /// (f hat(x, rho), A_q(f, rho, x)) for q in {2, 4}.
    pub fn average_and_aq(&self, f: &Symbol, x: &Point, rho: f64, q: u32) -> Result<BallAverage> {
        if q != 2 && q != 4 {
            return Err(Error::InvalidParameter(format!("q must be 2 or 4, got {q}")));
        }
        if x.dim() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: x.dim() });
        }
        let n = self.n() as i32;
        let volume_closed = bergman_ball_volume(x, rho)?;
        let radius = rho.tanh();
        let phi = mobius(x);
        let hx = h_diag(x.coords());
        let mut pts = Vec::with_capacity(self.rule.len());
        let mut jac = Vec::with_capacity(self.rule.len());
        for (u, w) in self.rule.nodes().iter().zip(self.rule.weights()) {
            let y: Vec<C64> = u.coords().iter().map(|c| c * radius).collect();
            let d = (C64::new(1.0, 0.0) - inner(&y, x.coords())).norm_sqr();
            jac.push(w * radius.powi(2 * n) * (hx / d).powi(n + 1));
            pts.push(phi.apply_coords(&y));
        }
        let volume_quad = pairwise_sum(&jac);
        if x.is_origin() && q == 2 {
            if let Some(m) = f.ball_mean(self.n(), radius) {
                let mean = m?;
                let second = f.conj().product(f).ball_mean(self.n(), radius).expect("polyradial")?.re;
                return Ok(BallAverage { mean, aq: (second - mean.norm_sqr()).max(0.0), volume_closed, volume_quad });
            }
        }
        let vals: Vec<C64> = pts.iter().map(|p| f.eval_coords(p)).collect();
        let mean = pairwise_sum(&vals.iter().zip(&jac).map(|(v, j)| v * *j).collect::<Vec<_>>()) / volume_quad;
        let dev: Vec<f64> = vals.iter().zip(&jac).map(|(v, j)| (v - mean).norm().powi(q as i32) * j).collect();
        Ok(BallAverage { mean, aq: pairwise_sum(&dev) / volume_quad, volume_closed, volume_quad })
    }

    /// sup over the grid of A_2(f, rho, x) for each rho.
    pub fn vmo_profile(&self, f: &Symbol, rhos: &[f64], grid: &EvaluationGrid) -> Result<Vec<(f64, SupResult)>> {
        let idx = grid.indices_for(f);
        rhos.iter()
            .map(|&rho| {
                let vals: Vec<f64> = idx
                    .par_iter()
                    .map(|&i| self.average_and_aq(f, &grid.points()[i], rho, 2).map(|a| a.aq))
                    .collect::<Result<_>>()?;
                Ok((rho, sup_over(grid, &idx, &vals)))
            })
            .collect()
    }
}

/// Largest violation and ratio of MO(f)(x) <= int |f o phi_x - f hat(x, rho)|^2 dv_lambda.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MoAverageReport {
    pub max_lhs: f64,
    pub max_excess: f64,
    pub max_ratio: f64,
    pub holds: bool,
}

pub fn mo_average_bound_audit(ev: &Berezin, avg: &BallAverager, f: &Symbol, rho: f64, grid: &EvaluationGrid) -> Result<MoAverageReport> {
    let idx = grid.indices_for(f);
    let rows: Vec<(f64, f64)> = idx
        .par_iter()
        .map(|&i| {
            let x = &grid.points()[i];
            let m = ev.moments(f, x)?;
            let c = avg.average_and_aq(f, x, rho, 2)?.mean;
            Ok((m.centered, m.spread_about(c)))
        })
        .collect::<Result<_>>()?;
    let mut rep = MoAverageReport { max_lhs: 0.0, max_excess: f64::NEG_INFINITY, max_ratio: 0.0, holds: true };
    for (lhs, rhs) in rows {
        rep.max_lhs = rep.max_lhs.max(lhs);
        rep.max_excess = rep.max_excess.max(lhs - rhs);
        if rhs > 0.0 {
            rep.max_ratio = rep.max_ratio.max(lhs / rhs);
        }
    }
    rep.holds = rep.max_excess <= 1e-8;
    Ok(rep)
}

/// |B g(w) - B g(z)| <= 2 ||g||_BMO beta_lambda(z, w) on random pairs.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzReport {
    pub bmo: f64,
    pub max_lhs: f64,
    /// max |B g(w) - B g(z)| / (||g||_BMO beta_lambda(z, w)); the claim is <= 2.
    pub constant: f64,
    pub pairs: usize,
    pub holds: bool,
}

/// Pairs (z, w) with beta(0, z) uniform up to the grid horizon and
/// beta(z, w) uniform in (0, 2].
pub fn sample_pairs(n: usize, horizon: f64, count: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = |rng: &mut ChaCha8Rng| -> Vec<C64> {
        let v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let s = norm_sqr(&v).sqrt().max(1e-300);
        v.into_iter().map(|c| c / s).collect()
    };
    (0..count)
        .map(|_| {
            let tz = rng.gen::<f64>() * horizon;
            let z: Coords = dir(&mut rng).into_iter().map(|c| c * tz.tanh()).collect();
            let z = Point::from_coords_unchecked(z);
            let tw = 2.0 * (1.0 - rng.gen::<f64>());
            let v: Vec<C64> = dir(&mut rng).into_iter().map(|c| c * tw.tanh()).collect();
            let w = Point::from_coords_unchecked(mobius(&z).apply_coords(&v));
            (z, w)
        })
        .collect()
}

pub fn bmo_bo_lipschitz_audit(ev: &Berezin, g: &Symbol, grid: &EvaluationGrid, pairs: &[(Point, Point)]) -> Result<LipschitzReport> {
    let bmo = bmo_seminorm(ev, g, grid)?.value;
    let rows: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(z, w)| {
            let d = (ev.transform(g, w)? - ev.transform(g, z)?).norm();
            Ok((d, beta_lambda(ev.weight(), z, w)))
        })
        .collect::<Result<_>>()?;
    let mut max_lhs = 0.0f64;
    let mut constant = 0.0f64;
    for (d, b) in rows {
        max_lhs = max_lhs.max(d);
        if bmo > 0.0 && b > 0.0 {
            constant = constant.max(d / (bmo * b));
        } else if d > 1e-12 {
            constant = f64::INFINITY;
        }
    }
    Ok(LipschitzReport { bmo, max_lhs, constant, pairs: pairs.len(), holds: constant <= 2.0 })
}

/// B_lambda(g) of a radial g as a radial symbol. Profile values are cached
/// by radius, so repeated radial quadratures reuse them.
pub fn berezin_radial_symbol(ev: Arc<Berezin>, g: &Symbol) -> Result<Symbol> {
    if !g.has(Tags::RADIAL) {
        return Err(Error::InvalidParameter(format!("symbol '{}' is not radial", g.id())));
    }
    let n = ev.weight().n();
    let g2 = g.clone();
    let cache: Arc<Mutex<HashMap<u64, C64>>> = Arc::new(Mutex::new(HashMap::new()));
    let ev2 = ev.clone();
    let at = move |r: f64| -> C64 {
        if let Some(v) = cache.lock().expect("cache").get(&r.to_bits()) {
            return *v;
        }
        let mut c = vec![C64::new(0.0, 0.0); n];
        c[0] = C64::new(r, 0.0);
        let v = ev2.transform(&g2, &Point::from_coords_unchecked(c.into_iter().collect())).unwrap_or(C64::new(f64::NAN, 0.0));
        cache.lock().expect("cache").insert(r.to_bits(), v);
        v
    };
    let origin = ev.transform(g, &Point::origin(n))?;
    let mut tags = Tags::RADIAL;
    if g.has(Tags::BOUNDED) {
        tags = tags | Tags::BOUNDED;
    }
    Ok(Symbol::radial(format!("B[{}]", g.id()), RadialProfile::new(at, origin), tags | Tags::UC, g.sup_bound()))
}

/// B_lambda g for radial g tabulated against t = beta(0, w) with linear
/// interpolation; past the last node the end value is used.
/// Beyond this beta, tanh rounds too close to 1 for Mobius pullbacks to stay
/// inside the ball; tables hold their last value past it.
pub const RADIAL_TABLE_BETA_MAX: f64 = 15.0;

#[derive(Clone, Debug)]
pub struct RadialTable {
    step: f64,
    values: Vec<C64>,
}

impl RadialTable {
    pub fn build(ev: &Berezin, g: &Symbol, t_max: f64, step: f64) -> Result<Self> {
        if !g.has(Tags::RADIAL) {
            return Err(Error::InvalidParameter(format!("symbol '{}' is not radial", g.id())));
        }
        let n = ev.weight().n();
        let count = (t_max.min(RADIAL_TABLE_BETA_MAX) / step).ceil() as usize;
        let values = (0..=count)
            .into_par_iter()
            .map(|k| {
                let mut c = vec![C64::new(0.0, 0.0); n];
                c[0] = C64::new((k as f64 * step).tanh(), 0.0);
                ev.transform(g, &Point::from_coords_unchecked(c.into_iter().collect()))
            })
            .collect::<Result<_>>()?;
        Ok(Self { step, values })
    }

    pub fn at_beta(&self, t: f64) -> C64 {
        let x = t / self.step;
        let k = x.floor() as usize;
        if k + 1 >= self.values.len() {
            return *self.values.last().expect("non-empty");
        }
        let f = x - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    pub fn at(&self, w: &[C64]) -> C64 {
        self.at_beta(norm_sqr(w).sqrt().min(1.0 - 1e-16).atanh())
    }
}

/// sup over the grid of B_lambda(|g - B_lambda g|) for radial g.
pub fn triangular_lhs(ev: &Berezin, g: &Symbol, table: &RadialTable, grid: &EvaluationGrid) -> Result<SupResult> {
    let idx = grid.indices_for(g);
    let vals: Vec<f64> = idx
        .par_iter()
        .map(|&i| {
            let z = &grid.points()[i];
            let phi = mobius(z);
            let terms = ev.rule().nodes().iter().zip(ev.rule().weights()).map(|(y, w)| {
                let mut p = phi.apply_coords(y.coords());
                let r = norm_sqr(&p).sqrt();
                if r >= 1.0 - 1e-16 {
                    p.iter_mut().for_each(|c| *c *= (1.0 - 1e-16) / r);
                }
                (g.eval_coords(&p) - table.at(&p)).norm() * w
            });
            pairwise_sum(&terms.collect::<Vec<_>>())
        })
        .collect();
    Ok(sup_over(grid, &idx, &vals))
}
