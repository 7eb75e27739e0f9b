//! Symbols: functions on the ball with class tags and combinators.
//!
//! Most catalog entries are polyradial, a finite sum of terms
//! F(|z|) z1^a conj(z1)^b with F(r) = A(r) exp(i omega / r^2). This shape is
//! closed under sums, products and conjugation, and it is what lets Toeplitz
//! entries reduce to one-dimensional radial averages. Everything else is a
//! general closure and goes through product quadrature.

use std::fmt;
use std::ops::{BitAnd, BitOr};
use std::sync::Arc;

use serde::Serialize;

use crate::bergman::{ln_monomial_norm_sq, mobius, Point, Weight};
use crate::error::{Error, Result};
use crate::quadrature::{beta_averages, beta_averages_oscillatory, gauss_legendre};
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Tags(u16);

impl Tags {
    pub const NONE: Tags = Tags(0);
    pub const RADIAL: Tags = Tags(1);
    pub const BOUNDED: Tags = Tags(1 << 1);
    pub const HOLOMORPHIC: Tags = Tags(1 << 2);
    pub const UC: Tags = Tags(1 << 3);
    pub const BUC: Tags = Tags(1 << 4);
    pub const VMO: Tags = Tags(1 << 5);
    pub const C_CLOSURE: Tags = Tags(1 << 6);
    pub const COUNTEREXAMPLE: Tags = Tags(1 << 7);

    const NAMES: [(Tags, &'static str); 8] = [
        (Tags::RADIAL, "RADIAL"),
        (Tags::BOUNDED, "BOUNDED"),
        (Tags::HOLOMORPHIC, "HOLOMORPHIC"),
        (Tags::UC, "UC"),
        (Tags::BUC, "BUC"),
        (Tags::VMO, "VMO"),
        (Tags::C_CLOSURE, "C_CLOSURE"),
        (Tags::COUNTEREXAMPLE, "COUNTEREXAMPLE"),
    ];

    pub fn contains(self, other: Tags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn intersects(self, other: Tags) -> bool {
        self.0 & other.0 != 0
    }

    pub fn without(self, other: Tags) -> Tags {
        Tags(self.0 & !other.0)
    }

    pub fn names(self) -> Vec<&'static str> {
        Self::NAMES.iter().filter(|(t, _)| self.contains(*t)).map(|(_, n)| *n).collect()
    }
}

impl BitOr for Tags {
    type Output = Tags;
    fn bitor(self, rhs: Tags) -> Tags {
        Tags(self.0 | rhs.0)
    }
}

impl BitAnd for Tags {
    type Output = Tags;
    fn bitand(self, rhs: Tags) -> Tags {
        Tags(self.0 & rhs.0)
    }
}

type RealFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
type PointFn = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;

/// F(r) = A(r) exp(i omega / r^2), with an explicit value at r = 0.
#[derive(Clone)]
pub struct RadialProfile {
    freq: f64,
    amp: RealFn,
    constant: Option<C64>,
    origin: C64,
}

impl RadialProfile {
    pub fn constant(c: C64) -> Self {
        Self { freq: 0.0, amp: Arc::new(move |_| c), constant: Some(c), origin: c }
    }

    pub fn new(amp: impl Fn(f64) -> C64 + Send + Sync + 'static, origin: C64) -> Self {
        Self { freq: 0.0, amp: Arc::new(amp), constant: None, origin }
    }

    pub fn oscillatory(freq: f64, amp: impl Fn(f64) -> C64 + Send + Sync + 'static, origin: C64) -> Self {
        Self { freq, amp: Arc::new(amp), constant: None, origin }
    }

    /// c exp(i omega / r^2), with c kept as an exact constant amplitude.
    pub fn oscillatory_constant(freq: f64, amp: C64, origin: C64) -> Self {
        Self { freq, amp: Arc::new(move |_| amp), constant: Some(amp), origin }
    }

    pub fn freq(&self) -> f64 {
        self.freq
    }

    pub fn is_constant(&self) -> Option<C64> {
        if self.freq == 0.0 {
            self.constant
        } else {
            None
        }
    }

    pub fn eval(&self, r: f64) -> C64 {
        if r == 0.0 {
            return self.origin;
        }
        let a = (self.amp)(r);
        if self.freq == 0.0 {
            a
        } else {
            a * C64::from_polar(1.0, self.freq / (r * r))
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        let constant = match (self.constant, other.constant) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        let (f, g) = (self.amp.clone(), other.amp.clone());
        Self { freq: self.freq + other.freq, amp: Arc::new(move |r| f(r) * g(r)), constant, origin: self.origin * other.origin }
    }

    pub fn conj(&self) -> Self {
        let f = self.amp.clone();
        Self { freq: -self.freq, amp: Arc::new(move |r| f(r).conj()), constant: self.constant.map(|c| c.conj()), origin: self.origin.conj() }
    }

    pub fn scale(&self, c: C64) -> Self {
        let f = self.amp.clone();
        Self { freq: self.freq, amp: Arc::new(move |r| f(r) * c), constant: self.constant.map(|k| k * c), origin: self.origin * c }
    }

    /// t -> F(R t).
    pub fn dilate(&self, radius: f64) -> Self {
        let f = self.amp.clone();
        Self {
            freq: self.freq / (radius * radius),
            amp: Arc::new(move |t| f(radius * t)),
            constant: self.constant,
            origin: self.origin,
        }
    }

    /// Means of F under the densities prop. to s^a (1-s)^b on s = r^2, one per a.
    pub fn beta_averages(&self, exps: &[f64], b: f64) -> Result<Vec<C64>> {
        if let Some(c) = self.is_constant() {
            return Ok(vec![c; exps.len()]);
        }
        if self.freq != 0.0 {
            let amp = self.amp.clone();
            return beta_averages_oscillatory(&move |r| amp(r), self.freq, exps, b);
        }
        let f = |r: f64| self.eval(r);
        beta_averages(&f, exps, b)
    }
}

/// F(|z|) z1^hol conj(z1)^anti.
#[derive(Clone)]
pub struct Term {
    pub profile: RadialProfile,
    pub hol: u32,
    pub anti: u32,
}

impl Term {
    pub fn radial(profile: RadialProfile) -> Self {
        Self { profile, hol: 0, anti: 0 }
    }

    fn eval(&self, r: f64, z1: C64) -> C64 {
        let mut v = self.profile.eval(r);
        if self.hol > 0 {
            v *= z1.powu(self.hol);
        }
        if self.anti > 0 {
            v *= z1.conj().powu(self.anti);
        }
        v
    }
}

#[derive(Clone)]
enum Repr {
    Polyradial(Vec<Term>),
    General(PointFn),
}

#[derive(Clone)]
pub struct Symbol {
    id: String,
    tags: Tags,
    sup_bound: Option<f64>,
    dim: Option<usize>,
    repr: Repr,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("id", &self.id)
            .field("tags", &self.tags.names())
            .field("sup_bound", &self.sup_bound)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Symbol {
    pub fn polyradial(id: impl Into<String>, terms: Vec<Term>, tags: Tags, sup_bound: Option<f64>) -> Self {
        let mut tags = tags;
        if terms.iter().all(|t| t.hol == 0 && t.anti == 0) {
            tags = tags | Tags::RADIAL;
        }
        Self { id: id.into(), tags, sup_bound, dim: None, repr: Repr::Polyradial(terms) }
    }

    pub fn radial(id: impl Into<String>, profile: RadialProfile, tags: Tags, sup_bound: Option<f64>) -> Self {
        Self::polyradial(id, vec![Term::radial(profile)], tags, sup_bound)
    }

    /// A general symbol; `dim` restricts it to one ball dimension.
    pub fn from_fn(
        id: impl Into<String>,
        dim: Option<usize>,
        f: impl Fn(&[C64]) -> C64 + Send + Sync + 'static,
        tags: Tags,
        sup_bound: Option<f64>,
    ) -> Self {
        Self { id: id.into(), tags: tags.without(Tags::RADIAL), sup_bound, dim, repr: Repr::General(Arc::new(f)) }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tags(&self) -> Tags {
        self.tags
    }

    pub fn has(&self, t: Tags) -> bool {
        self.tags.contains(t)
    }

    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn supports_dim(&self, n: usize) -> bool {
        self.dim.is_none_or(|d| d == n)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.repr {
            Repr::Polyradial(t) => Some(t),
            Repr::General(_) => None,
        }
    }

    /// Profiles of a purely radial symbol (sum of radial terms).
    pub fn radial_profiles(&self) -> Option<Vec<&RadialProfile>> {
        let terms = self.terms()?;
        if terms.iter().all(|t| t.hol == 0 && t.anti == 0) {
            Some(terms.iter().map(|t| &t.profile).collect())
        } else {
            None
        }
    }

    pub fn is_oscillatory(&self) -> bool {
        match &self.repr {
            Repr::Polyradial(t) => t.iter().any(|t| t.profile.freq != 0.0),
            Repr::General(_) => self.has(Tags::COUNTEREXAMPLE),
        }
    }

    pub fn eval_coords(&self, z: &[C64]) -> C64 {
        match &self.repr {
            Repr::Polyradial(terms) => {
                let r = crate::bergman::norm_sqr(z).sqrt();
                terms.iter().map(|t| t.eval(r, z[0])).sum()
            }
            Repr::General(f) => f(z),
        }
    }

    pub fn eval(&self, z: &Point) -> C64 {
        self.eval_coords(z.coords())
    }

    pub fn sum(&self, other: &Symbol) -> Symbol {
        let keep = Tags::BOUNDED | Tags::UC | Tags::BUC | Tags::VMO | Tags::C_CLOSURE | Tags::HOLOMORPHIC | Tags::RADIAL;
        let tags = self.tags & other.tags & keep;
        let sup = self.sup_bound.zip(other.sup_bound).map(|(a, b)| a + b);
        let id = format!("({}+{})", self.id, other.id);
        match (&self.repr, &other.repr) {
            (Repr::Polyradial(a), Repr::Polyradial(b)) => {
                let mut s = Symbol::polyradial(id, a.iter().chain(b).cloned().collect(), tags, sup);
                s.dim = self.dim.or(other.dim);
                s
            }
            _ => {
                let (f, g) = (self.clone(), other.clone());
                Symbol::from_fn(id, self.dim.or(other.dim), move |z| f.eval_coords(z) + g.eval_coords(z), tags, sup)
            }
        }
    }

    pub fn product(&self, other: &Symbol) -> Symbol {
        let both = self.tags & other.tags;
        let mut tags = both & (Tags::BOUNDED | Tags::BUC | Tags::C_CLOSURE | Tags::HOLOMORPHIC | Tags::RADIAL);
        if both.contains(Tags::BUC) {
            tags = tags | Tags::UC;
        }
        if both.contains(Tags::VMO | Tags::BOUNDED) {
            tags = tags | Tags::VMO;
        }
        let sup = self.sup_bound.zip(other.sup_bound).map(|(a, b)| a * b);
        let id = format!("({}*{})", self.id, other.id);
        match (&self.repr, &other.repr) {
            (Repr::Polyradial(a), Repr::Polyradial(b)) => {
                let mut terms = Vec::with_capacity(a.len() * b.len());
                for s in a {
                    for t in b {
                        terms.push(Term { profile: s.profile.product(&t.profile), hol: s.hol + t.hol, anti: s.anti + t.anti });
                    }
                }
                let mut s = Symbol::polyradial(id, terms, tags, sup);
                s.dim = self.dim.or(other.dim);
                s
            }
            _ => {
                let (f, g) = (self.clone(), other.clone());
                Symbol::from_fn(id, self.dim.or(other.dim), move |z| f.eval_coords(z) * g.eval_coords(z), tags, sup)
            }
        }
    }

    /// Complex conjugate. Holomorphy is not preserved, every other tag is.
    pub fn conj(&self) -> Symbol {
        let tags = self.tags.without(Tags::HOLOMORPHIC);
        let id = format!("conj({})", self.id);
        match &self.repr {
            Repr::Polyradial(terms) => {
                let terms = terms.iter().map(|t| Term { profile: t.profile.conj(), hol: t.anti, anti: t.hol }).collect();
                let mut s = Symbol::polyradial(id, terms, tags, self.sup_bound);
                s.tags = tags | (self.tags & Tags::RADIAL);
                s.dim = self.dim;
                s
            }
            Repr::General(_) => {
                let f = self.clone();
                let mut s = Symbol::from_fn(id, self.dim, move |z| f.eval_coords(z).conj(), tags, self.sup_bound);
                s.tags = tags;
                s
            }
        }
    }

    pub fn scale(&self, c: C64) -> Symbol {
        let id = format!("({}*{})", c, self.id);
        let sup = self.sup_bound.map(|b| b * c.norm());
        match &self.repr {
            Repr::Polyradial(terms) => {
                let terms = terms.iter().map(|t| Term { profile: t.profile.scale(c), ..t.clone() }).collect();
                let mut s = Symbol::polyradial(id, terms, self.tags, sup);
                s.dim = self.dim;
                s
            }
            Repr::General(_) => {
                let f = self.clone();
                Symbol::from_fn(id, self.dim, move |z| f.eval_coords(z) * c, self.tags, sup)
            }
        }
    }

    /// z -> f(phi_a(z)). The Bergman metric is Mobius invariant, so every
    /// tag except RADIAL carries over.
    pub fn precompose(&self, a: &Point) -> Result<Symbol> {
        if !self.supports_dim(a.dim()) {
            return Err(Error::Dimension { expected: self.dim.unwrap_or(a.dim()), got: a.dim() });
        }
        let phi = mobius(a);
        let f = self.clone();
        let mut s = Symbol::from_fn(
            format!("{}@phi", self.id),
            Some(a.dim()),
            move |z| f.eval_coords(&phi.apply_coords(z)),
            self.tags.without(Tags::RADIAL),
            self.sup_bound,
        );
        s.tags = self.tags.without(Tags::RADIAL);
        Ok(s)
    }

    /// Exact integral against dv_lambda for polyradial symbols:
    /// term F z1^a conj(z1)^b contributes only when a = b, and then equals the
    /// mean of F under s^(a+n-1) (1-s)^alpha times ||z1^a||^2.
    pub fn weighted_mean(&self, weight: &Weight) -> Option<Result<C64>> {
        let terms = self.terms()?;
        let n = weight.n();
        let mut total = C64::new(0.0, 0.0);
        for t in terms.iter().filter(|t| t.hol == t.anti) {
            let mut idx = vec![0u32; n];
            idx[0] = t.hol;
            let avg = match t.profile.beta_averages(&[(t.hol as usize + n - 1) as f64], weight.alpha()) {
                Ok(v) => v[0],
                Err(e) => return Some(Err(e)),
            };
            total += avg * ln_monomial_norm_sq(weight, &idx).exp();
        }
        Some(Ok(total))
    }

    /// Exact mean over the Euclidean ball |z| < R under normalized volume.
    pub fn ball_mean(&self, n: usize, radius: f64) -> Option<Result<C64>> {
        let terms = self.terms()?;
        let flat = Weight::new(n, (n + 1) as f64).ok()?;
        let mut total = C64::new(0.0, 0.0);
        for t in terms.iter().filter(|t| t.hol == t.anti) {
            let mut idx = vec![0u32; n];
            idx[0] = t.hol;
            let avg = match t.profile.dilate(radius).beta_averages(&[(t.hol as usize + n - 1) as f64], 0.0) {
                Ok(v) => v[0],
                Err(e) => return Some(Err(e)),
            };
            total += avg * radius.powi(2 * t.hol as i32) * ln_monomial_norm_sq(&flat, &idx).exp();
        }
        Some(Ok(total))
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

const SMOOTH_BOUNDED: Tags = Tags(Tags::BOUNDED.0 | Tags::UC.0 | Tags::BUC.0 | Tags::VMO.0 | Tags::C_CLOSURE.0);

pub fn const1() -> Symbol {
    Symbol::radial("const1", RadialProfile::constant(c(1.0)), SMOOTH_BOUNDED | Tags::HOLOMORPHIC, Some(1.0))
}

pub fn re_z1() -> Symbol {
    let half = RadialProfile::constant(c(0.5));
    Symbol::polyradial(
        "re_z1",
        vec![Term { profile: half.clone(), hol: 1, anti: 0 }, Term { profile: half, hol: 0, anti: 1 }],
        SMOOTH_BOUNDED,
        Some(1.0),
    )
}

pub fn z1() -> Symbol {
    Symbol::polyradial(
        "z1",
        vec![Term { profile: RadialProfile::constant(c(1.0)), hol: 1, anti: 0 }],
        SMOOTH_BOUNDED | Tags::HOLOMORPHIC,
        Some(1.0),
    )
}

pub fn abs2() -> Symbol {
    Symbol::radial("abs2", RadialProfile::new(|r| c(r * r), c(0.0)), SMOOTH_BOUNDED, Some(1.0))
}

/// beta(0,z) = artanh |z|: unbounded, uniformly continuous.
pub fn beta0() -> Symbol {
    Symbol::radial("beta0", RadialProfile::new(|r| c(r.atanh()), c(0.0)), Tags::UC, None)
}

pub fn sin_beta0() -> Symbol {
    Symbol::radial(
        "sin_beta0",
        RadialProfile::new(|r| c(r.atanh().sin()), c(0.0)),
        Tags::BOUNDED | Tags::UC | Tags::BUC | Tags::VMO,
        Some(1.0),
    )
}

/// 1 at the origin, exp(i / |z|^2) elsewhere.
pub fn osc_counterexample() -> Symbol {
    Symbol::radial(
        "osc_counterexample",
        RadialProfile::oscillatory_constant(1.0, c(1.0), c(1.0)),
        Tags::BOUNDED | Tags::COUNTEREXAMPLE,
        Some(1.0),
    )
}

/// sin(log log(1 + 1/|z|)), set to 0 at the origin.
pub fn vmo_loglog() -> Symbol {
    Symbol::radial(
        "vmo_loglog",
        RadialProfile::new(|r| c((1.0 / r).ln_1p().ln().sin()), c(0.0)),
        Tags::BOUNDED | Tags::VMO,
        Some(1.0),
    )
}

/// 2 omega(z, arc) - 1 on the disk.
pub fn harmonic_arc(theta1: f64, theta2: f64) -> Result<Symbol> {
    check_arc(theta1, theta2)?;
    Ok(Symbol::from_fn(
        format!("harmonic_arc:{theta1}:{theta2}"),
        Some(1),
        move |z| c(2.0 * harmonic_measure_unchecked(z[0], theta1, theta2) - 1.0),
        Tags::BOUNDED | Tags::UC | Tags::BUC | Tags::VMO,
        Some(1.0),
    ))
}

pub const CATALOG_IDS: [&str; 9] = [
    "const1",
    "re_z1",
    "z1",
    "abs2",
    "beta0",
    "sin_beta0",
    "osc_counterexample",
    "vmo_loglog",
    "harmonic_arc:0:3.141592653589793",
];

pub fn catalog() -> Vec<Symbol> {
    CATALOG_IDS.iter().map(|id| lookup(id).expect("catalog ids parse")).collect()
}

pub fn lookup(id: &str) -> Result<Symbol> {
    match id {
        "const1" => Ok(const1()),
        "re_z1" => Ok(re_z1()),
        "z1" => Ok(z1()),
        "abs2" => Ok(abs2()),
        "beta0" => Ok(beta0()),
        "sin_beta0" => Ok(sin_beta0()),
        "osc_counterexample" => Ok(osc_counterexample()),
        "vmo_loglog" => Ok(vmo_loglog()),
        other => {
            let mut parts = other.split(':');
            if parts.next() == Some("harmonic_arc") {
                let nums: Vec<f64> = parts.map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| Error::UnknownSymbol(other.into()))?;
                if nums.len() == 2 {
                    return harmonic_arc(nums[0], nums[1]);
                }
            }
            Err(Error::UnknownSymbol(other.into()))
        }
    }
}

fn check_arc(theta1: f64, theta2: f64) -> Result<()> {
    let len = theta2 - theta1;
    if !(len > 0.0) || len > std::f64::consts::TAU + 1e-12 || !theta1.is_finite() {
        return Err(Error::InvalidParameter(format!("arc needs theta1 < theta2 <= theta1 + 2 pi (got {theta1}, {theta2})")));
    }
    Ok(())
}

fn harmonic_measure_unchecked(z: C64, theta1: f64, theta2: f64) -> f64 {
    if theta2 - theta1 >= std::f64::consts::TAU {
        return 1.0;
    }
    // phi_z is an orientation preserving automorphism, and the harmonic
    // measure seen from z is arc length of the image seen from 0.
    let phi = |t: f64| {
        let e = C64::from_polar(1.0, t);
        (z - e) / (C64::new(1.0, 0.0) - z.conj() * e)
    };
    let span = (phi(theta2).arg() - phi(theta1).arg()).rem_euclid(std::f64::consts::TAU);
    span / std::f64::consts::TAU
}

/// Harmonic measure at z of the arc {e^{it} : theta1 < t < theta2}.
pub fn harmonic_measure(z: C64, theta1: f64, theta2: f64) -> Result<f64> {
    if !(z.norm() < 1.0) {
        return Err(Error::OutsideBall { norm: z.norm() });
    }
    check_arc(theta1, theta2)?;
    Ok(harmonic_measure_unchecked(z, theta1, theta2))
}

/// The same quantity by Gauss-Legendre on the Poisson integral, doubling the
/// panel count until two levels agree to 1e-10.
pub fn harmonic_measure_poisson(z: C64, theta1: f64, theta2: f64) -> Result<f64> {
    if !(z.norm() < 1.0) {
        return Err(Error::OutsideBall { norm: z.norm() });
    }
    check_arc(theta1, theta2)?;
    let rule = gauss_legendre(64)?;
    let kernel = |t: f64| (1.0 - z.norm_sqr()) / (C64::from_polar(1.0, t) - z).norm_sqr();
    let eval = |panels: usize| {
        let h = (theta2 - theta1) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = theta1 + p as f64 * h;
            total += h * rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * kernel(lo + 0.5 * h * (1.0 + x))).sum::<f64>();
        }
        total / std::f64::consts::TAU
    };
    let mut panels = 1;
    let mut prev = eval(panels);
    while panels < 1 << 14 {
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).abs() < 1e-10 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence { tol: 1e-10, change: f64::NAN })
}
