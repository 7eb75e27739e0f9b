//! Truncated Toeplitz, Hankel and semicommutator matrices in the monomial
//! basis.
//!
//! Matrices are indexed [row, col] = [gamma, beta] with entry
//! <f e_beta, e_gamma>, so operator composition is matrix multiplication.
//! Polyradial symbols use exact radial moments. General symbols go through a
//! product rule; its nodes come in angular rings of equal weight, so each
//! ring is reduced by a discrete Fourier sum before the D x D accumulation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bergman::{basis_eval, ln_monomial_norm_sq, MultiIndex, Weight};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, largest_singular_value, CMatrix};
use crate::quadrature::{build_rule, ProductRule};
use crate::symbols::{Symbol, Tags};
use crate::C64;

/// Extra polynomial degree on top of 2M for non-polynomial symbols.
pub const SMOOTHNESS_GUARD: usize = 16;

const ASSEMBLY_GROUPS: usize = 64;

/// Monomial multi-indices of degree <= N in graded lexicographic order.
#[derive(Clone, Debug)]
pub struct Basis {
    n: usize,
    max_degree: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

fn push_indices(n: usize, remaining: u32, prefix: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == n {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=remaining).rev() {
        prefix.push(k);
        push_indices(n, remaining - k, prefix, out);
        prefix.pop();
    }
}

impl Basis {
    pub fn new(n: usize, max_degree: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        let mut indices = Vec::new();
        for d in 0..=max_degree as u32 {
            push_indices(n, d, &mut MultiIndex::new(), &mut indices);
        }
        let lookup = indices.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        Ok(Self { n, max_degree, indices, lookup })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn multi_index(&self, i: usize) -> &[u32] {
        &self.indices[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indices[i].iter().sum::<u32>() as usize
    }

    pub fn index_of(&self, idx: &[u32]) -> Option<usize> {
        self.lookup.get(idx).copied()
    }

    /// Number of basis elements of degree <= d.
    pub fn dim_up_to(&self, d: usize) -> usize {
        self.indices.partition_point(|m| (m.iter().sum::<u32>() as usize) <= d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Toeplitz,
    Semicommutator,
    HankelGram,
    ProductDefect,
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    weight: Weight,
    basis: Basis,
    inner: usize,
    kind: OperatorKind,
    matrix: CMatrix,
}

impl OperatorMatrix {
    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn inner_truncation(&self) -> usize {
        self.inner
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn norm(&self) -> Result<f64> {
        operator_norm(&self.matrix)
    }
}

/// Outer degree N, inner degree M and an optional floor for the rule degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub n: usize,
    pub m: usize,
    pub quad_degree: Option<usize>,
}

impl Truncation {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < n {
            return Err(Error::Truncation { n, m });
        }
        Ok(Self { n, m, quad_degree: None })
    }

    /// M = N + 16 on the disk, N + 4 on B^2.
    pub fn default_for(dim: usize, n: usize) -> Self {
        let m = if dim == 1 { n + 16 } else { n + 4 };
        Self { n, m, quad_degree: None }
    }

    pub fn with_quad_degree(mut self, d: Option<usize>) -> Self {
        self.quad_degree = d;
        self
    }

    fn rule_degree(&self) -> usize {
        (2 * self.m + SMOOTHNESS_GUARD).max(self.quad_degree.unwrap_or(0))
    }
}

fn check_symbol(f: &Symbol, weight: &Weight) -> Result<()> {
    if !f.supports_dim(weight.n()) {
        return Err(Error::Dimension { expected: f.dim().unwrap_or(weight.n()), got: weight.n() });
    }
    if f.is_oscillatory() && f.terms().is_none() {
        return Err(Error::OscillatoryNotRadial(f.id().to_string()));
    }
    Ok(())
}

fn ln_norms(weight: &Weight, basis: &Basis) -> Vec<f64> {
    basis.indices().iter().map(|m| ln_monomial_norm_sq(weight, m)).collect()
}

/// Exact entries for polyradial symbols from one-dimensional radial means.
fn moment_matrix(f: &Symbol, weight: &Weight, basis: &Basis) -> Result<CMatrix> {
    let terms = f.terms().expect("polyradial");
    let n = weight.n();
    let d = basis.dim();
    let lnn = ln_norms(weight, basis);
    let mut out = CMatrix::zeros(d, d);
    for term in terms {
        let top = basis.max_degree() + term.hol as usize;
        let exps: Vec<f64> = (0..=top).map(|k| (k + n - 1) as f64).collect();
        let avgs = term.profile.beta_averages(&exps, weight.alpha())?;
        for (col, beta) in basis.indices().iter().enumerate() {
            let first = beta[0] as i64 + term.hol as i64 - term.anti as i64;
            if first < 0 {
                continue;
            }
            let mut gamma = beta.clone();
            gamma[0] = first as u32;
            let Some(row) = basis.index_of(&gamma) else { continue };
            let mut mu = beta.clone();
            mu[0] += term.hol;
            let deg = mu.iter().sum::<u32>() as usize;
            let scale = (ln_monomial_norm_sq(weight, &mu) - 0.5 * (lnn[col] + lnn[row])).exp();
            out[(row, col)] += avgs[deg] * scale;
        }
    }
    Ok(out)
}

fn pairwise_matrix_sum(mut parts: Vec<CMatrix>) -> CMatrix {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.add_assign(&b);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().expect("at least one group")
}

/// Entries by a product rule, ring by ring.
fn rule_matrix(f: &Symbol, rule: &ProductRule, basis: &Basis) -> Result<CMatrix> {
    let weight = rule.weight();
    let n = rule.n();
    let need = 2 * basis.max_degree();
    if rule.exactness_degree() < need {
        return Err(Error::RuleTooCoarse { have: rule.exactness_degree(), need });
    }
    let values: Vec<C64> = rule.nodes().par_iter().map(|p| f.eval(p)).collect();
    if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { index: i, location: format!("{:?}", rule.nodes()[i].coords()) });
    }
    let k = rule.size().angular;
    let ring = k.pow(n as u32);
    let rings = rule.len() / ring;
    let m = basis.max_degree();
    let width = 2 * m + 1;
    let twiddle: Vec<C64> = (0..k).map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / k as f64)).collect();
    let d = basis.dim();
    let inv_norm: Vec<f64> = ln_norms(weight, basis).iter().map(|l| (-0.5 * l).exp()).collect();
    let shift = |kk: i64, j: usize| twiddle[((kk * j as i64).rem_euclid(k as i64)) as usize];

    let ring_contribution = |r: usize, acc: &mut CMatrix| {
        let start = r * ring;
        let vals = &values[start..start + ring];
        let w = rule.weights()[start];
        let first = rule.nodes()[start].coords();
        let radii: Vec<f64> = first.iter().map(|c| c.norm()).collect();
        // fourier[k1 * width + k2] = sum over ring of f exp(i k . theta)
        let fourier: Vec<C64> = if n == 1 {
            (0..width).map(|ki| {
                let kk = ki as i64 - m as i64;
                vals.iter().enumerate().map(|(j, v)| v * shift(kk, j)).sum()
            }).collect()
        } else {
            let mut partial = vec![C64::new(0.0, 0.0); k * width];
            for j1 in 0..k {
                let row = &vals[j1 * k..(j1 + 1) * k];
                for ki in 0..width {
                    let kk = ki as i64 - m as i64;
                    partial[j1 * width + ki] = row.iter().enumerate().map(|(j, v)| v * shift(kk, j)).sum();
                }
            }
            let mut full = vec![C64::new(0.0, 0.0); width * width];
            for k1 in 0..width {
                let kk = k1 as i64 - m as i64;
                for k2 in 0..width {
                    full[k1 * width + k2] = (0..k).map(|j1| partial[j1 * width + k2] * shift(kk, j1)).sum();
                }
            }
            full
        };
        let u: Vec<f64> = basis
            .indices()
            .iter()
            .zip(&inv_norm)
            .map(|(idx, s)| idx.iter().zip(&radii).fold(*s, |p, (&e, r)| p * r.powi(e as i32)))
            .collect();
        for (col, beta) in basis.indices().iter().enumerate() {
            let wb = w * u[col];
            for (row, gamma) in basis.indices().iter().enumerate() {
                let k1 = (beta[0] as i64 - gamma[0] as i64 + m as i64) as usize;
                let pos = if n == 1 { k1 } else { k1 * width + (beta[1] as i64 - gamma[1] as i64 + m as i64) as usize };
                acc[(row, col)] += fourier[pos] * (wb * u[row]);
            }
        }
    };

    let groups = ASSEMBLY_GROUPS.min(rings.max(1));
    let per = rings.div_ceil(groups);
    let parts: Vec<CMatrix> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let mut acc = CMatrix::zeros(d, d);
            for r in g * per..((g + 1) * per).min(rings) {
                ring_contribution(r, &mut acc);
            }
            acc
        })
        .collect();
    Ok(pairwise_matrix_sum(parts))
}

/// Toeplitz matrix on `basis`. Polyradial symbols use exact radial moments
/// unless a rule is supplied; general symbols get a rule exact to degree
/// 2N + SMOOTHNESS_GUARD when none is given.
pub fn toeplitz_matrix(f: &Symbol, weight: &Weight, basis: &Basis, rule: Option<&ProductRule>) -> Result<OperatorMatrix> {
    check_symbol(f, weight)?;
    if basis.n() != weight.n() {
        return Err(Error::Dimension { expected: weight.n(), got: basis.n() });
    }
    let matrix = match (rule, f.terms().is_some()) {
        (None, true) => moment_matrix(f, weight, basis)?,
        (Some(r), _) => {
            if f.is_oscillatory() {
                return Err(Error::OscillatoryNotRadial(f.id().to_string()));
            }
            rule_matrix(f, r, basis)?
        }
        (None, false) => {
            let r = build_rule(weight.n(), weight, 2 * basis.max_degree() + SMOOTHNESS_GUARD)?;
            rule_matrix(f, &r, basis)?
        }
    };
    Ok(OperatorMatrix { weight: *weight, basis: basis.clone(), inner: basis.max_degree(), kind: OperatorKind::Toeplitz, matrix })
}

/// Shares one rule across the several Toeplitz matrices of a composite object.
struct Assembler<'a> {
    weight: &'a Weight,
    trunc: Truncation,
    inner: Basis,
    rule: Option<ProductRule>,
}

impl<'a> Assembler<'a> {
    fn new(weight: &'a Weight, trunc: Truncation) -> Result<Self> {
        if trunc.m < trunc.n {
            return Err(Error::Truncation { n: trunc.n, m: trunc.m });
        }
        Ok(Self { weight, trunc, inner: Basis::new(weight.n(), trunc.m)?, rule: None })
    }

    /// T_f on the inner basis (degree <= M).
    fn toeplitz(&mut self, f: &Symbol) -> Result<CMatrix> {
        check_symbol(f, self.weight)?;
        if f.terms().is_some() {
            return moment_matrix(f, self.weight, &self.inner);
        }
        if self.rule.is_none() {
            self.rule = Some(build_rule(self.weight.n(), self.weight, self.trunc.rule_degree())?);
        }
        rule_matrix(f, self.rule.as_ref().expect("built"), &self.inner)
    }

    fn outer_dim(&self) -> usize {
        self.inner.dim_up_to(self.trunc.n)
    }

    fn finish(&self, kind: OperatorKind, matrix: CMatrix) -> Result<OperatorMatrix> {
        Ok(OperatorMatrix {
            weight: *self.weight,
            basis: Basis::new(self.weight.n(), self.trunc.n)?,
            inner: self.trunc.m,
            kind,
            matrix,
        })
    }
}

/// Per-degree eigenvalues <f e_m, e_m> of a radial symbol, m = 0..=max_m.
pub fn radial_eigenvalues(f: &Symbol, weight: &Weight, max_m: usize) -> Result<Vec<C64>> {
    let profiles = f
        .radial_profiles()
        .ok_or_else(|| Error::InvalidParameter(format!("symbol '{}' is not radial", f.id())))?;
    let n = weight.n();
    let exps: Vec<f64> = (0..=max_m).map(|m| (m + n - 1) as f64).collect();
    let mut out = vec![C64::new(0.0, 0.0); max_m + 1];
    for p in profiles {
        for (o, v) in out.iter_mut().zip(p.beta_averages(&exps, weight.alpha())?) {
            *o += v;
        }
    }
    Ok(out)
}

/// G = T_{|f|^2} - A* A with A the M x N block of T_f: the Gram matrix of
/// H_f restricted to degree <= N, projections truncated at degree M.
pub fn hankel_gram(f: &Symbol, weight: &Weight, trunc: Truncation) -> Result<OperatorMatrix> {
    let mut asm = Assembler::new(weight, trunc)?;
    let d = asm.outer_dim();
    let dm = asm.inner.dim();
    let t = asm.toeplitz(f)?;
    let sq = asm.toeplitz(&f.conj().product(f))?;
    let a = t.block(0, dm, 0, d);
    let g = sq.block(0, d, 0, d).sub(&a.adjoint().matmul(&a));
    asm.finish(OperatorKind::HankelGram, g)
}

/// sqrt of the largest eigenvalue of the Hankel Gram matrix (negative
/// rounding noise is clipped to zero).
pub fn hankel_norm(f: &Symbol, weight: &Weight, trunc: Truncation) -> Result<f64> {
    let g = hankel_gram(f, weight, trunc)?;
    let top = hermitian_eigenvalues(g.matrix()).last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// T_f T_g - T_{fg} on degree <= N with the middle sum truncated at M.
pub fn semicommutator(f: &Symbol, g: &Symbol, weight: &Weight, trunc: Truncation) -> Result<OperatorMatrix> {
    product_chain(&[f.clone(), g.clone()], weight, trunc, OperatorKind::Semicommutator)
}

/// T_{f1} ... T_{fm} - T_{f1...fm}, every intermediate sum truncated at M.
pub fn product_defect(fs: &[Symbol], weight: &Weight, trunc: Truncation) -> Result<OperatorMatrix> {
    product_chain(fs, weight, trunc, OperatorKind::ProductDefect)
}

fn product_chain(fs: &[Symbol], weight: &Weight, trunc: Truncation, kind: OperatorKind) -> Result<OperatorMatrix> {
    if fs.is_empty() {
        return Err(Error::InvalidParameter("empty symbol list".into()));
    }
    let mut asm = Assembler::new(weight, trunc)?;
    let d = asm.outer_dim();
    let dm = asm.inner.dim();
    let mut chain: Option<CMatrix> = None;
    for (i, f) in fs.iter().enumerate().rev() {
        let t = asm.toeplitz(f)?;
        let rows = if i == 0 { d } else { dm };
        let t = t.block(0, rows, 0, if chain.is_some() { dm } else { d });
        chain = Some(match chain {
            None => t,
            Some(c) => t.matmul(&c),
        });
    }
    let product = fs[1..].iter().fold(fs[0].clone(), |acc, f| acc.product(f));
    let direct = asm.toeplitz(&product)?.block(0, d, 0, d);
    asm.finish(kind, chain.expect("non-empty").sub(&direct))
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite { index: 0, location: "operator matrix".into() });
    }
    largest_singular_value(m)
}

/// Block structure of T_{f_c} on the unweighted space of B^2 (lambda = 3),
/// where f_c(z1, z2) = c(z2).
#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub degree: usize,
    /// max |e_(a,b)(z) - e_a^3(z1) e_b^(a+3)(z2)| over the sampled points.
    pub factorization_error: f64,
    /// max |T[(a',b'),(a,b)]| over a != a'.
    pub cross_block_max: f64,
    /// Per block j: max entry difference against the disk Toeplitz matrix
    /// of c at lambda = j + 3.
    pub block_errors: Vec<f64>,
}

pub fn block_decomposition_check(c: &Symbol, degree: usize, points: usize, seed: u64) -> Result<BlockReport> {
    if !c.supports_dim(1) {
        return Err(Error::Dimension { expected: 1, got: c.dim().unwrap_or(0) });
    }
    if !c.has(Tags::BOUNDED) {
        return Err(Error::InvalidParameter(format!("symbol '{}' must be bounded", c.id())));
    }
    let w3 = Weight::new(2, 3.0)?;
    let basis = Basis::new(2, degree)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factorization_error = 0.0f64;
    for _ in 0..points {
        let r = rng.gen::<f64>().powf(0.25) * 0.99;
        let t: f64 = rng.gen();
        let z = [
            C64::from_polar(r * t.sqrt(), rng.gen::<f64>() * std::f64::consts::TAU),
            C64::from_polar(r * (1.0 - t).sqrt(), rng.gen::<f64>() * std::f64::consts::TAU),
        ];
        for idx in basis.indices() {
            let (a, b) = (idx[0], idx[1]);
            let left = basis_eval(&w3, idx, &z);
            let right = basis_eval(&Weight::new(1, 3.0)?, &[a], &z[..1]) * basis_eval(&Weight::new(1, a as f64 + 3.0)?, &[b], &z[1..]);
            factorization_error = factorization_error.max((left - right).norm());
        }
    }

    let inner = c.clone();
    let fc = Symbol::from_fn(format!("{}(z2)", c.id()), Some(2), move |z| inner.eval_coords(&z[1..2]), Tags::BOUNDED, c.sup_bound());
    let rule = build_rule(2, &w3, 2 * degree + SMOOTHNESS_GUARD)?;
    let t = toeplitz_matrix(&fc, &w3, &basis, Some(&rule))?;

    let mut cross_block_max = 0.0f64;
    for (col, beta) in basis.indices().iter().enumerate() {
        for (row, gamma) in basis.indices().iter().enumerate() {
            if beta[0] != gamma[0] {
                cross_block_max = cross_block_max.max(t.entry(row, col).norm());
            }
        }
    }
    let mut block_errors = Vec::with_capacity(degree + 1);
    for j in 0..=degree as u32 {
        let wj = Weight::new(1, j as f64 + 3.0)?;
        let bj = Basis::new(1, degree - j as usize)?;
        let disk = toeplitz_matrix(c, &wj, &bj, None)?;
        let mut err = 0.0f64;
        for b in 0..bj.dim() {
            for b2 in 0..bj.dim() {
                let col = basis.index_of(&[j, b as u32]).expect("in basis");
                let row = basis.index_of(&[j, b2 as u32]).expect("in basis");
                err = err.max((t.entry(row, col) - disk.entry(b2, b)).norm());
            }
        }
        block_errors.push(err);
    }
    Ok(BlockReport { degree, factorization_error, cross_block_max, block_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_adaptive};
    use crate::symbols::{abs2, catalog, const1, harmonic_arc, lookup, osc_counterexample, re_z1, sin_beta0, z1};
    use proptest::prelude::*;

    fn w(n: usize, l: f64) -> Weight {
        Weight::new(n, l).unwrap()
    }

    /// The symbol as an opaque closure, so it takes the rule path.
    fn opaque(f: &Symbol) -> Symbol {
        let g = f.clone();
        Symbol::from_fn(format!("opaque({})", f.id()), f.dim(), move |z| g.eval_coords(z), f.tags(), f.sup_bound())
    }

    /// <f e_beta, e_gamma> by direct quadrature of the integrand.
    fn brute_entry(f: &Symbol, weight: &Weight, beta: &[u32], gamma: &[u32], rule: &ProductRule) -> C64 {
        let (b, g) = (beta.to_vec(), gamma.to_vec());
        let wt = *weight;
        let f = f.clone();
        integrate(&move |z: &[C64]| f.eval_coords(z) * basis_eval(&wt, &b, z) * basis_eval(&wt, &g, z).conj(), rule).unwrap()
    }

    #[test]
    fn basis_order_and_lookup() {
        let b = Basis::new(2, 3).unwrap();
        assert_eq!(b.dim(), 10);
        assert_eq!(b.multi_index(0), &[0, 0]);
        assert_eq!(b.multi_index(1), &[1, 0]);
        assert_eq!(b.multi_index(2), &[0, 1]);
        assert_eq!(b.multi_index(3), &[2, 0]);
        for i in 0..b.dim() {
            assert_eq!(b.index_of(b.multi_index(i)), Some(i));
            if i > 0 {
                assert!(b.degree(i) >= b.degree(i - 1));
            }
        }
        assert_eq!(b.dim_up_to(1), 3);
        assert_eq!(Basis::new(1, 48).unwrap().dim(), 49);
        assert_eq!(Basis::new(2, 8).unwrap().dim(), 45);
        assert_eq!(Basis::new(3, 2).unwrap().dim(), 10);
    }

    #[test]
    fn constant_symbol_gives_identity() {
        for (n, l, deg) in [(1, 2.0, 10), (1, 50.0, 10), (2, 4.0, 4)] {
            let wt = w(n, l);
            let b = Basis::new(n, deg).unwrap();
            let id = CMatrix::identity(b.dim());
            assert!(toeplitz_matrix(&const1(), &wt, &b, None).unwrap().matrix().max_abs_diff(&id) < 1e-13);
            assert!(toeplitz_matrix(&opaque(&const1()), &wt, &b, None).unwrap().matrix().max_abs_diff(&id) < 1e-12);
        }
    }

    #[test]
    fn abs2_diagonal_matches_beta_ratio() {
        for l in [2.0, 8.0, 32.0, 128.0] {
            let wt = w(1, l);
            let b = Basis::new(1, 48).unwrap();
            let t = toeplitz_matrix(&abs2(), &wt, &b, None).unwrap();
            let alpha = l - 2.0;
            for m in 0..=48 {
                let want = (m as f64 + 1.0) / (m as f64 + alpha + 2.0);
                assert!((t.entry(m, m).re - want).abs() < 1e-12, "{l} {m}");
                for k in 0..=48 {
                    if k != m {
                        assert_eq!(t.entry(k, m), C64::new(0.0, 0.0));
                    }
                }
            }
            let ev = radial_eigenvalues(&abs2(), &wt, 48).unwrap();
            assert!((ev[7].re - 8.0 / (l + 7.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn z1_matches_brute_force_and_is_lower_triangular() {
        let wt = w(2, 4.5);
        let b = Basis::new(2, 3).unwrap();
        let t = toeplitz_matrix(&z1(), &wt, &b, None).unwrap();
        let rule = build_rule(2, &wt, 12).unwrap();
        for (col, beta) in b.indices().iter().enumerate() {
            for (row, gamma) in b.indices().iter().enumerate() {
                let want = brute_entry(&z1(), &wt, beta, gamma, &rule);
                assert!((t.entry(row, col) - want).norm() < 1e-12);
                if b.degree(row) < b.degree(col) + 1 {
                    assert!(t.entry(row, col).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rule_path_agrees_with_moment_path() {
        for (f, n, l, deg) in [(sin_beta0(), 1, 10.0, 12), (re_z1(), 1, 3.0, 12), (abs2(), 2, 6.0, 4), (sin_beta0(), 2, 20.0, 3)] {
            let wt = w(n, l);
            let b = Basis::new(n, deg).unwrap();
            let exact = toeplitz_matrix(&f, &wt, &b, None).unwrap();
            let rule = build_rule(n, &wt, 2 * deg + 64).unwrap();
            let quad = toeplitz_matrix(&f, &wt, &b, Some(&rule)).unwrap();
            assert!(exact.matrix().max_abs_diff(quad.matrix()) < 1e-10, "{} {n}", f.id());
        }
    }

    #[test]
    fn adjoint_is_toeplitz_of_conjugate() {
        let wt = w(1, 5.0);
        let b = Basis::new(1, 16).unwrap();
        for f in [re_z1(), z1(), sin_beta0(), harmonic_arc(0.3, 2.0).unwrap(), osc_counterexample()] {
            let t = toeplitz_matrix(&f, &wt, &b, None).unwrap();
            let tc = toeplitz_matrix(&f.conj(), &wt, &b, None).unwrap();
            assert!(t.matrix().adjoint().max_abs_diff(tc.matrix()) < 1e-12, "{}", f.id());
        }
    }

    #[test]
    fn entries_respect_sup_bound() {
        let wt = w(1, 8.0);
        let b = Basis::new(1, 12).unwrap();
        for f in catalog().into_iter().filter(|f| f.has(Tags::BOUNDED)) {
            let t = toeplitz_matrix(&f, &wt, &b, None).unwrap();
            assert!(t.matrix().max_abs() <= f.sup_bound().unwrap() + 1e-10, "{}", f.id());
        }
    }

    #[test]
    fn oscillatory_general_symbol_is_rejected() {
        let a = crate::bergman::Point::disk(C64::new(0.2, 0.0)).unwrap();
        let f = osc_counterexample().precompose(&a).unwrap();
        let b = Basis::new(1, 4).unwrap();
        assert!(matches!(toeplitz_matrix(&f, &w(1, 4.0), &b, None), Err(Error::OscillatoryNotRadial(_))));
        assert!(matches!(hankel_gram(&abs2(), &w(1, 4.0), Truncation { n: 5, m: 4, quad_degree: None }), Err(Error::Truncation { .. })));
    }

    #[test]
    fn counterexample_eigenvalue_is_gamma0() {
        for alpha in [0.0, 6.0] {
            let ev = radial_eigenvalues(&osc_counterexample(), &w(1, alpha + 2.0), 2).unwrap();
            let g = crate::quadrature::oscillatory_gamma0(alpha).unwrap();
            assert!((ev[0] - g.value).norm() < 1e-9);
        }
    }

    /// exp(i/(|z|^2 + eps)) is smooth, so the 2D rule resolves it; its constant
    /// eigenvalue must be the s = |z|^2 integral used for the counterexample.
    #[test]
    fn mollified_counterexample_entry_uses_squared_radius() {
        for (lam, eps) in [(2.0, 0.5), (8.0, 0.5), (8.0, 0.25), (32.0, 0.3)] {
            let wt = w(1, lam);
            let f = Symbol::from_fn("mollified", Some(1), move |z| C64::from_polar(1.0, 1.0 / (z[0].norm_sqr() + eps)), Tags::BOUNDED, Some(1.0));
            let rule = build_rule(1, &wt, 64).unwrap();
            let got = toeplitz_matrix(&f, &wt, &Basis::new(1, 0).unwrap(), Some(&rule)).unwrap().entry(0, 0);
            let alpha = lam - 2.0;
            let want = integrate_adaptive(&|s: f64| C64::from_polar((alpha + 1.0) * (1.0 - s).powf(alpha), 1.0 / (s + eps)), 0.0, 1.0, 1e-15);
            assert!((got - want).norm() < 1e-10, "lambda {lam} eps {eps}: {got} vs {want}");
        }
    }

    #[test]
    fn semicommutator_with_holomorphic_right_factor_vanishes() {
        let wt = w(1, 8.0);
        let tr = Truncation::default_for(1, 16);
        for f in catalog().into_iter().filter(|f| f.has(Tags::BOUNDED)) {
            let s = semicommutator(&f, &z1(), &wt, tr).unwrap();
            assert!(s.norm().unwrap() < 1e-10, "{}", f.id());
        }
        let s = semicommutator(&const1(), &const1(), &wt, tr).unwrap();
        assert!(s.matrix().max_abs() < 1e-15);
    }

    #[test]
    fn semicommutator_z_conj_z_matches_brute_force() {
        let l = 3.0;
        let wt = w(1, l);
        let tr = Truncation::new(4, 12).unwrap();
        let s = semicommutator(&z1(), &z1().conj(), &wt, tr).unwrap();
        assert!((s.entry(0, 0) + 1.0 / l).norm() < 1e-14);
        // brute force: sum over mu of <g e_b, e_mu><f e_mu, e_g> - <fg e_b, e_g>
        let rule = build_rule(1, &wt, 40).unwrap();
        let (f, g) = (z1(), z1().conj());
        let fg = f.product(&g);
        for b in 0..=4u32 {
            for c in 0..=4u32 {
                let mut v = -brute_entry(&fg, &wt, &[b], &[c], &rule);
                for mu in 0..=12u32 {
                    v += brute_entry(&g, &wt, &[b], &[mu], &rule) * brute_entry(&f, &wt, &[mu], &[c], &rule);
                }
                assert!((s.entry(c as usize, b as usize) - v).norm() < 1e-12);
            }
        }
        // and the reversed order vanishes identically
        let r = semicommutator(&z1().conj(), &z1(), &wt, tr).unwrap();
        assert!(r.matrix().max_abs() < 1e-14);
    }

    #[test]
    fn hankel_of_conjugate_coordinate() {
        for l in [2.0, 5.0] {
            let wt = w(1, l);
            let g = hankel_gram(&z1().conj(), &wt, Truncation::new(10, 30).unwrap()).unwrap();
            for m in 0..=10usize {
                let mf = m as f64;
                let want = (mf + 1.0) / (l + mf) - mf / (l + mf - 1.0);
                assert!((g.entry(m, m).re - want).abs() < 1e-12, "{l} {m}");
            }
            assert!((g.entry(0, 0).re - 1.0 / l).abs() < 1e-14);
        }
        let h = hankel_norm(&z1().conj(), &w(1, 2.0), Truncation::new(10, 40).unwrap()).unwrap();
        assert!((h - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hankel_vanishes_on_holomorphic_and_constants() {
        let wt = w(1, 6.0);
        let tr = Truncation::new(12, 20).unwrap();
        for f in [z1(), const1(), opaque(&z1())] {
            let g = hankel_gram(&f, &wt, tr).unwrap();
            assert!(g.matrix().max_abs() < 1e-12, "{}", f.id());
        }
        let w2 = w(2, 5.0);
        let g = hankel_gram(&z1(), &w2, Truncation::new(3, 6).unwrap()).unwrap();
        assert!(g.matrix().max_abs() < 1e-12);
    }

    #[test]
    fn hankel_gram_is_psd_and_norm_monotone_in_n() {
        let wt = w(1, 8.0);
        for id in ["sin_beta0", "re_z1", "vmo_loglog", "harmonic_arc:0:2"] {
            let f = lookup(id).unwrap();
            let mut prev = 0.0;
            for n in [4, 8, 12] {
                let tr = Truncation::new(n, 28).unwrap();
                let g = hankel_gram(&f, &wt, tr).unwrap();
                assert!(hermitian_eigenvalues(g.matrix())[0] > -1e-10, "{id}");
                let h = hankel_norm(&f, &wt, tr).unwrap();
                assert!(h >= prev - 1e-12, "{id}");
                prev = h;
            }
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&CMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(operator_norm(&CMatrix::zeros(4, 4)).unwrap(), 0.0);
        let d = CMatrix::from_diagonal(&[C64::new(0.3, 0.0), C64::new(-0.7, 0.0)]);
        assert!((operator_norm(&d).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn product_defect_reduces_with_holomorphic_tail() {
        let wt = w(1, 8.0);
        let tr = Truncation::default_for(1, 12);
        let s = sin_beta0();
        let two = product_defect(&[s.clone(), s.clone()], &wt, tr).unwrap();
        let semi = semicommutator(&s, &s, &wt, tr).unwrap();
        assert!(two.matrix().max_abs_diff(semi.matrix()) < 1e-14);
        let consts = product_defect(&[const1(), const1(), const1()], &wt, tr).unwrap();
        assert!(consts.matrix().max_abs() < 1e-14);
        // the holomorphic tail is absorbed: T_a T_b T_z - T_{abz} = (T_a T_b - T_{ab}) T_z
        let with_z = product_defect(&[s.clone(), s.clone(), z1()], &wt, tr).unwrap();
        let wider = semicommutator(&s, &s, &wt, Truncation::new(13, tr.m).unwrap()).unwrap();
        let b = Basis::new(1, 13).unwrap();
        let tz = toeplitz_matrix(&z1(), &wt, &b, None).unwrap().matrix().block(0, 14, 0, 13);
        let want = wider.matrix().block(0, 13, 0, 14).matmul(&tz);
        assert!(with_z.matrix().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn block_decomposition_examples() {
        let r = block_decomposition_check(&const1(), 6, 20, 3).unwrap();
        assert!(r.factorization_error < 1e-12 && r.cross_block_max < 1e-12);
        assert!(r.block_errors.iter().all(|e| *e < 1e-12));
        let r = block_decomposition_check(&abs2(), 6, 20, 4).unwrap();
        assert!(r.factorization_error < 1e-10);
        assert!(r.cross_block_max < 1e-8);
        assert!(r.block_errors[0] < 1e-6, "{:?}", r.block_errors);
        assert!(r.block_errors.iter().all(|e| *e < 1e-10));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn semicommutator_bounded_by_hankel_product(l in 3.0f64..40.0, i in 0usize..4, j in 0usize..4) {
            let ids = ["sin_beta0", "re_z1", "abs2", "vmo_loglog"];
            let (f, g) = (lookup(ids[i]).unwrap(), lookup(ids[j]).unwrap());
            let wt = w(1, l);
            let tr = Truncation::new(10, 26).unwrap();
            let s = semicommutator(&f, &g, &wt, tr).unwrap().norm().unwrap();
            let bound = hankel_norm(&f.conj(), &wt, tr).unwrap() * hankel_norm(&g, &wt, tr).unwrap();
            prop_assert!(s <= bound * (1.0 + 1e-8) + 1e-10, "{s} {bound}");
        }
    }
}
