//! Dense complex matrices, a one-sided Jacobi SVD and Hermitian spectra.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Row-major CSV; each entry occupies two columns `re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|c| format!("{},{}", c.re, c.im)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Singular values (descending) by one-sided Jacobi on the columns.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    // work on the orientation with fewer columns
    let work = if a.cols > a.rows { a.adjoint() } else { a.clone() };
    let (m, n) = (work.rows, work.cols);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| work[(i, j)]).collect()).collect();
    // couplings below this are roundoff relative to the whole matrix
    let frob_sq: f64 = cols.iter().flatten().map(|c| c.norm_sqr()).sum();
    let floor = f64::EPSILON * f64::EPSILON * frob_sq;
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                let alpha: f64 = cp.iter().map(|c| c.norm_sqr()).sum();
                let beta: f64 = cq.iter().map(|c| c.norm_sqr()).sum();
                let gamma: C64 = cp.iter().zip(cq.iter()).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= floor || g <= JACOBI_TOL * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let yq = *y * phase.conj();
                    let nx = *x * c - yq * s;
                    let ny = *x * s + yq * c;
                    *x = nx;
                    *y = ny * phase;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::IterationCap("one-sided Jacobi SVD"));
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub fn largest_singular_value(a: &CMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    if a.rows == 0 || a.cols == 0 {
        return Ok(0.0);
    }
    Ok(singular_values(a)?[0])
}

/// Eigenvalues (ascending) of the Hermitian part of `a`.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norm_examples() {
        assert!((largest_singular_value(&CMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(largest_singular_value(&CMatrix::zeros(4, 3)).unwrap(), 0.0);
        let d = CMatrix::from_diagonal(&[C64::new(0.3, 0.0), C64::new(-0.7, 0.0)]);
        assert!((largest_singular_value(&d).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn singular_values_of_rank_one() {
        // u v^H has the single singular value |u||v|
        let u = [C64::new(1.0, 2.0), C64::new(0.0, -1.0), C64::new(3.0, 0.5)];
        let v = [C64::new(0.5, 0.0), C64::new(-1.0, 1.0)];
        let a = CMatrix::from_fn(3, 2, |i, j| u[i] * v[j].conj());
        let nu: f64 = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - nu * nv).abs() < 1e-13);
        assert!(sv[1].abs() < 1e-13);
    }

    #[test]
    fn roundoff_sized_matrix_converges() {
        // entries at the 1e-17 and subnormal scale, as left by exact cancellations
        let a = CMatrix::from_fn(40, 40, |i, j| {
            let x = ((7 * i + 3 * j) as f64).sin();
            C64::new(1e-17 * x, if (i + j) % 5 == 0 { 1e-310 } else { 0.0 })
        });
        let s = largest_singular_value(&a).unwrap();
        assert!(s > 0.0 && s < 1e-15);
        let z = CMatrix::from_fn(8, 8, |i, j| C64::new(if i == j { 1e-320 } else { 0.0 }, 0.0));
        assert!(largest_singular_value(&z).unwrap() < 1e-300);
    }

    #[test]
    fn csv_layout() {
        let m = CMatrix::from_fn(1, 2, |_, j| C64::new(j as f64, -1.0));
        assert_eq!(m.to_csv(), "0,-1,1,-1\n");
    }

    fn cmat(n: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| CMatrix { rows: n, cols: n, data: v.into_iter().map(|(a, b)| C64::new(a, b)).collect() })
    }

    proptest! {
        #[test]
        fn largest_sv_matches_gram_spectrum(a in cmat(6)) {
            let s = largest_singular_value(&a).unwrap();
            let ev = hermitian_eigenvalues(&a.adjoint().matmul(&a));
            let top = ev.last().unwrap().max(0.0).sqrt();
            prop_assert!((s - top).abs() <= 1e-10 * top.max(1.0));
        }

        #[test]
        fn sum_of_squares_preserved(a in cmat(5)) {
            let fro: f64 = a.data.iter().map(|c| c.norm_sqr()).sum();
            let sv = singular_values(&a).unwrap();
            let s2: f64 = sv.iter().map(|s| s * s).sum();
            prop_assert!((fro - s2).abs() < 1e-12 * fro.max(1.0));
        }
    }
}
