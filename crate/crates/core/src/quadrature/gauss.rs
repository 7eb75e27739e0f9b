//! Gauss-Jacobi rules by Golub-Welsch with Newton polishing, plus the
//! 7/15-point Gauss-Kronrod pair.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes on [-1, 1] with weights normalized to sum 1.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn jacobi_recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    // monic recurrence: diag[k] = alpha_k, off[k] = sqrt(beta_{k+1})
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let ak = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        diag.push(ak);
        let j = kf + 1.0;
        let s1 = 2.0 * j + a + b;
        let bk = if k == 0 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
        } else {
            4.0 * j * (j + a) * (j + b) * (j + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))
        };
        off.push(bk.sqrt());
    }
    (diag, off)
}

/// Implicit QL on a symmetric tridiagonal matrix. Returns eigenvalues and
/// the first component of each normalized eigenvector.
fn tridiagonal_ql(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::IterationCap("tridiagonal QL"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Orthonormal polynomial values p_0..p_{n} and p_n' at x.
fn orthonormal_eval(x: f64, diag: &[f64], off: &[f64]) -> (f64, f64, f64) {
    let n = diag.len();
    let (mut p_prev, mut p) = (0.0f64, 1.0f64);
    let (mut dp_prev, mut dp) = (0.0f64, 0.0f64);
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let b_prev = if k == 0 { 0.0 } else { off[k - 1] };
        let next = ((x - diag[k]) * p - b_prev * p_prev) / off[k];
        let dnext = (p + (x - diag[k]) * dp - b_prev * dp_prev) / off[k];
        p_prev = p;
        p = next;
        dp_prev = dp;
        dp = dnext;
    }
    (p, dp, sum_sq)
}

fn build_jacobi(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    let (diag, off) = jacobi_recurrence(n, a, b);
    let (mut x, z) = tridiagonal_ql(diag.clone(), off.clone())?;
    let mut w: Vec<f64> = z.iter().map(|v| v * v).collect();
    for (xi, wi) in x.iter_mut().zip(w.iter_mut()) {
        for _ in 0..2 {
            let (p, dp, _) = orthonormal_eval(*xi, &diag, &off);
            if dp != 0.0 && p.is_finite() && dp.is_finite() {
                let step = p / dp;
                if step.abs() < 1e-6 {
                    *xi -= step;
                }
            }
        }
        let (_, _, sum_sq) = orthonormal_eval(*xi, &diag, &off);
        let christoffel = 1.0 / sum_sq;
        if christoffel.is_finite() && christoffel > 0.0 {
            *wi = christoffel;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let nodes: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let weights: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
    let total: f64 = weights.iter().sum();
    Ok(GaussRule { nodes, weights: weights.into_iter().map(|v| v / total).collect() })
}

type CacheKey = (usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<GaussRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// n-point rule for the weight (1-x)^a (1+x)^b on [-1,1], a, b > -1.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<Arc<GaussRule>> {
    if n == 0 || !(a > -1.0) || !(b > -1.0) {
        return Err(Error::InvalidParameter(format!("Gauss-Jacobi needs n >= 1, a, b > -1 (got {n}, {a}, {b})")));
    }
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return Ok(r.clone());
    }
    let rule = Arc::new(build_jacobi(n, a, b)?);
    cache().lock().unwrap().insert(key, rule.clone());
    Ok(rule)
}

pub fn gauss_legendre(n: usize) -> Result<Arc<GaussRule>> {
    gauss_jacobi(n, 0.0, 0.0)
}

pub(crate) const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

pub(crate) const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

pub(crate) const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];
