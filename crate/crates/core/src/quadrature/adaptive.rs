//! Adaptive Gauss-Kronrod integration of complex integrands on an interval.

use std::collections::BinaryHeap;

use super::gauss::{GK_WG, GK_WK, GK_X};
use crate::special::pairwise_sum;
use crate::C64;

#[derive(Clone, Copy)]
struct Panel {
    err: f64,
    lo: f64,
    hi: f64,
    value: C64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // largest error first; ties broken by position so the order is total
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err).then(other.lo.total_cmp(&self.lo))
    }
}

fn gk15(f: &dyn Fn(f64) -> C64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    let mut abs = fc.norm() * GK_WK[7];
    for i in 0..7 {
        let x = h * GK_X[i];
        let (l, r) = (f(c - x), f(c + x));
        k += (l + r) * GK_WK[i];
        abs += (l.norm() + r.norm()) * GK_WK[i];
        if i % 2 == 1 {
            g += (l + r) * GK_WG[i / 2];
        }
    }
    Panel { err: ((k - g) * h).norm(), lo: a, hi: b, value: k * h, abs: abs * h.abs() }
}

const MAX_PANELS: usize = 2000;

/// Integral of f over [a, b] with absolute tolerance `tol`, by global
/// bisection of the panel with the largest error estimate. Stops early once
/// the total error reaches the rounding floor of int |f|, or at a fixed
/// panel budget.
pub fn integrate_adaptive(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    integrate_adaptive_rel(f, a, b, tol, 64.0 * f64::EPSILON)
}

/// As [`integrate_adaptive`], also stopping once the error is below `rel`
/// times int |f|.
pub fn integrate_adaptive_rel(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64, rel: f64) -> C64 {
    if a == b {
        return C64::new(0.0, 0.0);
    }
    let first = gk15(f, a, b);
    let (mut err, mut scale) = (first.err, first.abs);
    let mut heap = BinaryHeap::from([first]);
    let mut steps = 0usize;
    while heap.len() < MAX_PANELS && err > tol && err > rel * scale {
        // running sums lose the small panels under the rounding of the first
        // large estimates, so they are rebuilt now and then
        steps += 1;
        if steps % 16 == 0 {
            err = heap.iter().map(|p| p.err).sum();
            scale = heap.iter().map(|p| p.abs).sum();
            if err <= tol || err <= rel * scale {
                break;
            }
        }
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.lo + p.hi);
        if m <= p.lo.min(p.hi) || m >= p.lo.max(p.hi) {
            heap.push(p);
            break;
        }
        let (l, r) = (gk15(f, p.lo, m), gk15(f, m, p.hi));
        err += l.err + r.err - p.err;
        scale += l.abs + r.abs - p.abs;
        heap.push(l);
        heap.push(r);
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let vals: Vec<C64> = panels.iter().map(|p| p.value).collect();
    pairwise_sum(&vals)
}
