use rayon::prelude::*;

use super::config::{Experiment, SweepConfig};
use super::result::{all_below, nonincreasing, strictly_decreasing, strictly_increasing, Row, SweepResult, TrendCheck};
use crate::bergman::Weight;
use crate::error::{Error, Result};
use crate::operators::{block_decomposition_check, hankel_norm, product_defect, semicommutator, toeplitz_matrix, Basis, Truncation};
use crate::oscillation::{berezin_deviation, bmo_seminorm, Berezin, BerezinPath, EvaluationGrid};
use crate::quadrature::oscillatory_gamma0;
use crate::symbols::{Symbol, Tags};
use crate::{Point, C64};

/// N -> N + 4 (and M -> M + 4) for the truncation diagnostic.
pub const DIAG_STEP: usize = 4;

pub(crate) fn truncations(cfg: &SweepConfig) -> Result<(Truncation, Truncation)> {
    let t = Truncation::new(cfg.degree, cfg.inner)?.with_quad_degree(cfg.quad_degree);
    let t4 = Truncation::new(cfg.degree + DIAG_STEP, cfg.inner + DIAG_STEP)?.with_quad_degree(cfg.quad_degree);
    Ok((t, t4))
}

/// One closure per lambda, evaluated in parallel and concatenated in lambda order.
pub(crate) fn per_lambda(cfg: &SweepConfig, job: impl Fn(Weight) -> Result<Vec<Row>> + Sync) -> Result<Vec<Row>> {
    let rows: Vec<Vec<Row>> = cfg.lambda.values.par_iter().map(|&l| job(Weight::new(cfg.dim, l)?)).collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn decays(f: &Symbol) -> bool {
    f.tags().intersects(Tags::UC | Tags::BUC | Tags::VMO)
}

pub fn run(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Semicommutator => run_semicommutator_sweep(cfg),
        Experiment::Counterexample => run_counterexample(cfg),
        Experiment::BerezinConvergence => run_berezin_convergence(cfg),
        Experiment::Bmo => run_bmo_sweep(cfg),
        Experiment::Products => run_products_sweep(cfg),
        Experiment::InequalityAudit => super::audit::run_inequality_audit(cfg),
        Experiment::BlockDecomposition => run_block_decomposition(cfg),
    }
}

/// value = ||T_f T_g - T_{fg}|| on the truncation.
pub fn run_semicommutator_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let (f, g) = (cfg.f_symbol()?, cfg.g_symbol()?);
    let (t, t4) = truncations(cfg)?;
    let rows = per_lambda(cfg, |w| {
        let v = semicommutator(&f, &g, &w, t)?.norm()?;
        let v4 = semicommutator(&f, &g, &w, t4)?.norm()?;
        Ok(vec![Row::new("semicommutator", f.id(), g.id(), w.lambda(), t.n, t.m, v).diag_n((v4 - v).abs())])
    })?;
    let mut res = SweepResult::new(cfg.clone(), rows);
    let series = res.series("semicommutator");
    let mut trends = Vec::new();
    if g.has(Tags::HOLOMORPHIC) {
        trends.push(all_below("holomorphic g is absorbed", &series, 1e-8));
    }
    if decays(&f) || decays(&g) {
        trends.push(nonincreasing("semicommutator nonincreasing", &series));
    }
    res.trends = trends;
    Ok(res)
}

fn gamma0(f: &Symbol, w: &Weight) -> Result<(C64, Option<f64>)> {
    if f.id() == "osc_counterexample" && w.n() == 1 {
        let v = oscillatory_gamma0(w.alpha())?;
        return Ok((v.value, Some(v.disagreement)));
    }
    let m = f.weighted_mean(w).ok_or_else(|| Error::Config(format!("counterexample needs a radial symbol, got '{}'", f.id())))??;
    Ok((m, None))
}

/// |gamma_0| = |B f(0)|, ||T_f 1||, the lower bound |1 - |gamma_0|^2| for
/// ||T_conj(f) T_f - T_{|f|^2}|| and that norm itself.
pub fn run_counterexample(cfg: &SweepConfig) -> Result<SweepResult> {
    let f = cfg.f_symbol()?;
    let fc = f.conj();
    let (t, t4) = truncations(cfg)?;
    let rows = per_lambda(cfg, |w| {
        let l = w.lambda();
        let (g0, disagreement) = gamma0(&f, &w)?;
        let mut r0 = Row::new("counterexample.gamma0", f.id(), "", l, t.n, t.m, g0.norm()).detail("re", g0.re).detail("im", g0.im);
        if let Some(d) = disagreement {
            r0 = r0.diag_path(d);
        }
        let col0 = |n: usize| -> Result<f64> {
            let m = toeplitz_matrix(&f, &w, &Basis::new(w.n(), n)?, None)?;
            Ok((0..m.matrix().rows()).map(|i| m.entry(i, 0).norm_sqr()).sum::<f64>().sqrt())
        };
        let (a, a4) = (col0(t.n)?, col0(t4.n)?);
        let r1 = Row::new("counterexample.tf_one", f.id(), "", l, t.n, t.m, a).diag_n((a4 - a).abs());
        let lb = (1.0 - g0.norm_sqr()).abs();
        let mut r2 = Row::new("counterexample.lower_bound", f.id(), "", l, t.n, t.m, lb);
        if let Some(d) = disagreement {
            r2 = r2.diag_path(2.0 * d);
        }
        let s = semicommutator(&fc, &f, &w, t)?.norm()?;
        let s4 = semicommutator(&fc, &f, &w, t4)?.norm()?;
        let r3 = Row::new("counterexample.semicommutator", fc.id(), f.id(), l, t.n, t.m, s).diag_n((s4 - s).abs());
        Ok(vec![r0, r1, r2, r3])
    })?;
    let mut res = SweepResult::new(cfg.clone(), rows);
    res.trends = vec![
        strictly_decreasing("|gamma_0| strictly decreasing", &res.series("counterexample.gamma0")),
        strictly_increasing("lower bound strictly increasing", &res.series("counterexample.lower_bound")),
        all_below("lower bound at most 1", &res.series("counterexample.lower_bound"), 1.0 + 1e-12),
    ];
    Ok(res)
}

/// Kernel-path minus convolution-path Berezin transform at one point; None
/// where the kernel path cannot resolve an oscillatory symbol.
fn path_gap(ev: &Berezin, f: &Symbol, p: &Point) -> Result<Option<f64>> {
    if f.is_oscillatory() && !p.is_origin() {
        return Ok(None);
    }
    Ok(Some((ev.berezin(f, p, BerezinPath::Kernel)? - ev.berezin(f, p, BerezinPath::Convolution)?).norm()))
}

/// value = sup over the grid of |B f - f|; a second row holds z = 0.
pub fn run_berezin_convergence(cfg: &SweepConfig) -> Result<SweepResult> {
    let f = cfg.f_symbol()?;
    let grid = EvaluationGrid::new(cfg.dim, cfg.grid)?;
    let deg = cfg.berezin_degree();
    let rows = per_lambda(cfg, |w| {
        let ev = Berezin::new(&w, deg)?;
        let ev4 = Berezin::new(&w, deg + DIAG_STEP)?;
        let s = berezin_deviation(&ev, &f, &grid)?;
        let s4 = berezin_deviation(&ev4, &f, &grid)?;
        let sup = Row::new("berezin-convergence", f.id(), "", w.lambda(), deg, deg, s.value)
            .diag_n((s4.value - s.value).abs())
            .diag_path_opt(path_gap(&ev, &f, &s.point)?)
            .on_grid(cfg.grid)
            .at(&s.point);
        let o = Point::origin(cfg.dim);
        let b0 = ev.transform(&f, &o)?;
        let origin = Row::new("berezin-convergence.origin", f.id(), "", w.lambda(), deg, deg, (b0 - f.eval(&o)).norm())
            .diag_path_opt(path_gap(&ev, &f, &o)?)
            .detail("re", b0.re)
            .detail("im", b0.im);
        Ok(vec![sup, origin])
    })?;
    let mut res = SweepResult::new(cfg.clone(), rows);
    if f.tags().intersects(Tags::UC | Tags::BUC) {
        res.trends.push(nonincreasing("sup |B f - f| nonincreasing", &res.series("berezin-convergence")));
    }
    if f.has(Tags::COUNTEREXAMPLE) {
        let last = res.series("berezin-convergence.origin").last().map(|r| r.value).unwrap_or(0.0);
        res.trends.push(TrendCheck::new("|B f(0) - f(0)| stays away from 0", last >= 0.8, format!("final value {last:e}")));
    }
    Ok(res)
}

/// value = sup over the grid of sqrt(MO(f)); a second row holds ||H_f||.
pub fn run_bmo_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let f = cfg.f_symbol()?;
    let grid = EvaluationGrid::new(cfg.dim, cfg.grid)?;
    let deg = cfg.berezin_degree();
    let (t, t4) = truncations(cfg)?;
    let fsq = f.conj().product(&f);
    let rows = per_lambda(cfg, |w| {
        let ev = Berezin::new(&w, deg)?;
        let ev4 = Berezin::new(&w, deg + DIAG_STEP)?;
        let s = bmo_seminorm(&ev, &f, &grid)?;
        let s4 = bmo_seminorm(&ev4, &f, &grid)?;
        let p = &s.point;
        let kernel_value = if f.is_oscillatory() && !p.is_origin() {
            None
        } else {
            let mean = ev.berezin(&f, p, BerezinPath::Kernel)?;
            let second = ev.berezin(&fsq, p, BerezinPath::Kernel)?.re;
            Some((second - mean.norm_sqr()).max(0.0).sqrt())
        };
        let bmo = Row::new("bmo", f.id(), "", w.lambda(), deg, deg, s.value)
            .diag_n((s4.value - s.value).abs())
            .diag_path_opt(kernel_value.map(|k| (k - s.value).abs()))
            .on_grid(cfg.grid)
            .at(p);
        let h = hankel_norm(&f, &w, t)?;
        let h4 = hankel_norm(&f, &w, t4)?;
        let hank = Row::new("bmo.hankel", f.id(), "", w.lambda(), t.n, t.m, h).diag_n((h4 - h).abs());
        Ok(vec![bmo, hank])
    })?;
    let mut res = SweepResult::new(cfg.clone(), rows);
    if f.tags().intersects(Tags::UC | Tags::VMO) {
        res.trends.push(nonincreasing("BMO seminorm nonincreasing", &res.series("bmo")));
        res.trends.push(nonincreasing("Hankel norm nonincreasing", &res.series("bmo.hankel")));
    }
    if f.has(Tags::COUNTEREXAMPLE) {
        let v = res.values("bmo");
        let kept = v.last().copied().unwrap_or(0.0) >= 0.5 * v.first().copied().unwrap_or(0.0);
        res.trends.push(TrendCheck::new("BMO seminorm does not decay", kept, format!("{v:?}")));
    }
    Ok(res)
}

/// value = ||T_{f_1} ... T_{f_m} - T_{f_1 ... f_m}|| on the truncation.
pub fn run_products_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let list = cfg.symbol_list()?;
    let ids: Vec<&str> = list.iter().map(|s| s.id()).collect();
    let label = ids.join("*");
    let (t, t4) = truncations(cfg)?;
    let rows = per_lambda(cfg, |w| {
        let v = product_defect(&list, &w, t)?.norm()?;
        let v4 = product_defect(&list, &w, t4)?.norm()?;
        Ok(vec![Row::new("products", label.clone(), "", w.lambda(), t.n, t.m, v).diag_n((v4 - v).abs())])
    })?;
    let mut res = SweepResult::new(cfg.clone(), rows);
    if list.iter().all(|s| s.has(Tags::BUC)) {
        res.trends.push(nonincreasing("product defect nonincreasing", &res.series("products")));
    }
    Ok(res)
}

/// T_{c(z2)} on the unweighted space of B^2 (lambda = 3) against the disk blocks.
pub fn run_block_decomposition(cfg: &SweepConfig) -> Result<SweepResult> {
    let c = cfg.f_symbol()?;
    let r = block_decomposition_check(&c, cfg.degree, 20, cfg.seed)?;
    let block_max = r.block_errors.iter().cloned().fold(0.0, f64::max);
    let row = |q: &str, v: f64| Row::new(format!("block-decomposition.{q}"), c.id(), "", 3.0, cfg.degree, cfg.degree, v);
    let mut rows = vec![row("factorization", r.factorization_error), row("cross_block", r.cross_block_max), row("block_max", block_max)];
    for (j, e) in r.block_errors.iter().enumerate() {
        rows[2].details.insert(format!("block_{j}"), *e);
    }
    let mut res = SweepResult::new(cfg.clone(), rows);
    res.trends = vec![
        all_below("basis factorizes", &res.series("block-decomposition.factorization"), 1e-10),
        all_below("no cross-block entries", &res.series("block-decomposition.cross_block"), 1e-8),
        all_below("blocks are disk Toeplitz matrices", &res.series("block-decomposition.block_max"), 1e-8),
    ];
    Ok(res)
}
