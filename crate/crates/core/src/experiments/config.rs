use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oscillation::{Berezin, GridSpec};
use crate::symbols::{lookup, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Semicommutator,
    Counterexample,
    BerezinConvergence,
    Bmo,
    Products,
    InequalityAudit,
    BlockDecomposition,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Semicommutator,
        Experiment::Counterexample,
        Experiment::BerezinConvergence,
        Experiment::Bmo,
        Experiment::Products,
        Experiment::InequalityAudit,
        Experiment::BlockDecomposition,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Semicommutator => "semicommutator",
            Experiment::Counterexample => "counterexample",
            Experiment::BerezinConvergence => "berezin-convergence",
            Experiment::Bmo => "bmo",
            Experiment::Products => "products",
            Experiment::InequalityAudit => "inequality-audit",
            Experiment::BlockDecomposition => "block-decomposition",
        }
    }

    fn default_symbol(self) -> &'static str {
        match self {
            Experiment::Semicommutator | Experiment::Products | Experiment::InequalityAudit => "sin_beta0",
            Experiment::Counterexample => "osc_counterexample",
            Experiment::BerezinConvergence | Experiment::BlockDecomposition => "abs2",
            Experiment::Bmo => "vmo_loglog",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}' (expected one of {})", Self::ALL.map(|e| e.id()).join(", "))))
    }
}

/// Either an explicit list "8,16,32" or a geometric range "8:128:5g".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaSchedule {
    pub spec: String,
    pub values: Vec<f64>,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        "8:128:5g".parse().expect("default schedule parses")
    }
}

impl FromStr for LambdaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("lambda schedule '{s}': {why}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let values = if let Some((range, count)) = s.rsplit_once(':').filter(|(_, c)| c.ends_with('g')) {
            let (start, stop) = range.split_once(':').ok_or_else(|| bad("expected start:stop:countg"))?;
            let (start, stop) = (num(start)?, num(stop)?);
            let count: usize = count.trim_end_matches('g').parse().map_err(|_| bad("bad count"))?;
            if !(start > 0.0 && stop > start) || count < 2 {
                return Err(bad("need 0 < start < stop and count >= 2"));
            }
            let q = (stop / start).powf(1.0 / (count - 1) as f64);
            let mut v: Vec<f64> = (0..count).map(|k| start * q.powi(k as i32)).collect();
            v[count - 1] = stop;
            v
        } else {
            s.split(',').map(num).collect::<Result<Vec<f64>>>()?
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad("empty or non-finite"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("values must be strictly increasing"));
        }
        Ok(Self { spec: s.to_string(), values })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub f: String,
    pub g: Option<String>,
    pub symbols: Vec<String>,
    pub lambda: LambdaSchedule,
    /// Outer truncation N.
    pub degree: usize,
    /// Inner truncation M.
    pub inner: usize,
    pub grid: GridSpec,
    pub quad_degree: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl SweepConfig {
    /// Defaults from the experiment: N = 48, M = N + 16 on the disk and
    /// N = 8, M = N + 4 on B^2; the block experiment works at N = 6.
    pub fn new(experiment: Experiment, dim: usize) -> Self {
        let degree = match (experiment, dim) {
            (Experiment::BlockDecomposition, _) => 6,
            (_, 1) => 48,
            _ => 8,
        };
        Self {
            experiment,
            dim,
            f: experiment.default_symbol().to_string(),
            g: None,
            symbols: Vec::new(),
            lambda: LambdaSchedule::default(),
            degree,
            inner: default_inner(dim, degree),
            grid: GridSpec::default(),
            quad_degree: None,
            seed: 7,
            out: None,
            json: None,
        }
    }

    pub fn with_symbols(mut self, f: &str, g: Option<&str>) -> Self {
        self.f = f.to_string();
        self.g = g.map(str::to_string);
        self
    }

    pub fn with_lambda(mut self, spec: &str) -> Result<Self> {
        self.lambda = spec.parse()?;
        Ok(self)
    }

    pub fn with_truncation(mut self, degree: usize, inner: Option<usize>) -> Self {
        self.degree = degree;
        self.inner = inner.unwrap_or_else(|| default_inner(self.dim, degree));
        self
    }

    pub fn f_symbol(&self) -> Result<Symbol> {
        lookup(&self.f)
    }

    pub fn g_symbol(&self) -> Result<Symbol> {
        lookup(self.g.as_deref().unwrap_or(&self.f))
    }

    /// The product list, defaulting to three copies of f.
    pub fn symbol_list(&self) -> Result<Vec<Symbol>> {
        if self.symbols.is_empty() {
            let f = self.f_symbol()?;
            Ok(vec![f.clone(), f.clone(), f])
        } else {
            self.symbols.iter().map(|s| lookup(s)).collect()
        }
    }

    pub fn berezin_degree(&self) -> usize {
        self.quad_degree.unwrap_or_else(|| Berezin::default_degree(self.dim))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.dim != 1 && self.dim != 2 {
            return cfg(format!("dimension must be 1 or 2, got {}", self.dim));
        }
        if self.inner < self.degree {
            return cfg(format!("inner truncation {} is below the degree {}", self.inner, self.degree));
        }
        if self.degree == 0 {
            return cfg("degree must be positive".into());
        }
        let n = self.dim as f64;
        if let Some(l) = self.lambda.values.iter().find(|l| **l <= n) {
            return cfg(format!("lambda = {l} must exceed n = {n}"));
        }
        if self.quad_degree == Some(0) {
            return cfg("quadrature degree must be positive".into());
        }
        let check = |id: &str| lookup(id).map(|s| (id.to_string(), s)).map_err(|e| Error::Config(e.to_string()));
        let mut ids = vec![self.f.clone()];
        ids.extend(self.g.clone());
        ids.extend(self.symbols.iter().cloned());
        for id in &ids {
            let (_, s) = check(id)?;
            if !s.supports_dim(self.dim) && self.experiment != Experiment::BlockDecomposition {
                return cfg(format!("symbol '{id}' is not defined on the ball of dimension {}", self.dim));
            }
        }
        match self.experiment {
            Experiment::Products => {
                let list = self.symbol_list()?;
                if list.len() > 4 || list.len() < 2 {
                    return cfg(format!("products take 2 to 4 symbols, got {}", list.len()));
                }
                if let Some(s) = list.iter().find(|s| !s.has(crate::symbols::Tags::BOUNDED)) {
                    return cfg(format!("products need bounded symbols; '{}' is not", s.id()));
                }
            }
            Experiment::InequalityAudit if self.dim != 1 => {
                return cfg("the inequality audit runs on the disk (--dim 1)".into());
            }
            Experiment::InequalityAudit => {
                if let Some(l) = self.lambda.values.iter().find(|l| **l < 4.0) {
                    return cfg(format!("the audit compares B at lambda/2 and needs lambda >= 2p = 4, got {l}"));
                }
            }
            Experiment::BlockDecomposition => {
                let s = self.f_symbol()?;
                if !s.supports_dim(1) || !s.has(crate::symbols::Tags::BOUNDED) {
                    return cfg(format!("block decomposition needs a bounded symbol of one variable, got '{}'", s.id()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn default_inner(dim: usize, degree: usize) -> usize {
    if dim == 1 {
        degree + 16
    } else {
        degree + 4
    }
}
