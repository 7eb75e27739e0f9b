//! qlab: lambda sweeps for Toeplitz quantization on weighted Bergman spaces.
//!
//! Exit codes: 0 when every trend check passes, 2 when one fails,
//! 3 for a bad configuration and 1 for a numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use qlab_core::experiments::{run, Experiment, SweepConfig, SweepResult};
use qlab_core::oscillation::GridSpec;
use qlab_core::Error;

const EXIT_TREND: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_NUMERIC: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "qlab", version, about = "Berezin-Toeplitz quantization sweeps over lambda")]
struct Cli {
    /// semicommutator, counterexample, berezin-convergence, bmo, products,
    /// inequality-audit or block-decomposition
    experiment: Experiment,

    /// Symbol id for f
    #[arg(long)]
    f: Option<String>,

    /// Symbol id for g (defaults to f)
    #[arg(long)]
    g: Option<String>,

    /// Comma separated symbol ids for the products experiment
    #[arg(long, value_delimiter = ',')]
    symbols: Vec<String>,

    /// Lambda schedule: `a:b:kg` (k geometric steps) or a comma list
    #[arg(long, default_value = "8:128:5g")]
    lambda: String,

    /// Truncation degree N
    #[arg(long)]
    degree: Option<usize>,

    /// Inner truncation M >= N for products
    #[arg(long)]
    inner: Option<usize>,

    /// Evaluation grid `beta:<horizon>:<delta>:<angles>`
    #[arg(long, default_value_t = GridSpec::default())]
    grid: GridSpec,

    /// Ball dimension n (1 or 2)
    #[arg(long, default_value_t = 1)]
    dim: usize,

    /// Quadrature degree for Berezin transforms
    #[arg(long)]
    quad_degree: Option<usize>,

    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// CSV output path; CSV goes to stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,

    /// JSON output path
    #[arg(long)]
    json: Option<PathBuf>,
}

impl Cli {
    fn into_config(self) -> Result<SweepConfig, Error> {
        let mut cfg = SweepConfig::new(self.experiment, self.dim);
        if let Some(f) = self.f {
            cfg.f = f;
        }
        cfg.g = self.g;
        cfg.symbols = self.symbols;
        cfg = cfg.with_lambda(&self.lambda)?;
        if let Some(d) = self.degree {
            cfg = cfg.with_truncation(d, self.inner);
        } else if let Some(m) = self.inner {
            cfg.inner = m;
        }
        cfg.grid = self.grid;
        cfg.quad_degree = self.quad_degree;
        cfg.seed = self.seed;
        cfg.out = self.out;
        cfg.json = self.json;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_) | Error::UnsupportedDimension(_) | Error::InvalidWeight { .. } | Error::Dimension { .. } | Error::UnknownSymbol(_)
            | Error::Config(_)
            | Error::Truncation { .. }
            | Error::OscillatoryNotRadial(_)
            | Error::RuleTooCoarse { .. }
    )
}

fn write_outputs(cfg: &SweepConfig, res: &SweepResult) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => res.save_csv(path)?,
        None => res.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = &cfg.json {
        res.save_json(path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    let cfg = match cli.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qlab: configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let res = match run(&cfg) {
        Ok(r) => r,
        Err(e) if is_config_error(&e) => {
            eprintln!("qlab: configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("qlab: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    };
    if let Err(e) = write_outputs(&cfg, &res) {
        eprintln!("qlab: {e}");
        return ExitCode::from(EXIT_NUMERIC);
    }
    for t in &res.trends {
        eprintln!("{} {}: {}", if t.passed { "PASS" } else { "FAIL" }, t.name, t.detail);
    }
    if res.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TREND)
    }
}
