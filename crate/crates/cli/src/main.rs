//! `fshe`: configuration-driven driver for lemma verification, bounds,
//! simulation, moment estimation, growth scans and renewal analysis.
//!
//! Exit codes: 0 success, 1 assertion or numerical failure, 2 usage error,
//! 3 invalid configuration.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fshe::analytics::SigmaSpec;
use fshe::noise::LevyMeasureSpec;

use commands::{Dump, SpecArgs, SpecFn};
use config::ExperimentConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fshe", version, about = "Fractional stochastic heat equation with Levy noise")]
struct Cli {
    /// Worker threads for replica-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides FSHE_OUTPUT_DIR and run.output_dir.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify the kernel identities and inequalities on grids.
    VerifyLemmas {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        d: Option<u32>,
    },
    /// Contraction threshold, Lyapunov and growth-index bounds.
    Bounds {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Moment orders; replaces run.p.
        #[arg(long)]
        p: Vec<f64>,
    },
    /// Simulate replicas and summarize them.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Per-replica trajectory dump.
        #[arg(long, value_enum, default_value = "none")]
        dump: Dump,
    },
    /// Simulate and write sup/inf moment series.
    Moments {
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate and scan the growth index.
    GrowthScan {
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Solve the renewal equation; with a moments series, check the ordering.
    Renewal {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Series CSV written by `moments`.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Special-function evaluations for debugging.
    Specfun {
        #[command(subcommand)]
        op: SpecOp,
    },
}

#[derive(Debug, Subcommand)]
enum SpecOp {
    /// Evaluate a function; prints one value per line.
    Eval {
        #[arg(long = "fn", value_enum)]
        func: SpecFn,
        #[command(flatten)]
        args: SpecArgs,
    },
}

/// Overrides of the simulation keys of the config.
#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Half width L of the periodic domain [-L, L).
    #[arg(long = "grid-L")]
    grid_l: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    /// Time horizon.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    nt: Option<usize>,
    /// `linear:KAPPA` or `affine:SLOPE:OFFSET`.
    #[arg(long, value_parser = parse_sigma, allow_hyphen_values = true)]
    sigma: Option<SigmaSpec>,
    /// `unit-atoms`, `atoms:Z@MASS,...` or `power:GAMMA:INNER:OUTER:AMPLITUDE`.
    #[arg(long, value_parser = parse_levy, allow_hyphen_values = true)]
    levy: Option<LevyMeasureSpec>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
}

fn parse_floats(s: &str, sep: char) -> Result<Vec<f64>, String> {
    s.split(sep).map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"))).collect()
}

fn parse_sigma(s: &str) -> Result<SigmaSpec, String> {
    let (kind, rest) = s.split_once(':').ok_or("expected KIND:PARAMS")?;
    let v = parse_floats(rest, ':')?;
    match (kind, v.as_slice()) {
        ("linear", [kappa]) => Ok(SigmaSpec::Linear { kappa: *kappa }),
        ("affine", [slope, offset]) => Ok(SigmaSpec::Affine {
            slope: *slope,
            offset: *offset,
        }),
        _ => Err(format!("unknown sigma {s:?}")),
    }
}

fn parse_levy(s: &str) -> Result<LevyMeasureSpec, String> {
    if s == "unit-atoms" {
        return Ok(LevyMeasureSpec::symmetric_unit_atoms());
    }
    let (kind, rest) = s.split_once(':').ok_or("expected KIND:PARAMS")?;
    match kind {
        "atoms" => {
            let pairs = rest
                .split(',')
                .map(|a| match parse_floats(a, '@')?.as_slice() {
                    [z, m] => Ok((*z, *m)),
                    _ => Err(format!("atom {a:?} is not Z@MASS")),
                })
                .collect::<Result<Vec<_>, String>>()?;
            LevyMeasureSpec::atoms(&pairs).map_err(|e| e.to_string())
        }
        "power" => match parse_floats(rest, ':')?.as_slice() {
            [g, lo, hi, amp] => LevyMeasureSpec::truncated_power(*g, *lo, *hi, *amp).map_err(|e| e.to_string()),
            _ => Err("power needs GAMMA:INNER:OUTER:AMPLITUDE".into()),
        },
        _ => Err(format!("unknown levy measure {s:?}")),
    }
}

fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), |p| ExperimentConfig::load(p))
}

impl SimArgs {
    fn apply(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = load(self.config.as_ref())?;
        if let Some(v) = self.alpha {
            c.model.alpha = v;
        }
        if let Some(v) = self.grid_l {
            c.grid.half_width = v;
        }
        if let Some(v) = self.nx {
            c.grid.n_x = v;
        }
        if let Some(v) = self.horizon {
            c.grid.horizon = v;
        }
        if let Some(v) = self.nt {
            c.grid.n_t = v;
        }
        if let Some(v) = &self.sigma {
            c.model.sigma = v.clone();
        }
        if let Some(v) = &self.levy {
            c.levy = v.clone();
        }
        if let Some(v) = self.seed {
            c.run.seed = v;
        }
        if let Some(v) = self.replicas {
            c.run.replicas = v;
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    let dir = |c: &ExperimentConfig| output::output_dir(cli.out_dir.as_deref(), c.run.output_dir.as_deref());
    match &cli.command {
        Command::VerifyLemmas { config, alpha, d } => {
            let mut c = load(config.as_ref())?;
            if let Some(a) = alpha {
                c.model.alpha = *a;
            }
            if let Some(d) = d {
                c.model.d = *d;
            }
            commands::verify(&c, &dir(&c)?)
        }
        Command::Bounds { config, p } => {
            let mut c = load(config.as_ref())?;
            if !p.is_empty() {
                c.run.p = p.clone();
            }
            commands::bounds(&c, &dir(&c)?)
        }
        Command::Simulate { sim, dump } => {
            let c = sim.apply()?;
            commands::simulate(&c, &dir(&c)?, *dump)
        }
        Command::Moments { sim } => {
            let c = sim.apply()?;
            commands::moments(&c, &dir(&c)?)
        }
        Command::GrowthScan { sim } => {
            let c = sim.apply()?;
            commands::growth_scan(&c, &dir(&c)?)
        }
        Command::Renewal { config, series } => {
            let c = load(config.as_ref())?;
            commands::renewal(&c, &dir(&c)?, series.as_deref())
        }
        Command::Specfun { op: SpecOp::Eval { func, args } } => commands::specfun_eval(*func, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap exits 2 on usage errors and 0 for --help / --version
            e.exit();
        }
    };
    match run(cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::Assertion { report, .. } = &e {
                println!("{report}");
            }
            eprintln!("fshe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
