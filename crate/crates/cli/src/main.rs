mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use bergman_dyadic::Error;

use crate::config::{DomainSpec, RunConfig, WeightSpec};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("BD_GIT_DESCRIBE"), ")");

const OUTPUTS: &str = "\
Every command writes <out>/<command>.json holding the version, the resolved
configuration, the results and the list of embedded checks; dyadic also
writes dyadic_family.json with every cell. Tables:

  dyadic_levels.csv      system,level,cells,scale,min_measure,max_measure
  characteristic_weight.csv  index,sigma,nu
  norm_candidates.csv    method,lower_bound
  sweep.csv              s,bracket,bp,f_norm_p,pf_norm,norm_lb,ratio
  domination.csv         interior,pairs,excluded_zero_volume,only_global,constant,quantile_999,mean_ratio
  weaktype.csv           depth,quasi_norm,pf_l1,f_l1

Exit status: 0 on success, 1 for configuration errors, 2 when an invariant
or embedded check fails.";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Compute(Error),
    #[error("checks failed: {}", .0.join(", "))]
    Failed(Vec<String>),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { name, reason } => CliError::Config { field: name, reason },
            Error::WrongDomainKind { .. } => CliError::Config {
                field: "domain",
                reason: e.to_string(),
            },
            Error::ResolutionExceeded { .. } => CliError::Config {
                field: "kmax",
                reason: e.to_string(),
            },
            other => CliError::Compute(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => 1,
            CliError::Compute(_) | CliError::Failed(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "bergman-dyadic", version = VERSION, about = "Dyadic tents, weights and Bergman projection experiments", after_help = OUTPUTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Overrides,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Build an adjacent dyadic family and its tents, verify the invariants.
    Dyadic,
    /// Weight characteristic and B_p over the dyadic tents.
    Characteristic,
    /// Lower bounds for the weighted norm of the projection (ball only).
    Norm,
    /// Sharp-weight sweep over s on the disc.
    Sweep,
    /// Sparse domination constant at two resolutions (ball only).
    Domination,
    /// Weak type (1,1) of the projection on boundary bumps (ball only).
    Weaktype,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Dyadic => "dyadic",
            Command::Characteristic => "characteristic",
            Command::Norm => "norm",
            Command::Sweep => "sweep",
            Command::Domination => "domination",
            Command::Weaktype => "weaktype",
        }
    }
}

/// Flags override the fields of `--config`.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// JSON file with any subset of the configuration fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// ball:n=N or egg:m=M.
    #[arg(long, global = true)]
    domain: Option<DomainSpec>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Ratio between consecutive dyadic scales.
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Top dyadic scale.
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    kmax: Option<usize>,
    #[arg(long, global = true)]
    systems: Option<usize>,
    #[arg(long, global = true)]
    interior: Option<usize>,
    #[arg(long, global = true)]
    boundary: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// one:, power:alpha=A or sharp:s=S.
    #[arg(long, global = true)]
    weight: Option<WeightSpec>,
    /// Comma-separated s values for the sweep.
    #[arg(long, global = true, value_delimiter = ',')]
    s_grid: Option<Vec<f64>>,
    /// Comma-separated bump depths for weaktype.
    #[arg(long, global = true, value_delimiter = ',')]
    depths: Option<Vec<f64>>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    pairs: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {
                $(if let Some(v) = &self.$f { c.$f = v.clone(); })*
            };
        }
        take!(domain, p, s, delta, kmax, systems, interior, boundary, seed, weight, s_grid, depths, trials, pairs, out);
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.common.resolve()?;
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(CliError::Config {
                field: "threads",
                reason: "must be positive".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let report = match cli.command {
        Command::Dyadic => commands::dyadic(&config)?,
        Command::Characteristic => commands::characteristic(&config)?,
        Command::Norm => commands::norm(&config)?,
        Command::Sweep => commands::sweep(&config)?,
        Command::Domination => commands::domination(&config)?,
        Command::Weaktype => commands::weaktype(&config)?,
    };
    report.write(cli.command.name(), &config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
