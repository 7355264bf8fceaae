//! Command-line driver for the `shearstab` toolkit.
//!
//! Every subcommand reads its parameters from an optional config file (see
//! [`config`]) overridden by flags, and writes CSV or `key=value` text to
//! stdout or to `--output`. Exit codes: 0 success, 1 usage or config error,
//! 2 numerical failure.

pub mod acceptance;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use thiserror::Error;

use config::{ConfigError, Params, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read config file '{path}': {source}")]
    ConfigFile {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write output '{path}': {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        source: shearstab::Error,
    },
    #[error("re_min = {re_min} lies below the critical Reynolds number Re_c = {re_c}; there is no unstable band to trace")]
    BelowCritical { re_min: f64, re_c: f64 },
    #[error("all {0} samples failed")]
    AllFailed(usize),
    #[error("{failed} of {total} acceptance criteria failed")]
    Validation { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ConfigFile { .. } | Self::Output { .. } | Self::Io(_) | Self::Csv(_) => 1,
            Self::Numerical { .. } | Self::BelowCritical { .. } | Self::AllFailed(_) | Self::Validation { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "shearstab", version, about = "Linear and weakly nonlinear stability of plane shear flows")]
pub struct Cli {
    /// Config file with `key = value` lines and optional `[subcommand]` sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub flags: Flags,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags mirror the config keys and take precedence over the file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// poiseuille, quartic, sextic, exponential or poiseuille_family.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Exponent of poiseuille_family.
    #[arg(long, global = true)]
    pub p: Option<String>,
    #[arg(long, global = true)]
    pub n_points: Option<String>,
    /// Half-line map scale L.
    #[arg(long, global = true)]
    pub map_scale: Option<String>,
    #[arg(long, global = true)]
    pub re: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true)]
    pub re_min: Option<String>,
    #[arg(long, global = true)]
    pub re_max: Option<String>,
    /// Number of Reynolds numbers in [re_min, re_max].
    #[arg(long, global = true)]
    pub steps: Option<String>,
    /// lower, upper or both.
    #[arg(long, global = true)]
    pub branch: Option<String>,
    /// Wave amplitude.
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    /// Points per wavelength in x.
    #[arg(long, global = true)]
    pub nx: Option<String>,
    #[arg(long, global = true)]
    pub workers: Option<String>,
    /// Seed for the randomized property checks.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Output path, or - for stdout.
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[arg(long, global = true)]
    pub alpha_min: Option<String>,
    #[arg(long, global = true)]
    pub alpha_max: Option<String>,
    #[arg(long, global = true)]
    pub alpha_steps: Option<String>,
    /// Sweep quantity: growth or landau.
    #[arg(long, global = true)]
    pub quantity: Option<String>,
    /// Weight of the mean-flow forcing: single or double.
    #[arg(long, global = true)]
    pub mean_forcing: Option<String>,
    /// Strip mean-flow closure: fixed_flux or fixed_pressure.
    #[arg(long, global = true)]
    pub closure: Option<String>,
}

impl Flags {
    pub fn to_params(&self) -> Result<Params, ConfigError> {
        let pairs = [
            ("profile", &self.profile),
            ("p", &self.p),
            ("n_points", &self.n_points),
            ("map_scale", &self.map_scale),
            ("re", &self.re),
            ("alpha", &self.alpha),
            ("re_min", &self.re_min),
            ("re_max", &self.re_max),
            ("steps", &self.steps),
            ("branch", &self.branch),
            ("epsilon", &self.epsilon),
            ("nx", &self.nx),
            ("workers", &self.workers),
            ("seed", &self.seed),
            ("output", &self.output),
            ("alpha_min", &self.alpha_min),
            ("alpha_max", &self.alpha_max),
            ("alpha_steps", &self.alpha_steps),
            ("quantity", &self.quantity),
            ("mean_forcing", &self.mean_forcing),
            ("closure", &self.closure),
        ];
        let mut p = Params::default();
        for (k, v) in pairs {
            if let Some(v) = v {
                p.set(k, v)?;
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Least-stable eigenvalue at one (Re, alpha).
    Eigen,
    /// Both marginal stability curves on [re_min, re_max].
    Neutral,
    /// Landau coefficient on the marginal curves at re or on [re_min, re_max].
    Landau,
    /// Critical Reynolds number, Re_s and Re_d.
    Thresholds,
    /// Velocity field of the small-amplitude travelling wave over one period.
    Wave,
    /// Runs the acceptance suite.
    Validate {
        /// Run only the named criterion (repeatable).
        #[arg(long)]
        only: Vec<String>,
    },
    /// Growth rate (or off-curve Landau coefficient) on a (Re, alpha) grid.
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eigen => "eigen",
            Self::Neutral => "neutral",
            Self::Landau => "landau",
            Self::Thresholds => "thresholds",
            Self::Wave => "wave",
            Self::Validate { .. } => "validate",
            Self::Sweep => "sweep",
        }
    }
}

/// Parameters for the chosen subcommand: file globals, then its section,
/// then flags.
pub fn resolve(cli: &Cli) -> Result<Params, CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigFile {
                path: path.display().to_string(),
                source,
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    Ok(file.for_command(cli.command.name()).overlay(&cli.flags.to_params()?))
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let p = resolve(cli)?;
    match &cli.command {
        Command::Eigen => commands::eigen(&p),
        Command::Neutral => commands::neutral(&p),
        Command::Landau => commands::landau(&p),
        Command::Thresholds => commands::thresholds(&p),
        Command::Wave => commands::wave(&p),
        Command::Validate { only } => commands::validate(&p, only),
        Command::Sweep => commands::sweep(&p),
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Config(ConfigError::Missing(_)) = e {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(cli.command.name()) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            e.exit_code()
        }
    }
}
