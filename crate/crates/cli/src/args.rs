use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "sos", version, about = "Exact, Monte Carlo and transfer-operator tools for the 2D SOS wetting model")]
pub struct Cli {
    /// Seed for randomized subcommands (required when CI is set)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Cap on worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write output here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// File of `key = value` lines; flags given on the command line win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Closed-form constants and the layering function
    Formulas(FormulasArgs),
    /// Exact sums over small regions and identity checks
    Exact(ExactArgs),
    /// Contour decomposition and enumeration
    Contours(ContoursArgs),
    /// Heat-bath Monte Carlo estimates
    Sample(SampleArgs),
    /// Transfer-operator strip free energies
    Freeenergy(FreeEnergyArgs),
    /// Run a battery of checks
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Formulas(_) => "formulas",
            Command::Exact(_) => "exact",
            Command::Contours(_) => "contours",
            Command::Sample(_) => "sample",
            Command::Freeenergy(_) => "freeenergy",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FormulasArgs {
    #[arg(long)]
    pub beta: f64,

    /// Distance above the critical reward, for the layering function
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,

    #[arg(long, default_value_t = 1.0)]
    pub alpha1: f64,

    #[arg(long, default_value_t = 1.0)]
    pub alpha2: f64,

    /// Number of breakpoints to list
    #[arg(long, default_value_t = 5)]
    pub breakpoints: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Free,
    Positive,
    Wetting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Check {
    #[value(name = "identity")]
    #[serde(rename = "identity")]
    Identity,
    #[value(name = "lehagga")]
    #[serde(rename = "lehagga")]
    Lehagga,
    #[value(name = "stimaG")]
    #[serde(rename = "stimaG")]
    StimaG,
    #[value(name = "rourou")]
    #[serde(rename = "rourou")]
    Rourou,
    #[value(name = "shift")]
    #[serde(rename = "shift")]
    Shift,
    #[value(name = "fkg")]
    #[serde(rename = "fkg")]
    Fkg,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    /// Rectangle as WIDTHxHEIGHT
    #[arg(long, default_value = "3x3")]
    pub region: String,

    #[arg(long)]
    pub beta: f64,

    #[arg(long, value_enum, default_value_t = Ensemble::Free)]
    pub ensemble: Ensemble,

    /// Reward per contact with the wall
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h: f64,

    /// Height level for tail probabilities and the peak checks
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub n: i32,

    /// Initial height cap (default depends on beta)
    #[arg(long)]
    pub hmax: Option<u32>,

    /// Truncation certification tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    #[arg(long, value_enum)]
    pub check: Option<Check>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("mode").required(true).args(["decompose", "enumerate"])))]
pub struct ContoursArgs {
    /// Height-field JSON to decompose into cylinders
    #[arg(long, value_name = "FILE")]
    pub decompose: Option<PathBuf>,

    /// Count contours through a marked cell up to this length
    #[arg(long, value_name = "L")]
    pub enumerate: Option<u32>,

    /// Inverse temperature for Peierls weights
    #[arg(long, requires = "enumerate")]
    pub beta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleEnsemble {
    Free,
    Wetting,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 8)]
    pub nx: u32,

    #[arg(long, default_value_t = 8)]
    pub ny: u32,

    #[arg(long)]
    pub beta: f64,

    #[arg(long, value_enum, default_value_t = SampleEnsemble::Free)]
    pub ensemble: SampleEnsemble,

    /// Reward per contact (wetting ensemble)
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h: f64,

    /// Comma-separated levels n for the peak and cluster statistics
    #[arg(long, default_value = "1")]
    pub n_levels: String,

    #[arg(long, default_value_t = 100_000)]
    pub sweeps: u64,

    #[arg(long, default_value_t = 1_000)]
    pub burn_in: u64,

    #[arg(long, default_value_t = 1)]
    pub thin: u64,

    #[arg(long, default_value_t = 1)]
    pub chains: u32,

    #[arg(long, default_value_t = 32)]
    pub batches: u32,

    /// Per-sweep CSV trace of chain 0
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Level,
    Periodic,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("mode").required(true).args(["h", "u_grid"])))]
pub struct FreeEnergyArgs {
    #[arg(long)]
    pub beta: f64,

    #[arg(long, default_value_t = 2)]
    pub width: u32,

    #[arg(long, default_value_t = 10)]
    pub hmax: u32,

    /// Single reward value
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,

    /// Grid of u values as START:STOP:COUNT
    #[arg(long, allow_hyphen_values = true)]
    pub u_grid: Option<String>,

    /// Add the ratio of fbar to the layering function
    #[arg(long)]
    pub compare: bool,

    #[arg(long, default_value_t = 1.0)]
    pub alpha1: f64,

    #[arg(long, default_value_t = 1.0)]
    pub alpha2: f64,

    /// Side boundary for the single-reward mode
    #[arg(long, value_enum, default_value_t = Side::Level)]
    pub side: Side,

    /// Power-iteration tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Contours,
    Peierls,
    Sampler,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,

    /// Sweeps per chain for the sampler suite
    #[arg(long, default_value_t = 1_000_000)]
    pub sweeps: u64,

    #[arg(long, hide = true, allow_hyphen_values = true)]
    pub perturb_h2: Option<f64>,
}
