use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlswave::fitting::Target;
use nlswave::numerics::Grid1D;
use nlswave::waves::ComponentKind;
use serde::{Serialize, Serializer};

/// Grid flag `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArg {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridArg {
    pub fn grid(&self) -> nlswave::Result<Grid1D> {
        Grid1D::from_range(self.start, self.stop, self.count)
    }
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:count, got {s:?}"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let count = n.trim().parse::<usize>().map_err(|e| format!("{n:?}: {e}"))?;
        Ok(GridArg {
            start: num(a)?,
            stop: num(b)?,
            count,
        })
    }
}

impl fmt::Display for GridArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

impl Serialize for GridArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn serialize_display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecArg {
    Sequential,
    Parallel,
}

impl From<ExecArg> for nlswave::Exec {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Sequential => nlswave::Exec::Sequential,
            ExecArg::Parallel => nlswave::Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GreekMethod {
    Analytic,
    Fd,
}

#[derive(Debug, Parser)]
#[command(name = "nlswave", version, about = "Nonlinear Schrodinger wave model for option-price surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a Black-Scholes price surface as CSV.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Generate(GenerateArgs),
    /// Write the modulus (or density) surface of one wave component as CSV.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sample(SampleArgs),
    /// Calibrate the wave superposition against a surface CSV.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Fit(FitArgs),
    /// Check a closed form against its PDE on refined grids.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Greeks of a component or of a fitted model at one probe point.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Greeks(GreeksArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Output directory
    #[arg(long, env = "NLSWAVE_OUT_DIR", default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// File of `key = value` lines used as default flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "call")]
    pub kind: KindArg,
    #[arg(long)]
    pub strike: f64,
    #[arg(long)]
    pub rate: f64,
    #[arg(long)]
    pub vol: f64,
    #[arg(long)]
    pub expiry: f64,
    /// Stock-price grid start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    pub s: GridArg,
    /// Calendar-time grid start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    pub t: GridArg,
    #[arg(long, default_value = "surface.csv")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Parameters of a single wave component.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ComponentArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Defaults to -1 for the shock and +1 otherwise
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub k: f64,
    /// Rogon scaling
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "plus")]
    pub sign: SignArg,
    /// Packet prefactor
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub amplitude: f64,
    /// Packet terms as c:k pairs
    #[arg(long, default_value = "1:1,0.5:-0.5,0.25:2,0.125:-1.5,0.0625:0.75", allow_hyphen_values = true)]
    pub packet: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    #[serde(serialize_with = "serialize_display")]
    pub component: ComponentKind,
    #[command(flatten)]
    pub params: ComponentArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub s: GridArg,
    #[arg(long, allow_hyphen_values = true)]
    pub t: GridArg,
    #[arg(long, default_value = "modulus")]
    #[serde(serialize_with = "serialize_display")]
    pub target: Target,
    /// Half-width of uniform noise added to each value
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "sample.csv")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Surface CSV with header s,t,price
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated components, or `all`
    #[arg(long, default_value = "all")]
    pub components: String,
    #[arg(long, default_value = "modulus")]
    #[serde(serialize_with = "serialize_display")]
    pub target: Target,
    /// Dispersion σ, held fixed (the volatility for Black-Scholes data)
    #[arg(long)]
    pub sigma: f64,
    /// Market-heat potential |β|, held fixed (the rate in the nonadaptive case)
    #[arg(long)]
    pub beta: f64,
    /// Adaptive potential terms w1:w2:w3, scaled by --beta
    #[arg(long, allow_hyphen_values = true)]
    pub beta_weights: Option<String>,
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub shared_k: bool,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub normalize: bool,
    #[arg(long, default_value_t = 3)]
    pub packet_terms: usize,
    /// Starting values name=value overriding the defaults
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub init: Vec<String>,
    /// Fit each component alone first and start the full model from each result
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub staged: bool,
    /// Number of seeded random starts per starting point
    #[arg(long, default_value_t = 1)]
    pub starts: usize,
    /// Relative half-width of the uniform start perturbation
    #[arg(long, default_value_t = 0.3)]
    pub perturbation: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub nu: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub cost_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub step_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub fd_step: f64,
    #[arg(long, value_enum, default_value = "parallel")]
    pub exec: ExecArg,
    /// Also evaluate the fitted model on this t grid (start:stop:count)
    #[arg(long, allow_hyphen_values = true)]
    pub extrapolate_t: Option<GridArg>,
    #[arg(long, default_value = "fit_report.json")]
    pub report: PathBuf,
    #[arg(long, default_value = "fit_overlay.csv")]
    pub overlay: PathBuf,
    #[arg(long, default_value = "fit_extrapolation.csv")]
    pub extrapolation: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    #[serde(serialize_with = "serialize_display")]
    pub component: ComponentKind,
    #[command(flatten)]
    pub params: ComponentArgs,
    /// Coarsest s grid; default -10:10:401
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<GridArg>,
    /// Coarsest t grid; default 0:2:201, or -2:2:201 for rogons
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<GridArg>,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, value_enum, default_value = "parallel")]
    pub exec: ExecArg,
    #[arg(long, default_value = "verify.json")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GreeksArgs {
    #[arg(long, default_value = "shock")]
    #[serde(serialize_with = "serialize_display")]
    pub component: ComponentKind,
    #[command(flatten)]
    pub params: ComponentArgs,
    /// General model as JSON (a fit report or bare model parameters);
    /// overrides --component
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "at-s", allow_negative_numbers = true)]
    pub at_s: f64,
    #[arg(long = "at-t", allow_negative_numbers = true)]
    pub at_t: f64,
    /// Default: analytic for the shock, fd otherwise
    #[arg(long, value_enum)]
    pub method: Option<GreekMethod>,
    #[arg(long, default_value = "greeks.csv")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}
