use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use pipgd::integrate::Method;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "pipgd", version, about = "PI-PGD experiments: constrained LASSO, nonlinear LASSO, entropic OT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Affinely constrained LASSO with oracle comparison and envelope fits.
    Lasso(Flags),
    /// Three-variable LASSO with two nonlinear equality constraints.
    Nonlinear(Flags),
    /// Entropic optimal transport against Sinkhorn.
    Ot(Flags),
    /// Gain certificate, lognorm spot check and stability report.
    Certify(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lasso(_) => "lasso",
            Command::Nonlinear(_) => "nonlinear",
            Command::Ot(_) => "ot",
            Command::Certify(_) => "certify",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Lasso(f) | Command::Nonlinear(f) | Command::Ot(f) | Command::Certify(f) => f,
        }
    }
}

/// Prox scale, either absolute or as a multiple of `1/L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaArg {
    Value(f64),
    OverL(f64),
}

impl FromStr for GammaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(k) = s.strip_suffix("/L") {
            let k: f64 = k.trim().parse().map_err(|e| format!("bad gamma multiple `{k}`: {e}"))?;
            return Ok(GammaArg::OverL(k));
        }
        s.parse().map(GammaArg::Value).map_err(|e| format!("bad gamma `{s}`: {e}"))
    }
}

impl fmt::Display for GammaArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaArg::Value(v) => write!(f, "{v}"),
            GammaArg::OverL(k) => write!(f, "{k}/L"),
        }
    }
}

impl Serialize for GammaArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct Flags {
    /// Primal dimension (OT: number of source points).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of constraints (OT: number of target points).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Prox scale; `K/L` means K divided by the largest Hessian eigenvalue.
    #[arg(long)]
    pub gamma: Option<GammaArg>,
    #[arg(long)]
    pub kp: Option<f64>,
    #[arg(long)]
    pub ki: Option<f64>,
    /// Primal weight p of the metric diag(p I, I).
    #[arg(long = "p-weight")]
    pub p_weight: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Integrator: euler or rk4.
    #[arg(long)]
    #[serde(serialize_with = "ser_method")]
    pub method: Option<Method>,
    /// Output directory.
    #[arg(long, env = "PIPGD_OUT")]
    pub out: Option<PathBuf>,
    /// JSON instance to load instead of generating one.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    /// Entropic regularization.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "gain-sweep")]
    pub gain_sweep: bool,
    #[arg(long = "appendix-lemma")]
    pub appendix_lemma: bool,
    #[arg(long)]
    pub samples: Option<usize>,
    /// OT at 100 x 100 points.
    #[arg(long = "full-size")]
    pub full_size: bool,
}

fn ser_method<S: serde::Serializer>(m: &Option<Method>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => s.collect_str(m),
        None => s.serialize_none(),
    }
}

impl Flags {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("pipgd_out"))
    }
}
