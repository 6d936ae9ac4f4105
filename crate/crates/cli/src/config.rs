use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use pu_risklab::experiments::{CalibrationPoint, SweepTemplate};
use pu_risklab::losses::LossKind;
use pu_risklab::Scenario;
use serde::{Deserialize, Serialize};

/// Failure of a run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters (exit 2).
    Config(String),
    /// An invariant suite reported failures (exit 1).
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Failed(msg) => f.write_str(msg),
        }
    }
}

impl From<pu_risklab::Error> for CliError {
    fn from(e: pu_risklab::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn config_error(field: &str, reason: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

/// Flags shared by every subcommand. Each overrides the same key of `--config`.
#[derive(Args, Debug, Default)]
pub struct Flags {
    /// JSON file with any of the keys below.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV; the manifest goes to `<out>.manifest.json`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "PU_RISKLAB_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "V", global = true)]
    pub v: Option<usize>,
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true)]
    pub em: Option<f64>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub kappa1: Option<f64>,
    #[arg(long, global = true)]
    pub kappa2: Option<f64>,
    #[arg(long = "K", global = true)]
    pub k: Option<f64>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Comma-separated values.
    #[arg(long, global = true, value_name = "LIST", value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[arg(long, global = true, value_name = "standard|nontrad|scar-alpha|scar-em|sar")]
    pub loss: Option<LossKind>,
    /// Inline scenario JSON or a path to a JSON file.
    #[arg(long, global = true, value_name = "JSON|PATH")]
    pub scenario: Option<String>,
    /// Swept parameter of `curve`: n, h or em.
    #[arg(long, global = true)]
    pub sweep: Option<String>,
    /// For `curve`: margin `h = beta * h'` at each grid point.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Grid)
}

/// Resolved configuration: file values overlaid by flags. Echoed verbatim in the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(alias = "e_m", default, skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa2: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossKind>,
    /// Inline object, or a string holding JSON or a file path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Assouad labels `b` (0/1) when the scenario is built from `V`, `p`, `h`, `em`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<u8>>,
    /// Assouad propensities; defaults to `em` on every shattered point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_values: Option<Vec<f64>>,
    /// `curve`: full sweep template, replacing the one built from flags.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<SweepTemplate>,
    /// `minimax`: grid on which `kappa1` is calibrated before the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Vec<CalibrationPoint>>,
    /// `cannings`: scenario pair replacing the built-in one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holds: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violated: Option<serde_json::Value>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_error("config", e))
    }

    pub fn resolve(flags: Flags) -> CliResult<Self> {
        let mut cfg = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        macro_rules! overlay {
            ($($field:ident),*) => {$(
                if flags.$field.is_some() {
                    cfg.$field = flags.$field;
                }
            )*};
        }
        overlay!(seed, out, workers, n, v, h, em, p, kappa1, kappa2, k, replicates, loss, sweep, beta);
        if let Some(Grid(g)) = flags.grid {
            cfg.grid = Some(g);
        }
        if let Some(s) = flags.scenario {
            cfg.scenario = Some(serde_json::Value::String(s));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| config_error("seed", "required for stochastic subcommands"))
    }

    pub fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    /// The explicit scenario, or an Assouad member built from `V`, `p`, `h`, `em`.
    pub fn scenario(&self) -> CliResult<Scenario> {
        if let Some(value) = &self.scenario {
            return parse_scenario("scenario", value);
        }
        let (Some(v), Some(p), Some(h), Some(em)) = (self.v, self.p, self.h, self.em) else {
            return Err(config_error("scenario", "required; give --scenario or all of --V, --p, --h, --em"));
        };
        if v < 2 {
            return Err(config_error("V", format!("need V >= 2, got {v}")));
        }
        let b = match &self.b {
            Some(b) => b.iter().map(|&x| x != 0).collect(),
            None => vec![true; v - 1],
        };
        let e = self.e_values.clone().unwrap_or_else(|| vec![em; v - 1]);
        Scenario::assouad(v, p, h, b, e).map_err(|e| config_error("scenario", e))
    }
}

pub fn parse_scenario(field: &str, value: &serde_json::Value) -> CliResult<Scenario> {
    let parsed = match value {
        serde_json::Value::String(s) if s.trim_start().starts_with('{') => serde_json::from_str(s),
        serde_json::Value::String(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| config_error(field, format!("{path}: {e}")))?;
            serde_json::from_str(&text)
        }
        other => serde_json::from_value(other.clone()),
    };
    parsed.map_err(|e| config_error(field, e))
}
