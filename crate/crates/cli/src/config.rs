//! Run configuration: command-line flags over a flat TOML file over presets.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Square qubit lattice, eta = sqrt(pi).
    Qubit,
    /// Single-state lattice, eta = sqrt(pi / 2).
    Qunaught,
    /// Qubit observables with an explicit eta.
    CustomEta,
}

/// Flags shared by every subcommand. Every field is optional so that the
/// config file and the preset can fill the gaps.
#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CommonArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Recording interval of trajectories.
    #[arg(long)]
    pub record_interval: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Flat TOML file whose keys mirror the flag names.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    /// Fills every unset field from `lower`.
    pub fn or(self, lower: CommonArgs) -> CommonArgs {
        CommonArgs {
            preset: self.preset.or(lower.preset),
            eta: self.eta.or(lower.eta),
            epsilon: self.epsilon.or(lower.epsilon),
            kappa: self.kappa.or(lower.kappa),
            dim: self.dim.or(lower.dim),
            tmax: self.tmax.or(lower.tmax),
            rtol: self.rtol.or(lower.rtol),
            atol: self.atol.or(lower.atol),
            record_interval: self.record_interval.or(lower.record_interval),
            out: self.out.or(lower.out),
            threads: self.threads.or(lower.threads),
            config: self.config,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// The config file also carries subcommand options (for example `kappas`);
/// those are kept as a raw table and read by each subcommand.
pub fn load_file(path: &Path) -> Result<(CommonArgs, toml::Table), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))?;
    let mut common = toml::Table::new();
    for key in [
        "preset", "eta", "epsilon", "kappa", "dim", "tmax", "rtol", "atol", "record-interval", "out", "threads",
    ] {
        if let Some(v) = table.remove(key) {
            common.insert(key.to_string(), v);
        }
    }
    let args: CommonArgs = toml::Value::Table(common)
        .try_into()
        .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))?;
    Ok((args, table))
}

/// Fully resolved settings, echoed into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub preset: Preset,
    /// 2 for the qubit lattice, 1 for the qunaught.
    pub lattice: u32,
    pub eta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub dim: usize,
    pub tmax: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    pub record_interval: f64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(args: CommonArgs, default_out: &str) -> Result<Self, ConfigError> {
        let preset = args.preset.unwrap_or(Preset::Qubit);
        let (lattice, eta) = match preset {
            Preset::Qubit => (2, PI.sqrt()),
            Preset::Qunaught => (1, (PI / 2.0).sqrt()),
            Preset::CustomEta => (
                2,
                args.eta
                    .ok_or_else(|| ConfigError("custom-eta preset requires --eta".into()))?,
            ),
        };
        if preset != Preset::CustomEta {
            if let Some(e) = args.eta {
                if (e - eta).abs() > 1e-12 {
                    return Err(ConfigError(format!(
                        "--eta {e} conflicts with the {preset:?} preset; use --preset custom-eta"
                    )));
                }
            }
        }
        let epsilon = match (preset, args.epsilon) {
            (_, Some(e)) => e,
            (Preset::CustomEta, None) => {
                return Err(ConfigError("custom-eta preset requires --epsilon".into()));
            }
            _ => 0.15,
        };
        let cfg = RunConfig {
            preset,
            lattice,
            eta,
            epsilon,
            kappa: args.kappa.unwrap_or(0.0),
            dim: args.dim.unwrap_or(120),
            tmax: args.tmax,
            rtol: args.rtol.unwrap_or(1e-8),
            atol: args.atol.unwrap_or(1e-10),
            record_interval: args.record_interval.unwrap_or(0.5),
            out: args.out.unwrap_or_else(|| PathBuf::from(default_out)),
            threads: args.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError(format!("--{name} must be positive, got {v}")))
            }
        };
        positive("eta", self.eta)?;
        positive("epsilon", self.epsilon)?;
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("record-interval", self.record_interval)?;
        if let Some(t) = self.tmax {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(ConfigError(format!("--tmax must be non-negative, got {t}")));
            }
        }
        if !(0.0..1.0).contains(&self.kappa) {
            return Err(ConfigError(format!("--kappa must lie in [0, 1), got {}", self.kappa)));
        }
        if self.dim < 8 {
            return Err(ConfigError(format!("--dim must be at least 8, got {}", self.dim)));
        }
        if self.threads == Some(0) {
            return Err(ConfigError("--threads must be at least 1".into()));
        }
        Ok(())
    }
}
