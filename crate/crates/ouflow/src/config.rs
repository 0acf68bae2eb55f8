//! Config-file schema and validation.
//!
//! One TOML file drives everything: a `[simulation]` section with the
//! physical and numerical parameters, `[noise]` selecting the theta family,
//! `[experiment]` naming a preset and its sweep lists, `[io]` for output
//! placement, and a top-level `seed`. Unknown keys anywhere are rejected.
//! CLI flags override the seed, output directory, worker count, and replica
//! count after parsing.

use crate::dynamics::{Scheme, SimConfig};
use crate::experiments::registry;
use crate::noise::ThetaFamily;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Master seed; every replica and every RNG substream derives from it.
    pub seed: u64,
    pub simulation: SimulationSection,
    pub noise: NoiseSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub io: IoSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub kappa: f64,
    pub nu: f64,
    pub alpha: f64,
    pub grid: usize,
    /// Explicit time step; omit to derive one from `cfl`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Transport CFL target used when `dt` is derived: the step satisfies
    /// `dt * sqrt(2 nu alpha) * grid <= cfl` besides `dt <= 0.1/alpha`.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_true")]
    pub dealias: bool,
}

fn default_cfl() -> f64 {
    0.15
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// `lowpass`, `shell`, or `explicit`.
    pub family: String,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub cutoff: Option<u32>,
    /// `(k1, k2, weight)` triples for the explicit family.
    #[serde(default)]
    pub modes: Option<Vec<(i64, i64, f64)>>,
}

impl NoiseSection {
    pub fn family(&self) -> Result<ThetaFamily, ConfigError> {
        match self.family.as_str() {
            "lowpass" => Ok(ThetaFamily::Lowpass {
                a: self
                    .a
                    .ok_or_else(|| ConfigError::Invalid("noise.a required for lowpass".into()))?,
                cutoff: self.cutoff.ok_or_else(|| {
                    ConfigError::Invalid("noise.cutoff required for lowpass".into())
                })?,
            }),
            "shell" => Ok(ThetaFamily::Shell {
                a: self
                    .a
                    .ok_or_else(|| ConfigError::Invalid("noise.a required for shell".into()))?,
                cutoff: self.cutoff.ok_or_else(|| {
                    ConfigError::Invalid("noise.cutoff required for shell".into())
                })?,
            }),
            "explicit" => Ok(ThetaFamily::Explicit {
                modes: self.modes.clone().ok_or_else(|| {
                    ConfigError::Invalid("noise.modes required for explicit".into())
                })?,
            }),
            other => Err(ConfigError::Invalid(format!(
                "unknown noise family {other:?} (expected lowpass, shell, or explicit)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Preset name; see `ouflow list-experiments`.
    pub name: String,
    /// Sweep lists; presets ignore the ones they do not use.
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub nus: Vec<f64>,
    #[serde(default)]
    pub cutoffs: Vec<u32>,
    pub replicas: usize,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Orders `s` for the `H^{-s}` distance columns.
    #[serde(default = "default_orders")]
    pub sobolev_orders: Vec<f64>,
}

fn default_record_every() -> u64 {
    10
}

fn default_orders() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    /// Output directory; default is `$OUFLOW_OUT` or `./out`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ConfigFile = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field validation: known experiment, valid theta family, and a
    /// valid `SimConfig` at every sweep point (the OU constraint is checked
    /// at the largest alpha in the sweep).
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !registry().iter().any(|p| p.name == self.experiment.name) {
            return Err(ConfigError::Invalid(format!(
                "unknown experiment {:?}; known: {}",
                self.experiment.name,
                registry()
                    .iter()
                    .map(|p| p.name)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        if self.experiment.replicas == 0 {
            return Err(ConfigError::Invalid("experiment.replicas must be >= 1".into()));
        }
        if self.experiment.record_every == 0 {
            return Err(ConfigError::Invalid(
                "experiment.record_every must be >= 1".into(),
            ));
        }
        let family = self.noise.family()?;
        let mut alphas = self.experiment.alphas.clone();
        alphas.push(self.simulation.alpha);
        let mut nus = self.experiment.nus.clone();
        nus.push(self.simulation.nu);
        let mut cutoffs: Vec<Option<u32>> =
            self.experiment.cutoffs.iter().map(|&c| Some(c)).collect();
        cutoffs.push(None);
        for &alpha in &alphas {
            for &nu in &nus {
                for cut in &cutoffs {
                    let theta = match (cut, &family) {
                        (Some(c), ThetaFamily::Lowpass { a, .. }) => ThetaFamily::Lowpass {
                            a: *a,
                            cutoff: *c,
                        },
                        (Some(c), ThetaFamily::Shell { a, .. }) => ThetaFamily::Shell {
                            a: *a,
                            cutoff: *c,
                        },
                        (Some(_), ThetaFamily::Explicit { .. }) => {
                            return Err(ConfigError::Invalid(
                                "cutoff sweeps need a parametric noise family".into(),
                            ))
                        }
                        (None, f) => f.clone(),
                    };
                    self.sim_config_with(alpha, nu, theta).map_err(|e| {
                        ConfigError::Invalid(format!(
                            "sweep point (alpha={alpha}, nu={nu}, cutoff={cut:?}): {e}"
                        ))
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Assemble a `SimConfig` for one sweep point. `dt` is taken from the
    /// file when given, otherwise derived from the CFL target at this point.
    pub fn sim_config_with(
        &self,
        alpha: f64,
        nu: f64,
        theta: ThetaFamily,
    ) -> Result<SimConfig, String> {
        let s = &self.simulation;
        let dt = match s.dt {
            Some(dt) => dt,
            None => SimConfig::auto_dt(nu, alpha, s.grid, s.t_end, s.cfl),
        };
        let cfg = SimConfig {
            kappa: s.kappa,
            nu,
            alpha,
            theta,
            grid: s.grid,
            dt,
            t_end: s.t_end,
            seed: self.seed,
            scheme: s.scheme,
            dealias: s.dealias,
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    /// The base-point `SimConfig` (no sweep applied).
    pub fn base_sim_config(&self) -> Result<SimConfig, ConfigError> {
        let family = self.noise.family()?;
        self.sim_config_with(self.simulation.alpha, self.simulation.nu, family)
            .map_err(ConfigError::Invalid)
    }

    pub fn out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.io.out_dir {
            return dir.clone();
        }
        if let Ok(env) = std::env::var("OUFLOW_OUT") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        PathBuf::from("out")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
seed = 7

[simulation]
kappa = 0.02
nu = 1.0
alpha = 50.0
grid = 32
t_end = 0.2

[noise]
family = "lowpass"
a = 0.5
cutoff = 2

[experiment]
name = "ou-covariance"
replicas = 8
"#;

    #[test]
    fn good_config_parses_and_validates() {
        let cfg = ConfigFile::from_str(GOOD).unwrap();
        assert_eq!(cfg.seed, 7);
        let sim = cfg.base_sim_config().unwrap();
        assert!(sim.dt <= 0.1 / 50.0);
        assert_eq!(cfg.out_dir(), PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = GOOD.replace("[experiment]", "typo_key = 1\n[experiment]");
        let err = ConfigFile::from_str(&text).unwrap_err();
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn unknown_experiment_rejected() {
        let text = GOOD.replace("ou-covariance", "no-such-preset");
        let err = ConfigFile::from_str(&text).unwrap_err();
        assert!(err.to_string().contains("unknown experiment"), "{err}");
    }

    #[test]
    fn ou_constraint_violation_rejected() {
        let text = GOOD.replace("t_end = 0.2", "t_end = 0.2\ndt = 0.01");
        let err = ConfigFile::from_str(&text).unwrap_err();
        assert!(err.to_string().contains("0.1/alpha"), "{err}");
    }

    #[test]
    fn explicit_family_round_trips() {
        let text = GOOD
            .replace(
                "family = \"lowpass\"\na = 0.5\ncutoff = 2",
                "family = \"explicit\"\nmodes = [[1, 0, 1.0], [-1, 0, 1.0], [0, 1, 1.0], [0, -1, 1.0]]",
            );
        let cfg = ConfigFile::from_str(&text).unwrap();
        let sim = cfg.base_sim_config().unwrap();
        let theta = sim.theta_spec().unwrap();
        assert_eq!(theta.support().len(), 4);
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ConfigFile::from_str("seed = \"not a number\"").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "wanted line info, got: {msg}");
    }
}
