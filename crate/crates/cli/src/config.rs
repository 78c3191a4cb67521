use std::path::PathBuf;

use gdnls_core::evolution::{EscapeCriteria, IntegratorSpec};
use gdnls_core::{Grid, QuadratureMethod, QuadratureSpec, WaveParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    /// Radii of the `negdir` table; at least five, geometric.
    pub sweep: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub betas: Vec<f64>,
    pub escape_factor: f64,
    pub control_factor: f64,
    pub control_floor: f64,
    /// Box of the negative direction and the evolution runs; `L` is moved to
    /// the nearest wrap-matched value.
    pub grid: GridConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sigmas: Vec<f64>,
    pub speeds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sigma: f64,
    pub c: f64,
    pub grid: GridConfig,
    pub quadrature: QuadratureSpec,
    pub cutoff: CutoffConfig,
    pub integrator: IntegratorSpec,
    pub experiment: ExperimentConfig,
    pub sweep: SweepConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma: 1.5,
            c: 1.0,
            grid: GridConfig {
                half_width: 200.0,
                n_points: 8192,
            },
            quadrature: QuadratureSpec::adaptive(),
            cutoff: CutoffConfig {
                radius: 50.0,
                sweep: vec![25.0, 50.0, 100.0, 200.0, 400.0],
            },
            integrator: IntegratorSpec {
                sample_every: 250,
                ..IntegratorSpec::new(1e-3, 30.0).expect("valid default")
            },
            experiment: ExperimentConfig {
                betas: vec![0.0, 0.01, -0.01],
                escape_factor: 10.0,
                control_factor: 3.0,
                control_floor: 1e-3,
                grid: GridConfig {
                    half_width: 400.0,
                    n_points: 8192,
                },
            },
            sweep: SweepConfig {
                sigmas: vec![1.2, 1.5, 1.8],
                speeds: vec![0.5, 1.0, 2.0],
            },
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn check_grid(field: &'static str, g: &GridConfig) -> Result<(), ConfigError> {
    Grid::new(g.half_width, g.n_points)
        .map(|_| ())
        .map_err(|e| invalid(field, e.to_string()))
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Every precondition of the modules the commands reach.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.sigma > 1.0 && self.sigma < 2.0) {
            return Err(invalid(
                "sigma",
                format!(
                    "must lie strictly in (1, 2): at sigma >= 2 the profile is not square integrable, sigma = 1 is the cubic derivative equation; got {}",
                    self.sigma
                ),
            ));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(invalid("c", format!("must be positive, got {}", self.c)));
        }
        check_grid("grid", &self.grid)?;
        QuadratureSpec::new(self.quadrature.method, self.quadrature.rel_tol)
            .map_err(|e| invalid("quadrature.rel_tol", e.to_string()))?;
        if self.quadrature.method != QuadratureMethod::TransformedAdaptive {
            return Err(invalid(
                "quadrature.method",
                "identities and the negative direction need TransformedAdaptive",
            ));
        }
        if !(self.cutoff.radius.is_finite() && self.cutoff.radius > 0.0) {
            return Err(invalid("cutoff.R", format!("must be positive, got {}", self.cutoff.radius)));
        }
        let s = &self.cutoff.sweep;
        if s.len() < 5 || s.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("cutoff.sweep", "needs at least five positive radii"));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("cutoff.sweep", "radii must increase"));
        }
        self.integrator
            .validate()
            .map_err(|e| invalid("integrator", e.to_string()))?;
        let e = &self.experiment;
        if e.betas.iter().any(|b| !(b.abs() <= 0.05)) {
            return Err(invalid("experiment.betas", "every beta must satisfy |beta| <= 0.05"));
        }
        if !(e.escape_factor > 1.0 && e.control_factor > 0.0 && e.control_floor > 0.0) {
            return Err(invalid(
                "experiment",
                "escape_factor must exceed 1, control_factor and control_floor must be positive",
            ));
        }
        check_grid("experiment.grid", &e.grid)?;
        if e.grid.half_width < 4.0 * self.cutoff.radius {
            return Err(invalid(
                "experiment.grid.L",
                format!(
                    "must be at least 4R = {} to hold the cutoff support",
                    4.0 * self.cutoff.radius
                ),
            ));
        }
        if self.sweep.sigmas.is_empty() || self.sweep.speeds.is_empty() {
            return Err(invalid("sweep", "sigmas and speeds must be non-empty"));
        }
        Ok(())
    }

    pub fn params(&self) -> WaveParams {
        WaveParams::new(self.sigma, self.c).expect("validated parameters")
    }

    pub fn with_point(&self, sigma: f64, c: f64) -> Self {
        Self {
            sigma,
            c,
            ..self.clone()
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.half_width, self.grid.n_points).expect("validated grid")
    }

    pub fn criteria(&self) -> EscapeCriteria {
        EscapeCriteria {
            escape_factor: self.experiment.escape_factor,
            control_factor: self.experiment.control_factor,
            control_floor: self.experiment.control_floor,
        }
    }
}
