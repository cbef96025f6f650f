//! Experiment configuration files (JSON, unknown fields rejected).

use std::path::{Path, PathBuf};

use modal_steer::{
    build_system, FrequencyPreset, ModalSystem, PropagationConfig, QuadratureSpec, StateVector,
    SynthesisOptions, WeightMatrix,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kappa: f64,
    pub preset: FrequencyPreset,
    /// Number of flexible modes stored; defaults to the list length for
    /// explicit presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_count: Option<usize>,
    #[serde(default)]
    pub allow_overdamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Gramian panels; resolved from the block frequencies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gramian_panels: Option<usize>,
    /// Propagation panels; resolved when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: default_nodes(),
            gramian_panels: None,
            steps: None,
            ridge: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Design order for `synthesize` / `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Inclusive design-order range for `converge`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_range: Option<[usize; 2]>,
    /// Simulation truncation (flexible blocks simulated).
    pub m: usize,
    #[serde(default)]
    pub x0: Vec<(usize, f64)>,
    #[serde(default)]
    pub x1: Vec<(usize, f64)>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Trajectory sample intervals for `simulate`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gap_checkpoints: Vec<usize>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_nodes() -> usize {
    modal_steer::quadrature::DEFAULT_NODES
}

fn default_tau() -> f64 {
    5.0
}

fn default_q() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_samples() -> usize {
    200
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return bad(format!("q must be positive, got {}", self.q));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        let top = 2 * self.m + 1;
        for (name, x) in [("x0", &self.x0), ("x1", &self.x1)] {
            if let Some((i, _)) = x.iter().find(|(i, _)| *i > top) {
                return bad(format!("{name} index {i} exceeds 2m + 1 = {top}"));
            }
            if x.iter().any(|(_, v)| !v.is_finite()) {
                return bad(format!("{name} has a non-finite entry"));
            }
        }
        if let Some(n) = self.n {
            if n > self.m {
                return bad(format!("n = {n} exceeds m = {}", self.m));
            }
        }
        if let Some([lo, hi]) = self.n_range {
            if lo > hi || hi > self.m {
                return bad(format!("n_range [{lo}, {hi}] must satisfy lo <= hi <= m = {}", self.m));
            }
        }
        if self.quadrature.nodes < 2 {
            return bad("quadrature.nodes must be at least 2".into());
        }
        Ok(())
    }

    pub fn mode_count(&self) -> Result<usize, CliError> {
        match (&self.system.preset, self.system.mode_count) {
            (_, Some(c)) => Ok(c),
            (FrequencyPreset::Explicit { omega, .. }, None) => Ok(omega.len()),
            _ => Err(CliError::Config("system.mode_count is required for generated presets".into())),
        }
    }

    pub fn build_system(&self, allow_overdamped: bool) -> Result<ModalSystem, CliError> {
        let sys = build_system(
            &self.system.preset,
            self.mode_count()?,
            self.system.kappa,
            allow_overdamped || self.system.allow_overdamped,
        )?;
        if self.m > sys.mode_count() {
            return Err(CliError::Config(format!(
                "m = {} exceeds the {} stored modes",
                self.m,
                sys.mode_count()
            )));
        }
        Ok(sys)
    }

    pub fn x0(&self) -> StateVector {
        StateVector::from_entries(self.x0.iter().copied())
    }

    pub fn x1(&self) -> StateVector {
        StateVector::from_entries(self.x1.iter().copied())
    }

    pub fn weight(&self) -> Result<WeightMatrix, CliError> {
        Ok(WeightMatrix::scalar(self.q)?)
    }

    pub fn synthesis_options(&self) -> SynthesisOptions {
        SynthesisOptions {
            quadrature: self.quadrature.gramian_panels.map(|panels| QuadratureSpec {
                panels,
                nodes: self.quadrature.nodes,
            }),
            ridge: self.quadrature.ridge,
        }
    }

    /// Propagation layout for a control of rate `control_rate`.
    pub fn propagation(&self, system: &ModalSystem, control_rate: f64) -> PropagationConfig {
        let auto = PropagationConfig::resolved(system, self.m, control_rate, self.tau);
        PropagationConfig {
            truncation: self.m,
            steps: self.quadrature.steps.unwrap_or(auto.steps),
            nodes: self.quadrature.nodes,
        }
    }

    pub fn order(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| CliError::Config("config needs `n` for this command".into()))
    }

    pub fn orders(&self) -> Result<Vec<usize>, CliError> {
        match (self.n_range, self.n) {
            (Some([lo, hi]), _) => Ok((lo..=hi).collect()),
            (None, Some(n)) => Ok(vec![n]),
            (None, None) => Err(CliError::Config("config needs `n_range` or `n`".into())),
        }
    }
}
