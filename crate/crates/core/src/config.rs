//! Flat key-value experiment configuration, stored as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dilatation::AuditConfig;
use crate::error::{Error, Result};
use crate::limits::{EpsSchedule, LimitOptions};
use crate::sampling::SampleConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub structure: String,
    pub pair: String,
    pub curve: String,
    pub map: String,
    pub op: String,
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    pub eps0: f64,
    pub ratio: f64,
    pub steps: usize,
    pub tol_exact: f64,
    pub tol_limit: f64,
    /// Directory for reports and traces; empty means the working directory.
    pub out_dir: String,
    /// Stem of the files written to `out_dir`.
    pub out_name: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = EpsSchedule::default();
        ExperimentConfig {
            structure: "euclidean:2".into(),
            pair: "heisenberg-euclidean".into(),
            curve: "segment".into(),
            map: "identity".into(),
            op: String::new(),
            samples: 50,
            radius: 1.0,
            seed: 0,
            eps0: s.eps0,
            ratio: s.ratio,
            steps: s.steps,
            tol_exact: 1e-10,
            tol_limit: 1e-6,
            out_dir: String::new(),
            out_name: "report".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule().validate()?;
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be at least 1".into()));
        }
        for (name, v) in [
            ("radius", self.radius),
            ("tol_exact", self.tol_exact),
            ("tol_limit", self.tol_limit),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> EpsSchedule {
        EpsSchedule {
            eps0: self.eps0,
            ratio: self.ratio,
            steps: self.steps,
        }
    }

    pub fn limit(&self) -> LimitOptions {
        LimitOptions::with_tol(self.tol_limit)
    }

    pub fn sampling(&self) -> SampleConfig {
        SampleConfig {
            count: self.samples,
            radius: self.radius,
            seed: self.seed,
        }
    }

    pub fn audit(&self) -> AuditConfig {
        AuditConfig {
            samples: self.samples,
            radius: self.radius,
            seed: self.seed,
            schedule: self.schedule(),
            tol_exact: self.tol_exact,
            tol_limit: self.tol_limit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(c.audit(), AuditConfig::default());
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c = ExperimentConfig::from_toml("structure = \"heisenberg\"\nseed = 7\n").unwrap();
        assert_eq!(c.structure, "heisenberg");
        assert_eq!(c.seed, 7);
        assert_eq!(c.steps, 30);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("colour = 3").is_err());
        assert!(ExperimentConfig::from_toml("ratio = 1.5").is_err());
        assert!(ExperimentConfig::from_toml("samples = 0").is_err());
        assert!(ExperimentConfig::from_toml("radius = -1.0").is_err());
    }
}
