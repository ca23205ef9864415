//! Run configuration: one TOML document with optional flat sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srg::experiments::{BooleanConfig, DiscretisationConfig, SoftRggConfig};
use srg::gospa::GospaParams;
use srg::graph::EdgeModel;
use srg::point_process::GibbsModel;
use srg::space::QuadratureSpec;

use crate::error::CliError;

/// Parsed configuration document. Every section is optional; each
/// subcommand names the sections it needs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Default seed when `--seed` is not given.
    pub seed: Option<u64>,
    /// Default output path when `--out` is not given.
    pub output: Option<PathBuf>,
    pub vertex: Option<GibbsModel>,
    pub edge: Option<EdgeModel>,
    #[serde(default)]
    pub metric: GospaParams,
    pub quadrature: Option<QuadratureSpec>,
    pub dynamics: Option<DynamicsSection>,
    pub boolean: Option<BooleanConfig>,
    pub discretisation: Option<DiscretisationConfig>,
    pub soft_rgg: Option<SoftRggConfig>,
}

/// Settings of the `gbdp` and `couple` subcommands.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub horizon: f64,
    #[serde(default)]
    pub observe_at: Vec<f64>,
    #[serde(default = "one")]
    pub paths: usize,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(edge) = &self.edge {
            if let Some(kappa) = edge.as_product() {
                kappa.validate()?;
            }
        }
        if let Some(q) = &self.quadrature {
            q.validate()?;
        }
        if let Some(d) = &self.dynamics {
            if !(d.horizon >= 0.0 && d.horizon.is_finite()) {
                return Err(CliError::Validation("dynamics.horizon must be nonnegative".into()));
            }
            if d.paths == 0 {
                return Err(CliError::Validation("dynamics.paths must be positive".into()));
            }
        }
        if let Some(b) = &self.boolean {
            b.validate()?;
        }
        if let Some(d) = &self.discretisation {
            d.validate()?;
        }
        if let Some(s) = &self.soft_rgg {
            s.validate()?;
        }
        Ok(())
    }

    pub fn hash(&self) -> Result<String, CliError> {
        Ok(srg::experiments::config_hash(self)?)
    }

    pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Validation(format!("config is missing the [{name}] section")))
    }

    pub fn quadrature_or_default(&self, dim: usize) -> QuadratureSpec {
        self.quadrature.unwrap_or_else(|| QuadratureSpec::default_for(dim))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[vertex]
window = { lower = [0, 0], upper = [1, 1] }
activity = { kind = "constant", value = 5 }

[edge]
kind = "product"
kappa = { kind = "constant", p = 0.5 }
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.metric, GospaParams::default());
        assert!(cfg.seed.is_none() && cfg.dynamics.is_none());
        assert_eq!(cfg.vertex.unwrap().activity().as_constant(), Some(5.0));
    }

    #[test]
    fn rejects_connection_probability_above_one() {
        let text = MINIMAL.replace("p = 0.5", "p = 1.2");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("invalid connection probability"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_unknown_keys_by_name() {
        let text = format!("{MINIMAL}\nsed = 3\n");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
    }

    #[test]
    fn rejects_duplicate_keys() {
        let text = MINIMAL.replace("kind = \"product\"", "kind = \"product\"\nkind = \"product\"");
        let first = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        let second = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(first.contains("duplicate"), "{first}");
        assert_eq!(first, second);
    }
}
