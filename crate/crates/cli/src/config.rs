//! TOML run configuration.
//!
//! ```toml
//! seed = 20240601
//! output_dir = "out/sharp_spike"
//! formats = ["csv", "json", "text"]
//!
//! [model]
//! family = "single_spike"
//! params = { alpha = 1.5, c1 = 1.0, base = 1.0 }
//!
//! [noise]
//! law = "gaussian"
//!
//! [plan]
//! n = 10
//! d_grid = [100, 1000, 10000]
//! replicates = 100
//! metrics = ["angles", "eigenvalue_ratios"]
//! directions = [1, 2, 3, 4, 5]
//!
//! [spectrum]
//! k = [1, 2]
//! ```

use std::path::{Path, PathBuf};

use hdlss_core::asymptotics::ZAssumption;
use hdlss_core::harness::{ExperimentPlan, Metric, Thresholds};
use hdlss_core::sampler::{NoiseSpec, SeedSpec};
use hdlss_core::spectra::CovarianceModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
    pub model: CovarianceModel,
    #[serde(default = "gaussian")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub plan: Option<PlanConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Text]
}

fn gaussian() -> NoiseSpec {
    NoiseSpec::Gaussian
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    pub d_grid: Vec<usize>,
    #[serde(default)]
    pub replicates: usize,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub tracked_groups: Vec<Vec<usize>>,
    #[serde(default)]
    pub directions: Vec<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Hypothesis on the sphered data used by `classify`; derived from the
    /// noise law when absent.
    #[serde(default)]
    pub z_assumption: Option<ZAssumption>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "first_index")]
    pub k: Vec<usize>,
    /// Defaults to the plan's grid.
    #[serde(default)]
    pub d_grid: Option<Vec<usize>>,
    /// Leading eigenvalues written per grid point.
    #[serde(default = "default_top")]
    pub top: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            k: first_index(),
            d_grid: None,
            top: default_top(),
        }
    }
}

fn first_index() -> Vec<usize> {
    vec![1]
}

fn default_top() -> usize {
    10
}

pub fn parse(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

impl RunConfig {
    fn plan_section(&self) -> Result<&PlanConfig, CliError> {
        self.plan
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [plan] section".into()))
    }

    /// Sample sizes from `plan.n` or `plan.n_grid` (exactly one must be set).
    pub fn n_grid(&self) -> Result<Vec<usize>, CliError> {
        let plan = self.plan_section()?;
        match (&plan.n, &plan.n_grid) {
            (Some(n), None) => Ok(vec![*n]),
            (None, Some(g)) if !g.is_empty() => Ok(g.clone()),
            (None, Some(_)) => Err(CliError::Config("plan.n_grid: must be nonempty".into())),
            _ => Err(CliError::Config("plan: set exactly one of `n` and `n_grid`".into())),
        }
    }

    pub fn z_assumption(&self) -> ZAssumption {
        self.plan
            .as_ref()
            .and_then(|p| p.z_assumption)
            .unwrap_or(if self.noise.has_independent_components() {
                ZAssumption::IndependentBounded8th
            } else {
                ZAssumption::RhoMixingBounded4th
            })
    }

    pub fn experiment_plan(&self) -> Result<ExperimentPlan, CliError> {
        let plan = self.plan_section()?;
        let out = ExperimentPlan {
            model: self.model.clone(),
            noise: self.noise,
            n_grid: self.n_grid()?,
            d_grid: plan.d_grid.clone(),
            replicates: plan.replicates,
            seed: SeedSpec::new(self.seed),
            metrics: plan.metrics.clone(),
            tracked_groups: plan.tracked_groups.clone(),
            directions: plan.directions.clone(),
            thresholds: plan.thresholds,
        };
        out.validate()
            .map_err(|e| CliError::Config(format!("plan: {e}")))?;
        Ok(out)
    }

    /// Grid and indices for the spectrum command.
    pub fn spectrum_settings(&self) -> Result<(Vec<usize>, SpectrumConfig), CliError> {
        let spec = self.spectrum.clone().unwrap_or_default();
        let grid = match (&spec.d_grid, &self.plan) {
            (Some(g), _) => g.clone(),
            (None, Some(p)) => p.d_grid.clone(),
            (None, None) => {
                return Err(CliError::Config(
                    "spectrum.d_grid: required when there is no [plan] section".into(),
                ))
            }
        };
        if spec.k.is_empty() {
            return Err(CliError::Config("spectrum.k: must be nonempty".into()));
        }
        Ok((grid, spec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_reported_with_its_name() {
        let text = "seed = 1\nbogus = 2\n[model]\nfamily = \"identity\"\n";
        let err = parse(text, "cfg").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn model_field_errors_name_the_field() {
        let text = "[model]\nfamily = \"single_spike\"\nparams = { alpha = 1.5, c1 = 1.0, base = 1.0, extra = 3 }\n";
        let err = parse(text, "cfg").unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn n_and_n_grid_are_exclusive() {
        let text = "[model]\nfamily = \"identity\"\n[plan]\nn = 5\nn_grid = [5, 10]\nd_grid = [100, 1000, 10000]\n";
        let cfg = parse(text, "cfg").unwrap();
        assert!(cfg.n_grid().is_err());
    }

    #[test]
    fn defaults() {
        let cfg = parse("[model]\nfamily = \"identity\"\n", "cfg").unwrap();
        assert_eq!(cfg.noise, NoiseSpec::Gaussian);
        assert_eq!(cfg.formats, all_formats());
        assert_eq!(cfg.z_assumption(), ZAssumption::IndependentBounded8th);
    }
}
