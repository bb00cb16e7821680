use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qftgi::estimator::CiScale;
use qftgi::sampler::DEFAULT_SEED;
use qftgi::states::PartitionMixture;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    Qft,
    Ci,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Qft => "qft",
            Protocol::Ci => "ci",
        }
    }
}

/// Experiment description, read from `--config` and then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub n: Option<usize>,
    /// Inline mixture, `"0.8:1,1,1;0.2:1,2,3"`.
    pub mixture: Option<String>,
    /// JSON file holding a serialized mixture.
    pub mixture_file: Option<PathBuf>,
    /// Synthetic ground truth: `c1` fully indistinguishable plus
    /// `1 - c1` fully distinguishable.
    pub c1: Option<f64>,
    pub shots: Option<u64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Detector fan-out for PPNR degradation; off when absent.
    pub ppnr: Option<usize>,
    pub dump_marginals: bool,
    /// Number of evenly spaced phases for the CI fringe.
    pub phases: usize,
    pub ci_scale: CiScale,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            protocol: Protocol::Qft,
            n: None,
            mixture: None,
            mixture_file: None,
            c1: None,
            shots: None,
            epsilon: None,
            delta: None,
            seed: DEFAULT_SEED,
            output: None,
            ppnr: None,
            dump_marginals: false,
            phases: 21,
            ci_scale: CiScale::SingleOutput,
        }
    }
}

/// How many samples to draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotBudget {
    Fixed(u64),
    Target { epsilon: f64, delta: f64 },
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn budget(&self) -> Result<ShotBudget, CliError> {
        match (self.shots, self.epsilon, self.delta) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::Usage(
                "give either shots or epsilon/delta, not both".into(),
            )),
            (Some(0), None, None) => Err(CliError::Usage("shots must be positive".into())),
            (Some(s), None, None) => Ok(ShotBudget::Fixed(s)),
            (None, Some(epsilon), Some(delta)) => Ok(ShotBudget::Target { epsilon, delta }),
            (None, _, _) => Err(CliError::Usage(
                "give shots, or both epsilon and delta".into(),
            )),
        }
    }

    /// Resolves the mixture source; exactly one of `mixture`, `mixture_file`
    /// and `c1` (which needs `n`) must be set.
    pub fn mixture(&self) -> Result<PartitionMixture, CliError> {
        let mixture = match (&self.mixture, &self.mixture_file, self.c1) {
            (Some(spec), None, None) => PartitionMixture::from_inline(spec)?,
            (None, Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read mixture file {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Usage(format!("bad mixture file {}: {e}", path.display()))
                })?
            }
            (None, None, Some(c1)) => {
                let n = self
                    .n
                    .ok_or_else(|| CliError::Usage("c1 mixtures need n".into()))?;
                PartitionMixture::indistinguishable_vs_distinguishable(n, c1)?
            }
            (None, None, None) => {
                return Err(CliError::Usage(
                    "no mixture: give mixture, mixture_file or c1".into(),
                ))
            }
            _ => {
                return Err(CliError::Usage(
                    "give only one of mixture, mixture_file and c1".into(),
                ))
            }
        };
        if let Some(n) = self.n {
            if mixture.photons() != n {
                return Err(CliError::Usage(format!(
                    "mixture has {} photons but n = {n}",
                    mixture.photons()
                )));
            }
        }
        Ok(mixture)
    }
}
