//! Run configuration for `fit`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elicitation::{elicit_dpp, elicit_strauss, DppOptions, ElicitReport, StraussOptions, DEFAULT_GRID, DEFAULT_M_MAX};
use crate::error::{invalid, Result};
use crate::kernels::KernelSpec;
use crate::model::Dataset;
use crate::point_process::{RepulsivePrior, XiPrior};
use crate::samplers::SamplerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorName {
    Strauss,
    Dpp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    /// Bernoulli for binary data, Gaussian otherwise.
    #[default]
    Auto,
    Gaussian,
    Bernoulli,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelChoice {
    Named(KernelName),
    Explicit(KernelSpec),
}

impl Default for KernelChoice {
    fn default() -> Self {
        KernelChoice::Named(KernelName::Auto)
    }
}

/// Hyperparameters elicited from the data, with optional overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElicitSpec {
    pub elicit: PriorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_n: Option<usize>,
    /// Replaces the elicited intensity prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_prior: Option<XiPrior>,
}

impl ElicitSpec {
    pub fn new(elicit: PriorName) -> Self {
        ElicitSpec {
            elicit,
            m_max: None,
            n_star: None,
            delta: None,
            s: None,
            beta: None,
            trunc_n: None,
            xi_prior: None,
        }
    }

    pub fn run(&self, data: &Dataset) -> Result<ElicitReport> {
        let m_max = self.m_max.unwrap_or(DEFAULT_M_MAX);
        let mut rep = match self.elicit {
            PriorName::Strauss => elicit_strauss(
                data,
                &StraussOptions {
                    m_max,
                    n_star: self.n_star,
                    delta: self.delta,
                    grid_size: DEFAULT_GRID,
                },
            )?,
            PriorName::Dpp => {
                let d = DppOptions::default();
                elicit_dpp(
                    data,
                    &DppOptions {
                        m_max,
                        s: self.s.unwrap_or(d.s),
                        beta: self.beta.unwrap_or(d.beta),
                        trunc_n: self.trunc_n,
                    },
                )?
            }
        };
        if let Some(xp) = &self.xi_prior {
            rep.prior.xi_prior = xp.clone();
            rep.prior.validate()?;
        }
        Ok(rep)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorChoice {
    Explicit(RepulsivePrior),
    Elicit(ElicitSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub kernel: KernelChoice,
    pub prior: PriorChoice,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Kernel and prior after elicitation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedModel {
    pub kernel: KernelSpec,
    pub prior: RepulsivePrior,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elicitation: Option<ElicitReport>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn resolve(&self, data: &Dataset) -> Result<ResolvedModel> {
        let kernel = match &self.kernel {
            KernelChoice::Named(KernelName::Auto) => KernelSpec::default_for(data)?,
            KernelChoice::Named(KernelName::Gaussian) => KernelSpec::gaussian_default(data)?,
            KernelChoice::Named(KernelName::Bernoulli) => KernelSpec::BernoulliLatent { dim: data.dim() },
            KernelChoice::Explicit(k) => k.clone(),
        };
        kernel.check_data(data)?;
        let (prior, elicitation) = match &self.prior {
            PriorChoice::Explicit(p) => (p.clone(), None),
            PriorChoice::Elicit(spec) => {
                let mut rep = spec.run(data)?;
                // The grid is reproducible from the data and bulks up the summary.
                if let Some(kde) = rep.kde.as_mut() {
                    kde.density.clear();
                    kde.grid.clear();
                }
                (rep.prior.clone(), Some(rep))
            }
        };
        prior.validate()?;
        if prior.dim() != data.dim() {
            return Err(invalid("prior dimension does not match the data"));
        }
        self.sampler.validate()?;
        Ok(ResolvedModel {
            kernel,
            prior,
            elicitation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let c: RunConfig = serde_json::from_str(r#"{"prior": {"elicit": "strauss"}}"#).unwrap();
        assert_eq!(c.prior, PriorChoice::Elicit(ElicitSpec::new(PriorName::Strauss)));
        assert_eq!(c.kernel, KernelChoice::Named(KernelName::Auto));
        assert_eq!(c.sampler, SamplerConfig::default());
    }

    #[test]
    fn explicit_prior_and_sampler_fields() {
        let text = r#"{
            "kernel": "gaussian",
            "prior": {"kind": "dpp", "s": 0.5, "beta": 10, "trunc_n": 10,
                      "region": {"lower": [0], "upper": [1]},
                      "xi_prior": {"kind": "fixed", "value": 4}},
            "sampler": {"n_iter": 100, "burn_in": 10, "seed": 3}
        }"#;
        let c: RunConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(c.prior, PriorChoice::Explicit(_)));
        assert_eq!(c.sampler.n_iter, 100);
        assert_eq!(c.sampler.thin, 1);
    }

    #[test]
    fn binary_data_with_gaussian_kernel_is_rejected() {
        let data = Dataset::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]], crate::DataKind::Binary).unwrap();
        let c: RunConfig = serde_json::from_str(r#"{"kernel": "gaussian", "prior": {"elicit": "strauss"}}"#).unwrap();
        assert!(c.resolve(&data).is_err());
    }
}
