//! Repulsive priors on the set of cluster centres.

pub mod dpp;
pub mod strauss;

use serde::{Deserialize, Serialize};

pub use dpp::{
    dpp_alpha_max, dpp_eigenvalues, log_det_spd, log_z_from_eigenvalues, rescale_to_unit, DppParams, DppSpectrum,
};
pub use strauss::{strauss_log_g, strauss_log_papangelou, strauss_poisson_log_z, StraussParams};

use crate::error::{invalid, Result};
use crate::model::BoundingBox;

/// Interaction structure of the centre process, without `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    Strauss { alpha: f64, delta: f64 },
    Dpp { s: f64, beta: f64, trunc_n: usize },
}

/// Prior on the intensity `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiPrior {
    Uniform { lower: f64, upper: f64 },
    Fixed { value: f64 },
}

impl XiPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            XiPrior::Uniform { lower, upper } if lower > 0.0 && upper > lower && upper.is_finite() => Ok(()),
            XiPrior::Fixed { value } if value > 0.0 && value.is_finite() => Ok(()),
            _ => Err(invalid(format!("invalid xi prior {self:?}"))),
        }
    }

    pub fn log_density(&self, xi: f64) -> f64 {
        match *self {
            XiPrior::Uniform { lower, upper } if (lower..=upper).contains(&xi) => -(upper - lower).ln(),
            XiPrior::Fixed { value } if xi == value => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn midpoint(&self) -> f64 {
        match *self {
            XiPrior::Uniform { lower, upper } => 0.5 * (lower + upper),
            XiPrior::Fixed { value } => value,
        }
    }

    pub fn range(&self) -> f64 {
        match *self {
            XiPrior::Uniform { lower, upper } => upper - lower,
            XiPrior::Fixed { .. } => 0.0,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, XiPrior::Fixed { .. })
    }
}

/// Default spectral truncation by dimension.
pub fn default_trunc(q: usize) -> usize {
    if q <= 2 {
        10
    } else {
        5
    }
}

/// Centre prior: interaction kind, support box and intensity prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepulsivePrior {
    #[serde(flatten)]
    pub kind: PriorKind,
    pub region: BoundingBox,
    pub xi_prior: XiPrior,
}

impl RepulsivePrior {
    pub fn validate(&self) -> Result<()> {
        self.xi_prior.validate()?;
        // Building the density at the midpoint runs every parameter check.
        self.at(self.xi_prior.midpoint()).map(|_| ())
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn is_strauss(&self) -> bool {
        matches!(self.kind, PriorKind::Strauss { .. })
    }

    /// Strauss parameters at a given `ξ`, if this is a Strauss prior.
    pub fn strauss_at(&self, xi: f64) -> Option<Result<StraussParams>> {
        match self.kind {
            PriorKind::Strauss { alpha, delta } => Some(StraussParams::new(xi, alpha, delta, self.region.clone())),
            PriorKind::Dpp { .. } => None,
        }
    }

    /// The unnormalized density with `ξ` fixed.
    pub fn at(&self, xi: f64) -> Result<PriorDensity> {
        match self.kind {
            PriorKind::Strauss { alpha, delta } => Ok(PriorDensity::Strauss(StraussParams::new(
                xi,
                alpha,
                delta,
                self.region.clone(),
            )?)),
            PriorKind::Dpp { s, beta, trunc_n } => {
                let p = DppParams::new(xi, s, beta, trunc_n, self.region.clone())?;
                Ok(PriorDensity::Dpp(Box::new(dpp_eigenvalues(&p)?)))
            }
        }
    }
}

/// A centre density evaluated at one value of `ξ`.
#[derive(Clone, Debug)]
pub enum PriorDensity {
    Strauss(StraussParams),
    Dpp(Box<DppSpectrum>),
}

impl PriorDensity {
    pub fn xi(&self) -> f64 {
        match self {
            PriorDensity::Strauss(p) => p.xi,
            PriorDensity::Dpp(d) => d.xi(),
        }
    }

    pub fn region(&self) -> &BoundingBox {
        match self {
            PriorDensity::Strauss(p) => &p.region,
            PriorDensity::Dpp(d) => d.region(),
        }
    }

    pub fn log_g(&self, config: &[&[f64]]) -> f64 {
        match self {
            PriorDensity::Strauss(p) => strauss_log_g(config, p),
            PriorDensity::Dpp(d) => d.log_g(config),
        }
    }

    /// `log g(config ∪ {x}) − log g(config)`; `current` is `log g(config)`
    /// when the caller already has it.
    pub fn log_papangelou(&self, x: &[f64], config: &[&[f64]], current: Option<f64>) -> f64 {
        match self {
            PriorDensity::Strauss(p) => strauss_log_papangelou(x, config, p),
            PriorDensity::Dpp(d) => {
                let base = current.unwrap_or_else(|| d.log_g(config));
                if base == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let mut with = config.to_vec();
                with.push(x);
                d.log_g(&with) - base
            }
        }
    }

    /// Log normalizing constant when it has a closed form.
    pub fn log_z(&self) -> Option<f64> {
        match self {
            PriorDensity::Strauss(p) if p.alpha == 1.0 => Some(strauss_poisson_log_z(p.xi, &p.region)),
            PriorDensity::Strauss(_) => None,
            PriorDensity::Dpp(d) => Some(d.log_z()),
        }
    }
}
