//! Mixture kernels, their dispersion priors and conjugate updates, and the
//! Gamma(1, 1) law of the unnormalized weights.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::model::{Covariance, DataKind, Dataset, Dispersion};

/// Bernoulli probabilities are clamped into `[P_CLAMP, 1 − P_CLAMP]`.
pub const P_CLAMP: f64 = 1e-9;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Normal with unknown variance, `γ ~ InvGamma(shape, scale)`.
    Gaussian1d { shape: f64, scale: f64 },
    /// Multivariate normal, `Γ ~ InvWishart(df, scale)`.
    GaussianQd { df: f64, scale: Covariance },
    /// Product of Bernoullis with success probabilities `μ`.
    BernoulliLatent { dim: usize },
}

impl KernelSpec {
    /// Data-scaled defaults: Gaussian for continuous data, latent class for
    /// binary data.
    pub fn default_for(data: &Dataset) -> Result<Self> {
        match data.kind() {
            DataKind::Binary => Ok(KernelSpec::BernoulliLatent { dim: data.dim() }),
            DataKind::Continuous => KernelSpec::gaussian_default(data),
        }
    }

    pub fn gaussian_default(data: &Dataset) -> Result<Self> {
        let q = data.dim();
        let var: Vec<f64> = (0..q).map(|j| data.column_variance(j)).collect();
        if var.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("cannot scale the kernel prior: a coordinate has zero variance"));
        }
        if q == 1 {
            Ok(KernelSpec::Gaussian1d {
                shape: 2.0,
                scale: var[0],
            })
        } else {
            Ok(KernelSpec::GaussianQd {
                df: q as f64 + 3.0,
                scale: Covariance::diagonal(&var)?,
            })
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::Gaussian1d { .. } => 1,
            KernelSpec::GaussianQd { scale, .. } => scale.dim(),
            KernelSpec::BernoulliLatent { dim } => *dim,
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self, KernelSpec::BernoulliLatent { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Gaussian1d { shape, scale } if *shape > 0.0 && *scale > 0.0 => Ok(()),
            KernelSpec::GaussianQd { df, scale } if *df > scale.dim() as f64 - 1.0 => Ok(()),
            KernelSpec::BernoulliLatent { dim } if *dim >= 1 => Ok(()),
            _ => Err(invalid(format!("invalid kernel hyperparameters {self:?}"))),
        }
    }

    /// Checks that the kernel fits the data.
    pub fn check_data(&self, data: &Dataset) -> Result<()> {
        self.validate()?;
        if self.dim() != data.dim() {
            return Err(invalid(format!(
                "kernel dimension {} does not match data dimension {}",
                self.dim(),
                data.dim()
            )));
        }
        match (self.is_bernoulli(), data.kind()) {
            (true, DataKind::Continuous) => Err(invalid("the Bernoulli kernel needs binary data")),
            (false, DataKind::Binary) => Err(invalid("a Gaussian kernel cannot be fitted to binary data")),
            _ => Ok(()),
        }
    }

    pub fn log_kernel(&self, y: &[f64], mu: &[f64], gamma: &Dispersion) -> f64 {
        match (self, gamma) {
            (KernelSpec::Gaussian1d { .. }, Dispersion::Variance(v)) => {
                let d = y[0] - mu[0];
                -0.5 * (LN_2PI + v.ln() + d * d / v)
            }
            (KernelSpec::GaussianQd { .. }, Dispersion::Covariance(c)) => {
                let q = y.len();
                let mut d = [0.0f64; 16];
                let mut heap;
                let d: &mut [f64] = if q <= 16 {
                    &mut d[..q]
                } else {
                    heap = vec![0.0; q];
                    &mut heap
                };
                for j in 0..q {
                    d[j] = y[j] - mu[j];
                }
                -0.5 * (q as f64 * LN_2PI + c.log_det() + c.mahalanobis_sq(d))
            }
            (KernelSpec::BernoulliLatent { .. }, _) => y
                .iter()
                .zip(mu)
                .map(|(&yj, &pj)| {
                    let p = pj.clamp(P_CLAMP, 1.0 - P_CLAMP);
                    if yj == 1.0 {
                        p.ln()
                    } else {
                        (1.0 - p).ln()
                    }
                })
                .sum(),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Log prior density of the dispersion.
    pub fn log_prior_gamma(&self, gamma: &Dispersion) -> f64 {
        match (self, gamma) {
            (KernelSpec::Gaussian1d { shape, scale }, Dispersion::Variance(v)) => inv_gamma_log_pdf(*v, *shape, *scale),
            (KernelSpec::GaussianQd { df, scale }, Dispersion::Covariance(c)) => {
                inv_wishart_log_pdf(c, *df, scale.matrix())
            }
            (KernelSpec::BernoulliLatent { .. }, Dispersion::Absent) => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Prior mean of the dispersion.
    pub fn prior_mean_gamma(&self) -> Dispersion {
        match self {
            KernelSpec::Gaussian1d { shape, scale } => {
                Dispersion::Variance(if *shape > 1.0 { scale / (shape - 1.0) } else { *scale })
            }
            KernelSpec::GaussianQd { df, scale } => {
                let q = scale.dim() as f64;
                let denom = if *df > q + 1.0 { df - q - 1.0 } else { 1.0 };
                Dispersion::Covariance(Covariance::new(scale.matrix() / denom).expect("scaled SPD matrix"))
            }
            KernelSpec::BernoulliLatent { .. } => Dispersion::Absent,
        }
    }

    pub fn sample_gamma_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Dispersion {
        match self {
            KernelSpec::Gaussian1d { shape, scale } => Dispersion::Variance(sample_inv_gamma(*shape, *scale, rng)),
            KernelSpec::GaussianQd { df, scale } => {
                Dispersion::Covariance(sample_inv_wishart(*df, scale.cholesky_lower(), rng))
            }
            KernelSpec::BernoulliLatent { .. } => Dispersion::Absent,
        }
    }

    /// Posterior hyperparameters given the rows assigned to a centre.
    fn posterior(&self, mu: &[f64], rows: &[&[f64]]) -> Posterior {
        match self {
            KernelSpec::Gaussian1d { shape, scale } => {
                let ss: f64 = rows.iter().map(|y| (y[0] - mu[0]).powi(2)).sum();
                Posterior::InvGamma(shape + 0.5 * rows.len() as f64, scale + 0.5 * ss)
            }
            KernelSpec::GaussianQd { df, scale } => {
                let q = scale.dim();
                let mut psi = scale.matrix().clone();
                for y in rows {
                    for a in 0..q {
                        for b in 0..q {
                            psi[(a, b)] += (y[a] - mu[a]) * (y[b] - mu[b]);
                        }
                    }
                }
                Posterior::InvWishart(df + rows.len() as f64, psi)
            }
            KernelSpec::BernoulliLatent { .. } => Posterior::None,
        }
    }

    /// Exact draw from the full conditional of `γ`; a prior draw when no
    /// rows are assigned.
    pub fn sample_gamma_conditional<R: Rng + ?Sized>(&self, mu: &[f64], rows: &[&[f64]], rng: &mut R) -> Dispersion {
        match self.posterior(mu, rows) {
            Posterior::InvGamma(a, b) => Dispersion::Variance(sample_inv_gamma(a, b, rng)),
            Posterior::InvWishart(df, psi) => {
                let Some(chol) = psi.clone().cholesky() else {
                    return self.sample_gamma_prior(rng);
                };
                Dispersion::Covariance(sample_inv_wishart(df, &chol.l(), rng))
            }
            Posterior::None => Dispersion::Absent,
        }
    }

    /// Log density of the full conditional of `γ`.
    pub fn log_gamma_conditional(&self, gamma: &Dispersion, mu: &[f64], rows: &[&[f64]]) -> f64 {
        match (self.posterior(mu, rows), gamma) {
            (Posterior::InvGamma(a, b), Dispersion::Variance(v)) => inv_gamma_log_pdf(*v, a, b),
            (Posterior::InvWishart(df, psi), Dispersion::Covariance(c)) => inv_wishart_log_pdf(c, df, &psi),
            (Posterior::None, Dispersion::Absent) => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }
}

enum Posterior {
    InvGamma(f64, f64),
    InvWishart(f64, DMatrix<f64>),
    None,
}

pub fn inv_gamma_log_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / scale).expect("positive parameters").sample(rng);
    1.0 / g
}

/// Multivariate log-gamma `log Γ_p(a)`.
fn ln_mv_gamma(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    0.25 * pf * (pf - 1.0) * PI.ln() + (0..p).map(|j| ln_gamma(a - 0.5 * j as f64)).sum::<f64>()
}

pub fn inv_wishart_log_pdf(x: &Covariance, df: f64, scale: &DMatrix<f64>) -> f64 {
    let p = x.dim();
    let Some(chol_scale) = scale.clone().cholesky() else {
        return f64::NEG_INFINITY;
    };
    let log_det_scale = 2.0 * chol_scale.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    // tr(Ψ Σ⁻¹) from the cached factor of Σ.
    let l = x.cholesky_lower();
    let Some(linv) = l.clone().try_inverse() else {
        return f64::NEG_INFINITY;
    };
    let trace = (&linv * scale * linv.transpose()).trace();
    let pf = p as f64;
    0.5 * df * log_det_scale - 0.5 * df * pf * 2f64.ln() - ln_mv_gamma(p, 0.5 * df)
        - 0.5 * (df + pf + 1.0) * x.log_det()
        - 0.5 * trace
}

/// Draw from `InvWishart(df, L Lᵀ)` via the Bartlett decomposition.
pub fn sample_inv_wishart<R: Rng + ?Sized>(df: f64, scale_chol: &DMatrix<f64>, rng: &mut R) -> Covariance {
    let p = scale_chol.nrows();
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi: f64 = ChiSquared::new(df - i as f64).expect("df > p - 1").sample(rng);
        a[(i, i)] = chi.sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    // W = A Aᵀ ~ Wishart(df, I), so L W⁻¹ Lᵀ ~ InvWishart(df, L Lᵀ).
    let a_inv = a.try_inverse().expect("Bartlett factor has a positive diagonal");
    let b = scale_chol * a_inv.transpose();
    let sigma = &b * b.transpose();
    let sym = (&sigma + sigma.transpose()) * 0.5;
    Covariance::new(sym).expect("inverse-Wishart draws are positive definite")
}

/// Laplace transform of the Gamma(1, 1) weight law.
pub fn psi_laplace(u: f64) -> f64 {
    1.0 / (1.0 + u)
}

/// Log prior density of an unnormalized weight.
pub fn log_weight_prior(s: f64) -> f64 {
    if s > 0.0 {
        -s
    } else {
        f64::NEG_INFINITY
    }
}

/// `s ∝ s^{n_h} e^{−(1+u)s}`, i.e. `Gamma(n_h + 1, rate 1 + u)`.
pub fn sample_s_allocated<R: Rng + ?Sized>(n_h: usize, u: f64, rng: &mut R) -> f64 {
    Gamma::new(n_h as f64 + 1.0, 1.0 / (1.0 + u)).expect("positive parameters").sample(rng)
}

pub fn log_s_allocated_conditional(s: f64, n_h: usize, u: f64) -> f64 {
    if !(s > 0.0) {
        return f64::NEG_INFINITY;
    }
    let a = n_h as f64 + 1.0;
    let rate = 1.0 + u;
    a * rate.ln() - ln_gamma(a) + (a - 1.0) * s.ln() - rate * s
}

/// `Exponential(1 + u)`.
pub fn sample_s_nonallocated<R: Rng + ?Sized>(u: f64, rng: &mut R) -> f64 {
    loop {
        let s: f64 = Exp::new(1.0 + u).expect("positive rate").sample(rng);
        if s > 0.0 {
            return s;
        }
    }
}
