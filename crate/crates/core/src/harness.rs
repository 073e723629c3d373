//! Synthetic data generators for the simulation studies.

use rand::Rng;
use rand_distr::{Beta, ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{DataKind, Dataset};

/// Dirichlet-process perturbation of a four-component normal mixture,
/// observed with Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario1Params {
    /// DP mass.
    pub a: f64,
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub kernel_sd: f64,
    /// `None` means `max(1000, 20 a)` sticks.
    pub truncation: Option<usize>,
}

impl Default for Scenario1Params {
    fn default() -> Self {
        Scenario1Params {
            a: 500.0,
            weights: vec![0.25, 0.25, 0.3, 0.2],
            means: vec![-3.5, 3.0, 0.0, 6.0],
            sds: vec![0.8, 0.5, 0.4, 0.5],
            kernel_sd: 0.25,
            truncation: None,
        }
    }
}

impl Scenario1Params {
    pub fn truncation_level(&self) -> usize {
        self.truncation.unwrap_or_else(|| 1000.max((20.0 * self.a).ceil() as usize))
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.weights.len();
        if h == 0 || self.means.len() != h || self.sds.len() != h {
            return Err(invalid("scenario 1 needs matching weights, means and sds"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(invalid("scenario 1 weights must be a probability vector"));
        }
        if !(self.a > 0.0 && self.kernel_sd > 0.0) || self.sds.iter().any(|&s| !(s > 0.0)) {
            return Err(invalid("scenario 1 scales must be positive"));
        }
        Ok(())
    }

    /// `Σ w_h μ_h`.
    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

pub fn simulate_scenario1<R: Rng + ?Sized>(n: usize, p: &Scenario1Params, rng: &mut R) -> Result<Dataset> {
    p.validate()?;
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let sticks = p.truncation_level();
    let beta = Beta::new(1.0, p.a).map_err(|e| invalid(e.to_string()))?;
    let base = cumulative(&p.weights);
    let mut remaining = 1.0;
    let mut weights = Vec::with_capacity(sticks);
    let mut atoms = Vec::with_capacity(sticks);
    for l in 0..sticks {
        let v = if l + 1 == sticks { 1.0 } else { beta.sample(rng) };
        weights.push(remaining * v);
        remaining *= 1.0 - v;
        let h = pick(&base, rng.random::<f64>());
        let z: f64 = StandardNormal.sample(rng);
        atoms.push(p.means[h] + p.sds[h] * z);
    }
    let cum = cumulative(&weights);
    let values = (0..n)
        .map(|_| {
            let theta = atoms[pick(&cum, rng.random::<f64>())];
            let z: f64 = StandardNormal.sample(rng);
            theta + p.kernel_sd * z
        })
        .collect();
    Dataset::from_flat(values, 1, DataKind::Continuous)
}

/// Even mixture of a Cauchy-tailed multivariate t and a coordinate-wise
/// skew normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario2Params {
    pub q: usize,
    /// Location of the t component, repeated in every coordinate.
    pub mu0: f64,
    pub omega: f64,
    pub mu1: f64,
    /// Sets the slant `δ = min(σ1, 1)`.
    pub sigma1: f64,
    pub df: f64,
}

impl Default for Scenario2Params {
    fn default() -> Self {
        Scenario2Params {
            q: 1,
            mu0: -5.0,
            omega: 2.0,
            mu1: 5.0,
            sigma1: 1.0,
            df: 1.0,
        }
    }
}

impl Scenario2Params {
    pub fn with_q(q: usize) -> Self {
        Scenario2Params {
            q,
            ..Default::default()
        }
    }

    pub fn slant(&self) -> f64 {
        self.sigma1.clamp(f64::MIN_POSITIVE, 1.0)
    }

    /// Mean of the skew-normal component in each coordinate.
    pub fn skew_mean(&self) -> f64 {
        self.mu1 + self.omega * self.slant() * (2.0 / std::f64::consts::PI).sqrt()
    }
}

/// Skew normal with location `mu`, scale `omega` and `δ ∈ [0, 1]`.
pub fn sample_skew_normal<R: Rng + ?Sized>(mu: f64, omega: f64, delta: f64, rng: &mut R) -> f64 {
    let z0: f64 = StandardNormal.sample(rng);
    let z1: f64 = StandardNormal.sample(rng);
    mu + omega * (delta * z0.abs() + (1.0 - delta * delta).sqrt() * z1)
}

pub fn simulate_scenario2<R: Rng + ?Sized>(n: usize, p: &Scenario2Params, rng: &mut R) -> Result<Dataset> {
    if n == 0 || p.q == 0 {
        return Err(invalid("n and q must be at least 1"));
    }
    if !(p.omega > 0.0 && p.df > 0.0 && p.sigma1 > 0.0) {
        return Err(invalid("scenario 2 scales must be positive"));
    }
    let chi = ChiSquared::new(p.df).map_err(|e| invalid(e.to_string()))?;
    let delta = p.slant();
    let mut values = Vec::with_capacity(n * p.q);
    for _ in 0..n {
        if rng.random::<f64>() < 0.5 {
            let w: f64 = chi.sample(rng);
            let scale = (p.df / w).sqrt();
            for _ in 0..p.q {
                let z: f64 = StandardNormal.sample(rng);
                values.push(p.mu0 + scale * z);
            }
        } else {
            for _ in 0..p.q {
                values.push(sample_skew_normal(p.mu1, p.omega, delta, rng));
            }
        }
    }
    Dataset::from_flat(values, p.q, DataKind::Continuous)
}

/// Mixture of independent-Bernoulli profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentClassParams {
    pub weights: Vec<f64>,
    /// One probability vector per class.
    pub profiles: Vec<Vec<f64>>,
}

impl LatentClassParams {
    /// Five classes on six items, with profiles at pairwise Hamming
    /// distance at least three.
    pub fn well_separated() -> Self {
        let codes = [
            [0, 0, 0, 0, 0, 0],
            [1, 1, 1, 0, 0, 0],
            [0, 0, 0, 1, 1, 1],
            [1, 1, 0, 0, 1, 1],
            [1, 0, 1, 1, 0, 1],
        ];
        LatentClassParams {
            weights: vec![0.2; 5],
            profiles: codes
                .iter()
                .map(|c| c.iter().map(|&b| if b == 1 { 0.95 } else { 0.05 }).collect())
                .collect(),
        }
    }
}

pub fn simulate_latent_class<R: Rng + ?Sized>(
    n: usize,
    p: &LatentClassParams,
    rng: &mut R,
) -> Result<(Dataset, Vec<usize>)> {
    if n == 0 || p.profiles.is_empty() || p.profiles.len() != p.weights.len() {
        return Err(invalid("latent class model needs one weight per profile and n >= 1"));
    }
    let q = p.profiles[0].len();
    if q == 0 || p.profiles.iter().any(|v| v.len() != q || v.iter().any(|x| !(0.0..=1.0).contains(x))) {
        return Err(invalid("profiles must be probability vectors of equal length"));
    }
    let cum = cumulative(&p.weights);
    let mut values = Vec::with_capacity(n * q);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let h = pick(&cum, rng.random::<f64>());
        labels.push(h);
        for &pj in &p.profiles[h] {
            values.push(if rng.random::<f64>() < pj { 1.0 } else { 0.0 });
        }
    }
    Ok((Dataset::from_flat(values, q, DataKind::Binary)?, labels))
}
