//! MCMC diagnostics and posterior summaries.

pub mod mcmc;
pub mod partition;
pub mod summary;

use serde::{Deserialize, Serialize};

pub use mcmc::{autocorrelation, ess};
pub use partition::{
    adjusted_rand, binder_loss, binder_partition, binder_partition_with, canonical, posterior_similarity,
    BinderEstimate, Similarity,
};
pub use summary::{cluster_center_report, density_estimate, ClusterCentre};

use crate::samplers::ChainRecord;

pub const ACF_LAGS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KProbability {
    pub k: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub mean: f64,
    pub sd: f64,
    pub ess: f64,
    pub acf: Vec<f64>,
}

impl SeriesSummary {
    pub fn of(series: &[f64]) -> Self {
        let n = series.len().max(1) as f64;
        let mean = series.iter().sum::<f64>() / n;
        let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        SeriesSummary {
            mean,
            sd: var.sqrt(),
            ess: ess(series),
            acf: autocorrelation(series, ACF_LAGS.min(series.len().saturating_sub(1))),
        }
    }

    /// Monte Carlo standard error of the mean.
    pub fn mcse(&self) -> f64 {
        self.sd / self.ess.max(1.0).sqrt()
    }
}

/// Posterior pmf of `k`, sorted by `k`.
pub fn k_distribution(records: &[ChainRecord]) -> Vec<KProbability> {
    let mut counts = std::collections::BTreeMap::new();
    for r in records {
        *counts.entry(r.k).or_insert(0usize) += 1;
    }
    let total = records.len() as f64;
    counts
        .into_iter()
        .map(|(k, c)| KProbability {
            k,
            probability: c as f64 / total,
        })
        .collect()
}

/// Smallest `k` with the largest posterior probability.
pub fn k_mode(pmf: &[KProbability]) -> Option<usize> {
    pmf.iter()
        .fold(None::<&KProbability>, |best, p| match best {
            Some(b) if b.probability >= p.probability => Some(b),
            _ => Some(p),
        })
        .map(|p| p.k)
}

pub fn total_variation(a: &[KProbability], b: &[KProbability]) -> f64 {
    let mut keys: Vec<usize> = a.iter().chain(b).map(|p| p.k).collect();
    keys.sort_unstable();
    keys.dedup();
    let look = |v: &[KProbability], k| v.iter().find(|p| p.k == k).map_or(0.0, |p| p.probability);
    0.5 * keys.iter().map(|&k| (look(a, k) - look(b, k)).abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinderSummary {
    pub sample: usize,
    pub loss: f64,
    pub labels: Vec<usize>,
}

/// Diagnostics that depend on the chain alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub samples: usize,
    pub k_distribution: Vec<KProbability>,
    pub k_mode: Option<usize>,
    pub k: SeriesSummary,
    pub m: SeriesSummary,
    pub xi: SeriesSummary,
    pub u: SeriesSummary,
    pub binder: Option<BinderSummary>,
}

pub fn diagnose(records: &[ChainRecord]) -> ChainDiagnostics {
    let series = |f: fn(&ChainRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let pmf = k_distribution(records);
    let binder = (!records.is_empty()).then(|| {
        let parts: Vec<Vec<usize>> = records.iter().map(|r| r.labels.clone()).collect();
        let b = binder_partition(&parts);
        BinderSummary {
            sample: b.sample,
            loss: b.loss,
            labels: b.labels,
        }
    });
    ChainDiagnostics {
        samples: records.len(),
        k_mode: k_mode(&pmf),
        k_distribution: pmf,
        k: SeriesSummary::of(&series(|r| r.k as f64)),
        m: SeriesSummary::of(&series(|r| r.m as f64)),
        xi: SeriesSummary::of(&series(|r| r.xi)),
        u: SeriesSummary::of(&series(|r| r.u)),
        binder,
    }
}
