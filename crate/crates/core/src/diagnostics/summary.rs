//! Posterior summaries that need the component parameters.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::kernels::KernelSpec;
use crate::model::Dataset;
use crate::samplers::ChainRecord;

/// Posterior mean of the mixture density at each grid point.
pub fn density_estimate(records: &[ChainRecord], kernel: &KernelSpec, grid: &[Vec<f64>]) -> Vec<f64> {
    if records.is_empty() {
        return vec![0.0; grid.len()];
    }
    let comps: usize = records.iter().map(|r| r.m).sum();
    let exec = Execution::for_work(comps * grid.len());
    let m = records.len() as f64;
    exec.map(grid.len(), |g| {
        let x = &grid[g];
        records
            .iter()
            .map(|r| {
                let t = r.total_weight();
                r.components()
                    .map(|c| c.s / t * kernel.log_kernel(x, &c.mu, &c.gamma).exp())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / m
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterCentre {
    pub size: usize,
    /// `#C_h / n`.
    pub weight: f64,
    /// Posterior average of the centre attached to the cluster's members.
    pub mu_hat: Vec<f64>,
    /// Mean of the observations in the cluster.
    pub mu_emp: Vec<f64>,
}

/// Per-cluster centre estimates for a point-estimate partition with
/// labels `0..k`.
pub fn cluster_center_report(records: &[ChainRecord], partition: &[usize], data: &Dataset) -> Vec<ClusterCentre> {
    let n = partition.len();
    let q = data.dim();
    let k = partition.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (i, &c) in partition.iter().enumerate() {
        members[c].push(i);
    }
    members
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let size = g.len() as f64;
            let mut mu_emp = vec![0.0; q];
            for &i in &g {
                for (e, y) in mu_emp.iter_mut().zip(data.row(i)) {
                    *e += y / size;
                }
            }
            let mut mu_hat = vec![0.0; q];
            for r in records {
                let mut inner = vec![0.0; q];
                for &i in &g {
                    for (a, mu) in inner.iter_mut().zip(r.allocated[r.labels[i]].mu.iter()) {
                        *a += mu;
                    }
                }
                for (h, a) in mu_hat.iter_mut().zip(&inner) {
                    *h += a / size;
                }
            }
            for h in &mut mu_hat {
                *h /= records.len().max(1) as f64;
            }
            ClusterCentre {
                size: g.len(),
                weight: size / n as f64,
                mu_hat,
                mu_emp,
            }
        })
        .collect()
}
