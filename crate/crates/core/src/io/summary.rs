//! `summary.json`: the posterior summary written by `fit`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{cluster_center_report, density_estimate, diagnose, ChainDiagnostics, ClusterCentre};
use crate::model::Dataset;
use crate::samplers::{ChainRecord, ChainStats, SamplerConfig};

use super::config::ResolvedModel;
use super::SCHEMA_VERSION;

/// Records used for the density grid are thinned to at most this many.
pub const DENSITY_RECORDS: usize = 2_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub schema_version: u32,
    pub model: ResolvedModel,
    pub sampler: SamplerConfig,
    pub stats: ChainStats,
    pub diagnostics: ChainDiagnostics,
    pub xi_posterior_mean: f64,
    pub m_ess: f64,
    pub clusters: Vec<ClusterCentre>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityGrid>,
}

/// Evenly spaced grid over the prior region, padded by a tenth of each side.
pub fn density_grid_points(model: &ResolvedModel, per_axis: usize) -> Option<Vec<Vec<f64>>> {
    let region = &model.prior.region;
    let q = region.dim();
    if q > 2 || model.kernel.is_bernoulli() {
        return None;
    }
    let axis = |j: usize| -> Vec<f64> {
        let pad = 0.1 * region.side(j);
        let lo = region.lower()[j] - pad;
        let hi = region.upper()[j] + pad;
        (0..per_axis).map(|g| lo + (hi - lo) * g as f64 / (per_axis - 1) as f64).collect()
    };
    Some(if q == 1 {
        axis(0).into_iter().map(|x| vec![x]).collect()
    } else {
        let (a, b) = (axis(0), axis(1));
        a.iter().flat_map(|&x| b.iter().map(move |&y| vec![x, y])).collect()
    })
}

pub fn summarize(
    records: &[ChainRecord],
    data: &Dataset,
    model: &ResolvedModel,
    sampler: &SamplerConfig,
    stats: &ChainStats,
) -> FitSummary {
    let diagnostics = diagnose(records);
    let clusters = diagnostics
        .binder
        .as_ref()
        .map(|b| cluster_center_report(records, &b.labels, data))
        .unwrap_or_default();
    let density = density_grid_points(model, if model.prior.dim() == 1 { 200 } else { 50 }).map(|points| {
        let step = records.len().div_ceil(DENSITY_RECORDS).max(1);
        let subset: Vec<ChainRecord> = records.iter().step_by(step).cloned().collect();
        let values = density_estimate(&subset, &model.kernel, &points);
        DensityGrid { points, values }
    });
    FitSummary {
        schema_version: SCHEMA_VERSION,
        model: model.clone(),
        sampler: sampler.clone(),
        stats: stats.clone(),
        xi_posterior_mean: diagnostics.xi.mean,
        m_ess: diagnostics.m.ess,
        diagnostics,
        clusters,
        density,
    }
}
