//! Empirical-Bayes choice of the prior hyperparameters from the data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{BoundingBox, DataKind, Dataset};
use crate::point_process::{default_trunc, PriorKind, RepulsivePrior, XiPrior};

pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_M_MAX: f64 = 30.0;

/// Smallest rectangle containing the data; `[0, 1]^q` for binary data.
pub fn data_box(data: &Dataset) -> Result<BoundingBox> {
    let q = data.dim();
    if data.kind() == DataKind::Binary {
        return Ok(BoundingBox::unit(q));
    }
    let mut lo = vec![f64::INFINITY; q];
    let mut hi = vec![f64::NEG_INFINITY; q];
    for r in data.rows() {
        for j in 0..q {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    let widest = (0..q).map(|j| hi[j] - lo[j]).fold(0.0, f64::max);
    if widest <= 0.0 {
        return Err(Error::Data("all rows are identical; the data box is degenerate".into()));
    }
    for j in 0..q {
        if hi[j] - lo[j] <= 0.0 {
            let pad = 0.5e-6 * widest;
            lo[j] -= pad;
            hi[j] += pad;
        }
    }
    BoundingBox::new(lo, hi)
}

/// All `n(n−1)/2` pairwise Euclidean distances, row-major over `i < j`.
pub fn pairwise_distances(data: &Dataset) -> Vec<f64> {
    let n = data.n();
    let exec = Execution::for_work(n * n * data.dim() / 2);
    let rows: Vec<Vec<f64>> = exec.map(n, |i| {
        let yi = data.row(i);
        ((i + 1)..n)
            .map(|j| crate::model::squared_distance(yi, data.row(j)).sqrt())
            .collect()
    });
    rows.into_iter().flatten().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

/// Scott's rule `sd · N^{-1/5}`, with a small positive floor for
/// degenerate samples.
pub fn scott_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let bw = var.sqrt() * n.powf(-0.2);
    if bw > 0.0 {
        return bw;
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        1e-3 * max
    } else {
        1.0
    }
}

/// Gaussian KDE of `values` with bandwidth `bw` at each of `points`.
pub fn kde_eval(values: &[f64], bw: f64, points: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (values.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let exec = Execution::for_work(values.len() * points.len());
    exec.map(points.len(), |g| {
        let x = points[g];
        norm * values.iter().map(|v| (-0.5 * ((x - v) / bw).powi(2)).exp()).sum::<f64>()
    })
}

/// Gaussian KDE with Scott's bandwidth on `grid_size` points spanning
/// `[0, max]`.
pub fn kde(values: &[f64], grid_size: usize) -> Kde {
    let bw = scott_bandwidth(values);
    let max = values.iter().cloned().fold(0.0, f64::max);
    let grid_size = grid_size.max(2);
    let grid: Vec<f64> = (0..grid_size).map(|g| max * g as f64 / (grid_size - 1) as f64).collect();
    let density = kde_eval(values, bw, &grid);
    Kde {
        grid,
        density,
        bandwidth: bw,
    }
}

pub fn pairwise_distance_kde(data: &Dataset, grid_size: usize) -> Kde {
    kde(&pairwise_distances(data), grid_size)
}

/// Abscissa of the first grid point strictly below both neighbours.
pub fn first_local_minimum(k: &Kde) -> Option<f64> {
    (1..k.grid.len().saturating_sub(1))
        .find(|&g| k.density[g] < k.density[g - 1] && k.density[g] < k.density[g + 1])
        .map(|g| k.grid[g])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// Elicited hyperparameters with the evidence behind them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElicitReport {
    pub prior: RepulsivePrior,
    /// `n*` for Strauss priors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_star: Option<f64>,
    /// True when no interior KDE minimum existed and `δ` fell back to a
    /// distance quantile.
    pub delta_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kde: Option<Kde>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<DistanceSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StraussOptions {
    pub m_max: f64,
    pub n_star: Option<f64>,
    pub delta: Option<f64>,
    pub grid_size: usize,
}

impl Default for StraussOptions {
    fn default() -> Self {
        StraussOptions {
            m_max: DEFAULT_M_MAX,
            n_star: None,
            delta: None,
            grid_size: DEFAULT_GRID,
        }
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_rows(data: &Dataset) -> Result<()> {
    if data.n() < 2 {
        return Err(Error::Data("elicitation needs at least two rows".into()));
    }
    Ok(())
}

pub fn elicit_strauss(data: &Dataset, opts: &StraussOptions) -> Result<ElicitReport> {
    check_rows(data)?;
    let region = data_box(data)?;
    let mut dist = pairwise_distances(data);
    let k = kde(&dist, opts.grid_size);
    dist.sort_by(f64::total_cmp);
    let max = *dist.last().expect("n >= 2");
    let (delta, fallback) = match opts.delta {
        Some(d) => (d, false),
        None => match first_local_minimum(&k) {
            Some(d) if d > 0.0 && d < max => (d, false),
            _ => {
                let mut d = quantile_sorted(&dist, 0.05);
                if !(d > 0.0) {
                    d = dist.iter().cloned().find(|&x| x > 0.0).unwrap_or(max) * 0.5;
                }
                (d, true)
            }
        },
    };
    let n_star = opts.n_star.unwrap_or_else(|| (data.n() as f64 / 20.0).ceil());
    let vol = region.volume();
    let prior = RepulsivePrior {
        kind: PriorKind::Strauss {
            alpha: (-n_star).exp(),
            delta,
        },
        xi_prior: XiPrior::Uniform {
            lower: 1.0 / vol,
            upper: opts.m_max / vol,
        },
        region,
    };
    prior.validate()?;
    Ok(ElicitReport {
        prior,
        n_star: Some(n_star),
        delta_fallback: fallback,
        kde: Some(k),
        distances: Some(DistanceSummary {
            count: dist.len(),
            min: dist[0],
            median: quantile_sorted(&dist, 0.5),
            max,
        }),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DppOptions {
    pub m_max: f64,
    pub s: f64,
    pub beta: f64,
    pub trunc_n: Option<usize>,
}

impl Default for DppOptions {
    fn default() -> Self {
        DppOptions {
            m_max: DEFAULT_M_MAX,
            s: 0.5,
            beta: 10.0,
            trunc_n: None,
        }
    }
}

pub fn elicit_dpp(data: &Dataset, opts: &DppOptions) -> Result<ElicitReport> {
    check_rows(data)?;
    let region = data_box(data)?;
    let prior = RepulsivePrior {
        kind: PriorKind::Dpp {
            s: opts.s,
            beta: opts.beta,
            trunc_n: opts.trunc_n.unwrap_or_else(|| default_trunc(data.dim())),
        },
        xi_prior: XiPrior::Uniform {
            lower: 1.0,
            upper: opts.m_max,
        },
        region,
    };
    prior.validate()?;
    Ok(ElicitReport {
        prior,
        n_star: None,
        delta_fallback: false,
        kde: None,
        distances: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_clusters() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..40 {
            let e = 0.5 * ((i as f64 * 0.731).sin());
            rows.push(vec![e]);
            rows.push(vec![10.0 + e]);
        }
        Dataset::from_rows(rows, DataKind::Continuous).unwrap()
    }

    #[test]
    fn box_examples() {
        let d = Dataset::from_rows(vec![vec![0.0, 0.0], vec![1.0, 2.0]], DataKind::Continuous).unwrap();
        let b = data_box(&d).unwrap();
        assert_eq!(b.lower(), &[0.0, 0.0]);
        assert_eq!(b.upper(), &[1.0, 2.0]);
        let bin = Dataset::from_rows(vec![vec![0.0, 0.0], vec![0.0, 1.0]], DataKind::Binary).unwrap();
        assert_eq!(data_box(&bin).unwrap(), BoundingBox::unit(2));
        let flat = Dataset::from_rows(vec![vec![3.0, 0.0], vec![3.0, 1.0]], DataKind::Continuous).unwrap();
        let b = data_box(&flat).unwrap();
        assert!(b.lower()[0] < 3.0 && b.upper()[0] > 3.0);
        let same = Dataset::from_rows(vec![vec![1.0], vec![1.0]], DataKind::Continuous).unwrap();
        assert!(data_box(&same).is_err());
    }

    #[test]
    fn delta_sits_between_modes() {
        let rep = elicit_strauss(&two_clusters(), &StraussOptions::default()).unwrap();
        let PriorKind::Strauss { delta, alpha } = rep.prior.kind else {
            unreachable!()
        };
        assert!(delta > 2.0 && delta < 8.0, "{delta}");
        assert!(!rep.delta_fallback);
        assert!((alpha - (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn n_star_for_two_hundred_rows() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.37).sin() * 3.0]).collect();
        let d = Dataset::from_rows(rows, DataKind::Continuous).unwrap();
        let rep = elicit_strauss(&d, &StraussOptions::default()).unwrap();
        assert_eq!(rep.n_star, Some(10.0));
        let PriorKind::Strauss { alpha, .. } = rep.prior.kind else {
            unreachable!()
        };
        assert!((alpha - 4.54e-5).abs() < 1e-7);
    }

    #[test]
    fn unit_volume_gives_one_to_thirty() {
        let d = Dataset::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.5, 0.2]], DataKind::Continuous).unwrap();
        let rep = elicit_strauss(&d, &StraussOptions::default()).unwrap();
        assert_eq!(rep.prior.xi_prior, XiPrior::Uniform { lower: 1.0, upper: 30.0 });
    }

    #[test]
    fn dpp_defaults() {
        let rep = elicit_dpp(&two_clusters(), &DppOptions::default()).unwrap();
        assert_eq!(
            rep.prior.kind,
            PriorKind::Dpp {
                s: 0.5,
                beta: 10.0,
                trunc_n: 10
            }
        );
        assert_eq!(rep.prior.xi_prior, XiPrior::Uniform { lower: 1.0, upper: 30.0 });
        let bad = DppOptions {
            s: 1.0,
            ..DppOptions::default()
        };
        assert!(elicit_dpp(&two_clusters(), &bad).is_err());
    }

    #[test]
    fn kde_integrates_to_about_one() {
        let d = pairwise_distances(&two_clusters());
        let k = kde(&d, 512);
        assert!(k.density.iter().all(|&v| v >= 0.0));
        let lo = -6.0 * k.bandwidth;
        let hi = d.iter().cloned().fold(0.0, f64::max) + 6.0 * k.bandwidth;
        let pts: Vec<f64> = (0..4001).map(|g| lo + (hi - lo) * g as f64 / 4000.0).collect();
        let v = kde_eval(&d, k.bandwidth, &pts);
        let h = pts[1] - pts[0];
        let area: f64 = v.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
        assert!((area - 1.0).abs() < 0.02, "{area}");
        // On the reported grid the mass matches the analytic truncated mass.
        let h = k.grid[1] - k.grid[0];
        let on_grid: f64 = k.density.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum();
        let normal_cdf = |z: f64| 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
        let max = k.grid[k.grid.len() - 1];
        let expect: f64 = d
            .iter()
            .map(|&x| normal_cdf((max - x) / k.bandwidth) - normal_cdf(-x / k.bandwidth))
            .sum::<f64>()
            / d.len() as f64;
        assert!((on_grid - expect).abs() < 1e-3, "{on_grid} vs {expect}");
    }

    #[test]
    fn equal_distances_peak_at_that_distance() {
        let k = kde(&[2.0; 30], 101);
        let arg = (0..k.grid.len()).max_by(|&a, &b| k.density[a].total_cmp(&k.density[b])).unwrap();
        assert!((k.grid[arg] - 2.0).abs() < 1e-9);
    }
}
