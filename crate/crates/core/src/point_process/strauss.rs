use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{squared_distance, BoundingBox};

/// Strauss process on a box: `φ1 = ξ·1_R`, `φ2(r) = α^{1[r ≤ δ]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraussParams {
    pub xi: f64,
    pub alpha: f64,
    pub delta: f64,
    pub region: BoundingBox,
}

impl StraussParams {
    pub fn new(xi: f64, alpha: f64, delta: f64, region: BoundingBox) -> Result<Self> {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(invalid(format!("Strauss intensity must be positive, got {xi}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid(format!("Strauss interaction must lie in [0, 1], got {alpha}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid(format!("Strauss range must be positive, got {delta}")));
        }
        Ok(StraussParams {
            xi,
            alpha,
            delta,
            region,
        })
    }

    pub fn with_xi(&self, xi: f64) -> Self {
        StraussParams { xi, ..self.clone() }
    }
}

/// `log α^count` with the hard-core convention `0^0 = 1`.
pub(crate) fn interaction_log(alpha: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else if alpha == 0.0 {
        f64::NEG_INFINITY
    } else {
        count as f64 * alpha.ln()
    }
}

/// Number of unordered pairs at distance `≤ δ`.
pub fn close_pairs(config: &[&[f64]], delta: f64) -> usize {
    let d2 = delta * delta;
    let mut count = 0;
    for i in 0..config.len() {
        for j in (i + 1)..config.len() {
            if squared_distance(config[i], config[j]) <= d2 {
                count += 1;
            }
        }
    }
    count
}

/// Number of points of `config` within `δ` of `x`.
pub fn close_neighbours(x: &[f64], config: &[&[f64]], delta: f64) -> usize {
    let d2 = delta * delta;
    config.iter().filter(|y| squared_distance(x, y) <= d2).count()
}

pub fn strauss_log_g(config: &[&[f64]], p: &StraussParams) -> f64 {
    if config.is_empty() || !config.iter().all(|x| p.region.contains(x)) {
        return f64::NEG_INFINITY;
    }
    config.len() as f64 * p.xi.ln() + interaction_log(p.alpha, close_pairs(config, p.delta))
}

/// `log λ(x, config)`; `x` must not already be in `config`.
pub fn strauss_log_papangelou(x: &[f64], config: &[&[f64]], p: &StraussParams) -> f64 {
    if !p.region.contains(x) {
        return f64::NEG_INFINITY;
    }
    p.xi.ln() + interaction_log(p.alpha, close_neighbours(x, config, p.delta))
}

/// `log(exp(ξ|R|) − 1)`: the normalizing constant of the `α = 1` case
/// conditioned on non-emptiness, under the configuration measure.
pub fn strauss_poisson_log_z(xi: f64, region: &BoundingBox) -> f64 {
    let a = xi * region.volume();
    if a > 30.0 {
        a + (-(-a).exp()).ln_1p()
    } else {
        a.exp_m1().ln()
    }
}
