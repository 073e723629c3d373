//! Metropolis-within-Gibbs sampler for repulsive mixtures.
//!
//! One scan updates, in order: the non-allocated components (birth-death
//! Metropolis-Hastings on the centres, then exact weight and dispersion
//! draws), the allocated components (random-walk centres, conjugate
//! weights and dispersions), the allocations, the intensity `ξ`, and the
//! ancillary variable `u`.

pub mod blocks;
mod chain;
mod joint;

use serde::{Deserialize, Serialize};

pub use chain::{initial_state, run_chain, run_chain_with, ChainOutput, ChainRecord, ChainStats};
pub use joint::{log_joint, log_joint_collapsed, Model};

use crate::error::{invalid, Result};
use crate::perfect_sim::DcftpConfig;

/// How the intensity `ξ` is updated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiUpdate {
    /// Closed-form normalizing constant where available, otherwise exchange.
    #[default]
    Auto,
    /// Metropolis step with a closed-form normalizing constant.
    Tractable,
    /// Exchange algorithm with an exact auxiliary draw.
    Exchange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub bd_moves_per_scan: usize,
    pub kappa: f64,
    pub sigma_small: f64,
    /// `None` means 1.5 for `q ≤ 2` and `1.5 q` otherwise.
    pub sigma_big: Option<f64>,
    pub xi_sd_factor: f64,
    pub xi_update: XiUpdate,
    /// Fresh proposals tried after a failed auxiliary draw. With zero, a
    /// failed draw rejects the move, which leaves the chain invariant for
    /// the posterior under the `ξ` prior reweighted by the probability that
    /// the draw succeeds at `ξ`.
    pub exchange_retries: usize,
    /// Return `ResourceExceeded` instead of rejecting once retries run out.
    pub abort_on_exchange_failure: bool,
    pub dcftp_max_points: usize,
    pub dcftp_max_doublings: usize,
    pub init_clusters: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        let d = DcftpConfig::default();
        // Longer windows than this cost whole seconds per draw.
        SamplerConfig {
            n_iter: 5_000,
            burn_in: 1_000,
            thin: 1,
            bd_moves_per_scan: 10,
            kappa: 0.9,
            sigma_small: 0.1,
            sigma_big: None,
            xi_sd_factor: 0.1,
            xi_update: XiUpdate::Auto,
            exchange_retries: 0,
            abort_on_exchange_failure: false,
            dcftp_max_points: d.max_points,
            dcftp_max_doublings: 12,
            init_clusters: 10,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(invalid(format!(
                "n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(invalid("thin must be at least 1"));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(invalid("kappa must lie in (0, 1)"));
        }
        if !(self.sigma_small > 0.0) || self.sigma_big.is_some_and(|s| !(s > 0.0)) {
            return Err(invalid("proposal scales must be positive"));
        }
        if !(self.xi_sd_factor > 0.0) {
            return Err(invalid("xi_sd_factor must be positive"));
        }
        if self.init_clusters == 0 {
            return Err(invalid("init_clusters must be at least 1"));
        }
        Ok(())
    }

    pub fn sigma_big_for(&self, q: usize) -> f64 {
        self.sigma_big.unwrap_or(if q <= 2 { 1.5 } else { 1.5 * q as f64 })
    }

    /// Number of retained records.
    pub fn retained(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }

    pub fn dcftp(&self) -> DcftpConfig {
        DcftpConfig {
            max_points: self.dcftp_max_points,
            max_doublings: self.dcftp_max_doublings,
            condition_nonempty: true,
        }
    }

    pub fn mean_proposal(&self, q: usize) -> blocks::MeanProposal {
        blocks::MeanProposal {
            kappa: self.kappa,
            sigma_small: self.sigma_small,
            sigma_big: self.sigma_big_for(q),
        }
    }
}
