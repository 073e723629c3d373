//! The individual sampler blocks and the log acceptance ratios they use.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::{psi_laplace, sample_s_allocated, sample_s_nonallocated};
use crate::model::{Component, MixtureState, Point};
use crate::perfect_sim::{dcftp, DcftpConfig};
use crate::point_process::PriorDensity;

use super::{Model, XiUpdate};

/// Centres of all components with the `skip`-th (in allocated-first order)
/// left out.
fn centres_without(state: &MixtureState, skip: usize) -> Vec<&[f64]> {
    state
        .components()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, c)| c.mu.0.as_slice())
        .collect()
}

// ---------------------------------------------------------------- block (A)

/// Log Metropolis-Hastings ratio for adding a non-allocated centre at `x`.
pub fn birth_log_ratio(state: &MixtureState, x: &[f64], density: &PriorDensity, current_log_g: Option<f64>) -> f64 {
    let all = state.centres();
    density.log_papangelou(x, &all, current_log_g) + psi_laplace(state.u).ln() + density.region().log_volume()
        - ((state.ell() + 1) as f64).ln()
}

/// Log ratio for removing the `j`-th non-allocated centre.
pub fn death_log_ratio(state: &MixtureState, j: usize, density: &PriorDensity) -> f64 {
    let k = state.k();
    let rest = centres_without(state, k + j);
    if rest.is_empty() {
        return f64::NEG_INFINITY;
    }
    let x = &state.nonallocated[j].mu;
    -(density.log_papangelou(x, &rest, None) + psi_laplace(state.u).ln() + density.region().log_volume()
        - (state.ell() as f64).ln())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BirthDeathStats {
    pub births: usize,
    pub deaths: usize,
    pub proposals: usize,
}

/// One birth-death move on the non-allocated centres. Weights and
/// dispersions of new points are placeholders until resampled.
pub fn birth_death_move<R: Rng + ?Sized>(
    state: &mut MixtureState,
    density: &PriorDensity,
    placeholder: &Component,
    log_g: &mut f64,
    rng: &mut R,
) -> Option<bool> {
    if rng.random::<f64>() < 0.5 {
        let x = density.region().sample_uniform(rng);
        let lr = birth_log_ratio(state, &x, density, Some(*log_g));
        if rng.random::<f64>().ln() < lr {
            *log_g += lr - psi_laplace(state.u).ln() - density.region().log_volume()
                + ((state.ell() + 1) as f64).ln();
            state.nonallocated.push(Component {
                mu: x,
                ..placeholder.clone()
            });
            return Some(true);
        }
        Some(false)
    } else {
        let ell = state.ell();
        if ell == 0 {
            return None;
        }
        let j = rng.random_range(0..ell);
        let lr = death_log_ratio(state, j, density);
        if rng.random::<f64>().ln() < lr {
            *log_g += lr + psi_laplace(state.u).ln() + density.region().log_volume() - (ell as f64).ln();
            state.nonallocated.swap_remove(j);
            return Some(true);
        }
        Some(false)
    }
}

/// Block (A): birth-death moves on the non-allocated centres, then exact
/// draws of their weights and dispersions.
pub fn update_nonallocated<R: Rng + ?Sized>(
    state: &mut MixtureState,
    model: &Model<'_>,
    density: &PriorDensity,
    moves: usize,
    rng: &mut R,
) -> BirthDeathStats {
    let placeholder = Component {
        mu: Point(Vec::new()),
        s: 1.0,
        gamma: model.kernel.prior_mean_gamma(),
    };
    let mut stats = BirthDeathStats::default();
    let mut log_g = density.log_g(&state.centres());
    for _ in 0..moves {
        let before = state.ell();
        if let Some(accepted) = birth_death_move(state, density, &placeholder, &mut log_g, rng) {
            stats.proposals += 1;
            if accepted {
                if state.ell() > before {
                    stats.births += 1;
                } else {
                    stats.deaths += 1;
                }
            }
        }
    }
    let u = state.u;
    for c in &mut state.nonallocated {
        c.s = sample_s_nonallocated(u, rng);
        c.gamma = model.kernel.sample_gamma_prior(rng);
    }
    stats
}

// ---------------------------------------------------------------- block (B)

/// Two-scale Gaussian random-walk proposal for the allocated centres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanProposal {
    pub kappa: f64,
    pub sigma_small: f64,
    pub sigma_big: f64,
}

impl MeanProposal {
    pub fn sample<R: Rng + ?Sized>(&self, mu: &[f64], rng: &mut R) -> Point {
        let sd = if rng.random::<f64>() < self.kappa {
            self.sigma_small
        } else {
            self.sigma_big
        };
        Point(
            mu.iter()
                .map(|m| m + sd * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        )
    }

    pub fn log_density(&self, from: &[f64], to: &[f64]) -> f64 {
        let q = from.len() as f64;
        let d2: f64 = from.iter().zip(to).map(|(a, b)| (a - b) * (a - b)).sum();
        let comp = |sd: f64| -0.5 * q * (2.0 * PI * sd * sd).ln() - 0.5 * d2 / (sd * sd);
        let a = self.kappa.ln() + comp(self.sigma_small);
        let b = (1.0 - self.kappa).ln() + comp(self.sigma_big);
        let hi = a.max(b);
        hi + ((a - hi).exp() + (b - hi).exp()).ln()
    }
}

/// Log acceptance ratio for moving allocated centre `h` to `mu_new`.
pub fn mean_log_ratio(
    state: &MixtureState,
    model: &Model<'_>,
    density: &PriorDensity,
    h: usize,
    mu_new: &[f64],
    members: &[usize],
    current_log_g: f64,
) -> (f64, f64) {
    let mut proposed = state.centres();
    proposed[h] = mu_new;
    let lg_new = density.log_g(&proposed);
    if lg_new == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, lg_new);
    }
    let c = &state.allocated[h];
    let mut dk = 0.0;
    for &i in members {
        let y = model.data.row(i);
        dk += model.kernel.log_kernel(y, mu_new, &c.gamma) - model.kernel.log_kernel(y, &c.mu, &c.gamma);
    }
    (lg_new - current_log_g + dk, lg_new)
}

/// Block (B): centres, weights and dispersions of the allocated components.
pub fn update_allocated<R: Rng + ?Sized>(
    state: &mut MixtureState,
    model: &Model<'_>,
    density: &PriorDensity,
    proposal: &MeanProposal,
    rng: &mut R,
) -> usize {
    let members = state.members();
    let mut accepted = 0;
    let mut log_g = density.log_g(&state.centres());
    for h in 0..state.k() {
        let mu_new = proposal.sample(&state.allocated[h].mu, rng);
        let (lr, lg_new) = mean_log_ratio(state, model, density, h, &mu_new, &members[h], log_g);
        if rng.random::<f64>().ln() < lr {
            state.allocated[h].mu = mu_new;
            log_g = lg_new;
            accepted += 1;
        }
    }
    let u = state.u;
    let mut rows: Vec<&[f64]> = Vec::new();
    for (h, c) in state.allocated.iter_mut().enumerate() {
        c.s = sample_s_allocated(members[h].len(), u, rng);
        rows.clear();
        rows.extend(members[h].iter().map(|&i| model.data.row(i)));
        c.gamma = model.kernel.sample_gamma_conditional(&c.mu, &rows, rng);
    }
    accepted
}

// ---------------------------------------------------------------- block (C)

/// Unnormalized log allocation weights of `row` over all components,
/// allocated first.
pub fn allocation_log_weights(state: &MixtureState, model: &Model<'_>, row: usize) -> Vec<f64> {
    let y = model.data.row(row);
    state
        .components()
        .map(|c| c.s.ln() + model.kernel.log_kernel(y, &c.mu, &c.gamma))
        .collect()
}

fn categorical(logw: &[f64], u: f64) -> usize {
    let hi = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logw.iter().map(|w| (w - hi).exp()).sum();
    let target = u * total;
    let mut acc = 0.0;
    for (h, w) in logw.iter().enumerate() {
        acc += (w - hi).exp();
        if target < acc {
            return h;
        }
    }
    logw.iter().rposition(|w| *w > f64::NEG_INFINITY).unwrap_or(0)
}

/// Block (C): redraw every label, then relabel.
///
/// The weight matrix is filled in parallel for large problems; the draws
/// themselves consume the chain's generator in row order.
pub fn update_allocations<R: Rng + ?Sized>(state: &mut MixtureState, model: &Model<'_>, rng: &mut R) {
    let n = model.data.n();
    let comps: Vec<&Component> = state.components().collect();
    let kk = comps.len();
    let mut weights = vec![0.0; n * kk];
    let exec = Execution::for_work(n * kk * model.data.dim());
    let chunk_rows = 256;
    exec.for_each_chunk(&mut weights, chunk_rows * kk, |start, out| {
        let first = start / kk;
        for (r, w) in out.chunks_mut(kk).enumerate() {
            let y = model.data.row(first + r);
            for (h, c) in comps.iter().enumerate() {
                w[h] = c.s.ln() + model.kernel.log_kernel(y, &c.mu, &c.gamma);
            }
        }
    });
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        labels.push(categorical(&weights[i * kk..(i + 1) * kk], rng.random::<f64>()));
    }
    state.labels = labels;
    relabel(state);
}

/// Interprets `state.labels` as indices into allocated-then-non-allocated
/// components and rebuilds the split so that exactly the hit components are
/// allocated, keeping their relative order.
pub fn relabel(state: &mut MixtureState) {
    let total = state.m();
    let mut hit = vec![false; total];
    for &c in &state.labels {
        hit[c] = true;
    }
    let mut all: Vec<Option<Component>> = state
        .allocated
        .drain(..)
        .chain(state.nonallocated.drain(..))
        .map(Some)
        .collect();
    let mut map = vec![usize::MAX; total];
    for j in 0..total {
        if hit[j] {
            map[j] = state.allocated.len();
            state.allocated.push(all[j].take().expect("component moved once"));
        }
    }
    for slot in all.iter_mut() {
        if let Some(c) = slot.take() {
            state.nonallocated.push(c);
        }
    }
    for c in &mut state.labels {
        *c = map[*c];
    }
}

// ---------------------------------------------------------------- block (D)

#[derive(Clone, Debug, PartialEq)]
pub struct XiOutcome {
    pub proposed: bool,
    pub accepted: bool,
    /// Auxiliary draws that hit a resource cap.
    pub failures: usize,
}

/// Exchange-algorithm log ratio for a move from `current` to `proposal`.
pub fn exchange_log_ratio(
    centres: &[&[f64]],
    aux: &[&[f64]],
    current: &PriorDensity,
    proposal: &PriorDensity,
    log_prior_ratio: f64,
) -> f64 {
    log_prior_ratio + proposal.log_g(centres) - current.log_g(centres) + current.log_g(aux) - proposal.log_g(aux)
}

/// Metropolis log ratio when both normalizing constants are known.
pub fn tractable_xi_log_ratio(
    centres: &[&[f64]],
    current: &PriorDensity,
    proposal: &PriorDensity,
    log_prior_ratio: f64,
) -> Option<f64> {
    Some(
        log_prior_ratio + proposal.log_g(centres) - proposal.log_z()? - current.log_g(centres) + current.log_z()?,
    )
}

/// Block (D): random-walk update of `ξ`; `density` is replaced on
/// acceptance.
#[allow(clippy::too_many_arguments)]
pub fn update_xi<R: Rng + ?Sized>(
    state: &mut MixtureState,
    model: &Model<'_>,
    density: &mut PriorDensity,
    mode: XiUpdate,
    sd_factor: f64,
    retries: usize,
    abort_on_failure: bool,
    dcftp_cfg: &DcftpConfig,
    rng: &mut R,
) -> Result<XiOutcome> {
    let xi_prior = &model.prior.xi_prior;
    let mut out = XiOutcome {
        proposed: false,
        accepted: false,
        failures: 0,
    };
    if xi_prior.is_fixed() {
        return Ok(out);
    }
    let use_exchange = match mode {
        XiUpdate::Exchange => true,
        XiUpdate::Tractable => false,
        XiUpdate::Auto => model.prior.is_strauss(),
    };
    let sd = sd_factor * xi_prior.range();
    let centres = state.centres();
    for _ in 0..=retries {
        let xi_new = density.xi() + sd * rng.sample::<f64, _>(StandardNormal);
        out.proposed = true;
        let lp = xi_prior.log_density(xi_new) - xi_prior.log_density(density.xi());
        if lp == f64::NEG_INFINITY {
            return Ok(out);
        }
        let proposal = model.prior.at(xi_new)?;
        let lr = if use_exchange {
            let params = match &proposal {
                PriorDensity::Strauss(p) => p,
                PriorDensity::Dpp(_) => {
                    return Err(crate::error::invalid("exchange updates need a Strauss prior"));
                }
            };
            match dcftp(params, dcftp_cfg, rng) {
                Ok((aux, _)) => exchange_log_ratio(&centres, &aux.as_slices(), density, &proposal, lp),
                Err(Error::ResourceExceeded(msg)) => {
                    out.failures += 1;
                    if abort_on_failure && out.failures > retries {
                        return Err(Error::ResourceExceeded(msg));
                    }
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            tractable_xi_log_ratio(&centres, density, &proposal, lp)
                .ok_or_else(|| crate::error::invalid("this prior has no closed-form normalizing constant"))?
        };
        if rng.random::<f64>().ln() < lr {
            state.xi = xi_new;
            *density = proposal;
            out.accepted = true;
        }
        return Ok(out);
    }
    Ok(out)
}

// ---------------------------------------------------------------- block (E)

/// Block (E): `u ~ Gamma(n, rate t)`.
pub fn update_u<R: Rng + ?Sized>(state: &mut MixtureState, n: usize, rng: &mut R) {
    let t = state.total_weight();
    state.u = Gamma::new(n as f64, 1.0 / t).expect("positive parameters").sample(rng);
}

pub fn log_u_conditional(u: f64, n: usize, t: f64) -> f64 {
    if !(u > 0.0) {
        return f64::NEG_INFINITY;
    }
    let nf = n as f64;
    nf * t.ln() - statrs::function::gamma::ln_gamma(nf) + (nf - 1.0) * u.ln() - t * u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proposal_is_symmetric() {
        let p = MeanProposal {
            kappa: 0.9,
            sigma_small: 0.1,
            sigma_big: 1.5,
        };
        let a = [0.3, -1.2];
        let b = [0.5, 0.4];
        assert!((p.log_density(&a, &b) - p.log_density(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn categorical_inverse_cdf() {
        let w = [2f64.ln(), 0.0];
        assert_eq!(categorical(&w, 0.0), 0);
        assert_eq!(categorical(&w, 0.66), 0);
        assert_eq!(categorical(&w, 0.67), 1);
        assert_eq!(categorical(&[f64::NEG_INFINITY, 0.0], 0.0), 1);
    }
}
