use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernels::KernelSpec;
use crate::model::{squared_distance, Component, Dataset, MixtureState, Point};
use crate::point_process::{PriorDensity, RepulsivePrior};

use super::blocks::{update_allocated, update_allocations, update_nonallocated, update_u, update_xi};
use super::{Model, SamplerConfig};

/// One retained sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub iter: usize,
    pub k: usize,
    pub m: usize,
    pub xi: f64,
    pub u: f64,
    /// Zero-based labels into `allocated`.
    pub labels: Vec<usize>,
    pub allocated: Vec<Component>,
    pub nonallocated: Vec<Component>,
}

impl ChainRecord {
    pub fn from_state(iter: usize, state: &MixtureState) -> Self {
        ChainRecord {
            iter,
            k: state.k(),
            m: state.m(),
            xi: state.xi,
            u: state.u,
            labels: state.labels.clone(),
            allocated: state.allocated.clone(),
            nonallocated: state.nonallocated.clone(),
        }
    }

    pub fn ell(&self) -> usize {
        self.nonallocated.len()
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.allocated.iter().chain(&self.nonallocated)
    }

    pub fn total_weight(&self) -> f64 {
        self.components().map(|c| c.s).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub mean_proposals: usize,
    pub mean_accepted: usize,
    pub bd_proposals: usize,
    pub births: usize,
    pub deaths: usize,
    pub xi_proposals: usize,
    pub xi_accepted: usize,
    pub exchange_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub seed: u64,
    pub config: SamplerConfig,
    pub records: Vec<ChainRecord>,
    pub stats: ChainStats,
}

impl ChainOutput {
    pub fn series<F: Fn(&ChainRecord) -> f64>(&self, f: F) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn partitions(&self) -> Vec<Vec<usize>> {
        self.records.iter().map(|r| r.labels.clone()).collect()
    }
}

/// Random partition into `min(init_clusters, n)` groups with centres at the
/// group means; groups whose centre is excluded by the prior are merged
/// into the nearest kept one.
pub fn initial_state<R: Rng + ?Sized>(
    model: &Model<'_>,
    density: &PriorDensity,
    init_clusters: usize,
    rng: &mut R,
) -> MixtureState {
    let data = model.data;
    let n = data.n();
    let q = data.dim();
    let kk = init_clusters.min(n).max(1);
    let region = density.region();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); kk];
    for (pos, &i) in order.iter().enumerate() {
        groups[pos % kk].push(i);
    }

    let mut centres: Vec<Point> = Vec::with_capacity(kk);
    for g in &groups {
        let mut mu = vec![0.0; q];
        for &i in g {
            for (m, y) in mu.iter_mut().zip(data.row(i)) {
                *m += y / g.len() as f64;
            }
        }
        region.clamp(&mut mu);
        let scale = 1e-6 * region.diameter();
        while centres.iter().any(|c| c.0 == mu) {
            for (j, m) in mu.iter_mut().enumerate() {
                *m += scale * (rng.random::<f64>() - 0.5) * region.side(j);
            }
            region.clamp(&mut mu);
        }
        centres.push(Point(mu));
    }

    let mut kept: Vec<usize> = Vec::new();
    let mut owner = vec![0usize; kk];
    for g in 0..kk {
        let cfg: Vec<&[f64]> = kept.iter().map(|&j| centres[j].0.as_slice()).collect();
        let ok = if cfg.is_empty() {
            density.log_g(&[&centres[g]]) > f64::NEG_INFINITY
        } else {
            density.log_papangelou(&centres[g], &cfg, None) > f64::NEG_INFINITY
        };
        if ok || kept.is_empty() {
            owner[g] = kept.len();
            kept.push(g);
        } else {
            let nearest = (0..kept.len())
                .min_by(|&a, &b| {
                    squared_distance(&centres[kept[a]], &centres[g])
                        .total_cmp(&squared_distance(&centres[kept[b]], &centres[g]))
                })
                .expect("at least one kept group");
            owner[g] = nearest;
        }
    }

    let mut labels = vec![0usize; n];
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            labels[i] = owner[g];
        }
    }
    let gamma = model.kernel.prior_mean_gamma();
    let allocated = kept
        .iter()
        .map(|&g| Component {
            mu: centres[g].clone(),
            s: 1.0,
            gamma: gamma.clone(),
        })
        .collect();
    MixtureState {
        allocated,
        nonallocated: Vec::new(),
        labels,
        xi: density.xi(),
        u: 1.0,
    }
}

fn check_inputs(data: &Dataset, kernel: &KernelSpec, prior: &RepulsivePrior, cfg: &SamplerConfig) -> Result<()> {
    cfg.validate()?;
    prior.validate()?;
    kernel.check_data(data)?;
    if prior.dim() != data.dim() {
        return Err(invalid(format!(
            "prior region has dimension {}, data has {}",
            prior.dim(),
            data.dim()
        )));
    }
    if kernel.is_bernoulli() && *prior.region.lower() != vec![0.0; data.dim()][..] {
        return Err(invalid("the Bernoulli kernel needs the unit box as region"));
    }
    if kernel.is_bernoulli() && prior.region.upper().iter().any(|&u| u != 1.0) {
        return Err(invalid("the Bernoulli kernel needs the unit box as region"));
    }
    Ok(())
}

/// Runs the sampler, handing each retained record to `on_record`.
pub fn run_chain_with<F>(
    data: &Dataset,
    kernel: &KernelSpec,
    prior: &RepulsivePrior,
    cfg: &SamplerConfig,
    mut on_record: F,
) -> Result<ChainStats>
where
    F: FnMut(ChainRecord) -> Result<()>,
{
    check_inputs(data, kernel, prior, cfg)?;
    let model = Model { data, kernel, prior };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut density = prior.at(prior.xi_prior.midpoint())?;
    let mut state = initial_state(&model, &density, cfg.init_clusters, &mut rng);
    let proposal = cfg.mean_proposal(data.dim());
    let dcftp_cfg = cfg.dcftp();
    let mut stats = ChainStats::default();

    for it in 0..cfg.n_iter {
        let bd = update_nonallocated(&mut state, &model, &density, cfg.bd_moves_per_scan, &mut rng);
        stats.bd_proposals += bd.proposals;
        stats.births += bd.births;
        stats.deaths += bd.deaths;

        stats.mean_proposals += state.k();
        stats.mean_accepted += update_allocated(&mut state, &model, &density, &proposal, &mut rng);

        update_allocations(&mut state, &model, &mut rng);

        let xo = update_xi(
            &mut state,
            &model,
            &mut density,
            cfg.xi_update,
            cfg.xi_sd_factor,
            cfg.exchange_retries,
            cfg.abort_on_exchange_failure,
            &dcftp_cfg,
            &mut rng,
        )?;
        stats.xi_proposals += xo.proposed as usize;
        stats.xi_accepted += xo.accepted as usize;
        stats.exchange_failures += xo.failures;

        update_u(&mut state, data.n(), &mut rng);

        debug_assert!(crate::model::validate_state(&state, data, &prior.region).is_ok());
        if it >= cfg.burn_in && (it + 1 - cfg.burn_in) % cfg.thin == 0 {
            on_record(ChainRecord::from_state(it, &state))?;
        }
    }
    Ok(stats)
}

/// Runs the sampler and keeps every retained record in memory.
pub fn run_chain(data: &Dataset, kernel: &KernelSpec, prior: &RepulsivePrior, cfg: &SamplerConfig) -> Result<ChainOutput> {
    let mut records = Vec::with_capacity(cfg.retained());
    let stats = run_chain_with(data, kernel, prior, cfg, |r| {
        records.push(r);
        Ok(())
    })?;
    Ok(ChainOutput {
        seed: cfg.seed,
        config: cfg.clone(),
        records,
        stats,
    })
}
