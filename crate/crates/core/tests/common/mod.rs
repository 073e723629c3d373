#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use repmix::kernels::{log_s_allocated_conditional, KernelSpec};
use repmix::model::{BoundingBox, Component, Covariance, DataKind, Dataset, MixtureState};
use repmix::point_process::{PriorDensity, PriorKind, RepulsivePrior, XiPrior};
use repmix::samplers::blocks::{
    allocation_log_weights, birth_log_ratio, death_log_ratio, exchange_log_ratio, log_u_conditional,
    mean_log_ratio, relabel, tractable_xi_log_ratio, MeanProposal,
};
use repmix::samplers::{log_joint, log_joint_collapsed, Model};

pub struct Case {
    pub data: Dataset,
    pub kernel: KernelSpec,
    pub prior: RepulsivePrior,
    pub state: MixtureState,
}

impl Case {
    pub fn model(&self) -> Model<'_> {
        Model {
            data: &self.data,
            kernel: &self.kernel,
            prior: &self.prior,
        }
    }

    pub fn density(&self) -> PriorDensity {
        self.prior.at(self.state.xi).expect("case xi is valid")
    }
}

fn random_prior<R: Rng + ?Sized>(region: BoundingBox, rng: &mut R) -> RepulsivePrior {
    if rng.random::<bool>() {
        let alpha = if rng.random::<f64>() < 0.3 {
            1.0
        } else {
            rng.random_range(0.05..1.0)
        };
        let delta = rng.random_range(0.05..0.5) * region.diameter();
        let vol = region.volume();
        RepulsivePrior {
            kind: PriorKind::Strauss { alpha, delta },
            xi_prior: XiPrior::Uniform {
                lower: 1.0 / vol,
                upper: 20.0 / vol,
            },
            region,
        }
    } else {
        RepulsivePrior {
            kind: PriorKind::Dpp {
                s: rng.random_range(0.3..0.7),
                beta: [1.0, 2.0, 10.0][rng.random_range(0..3)],
                trunc_n: 6,
            },
            xi_prior: XiPrior::Uniform { lower: 1.0, upper: 8.0 },
            region,
        }
    }
}

/// A random model and a random state in the support of its posterior.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R) -> Case {
    let n = rng.random_range(5..25);
    let (data, kernel, region) = match rng.random_range(0..3) {
        0 => {
            let v = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let kernel = KernelSpec::Gaussian1d {
                shape: rng.random_range(2.0..4.0),
                scale: rng.random_range(0.5..2.0),
            };
            let region = BoundingBox::new(vec![-3.0], vec![3.0]).unwrap();
            (Dataset::from_flat(v, 1, DataKind::Continuous).unwrap(), kernel, region)
        }
        1 => {
            let v = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let kernel = KernelSpec::GaussianQd {
                df: 5.0,
                scale: Covariance::diagonal(&[rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)]).unwrap(),
            };
            let region = BoundingBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
            (Dataset::from_flat(v, 2, DataKind::Continuous).unwrap(), kernel, region)
        }
        _ => {
            let v = (0..3 * n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
            (
                Dataset::from_flat(v, 3, DataKind::Binary).unwrap(),
                KernelSpec::BernoulliLatent { dim: 3 },
                BoundingBox::unit(3),
            )
        }
    };

    let prior = random_prior(region.clone(), rng);
    let (lo, hi) = match prior.xi_prior {
        XiPrior::Uniform { lower, upper } => (lower, upper),
        XiPrior::Fixed { value } => (value, value),
    };
    let k = rng.random_range(1..=n.min(4));
    let ell = rng.random_range(0..=3);
    loop {
        let xi = rng.random_range(lo..hi);
        let comp = |rng: &mut R| Component {
            mu: region.sample_uniform(rng),
            s: rng.random_range(0.05..3.0),
            gamma: kernel.sample_gamma_prior(rng),
        };
        let allocated: Vec<Component> = (0..k).map(|_| comp(rng)).collect();
        let nonallocated: Vec<Component> = (0..ell).map(|_| comp(rng)).collect();
        let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        labels.shuffle(rng);
        let state = MixtureState {
            allocated,
            nonallocated,
            labels,
            xi,
            u: rng.random_range(0.1..3.0) * n as f64,
        };
        let case = Case {
            data: data.clone(),
            kernel: kernel.clone(),
            prior: prior.clone(),
            state,
        };
        let density = case.density();
        if log_joint(&case.state, &case.model(), &density).is_finite() {
            return case;
        }
    }
}

/// Largest absolute discrepancy per block between the sampler's log ratio and
/// the corresponding log joint difference.
#[derive(Clone, Debug, Default)]
pub struct BlockErrors {
    pub entries: Vec<(&'static str, f64)>,
}

impl BlockErrors {
    fn record(&mut self, name: &'static str, internal: f64, joint: f64) {
        let err = if internal == joint {
            0.0
        } else if internal.is_finite() && joint.is_finite() {
            (internal - joint).abs()
        } else {
            f64::INFINITY
        };
        match self.entries.iter_mut().find(|(n, _)| *n == name) {
            Some(e) => e.1 = e.1.max(err),
            None => self.entries.push((name, err)),
        }
    }

    pub fn merge(&mut self, other: &BlockErrors) {
        for &(name, e) in &other.entries {
            self.record(name, e, 0.0);
        }
    }

    pub fn worst(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

fn with_labels(state: &MixtureState, row: usize, target: usize) -> MixtureState {
    let mut s = state.clone();
    s.labels[row] = target;
    relabel(&mut s);
    s
}

pub fn check_blocks<R: Rng + ?Sized>(case: &Case, rng: &mut R) -> BlockErrors {
    let model = case.model();
    let density = case.density();
    let state = &case.state;
    let region = &case.prior.region;
    let lj = log_joint(state, &model, &density);
    let ljc = log_joint_collapsed(state, &model, &density);
    let mut out = BlockErrors::default();

    // Birth and death of a non-allocated centre, against the collapsed joint.
    let x = region.sample_uniform(rng);
    let mut born = state.clone();
    born.nonallocated.push(Component {
        mu: x.clone(),
        s: 1.0,
        gamma: case.kernel.prior_mean_gamma(),
    });
    let ell = state.ell() as f64;
    let ljc_born = log_joint_collapsed(&born, &model, &density);
    if ljc_born.is_finite() {
        out.record(
            "birth",
            birth_log_ratio(state, &x, &density, None),
            ljc_born - ljc + region.log_volume() - (ell + 1.0).ln(),
        );
        out.record(
            "birth (cached log g)",
            birth_log_ratio(state, &x, &density, Some(density.log_g(&state.centres()))),
            ljc_born - ljc + region.log_volume() - (ell + 1.0).ln(),
        );
    }
    if state.ell() > 0 {
        let j = rng.random_range(0..state.ell());
        let mut died = state.clone();
        died.nonallocated.remove(j);
        out.record(
            "death",
            death_log_ratio(state, j, &density),
            log_joint_collapsed(&died, &model, &density) - ljc + ell.ln() - region.log_volume(),
        );
    }

    // Random-walk move of an allocated centre.
    let h = rng.random_range(0..state.k());
    let proposal = MeanProposal {
        kappa: 0.9,
        sigma_small: 0.1,
        sigma_big: 1.0,
    };
    let mu_new = proposal.sample(&state.allocated[h].mu, rng);
    let members = state.members();
    let (lr, _) = mean_log_ratio(state, &model, &density, h, &mu_new, &members[h], density.log_g(&state.centres()));
    let mut moved = state.clone();
    moved.allocated[h].mu = mu_new;
    out.record("allocated centre", lr, log_joint(&moved, &model, &density) - lj);

    // Allocation of one row to two arbitrary components.
    let i = rng.random_range(0..case.data.n());
    let w = allocation_log_weights(state, &model, i);
    let a = rng.random_range(0..state.m());
    let b = rng.random_range(0..state.m());
    out.record(
        "allocation",
        w[a] - w[b],
        log_joint(&with_labels(state, i, a), &model, &density) - log_joint(&with_labels(state, i, b), &model, &density),
    );

    // Weights.
    let sizes = state.cluster_sizes();
    let s_new = rng.random_range(0.05..3.0);
    let mut sw = state.clone();
    sw.allocated[h].s = s_new;
    out.record(
        "allocated weight",
        log_s_allocated_conditional(s_new, sizes[h], state.u) - log_s_allocated_conditional(state.allocated[h].s, sizes[h], state.u),
        log_joint(&sw, &model, &density) - lj,
    );
    if state.ell() > 0 {
        let j = rng.random_range(0..state.ell());
        let mut sn = state.clone();
        sn.nonallocated[j].s = s_new;
        // Exp(1 + u) full conditional.
        out.record(
            "non-allocated weight",
            -(1.0 + state.u) * (s_new - state.nonallocated[j].s),
            log_joint(&sn, &model, &density) - lj,
        );
    }

    // Dispersions.
    if !case.kernel.is_bernoulli() {
        let g_new = case.kernel.sample_gamma_prior(rng);
        let rows: Vec<&[f64]> = members[h].iter().map(|&i| case.data.row(i)).collect();
        let c = &state.allocated[h];
        let mut sg = state.clone();
        sg.allocated[h].gamma = g_new.clone();
        out.record(
            "allocated dispersion",
            case.kernel.log_gamma_conditional(&g_new, &c.mu, &rows)
                - case.kernel.log_gamma_conditional(&c.gamma, &c.mu, &rows),
            log_joint(&sg, &model, &density) - lj,
        );
        if state.ell() > 0 {
            let mut sn = state.clone();
            sn.nonallocated[0].gamma = g_new.clone();
            out.record(
                "non-allocated dispersion",
                case.kernel.log_prior_gamma(&g_new) - case.kernel.log_prior_gamma(&state.nonallocated[0].gamma),
                log_joint(&sn, &model, &density) - lj,
            );
        }
    }

    // Ancillary variable.
    let u_new = rng.random_range(0.1..3.0) * case.data.n() as f64;
    let mut su = state.clone();
    su.u = u_new;
    let t = state.total_weight();
    out.record(
        "u",
        log_u_conditional(u_new, case.data.n(), t) - log_u_conditional(state.u, case.data.n(), t),
        log_joint(&su, &model, &density) - lj,
    );

    // Intensity.
    let (lo, hi) = match case.prior.xi_prior {
        XiPrior::Uniform { lower, upper } => (lower, upper),
        XiPrior::Fixed { value } => (value, value),
    };
    let xi_new = rng.random_range(lo..hi);
    let d_new = case.prior.at(xi_new).expect("xi in support");
    let mut sx = state.clone();
    sx.xi = xi_new;
    let lp = case.prior.xi_prior.log_density(xi_new) - case.prior.xi_prior.log_density(state.xi);
    let centres = state.centres();
    let dlj = log_joint(&sx, &model, &d_new) - lj;
    if let (Some(z), Some(z_new)) = (density.log_z(), d_new.log_z()) {
        out.record(
            "xi (closed form)",
            tractable_xi_log_ratio(&centres, &density, &d_new, lp).expect("closed form"),
            dlj - z_new + z,
        );
    }
    if case.prior.is_strauss() {
        let aux: Vec<_> = (0..rng.random_range(1..6)).map(|_| region.sample_uniform(rng)).collect();
        let aux: Vec<&[f64]> = aux.iter().map(|p| p.0.as_slice()).collect();
        out.record(
            "xi (exchange)",
            exchange_log_ratio(&centres, &aux, &density, &d_new, lp),
            dlj + density.log_g(&aux) - d_new.log_g(&aux),
        );
    }
    out
}
