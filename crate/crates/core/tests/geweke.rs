//! Joint-distribution check: prior draws of (parameters, data) against a
//! chain that alternates one sampler scan with a fresh draw of the data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use repmix::diagnostics::SeriesSummary;
use repmix::kernels::KernelSpec;
use repmix::model::{BoundingBox, Component, DataKind, Dataset, Dispersion, MixtureState};
use repmix::perfect_sim::dcftp_strauss;
use repmix::point_process::{PriorKind, RepulsivePrior, XiPrior};
use repmix::samplers::blocks::{relabel, update_allocated, update_allocations, update_nonallocated, update_u, update_xi, MeanProposal};
use repmix::samplers::{Model, XiUpdate};

const N: usize = 6;

fn prior() -> RepulsivePrior {
    RepulsivePrior {
        kind: PriorKind::Strauss { alpha: 0.4, delta: 0.2 },
        region: BoundingBox::unit(1),
        xi_prior: XiPrior::Uniform { lower: 1.0, upper: 5.0 },
    }
}

fn kernel() -> KernelSpec {
    KernelSpec::Gaussian1d { shape: 4.0, scale: 0.06 }
}

fn draw_data<R: Rng>(state: &MixtureState, rng: &mut R) -> Dataset {
    let values = state
        .labels
        .iter()
        .map(|&c| {
            let comp = &state.allocated[c];
            let Dispersion::Variance(v) = comp.gamma else { unreachable!() };
            let z: f64 = StandardNormal.sample(rng);
            comp.mu.0[0] + v.sqrt() * z
        })
        .collect();
    Dataset::from_flat(values, 1, DataKind::Continuous).unwrap()
}

fn prior_draw<R: Rng>(rng: &mut R) -> (MixtureState, Dataset) {
    let p = prior();
    let k = kernel();
    let xi = rng.random_range(1.0..5.0);
    let centres = dcftp_strauss(&p.strauss_at(xi).unwrap().unwrap(), rng).unwrap();
    let comps: Vec<Component> = centres
        .into_points()
        .into_iter()
        .map(|mu| Component {
            mu,
            s: Exp1.sample(rng),
            gamma: k.sample_gamma_prior(rng),
        })
        .collect();
    let t: f64 = comps.iter().map(|c| c.s).sum();
    let labels = (0..N)
        .map(|_| {
            let mut target = rng.random::<f64>() * t;
            let mut h = 0;
            while h + 1 < comps.len() && target >= comps[h].s {
                target -= comps[h].s;
                h += 1;
            }
            h
        })
        .collect();
    let u = Gamma::new(N as f64, 1.0 / t).unwrap().sample(rng);
    let mut state = MixtureState {
        allocated: comps,
        nonallocated: Vec::new(),
        labels,
        xi,
        u,
    };
    relabel(&mut state);
    let data = draw_data(&state, rng);
    (state, data)
}

fn stats(state: &MixtureState, data: &Dataset) -> [f64; 5] {
    [
        state.xi,
        state.m() as f64,
        state.k() as f64,
        state.u.ln(),
        data.column_mean(0),
    ]
}

#[test]
fn sampler_and_forward_simulation_agree() {
    let names = ["xi", "m", "k", "log u", "mean y"];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let draws = 20_000;
    let mut forward: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for _ in 0..draws {
        let (s, d) = prior_draw(&mut rng);
        for (j, v) in stats(&s, &d).into_iter().enumerate() {
            forward[j].push(v);
        }
    }

    let p = prior();
    let k = kernel();
    let proposal = MeanProposal {
        kappa: 0.7,
        sigma_small: 0.1,
        sigma_big: 0.5,
    };
    let dcftp_cfg = repmix::perfect_sim::DcftpConfig::default();
    let (mut state, mut data) = prior_draw(&mut rng);
    let mut density = p.at(state.xi).unwrap();
    let iters = 60_000;
    let mut chain: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for _ in 0..iters {
        let model = Model {
            data: &data,
            kernel: &k,
            prior: &p,
        };
        update_nonallocated(&mut state, &model, &density, 5, &mut rng);
        update_allocated(&mut state, &model, &density, &proposal, &mut rng);
        update_allocations(&mut state, &model, &mut rng);
        update_xi(&mut state, &model, &mut density, XiUpdate::Exchange, 0.25, 0, true, &dcftp_cfg, &mut rng).unwrap();
        update_u(&mut state, N, &mut rng);
        data = draw_data(&state, &mut rng);
        for (j, v) in stats(&state, &data).into_iter().enumerate() {
            chain[j].push(v);
        }
    }

    for j in 0..5 {
        let a = SeriesSummary::of(&forward[j]);
        let b = SeriesSummary::of(&chain[j]);
        let se = (a.sd.powi(2) / draws as f64 + b.mcse().powi(2)).sqrt();
        let z = (a.mean - b.mean) / se;
        assert!(z.abs() < 4.0, "{}: forward {} vs chain {} (z = {z:.2}, ess {:.0})", names[j], a.mean, b.mean, b.ess);
    }
}
