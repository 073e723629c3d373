use statrs::function::gamma::ln_gamma;

use crate::kernels::{log_weight_prior, psi_laplace, KernelSpec};
use crate::model::{Dataset, MixtureState};
use crate::point_process::{PriorDensity, RepulsivePrior};

/// Everything the sampler conditions on.
#[derive(Clone, Copy, Debug)]
pub struct Model<'a> {
    pub data: &'a Dataset,
    pub kernel: &'a KernelSpec,
    pub prior: &'a RepulsivePrior,
}

/// Per-component terms shared by both joint densities.
fn allocated_terms(state: &MixtureState, model: &Model<'_>) -> f64 {
    let sizes = state.cluster_sizes();
    let mut acc = 0.0;
    for (h, c) in state.allocated.iter().enumerate() {
        acc += model.kernel.log_prior_gamma(&c.gamma) + log_weight_prior(c.s) + sizes[h] as f64 * c.s.ln();
    }
    for (i, &h) in state.labels.iter().enumerate() {
        let c = &state.allocated[h];
        acc += model.kernel.log_kernel(model.data.row(i), &c.mu, &c.gamma);
    }
    acc
}

fn u_terms(n: usize, u: f64, t: f64) -> f64 {
    let nf = n as f64;
    (nf - 1.0) * u.ln() - ln_gamma(nf) - u * t
}

/// Log joint density of the augmented state and data, up to the prior
/// normalizing constant of the centre process.
pub fn log_joint(state: &MixtureState, model: &Model<'_>, density: &PriorDensity) -> f64 {
    let lg = density.log_g(&state.centres());
    if lg == f64::NEG_INFINITY {
        return lg;
    }
    let mut acc = model.prior.xi_prior.log_density(density.xi()) + lg + allocated_terms(state, model);
    for c in &state.nonallocated {
        acc += model.kernel.log_prior_gamma(&c.gamma) + log_weight_prior(c.s);
    }
    acc + u_terms(model.data.n(), state.u, state.total_weight())
}

/// As `log_joint` with the non-allocated weights and dispersions integrated
/// out.
pub fn log_joint_collapsed(state: &MixtureState, model: &Model<'_>, density: &PriorDensity) -> f64 {
    let lg = density.log_g(&state.centres());
    if lg == f64::NEG_INFINITY {
        return lg;
    }
    let t_alloc: f64 = state.allocated.iter().map(|c| c.s).sum();
    model.prior.xi_prior.log_density(density.xi())
        + lg
        + allocated_terms(state, model)
        + state.ell() as f64 * psi_laplace(state.u).ln()
        + u_terms(model.data.n(), state.u, t_alloc)
}
