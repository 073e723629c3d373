//! Determinantal point process with the power-exponential spectral density
//! and a Fourier basis on the rescaled box `[-1/2, 1/2]^q`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::model::{BoundingBox, Point};

/// Eigenvalues are clamped to this before forming `λ/(1−λ)`.
pub const EIGEN_CLAMP: f64 = 1.0 - 1e-12;

/// Largest lattice we are willing to materialize.
const MAX_LATTICE: usize = 1 << 26;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DppParams {
    pub xi: f64,
    /// Fraction of `α_max` used as the range parameter.
    pub s: f64,
    pub beta: f64,
    pub trunc_n: usize,
    pub region: BoundingBox,
}

impl DppParams {
    pub fn new(xi: f64, s: f64, beta: f64, trunc_n: usize, region: BoundingBox) -> Result<Self> {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(invalid(format!("DPP intensity must be positive, got {xi}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid(format!("DPP fraction s must lie in (0, 1), got {s}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(format!("DPP shape beta must be positive, got {beta}")));
        }
        if trunc_n == 0 {
            return Err(invalid("DPP truncation N must be at least 1"));
        }
        Ok(DppParams {
            xi,
            s,
            beta,
            trunc_n,
            region,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.s * dpp_alpha_max(self.xi, self.beta, self.region.dim())
    }
}

/// Largest range parameter for which the DPP on `R^q` exists.
pub fn dpp_alpha_max(xi: f64, beta: f64, q: usize) -> f64 {
    let q = q as f64;
    let log_pow = 0.5 * q * PI.ln() + ln_gamma(q / beta + 1.0) - xi.ln() - ln_gamma(q / 2.0 + 1.0);
    (log_pow / q).exp()
}

/// Affine map of `box` onto `[-1/2, 1/2]^q`.
pub fn rescale_to_unit(point: &[f64], bbox: &BoundingBox) -> Point {
    Point(
        point
            .iter()
            .enumerate()
            .map(|(j, x)| (x - bbox.lower()[j]) / bbox.side(j) - 0.5)
            .collect(),
    )
}

/// Truncated spectrum at a fixed `ξ`, ready for density evaluations.
#[derive(Clone, Debug)]
pub struct DppSpectrum {
    dim: usize,
    trunc_n: usize,
    side: usize,
    xi: f64,
    alpha: f64,
    /// Raw eigenvalues over `{-N..N}^q`, first coordinate slowest.
    lambda: Vec<f64>,
    /// `λ/(1−λ)` after clamping.
    tilde: Vec<f64>,
    tilde_total: f64,
    log_z: f64,
    region: BoundingBox,
}

pub fn dpp_eigenvalues(p: &DppParams) -> Result<DppSpectrum> {
    let q = p.region.dim();
    let side = 2 * p.trunc_n + 1;
    let len = side
        .checked_pow(q as u32)
        .filter(|&l| l <= MAX_LATTICE)
        .ok_or_else(|| invalid(format!("lattice (2N+1)^q = {side}^{q} is too large")))?;
    let alpha = p.alpha();
    let qf = q as f64;
    let log_pref =
        p.xi.ln() + qf * alpha.ln() + ln_gamma(qf / 2.0 + 1.0) - 0.5 * qf * PI.ln() - ln_gamma(qf / p.beta + 1.0);
    let n = p.trunc_n as i64;
    let beta = p.beta;

    let mut lambda = vec![0.0; len];
    let exec = Execution::for_work(len * q);
    exec.for_each_chunk(&mut lambda, 4096, |start, chunk| {
        for (off, v) in chunk.iter_mut().enumerate() {
            let mut rem = start + off;
            let mut norm2 = 0.0;
            for _ in 0..q {
                let j = (rem % side) as i64 - n;
                rem /= side;
                norm2 += (j * j) as f64;
            }
            // ‖αj‖^β = (α²‖j‖²)^{β/2}
            let r = (alpha * alpha * norm2).powf(0.5 * beta);
            *v = (log_pref - r).exp();
        }
    });
    if let Some(bad) = lambda.iter().find(|&&l| !(l < 1.0)) {
        return Err(invalid(format!("DPP eigenvalue {bad} is not below 1")));
    }
    let tilde: Vec<f64> = lambda
        .iter()
        .map(|&l| {
            let l = l.min(EIGEN_CLAMP);
            l / (1.0 - l)
        })
        .collect();
    let tilde_total = ordered_chunk_sum(exec, &tilde, |x| x);
    let log_cap = ordered_chunk_sum(exec, &lambda, |l| -(-l.min(EIGEN_CLAMP)).ln_1p());
    let log_z = log_expm1(log_cap)?;
    Ok(DppSpectrum {
        dim: q,
        trunc_n: p.trunc_n,
        side,
        xi: p.xi,
        alpha,
        lambda,
        tilde,
        tilde_total,
        log_z,
        region: p.region.clone(),
    })
}

fn ordered_chunk_sum(exec: Execution, v: &[f64], f: impl Fn(f64) -> f64 + Sync + Send) -> f64 {
    const CHUNK: usize = 4096;
    let nchunks = v.len().div_ceil(CHUNK);
    exec.ordered_sum(nchunks, |c| {
        v[c * CHUNK..((c + 1) * CHUNK).min(v.len())].iter().map(|&x| f(x)).sum()
    })
}

/// `log(e^x − 1)` for `x > 0`.
fn log_expm1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(invalid("normalizing-constant product must exceed 1"));
    }
    Ok(if x > 30.0 { x + (-(-x).exp()).ln_1p() } else { x.exp_m1().ln() })
}

/// `log(∏(1−λ)^{-1} − 1)` for an explicit list of eigenvalues.
pub fn log_z_from_eigenvalues(lambda: &[f64]) -> Result<f64> {
    if lambda.iter().any(|&l| !(0.0..1.0).contains(&l)) {
        return Err(invalid("eigenvalues must lie in [0, 1)"));
    }
    log_expm1(lambda.iter().map(|&l| -(-l.min(EIGEN_CLAMP)).ln_1p()).sum())
}

impl DppSpectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc_n(&self) -> usize {
        self.trunc_n
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn region(&self) -> &BoundingBox {
        &self.region
    }

    pub fn lattice_len(&self) -> usize {
        self.lambda.len()
    }

    /// Maximum number of points the truncated process can hold.
    pub fn max_points(&self) -> usize {
        self.lambda.len()
    }

    /// Lattice index of a flat position.
    pub fn index_of(&self, flat: usize) -> Vec<i64> {
        let mut rem = flat;
        let mut idx = vec![0i64; self.dim];
        for k in (0..self.dim).rev() {
            idx[k] = (rem % self.side) as i64 - self.trunc_n as i64;
            rem /= self.side;
        }
        idx
    }

    /// `λ_j`, or `None` outside the truncated lattice.
    pub fn lambda_at(&self, j: &[i64]) -> Option<f64> {
        if j.len() != self.dim {
            return None;
        }
        let n = self.trunc_n as i64;
        let mut flat = 0usize;
        for &jk in j {
            if jk < -n || jk > n {
                return None;
            }
            flat = flat * self.side + (jk + n) as usize;
        }
        Some(self.lambda[flat])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// `C′(0) = Σ λ/(1−λ)`.
    pub fn kernel_at_zero(&self) -> f64 {
        self.tilde_total
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// `C′(d) = Σ_j λ′_j cos(2π j·d)` for a difference of rescaled points.
    pub fn kernel_at(&self, d: &[f64]) -> f64 {
        self.kernel_at_with(d, Execution::for_work(self.lambda.len()))
    }

    pub fn kernel_at_with(&self, d: &[f64], exec: Execution) -> f64 {
        lattice_cosine_sum(&self.tilde, self.side, self.trunc_n, d, exec)
    }

    /// `log det C′ − m log|R|`, or `−∞` off the support.
    pub fn log_g(&self, config: &[&[f64]]) -> f64 {
        self.log_g_with(config, Execution::for_work(self.lambda.len()))
    }

    pub fn log_g_with(&self, config: &[&[f64]], exec: Execution) -> f64 {
        let m = config.len();
        if m == 0 || m > self.max_points() || !config.iter().all(|x| self.region.contains(x)) {
            return f64::NEG_INFINITY;
        }
        let pts: Vec<Point> = config.iter().map(|x| rescale_to_unit(x, &self.region)).collect();
        let mut mat = vec![0.0; m * m];
        let mut diff = vec![0.0; self.dim];
        for h in 0..m {
            mat[h * m + h] = self.tilde_total;
            for g in 0..h {
                for (k, d) in diff.iter_mut().enumerate() {
                    *d = pts[h][k] - pts[g][k];
                }
                let c = self.kernel_at_with(&diff, exec);
                mat[h * m + g] = c;
                mat[g * m + h] = c;
            }
        }
        let ld = log_det_spd(&mut mat, m);
        if ld == f64::NEG_INFINITY {
            return ld;
        }
        ld - m as f64 * self.region.log_volume()
    }

    pub fn log_papangelou(&self, x: &[f64], config: &[&[f64]]) -> f64 {
        let base = self.log_g(config);
        if base == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut with: Vec<&[f64]> = config.to_vec();
        with.push(x);
        self.log_g(&with) - base
    }
}

/// Lattice sum of `w_j cos(2π j·d)`, with `w` laid out like the spectrum.
///
/// Per-dimension tables of `e^{2πi j_k d_k}` turn the cosine of the inner
/// product into a running complex product. Partial sums are taken per
/// first-coordinate slice and added in order.
fn lattice_cosine_sum(w: &[f64], side: usize, trunc_n: usize, d: &[f64], exec: Execution) -> f64 {
    let q = d.len();
    let tables: Vec<Vec<(f64, f64)>> = d
        .iter()
        .map(|&dk| {
            (0..side)
                .map(|idx| {
                    let a = 2.0 * PI * (idx as f64 - trunc_n as f64) * dk;
                    (a.cos(), a.sin())
                })
                .collect()
        })
        .collect();
    if q == 1 {
        return w.iter().zip(&tables[0]).map(|(wj, (c, _))| wj * c).sum();
    }
    let slice_len = w.len() / side;
    let exec = if exec.is_parallel() && side > 1 { exec } else { Execution::Sequential };
    exec.ordered_sum(side, |i0| {
        slice_sum(&w[i0 * slice_len..(i0 + 1) * slice_len], &tables[1..], tables[0][i0])
    })
}

fn slice_sum(w: &[f64], tables: &[Vec<(f64, f64)>], prefix: (f64, f64)) -> f64 {
    let (pr, pi) = prefix;
    if tables.len() == 1 {
        return w
            .iter()
            .zip(&tables[0])
            .map(|(wj, (c, s))| wj * (pr * c - pi * s))
            .sum();
    }
    let side = tables[0].len();
    let sub = w.len() / side;
    let mut acc = 0.0;
    for (idx, (c, s)) in tables[0].iter().enumerate() {
        let next = (pr * c - pi * s, pr * s + pi * c);
        acc += slice_sum(&w[idx * sub..(idx + 1) * sub], &tables[1..], next);
    }
    acc
}

/// Log-determinant of a symmetric matrix by in-place Cholesky; `−∞` when
/// the matrix is not numerically positive definite.
pub fn log_det_spd(a: &mut [f64], m: usize) -> f64 {
    debug_assert_eq!(a.len(), m * m);
    let mut ld = 0.0;
    for j in 0..m {
        let orig = a[j * m + j];
        let mut diag = orig;
        for k in 0..j {
            diag -= a[j * m + k] * a[j * m + k];
        }
        // Pivots at rounding level mean a numerically singular matrix.
        if !(diag > 1e-13 * orig.abs()) || !diag.is_finite() {
            return f64::NEG_INFINITY;
        }
        let l = diag.sqrt();
        a[j * m + j] = l;
        ld += 2.0 * l.ln();
        for i in (j + 1)..m {
            let mut v = a[i * m + j];
            for k in 0..j {
                v -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = v / l;
        }
    }
    ld
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params(xi: f64, q: usize) -> DppParams {
        let region = BoundingBox::new(vec![-0.5; q], vec![0.5; q]).unwrap();
        DppParams::new(xi, 0.5, 10.0, 10, region).unwrap()
    }

    #[test]
    fn alpha_max_examples() {
        let a = dpp_alpha_max(4.0, 2.0, 1);
        assert!((a - PI.sqrt() / 4.0).abs() < 1e-12);
        assert!((a - 0.44311).abs() < 1e-5);
        assert!((dpp_alpha_max(PI, 2.0, 2) - 1.0).abs() < 1e-12);
        let (c, q) = (3.0, 2);
        assert!((dpp_alpha_max(c * 5.0, 2.5, q) - c.powf(-1.0 / q as f64) * dpp_alpha_max(5.0, 2.5, q)).abs() < 1e-12);
    }

    #[test]
    fn zero_frequency_eigenvalue_is_s_to_the_q() {
        for q in 1..=3 {
            for xi in [1.0, 4.0, 17.0] {
                let region = BoundingBox::new(vec![-0.5; q], vec![0.5; q]).unwrap();
                let p = DppParams::new(xi, 0.5, 10.0, 4, region).unwrap();
                let sp = dpp_eigenvalues(&p).unwrap();
                let l0 = sp.lambda_at(&vec![0; q]).unwrap();
                assert!((l0 - 0.5f64.powi(q as i32)).abs() < 1e-12, "q={q} xi={xi} l0={l0}");
                assert!(sp.eigenvalues().iter().all(|&l| l <= l0 && l > 0.0 || l == 0.0));
            }
        }
    }

    #[test]
    fn eigenvalue_sum_tracks_intensity() {
        // With a wide enough lattice the truncated sum recovers ξ.
        let sp = dpp_eigenvalues(&unit_params(4.0, 1)).unwrap();
        assert!((sp.lambda_sum() - 4.0).abs() < 0.05, "{}", sp.lambda_sum());
    }

    #[test]
    fn log_z_toy_cases() {
        assert!(log_z_from_eigenvalues(&[0.5]).unwrap().abs() < 1e-12);
        assert!((log_z_from_eigenvalues(&[0.5, 0.5]).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!(log_z_from_eigenvalues(&[1e-300]).unwrap() < -600.0);
    }

    #[test]
    fn single_point_density() {
        let sp = dpp_eigenvalues(&unit_params(4.0, 1)).unwrap();
        let x = [0.13];
        let direct: f64 = sp
            .eigenvalues()
            .iter()
            .map(|&l| l.min(EIGEN_CLAMP) / (1.0 - l.min(EIGEN_CLAMP)))
            .sum();
        assert!((sp.log_g(&[&x]) - direct.ln()).abs() < 1e-12);
    }

    #[test]
    fn repeated_points_have_zero_density() {
        let sp = dpp_eigenvalues(&unit_params(4.0, 2)).unwrap();
        let x = [0.1, -0.2];
        assert_eq!(sp.log_g(&[&x, &x]), f64::NEG_INFINITY);
    }

    #[test]
    fn too_many_points_have_zero_density() {
        let region = BoundingBox::new(vec![-0.5], vec![0.5]).unwrap();
        let sp = dpp_eigenvalues(&DppParams::new(2.0, 0.5, 2.0, 1, region).unwrap()).unwrap();
        let pts: Vec<[f64; 1]> = (0..4).map(|i| [-0.4 + 0.25 * i as f64]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert!(sp.log_g(&refs[..3]).is_finite());
        assert_eq!(sp.log_g(&refs), f64::NEG_INFINITY);
    }

    #[test]
    fn rescale_examples() {
        let b = BoundingBox::new(vec![0.0, 0.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(rescale_to_unit(&[1.0, 2.0], &b).0, vec![0.0, 0.0]);
        assert_eq!(rescale_to_unit(&[0.0, 0.0], &b).0, vec![-0.5, -0.5]);
        assert_eq!(rescale_to_unit(&[1.0, 1.0], &b).0, vec![0.0, -0.25]);
    }

    #[test]
    fn kernel_sum_matches_naive_cosines() {
        let sp = dpp_eigenvalues(&unit_params(6.0, 3).clone()).unwrap();
        let d = [0.31, -0.07, 0.44];
        let naive: f64 = (0..sp.lattice_len())
            .map(|f| {
                let j = sp.index_of(f);
                let dot: f64 = j.iter().zip(&d).map(|(a, b)| *a as f64 * b).sum();
                let l = sp.eigenvalues()[f].min(EIGEN_CLAMP);
                l / (1.0 - l) * (2.0 * PI * dot).cos()
            })
            .sum();
        let seq = sp.kernel_at_with(&d, Execution::Sequential);
        let par = sp.kernel_at_with(&d, Execution::Parallel);
        assert!((seq - naive).abs() < 1e-10 * naive.abs().max(1.0));
        assert_eq!(seq.to_bits(), par.to_bits());
    }

    #[test]
    fn cholesky_log_det() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        assert!((log_det_spd(&mut a, 2) - 8f64.ln()).abs() < 1e-12);
        let mut b = vec![1.0, 2.0, 2.0, 1.0];
        assert_eq!(log_det_spd(&mut b, 2), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_fraction_rejected() {
        let region = BoundingBox::unit(1);
        assert!(DppParams::new(4.0, 1.0, 10.0, 10, region.clone()).is_err());
        assert!(DppParams::new(4.0, 0.0, 10.0, 10, region).is_err());
    }
}
