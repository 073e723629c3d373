//! Domain types shared by every module, plus state validation.

use std::fmt;
use std::ops::{Deref, DerefMut};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A location in `R^q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Axis-aligned rectangle `R`, the support of the centre process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(invalid("box bounds must be non-empty and of equal length"));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!("box side {j} is degenerate: [{lo}, {hi}]")));
            }
        }
        Ok(BoundingBox { lower, upper })
    }

    /// `[0, 1]^q`.
    pub fn unit(dim: usize) -> Self {
        BoundingBox {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn log_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.side(j).ln()).sum()
    }

    pub fn volume(&self) -> f64 {
        self.log_volume().exp()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|j| self.side(j).powi(2)).sum::<f64>().sqrt()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let (a, b): (Vec<f64>, Vec<f64>) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| if c >= 0.0 { (lo * c, hi * c) } else { (hi * c, lo * c) })
            .unzip();
        BoundingBox::new(a, b)
    }
}

/// A finite unordered set of points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointConfig {
    points: Vec<Point>,
}

impl PointConfig {
    pub fn new(points: Vec<Point>) -> Self {
        PointConfig { points }
    }

    pub fn empty() -> Self {
        PointConfig::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: Point) {
        self.points.push(p);
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.0.as_slice()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point> {
        self.points.iter()
    }
}

impl From<Vec<Point>> for PointConfig {
    fn from(points: Vec<Point>) -> Self {
        PointConfig { points }
    }
}

/// Symmetric positive-definite covariance with its Cholesky factor cached.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Covariance {
    matrix: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl Covariance {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("covariance must be a non-empty square matrix"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("covariance is not positive definite"))?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Covariance {
            matrix: sym,
            chol,
            log_det,
        })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Covariance::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower Cholesky factor `L` with `L Lᵀ = Σ`.
    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `dᵀ Σ⁻¹ d` by forward substitution against the cached factor.
    pub fn mahalanobis_sq(&self, d: &[f64]) -> f64 {
        let q = self.dim();
        debug_assert_eq!(d.len(), q);
        let mut z = [0.0f64; 16];
        let mut heap;
        let z: &mut [f64] = if q <= 16 {
            &mut z[..q]
        } else {
            heap = vec![0.0; q];
            &mut heap
        };
        let mut acc = 0.0;
        for i in 0..q {
            let mut v = d[i];
            for j in 0..i {
                v -= self.chol[(i, j)] * z[j];
            }
            v /= self.chol[(i, i)];
            z[i] = v;
            acc += v * v;
        }
        acc
    }
}

impl PartialEq for Covariance {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl TryFrom<Vec<Vec<f64>>> for Covariance {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let q = rows.len();
        if rows.iter().any(|r| r.len() != q) {
            return Err(invalid("covariance rows must form a square matrix"));
        }
        Covariance::new(DMatrix::from_fn(q, q, |i, j| rows[i][j]))
    }
}

impl From<Covariance> for Vec<Vec<f64>> {
    fn from(c: Covariance) -> Self {
        let q = c.dim();
        (0..q).map(|i| (0..q).map(|j| c.matrix[(i, j)]).collect()).collect()
    }
}

/// Kernel dispersion `γ`: a variance for `q = 1`, a covariance matrix for
/// `q ≥ 2`, absent for the Bernoulli kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dispersion {
    Absent,
    Variance(f64),
    Covariance(Covariance),
}

impl Dispersion {
    pub fn is_valid(&self) -> bool {
        match self {
            Dispersion::Absent => true,
            Dispersion::Variance(v) => v.is_finite() && *v > 0.0,
            Dispersion::Covariance(c) => c.log_det().is_finite(),
        }
    }
}

/// One mixture component `(μ, s, γ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mu: Point,
    /// Unnormalized weight.
    pub s: f64,
    pub gamma: Dispersion,
}

/// Full sampler state.
///
/// Labels are zero-based: row `i` belongs to `allocated[labels[i]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    pub allocated: Vec<Component>,
    pub nonallocated: Vec<Component>,
    pub labels: Vec<usize>,
    pub xi: f64,
    pub u: f64,
}

impl MixtureState {
    pub fn k(&self) -> usize {
        self.allocated.len()
    }

    pub fn ell(&self) -> usize {
        self.nonallocated.len()
    }

    pub fn m(&self) -> usize {
        self.k() + self.ell()
    }

    /// `t = Σ s` over all components.
    pub fn total_weight(&self) -> f64 {
        self.allocated.iter().chain(&self.nonallocated).map(|c| c.s).sum()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &c in &self.labels {
            if c < sizes.len() {
                sizes[c] += 1;
            }
        }
        sizes
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Allocated centres followed by non-allocated ones.
    pub fn centres(&self) -> Vec<&[f64]> {
        self.allocated
            .iter()
            .chain(&self.nonallocated)
            .map(|c| c.mu.0.as_slice())
            .collect()
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.allocated.iter().chain(&self.nonallocated)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Continuous,
    Binary,
}

/// `n` observations of dimension `q`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    dim: usize,
    kind: DataKind,
}

impl Dataset {
    pub fn from_rows(rows: Vec<Vec<f64>>, kind: DataKind) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::Data("dataset rows are empty".into()));
        }
        let mut values = Vec::with_capacity(n * dim);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Data(format!("row {i} has {} entries, expected {dim}", r.len())));
            }
            values.extend(r);
        }
        Dataset::from_flat(values, dim, kind)
    }

    pub fn from_flat(values: Vec<f64>, dim: usize, kind: DataKind) -> Result<Self> {
        if dim == 0 || values.is_empty() || values.len() % dim != 0 {
            return Err(Error::Data("flat data length must be a positive multiple of dim".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value {v}")));
        }
        if kind == DataKind::Binary && values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Data("binary dataset contains values outside {0, 1}".into()));
        }
        Ok(Dataset {
            n: values.len() / dim,
            values,
            dim,
            kind,
        })
    }

    /// Continuous data unless every entry is 0 or 1.
    pub fn infer(rows: Vec<Vec<f64>>) -> Result<Self> {
        let binary = rows.iter().flatten().all(|&v| v == 0.0 || v == 1.0);
        let kind = if binary { DataKind::Binary } else { DataKind::Continuous };
        Dataset::from_rows(rows, kind)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        self.rows().map(|r| r[j]).sum::<f64>() / self.n as f64
    }

    /// Unbiased per-coordinate variance (zero when `n = 1`).
    pub fn column_variance(&self, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let m = self.column_mean(j);
        self.rows().map(|r| (r[j] - m).powi(2)).sum::<f64>() / (self.n - 1) as f64
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Dataset::from_flat(self.values.iter().map(|v| v * c).collect(), self.dim, DataKind::Continuous)
    }
}

/// A broken state invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoAllocatedComponents,
    LabelCount { expected: usize, found: usize },
    LabelOutOfRange { row: usize, label: usize },
    UnallocatedLabel { label: usize },
    DuplicateCentre { first: usize, second: usize },
    CentreOutsideBox { component: usize },
    DimensionMismatch { component: usize },
    NonPositiveWeight { component: usize },
    InvalidDispersion { component: usize },
    NonPositiveTotalWeight,
    InvalidXi,
    InvalidU,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAllocatedComponents => write!(f, "no allocated components"),
            Violation::LabelCount { expected, found } => {
                write!(f, "label vector has length {found}, expected {expected}")
            }
            Violation::LabelOutOfRange { row, label } => {
                write!(f, "label {label} of row {row} is out of range")
            }
            Violation::UnallocatedLabel { label } => {
                write!(f, "unallocated labeled component {label}")
            }
            Violation::DuplicateCentre { first, second } => {
                write!(f, "duplicate centre between components {first} and {second}")
            }
            Violation::CentreOutsideBox { component } => {
                write!(f, "centre of component {component} lies outside the box")
            }
            Violation::DimensionMismatch { component } => {
                write!(f, "component {component} has the wrong dimension")
            }
            Violation::NonPositiveWeight { component } => {
                write!(f, "component {component} has a non-positive weight")
            }
            Violation::InvalidDispersion { component } => {
                write!(f, "component {component} has an invalid dispersion")
            }
            Violation::NonPositiveTotalWeight => write!(f, "total weight is not positive"),
            Violation::InvalidXi => write!(f, "xi is not a positive finite number"),
            Violation::InvalidU => write!(f, "u is not a positive finite number"),
        }
    }
}

/// Every violated invariant of `state`; `Ok` iff there are none.
///
/// Components are indexed allocated-first, then non-allocated.
pub fn validate_state(state: &MixtureState, data: &Dataset, bbox: &BoundingBox) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let k = state.k();
    if k == 0 {
        out.push(Violation::NoAllocatedComponents);
    }
    if state.labels.len() != data.n() {
        out.push(Violation::LabelCount {
            expected: data.n(),
            found: state.labels.len(),
        });
    }
    let mut seen = vec![false; k];
    for (row, &c) in state.labels.iter().enumerate() {
        if c >= k {
            out.push(Violation::LabelOutOfRange { row, label: c });
        } else {
            seen[c] = true;
        }
    }
    for (label, hit) in seen.iter().enumerate() {
        if !hit {
            out.push(Violation::UnallocatedLabel { label });
        }
    }
    let comps: Vec<&Component> = state.components().collect();
    for (i, c) in comps.iter().enumerate() {
        if c.mu.dim() != bbox.dim() {
            out.push(Violation::DimensionMismatch { component: i });
        } else if !bbox.contains(&c.mu) {
            out.push(Violation::CentreOutsideBox { component: i });
        }
        if !(c.s.is_finite() && c.s > 0.0) {
            out.push(Violation::NonPositiveWeight { component: i });
        }
        if !c.gamma.is_valid() {
            out.push(Violation::InvalidDispersion { component: i });
        }
    }
    for i in 0..comps.len() {
        for j in (i + 1)..comps.len() {
            if comps[i].mu == comps[j].mu {
                out.push(Violation::DuplicateCentre { first: i, second: j });
            }
        }
    }
    if !(state.total_weight() > 0.0) {
        out.push(Violation::NonPositiveTotalWeight);
    }
    if !(state.xi.is_finite() && state.xi > 0.0) {
        out.push(Violation::InvalidXi);
    }
    if !(state.u.is_finite() && state.u > 0.0) {
        out.push(Violation::InvalidU);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(x: f64) -> Component {
        Component {
            mu: Point(vec![x]),
            s: 1.0,
            gamma: Dispersion::Variance(1.0),
        }
    }

    fn setup() -> (MixtureState, Dataset, BoundingBox) {
        let data = Dataset::from_rows(vec![vec![0.1], vec![0.5], vec![0.9]], DataKind::Continuous).unwrap();
        let state = MixtureState {
            allocated: vec![comp(0.1), comp(0.5), comp(0.9)],
            nonallocated: vec![comp(0.3)],
            labels: vec![0, 1, 2],
            xi: 2.0,
            u: 1.0,
        };
        (state, data, BoundingBox::unit(1))
    }

    #[test]
    fn valid_state_passes() {
        let (s, d, b) = setup();
        assert!(validate_state(&s, &d, &b).is_ok());
    }

    #[test]
    fn missing_label_is_reported() {
        let (mut s, d, b) = setup();
        s.labels = vec![0, 1, 1];
        let v = validate_state(&s, &d, &b).unwrap_err();
        assert!(v.contains(&Violation::UnallocatedLabel { label: 2 }));
        assert!(v[0].to_string().contains("unallocated labeled component"));
    }

    #[test]
    fn duplicate_centre_is_reported() {
        let (mut s, d, b) = setup();
        s.nonallocated[0].mu = Point(vec![0.5]);
        let v = validate_state(&s, &d, &b).unwrap_err();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("duplicate centre"));
    }

    #[test]
    fn box_rejects_degenerate_sides() {
        assert!(BoundingBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoundingBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let b = BoundingBox::new(vec![0.0, 0.0], vec![2.0, 4.0]).unwrap();
        assert!((b.volume() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_mahalanobis_matches_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = Covariance::new(m.clone()).unwrap();
        let d = nalgebra::DVector::from_vec(vec![0.3, -1.2]);
        let direct = (d.transpose() * m.try_inverse().unwrap() * &d)[(0, 0)];
        assert!((c.mahalanobis_sq(d.as_slice()) - direct).abs() < 1e-12);
        assert!((c.log_det() - 1.75f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn binary_data_rejects_other_values() {
        assert!(Dataset::from_rows(vec![vec![0.0, 2.0]], DataKind::Binary).is_err());
        let d = Dataset::infer(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(d.kind(), DataKind::Binary);
    }
}
