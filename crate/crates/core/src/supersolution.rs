//! Positive supersolutions `v > 0`, `Δv + k²v ≤ 0`, for the regions of
//! `eigencalc`, their verification on grids, and the admissibility decision.
//!
//! The closed-form candidates are first Dirichlet eigenfunctions of the
//! region's bounded factor, so `Δv = -k₀² v` and the residual at `k` is
//! `(k² - k₀²) v`. For a mask the candidate is the discrete first eigenvector.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::eigencalc::{
    fd_dirichlet_eigs, uniqueness_threshold, Dimension, EigenError, EigenResult, GridDomain,
    RegionSpec,
};
use crate::specfun::bessel_j;

/// Minimum number of cells across every bounded coordinate.
pub const MIN_CELLS: usize = 16;
/// Default number of cells across the shortest bounded coordinate.
pub const DEFAULT_CELLS: usize = 32;
/// Half-width of the window used for coordinates in which the region is unbounded.
pub const WINDOW_HALF_WIDTH: f64 = 1.0;
/// Relative thickness of the boundary layer left out of ball and disk grids.
pub const BOUNDARY_LAYER: f64 = 1e-9;
/// Below this value of `k₀ r` the 3D ball candidate uses its Taylor series.
pub const SERIES_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SupersolutionError {
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("point {point:?} lies outside the candidate's region")]
    OutOfRegion { point: Vec<f64> },
    #[error("point has {got} coordinates, candidate lives in dimension {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("wavenumber must be positive and finite, got {0}")]
    Wavenumber(f64),
    #[error("spacing {spacing} leaves {cells} cells across a bounded coordinate, need {MIN_CELLS}")]
    Resolution { spacing: f64, cells: usize },
    #[error("v = {value:e} is not positive at {point:?}")]
    Positivity { point: Vec<f64>, value: f64 },
    #[error("no candidate of this kind for region {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CandidateKind {
    /// `J₀(k₀|x|)` on a disk.
    Disk2D,
    /// `sin(k₀|x|)/|x|` on a ball in ℝ³.
    Ball3D,
    /// `cos(πx₂/2R) cos(πx₃/2h)`, constant in `x₁` on a cylinder.
    RectProduct,
    /// `cos(πx₃/2h)`, constant in the other coordinates.
    SlabCosine,
    /// Bilinear interpolant of the discrete first eigenvector, max 1.
    GridEigenfunction,
}

/// Nodal values of the discrete eigenvector padded with a ring of zeros.
#[derive(Debug, Clone, PartialEq)]
struct NodalField {
    domain: GridDomain,
    values: Vec<f64>,
    laplacian: Vec<f64>,
    error_estimate: f64,
}

impl NodalField {
    fn new(domain: &GridDomain, eig: &EigenResult) -> Self {
        let (rows, cols) = (domain.rows + 2, domain.cols + 2);
        let mut values = vec![0.0; rows * cols];
        for (&(r, c), &v) in domain.interior_nodes().iter().zip(&eig.first_mode) {
            values[(r + 1) * cols + c + 1] = v;
        }
        let h2 = domain.spacing * domain.spacing;
        let mut laplacian = vec![0.0; rows * cols];
        for r in 1..rows - 1 {
            for c in 1..cols - 1 {
                let i = r * cols + c;
                laplacian[i] = (values[i - 1] + values[i + 1] + values[i - cols]
                    + values[i + cols]
                    - 4.0 * values[i])
                    / h2;
            }
        }
        Self {
            domain: domain.clone(),
            values,
            laplacian,
            error_estimate: eig.error_estimates[0],
        }
    }

    fn cols(&self) -> usize {
        self.domain.cols + 2
    }

    /// Fractional padded indices of a point, if inside the padded lattice.
    fn locate(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        let h = self.domain.spacing;
        let fx = (x - self.domain.origin[0]) / h + 1.0;
        let fy = (y - self.domain.origin[1]) / h + 1.0;
        let (cmax, rmax) = ((self.domain.cols + 1) as f64, (self.domain.rows + 1) as f64);
        let slack = 1e-9;
        if !(fx >= -slack && fy >= -slack && fx <= cmax + slack && fy <= rmax + slack) {
            return None;
        }
        let fx = fx.clamp(0.0, cmax);
        let fy = fy.clamp(0.0, rmax);
        let c = (fx.floor() as usize).min(self.domain.cols);
        let r = (fy.floor() as usize).min(self.domain.rows);
        Some((r, c, fx - c as f64, fy - r as f64))
    }

    fn interpolate(&self, data: &[f64], r: usize, c: usize, tx: f64, ty: f64) -> f64 {
        let w = self.cols();
        let at = |rr: usize, cc: usize| data[rr * w + cc];
        (1.0 - ty) * ((1.0 - tx) * at(r, c) + tx * at(r, c + 1))
            + ty * ((1.0 - tx) * at(r + 1, c) + tx * at(r + 1, c + 1))
    }
}

/// A positive function on a region together with its reference wavenumber
/// `k₀`, for which `Δv + k₀² v = 0` (exactly, or discretely for masks).
#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionCandidate {
    pub kind: CandidateKind,
    pub k0: f64,
    pub region: RegionSpec,
    field: Option<NodalField>,
}

impl SupersolutionCandidate {
    pub fn disk(radius: f64) -> Result<Self, SupersolutionError> {
        Self::for_region(&RegionSpec::Ball {
            dim: Dimension::Two,
            radius,
        })
    }

    pub fn ball(radius: f64) -> Result<Self, SupersolutionError> {
        Self::for_region(&RegionSpec::Ball {
            dim: Dimension::Three,
            radius,
        })
    }

    pub fn grid(domain: &GridDomain) -> Result<Self, SupersolutionError> {
        let eig = fd_dirichlet_eigs(domain, 1)?;
        Ok(Self::from_eigen(domain, &eig))
    }

    /// Grid candidate from an already computed eigenpair.
    pub fn from_eigen(domain: &GridDomain, eig: &EigenResult) -> Self {
        Self {
            kind: CandidateKind::GridEigenfunction,
            k0: eig.eigenvalues[0].sqrt(),
            region: RegionSpec::Grid(domain.clone()),
            field: Some(NodalField::new(domain, eig)),
        }
    }

    /// The canonical first-eigenfunction candidate of a region.
    pub fn for_region(region: &RegionSpec) -> Result<Self, SupersolutionError> {
        region.validate()?;
        let kind = match region {
            RegionSpec::Ball {
                dim: Dimension::Two,
                ..
            } => CandidateKind::Disk2D,
            RegionSpec::Ball {
                dim: Dimension::Three,
                ..
            } => CandidateKind::Ball3D,
            RegionSpec::Rect { .. } | RegionSpec::CylinderOverRect { .. } => {
                CandidateKind::RectProduct
            }
            RegionSpec::Interval { .. } | RegionSpec::SlabOverInterval { .. } => {
                CandidateKind::SlabCosine
            }
            RegionSpec::Grid(g) => return Self::grid(g),
        };
        Ok(Self {
            kind,
            k0: uniqueness_threshold(region)?,
            region: region.clone(),
            field: None,
        })
    }

    /// Number of coordinates of a point.
    pub fn dimension(&self) -> usize {
        match &self.region {
            RegionSpec::Ball { dim, .. } => dim.value() as usize,
            RegionSpec::Rect { .. } | RegionSpec::Grid(_) => 2,
            RegionSpec::Interval { .. } => 1,
            RegionSpec::CylinderOverRect { .. } | RegionSpec::SlabOverInterval { .. } => 3,
        }
    }

    /// Per coordinate: `Some((lo, hi))` for bounded ones, `None` for free ones.
    fn extents(&self) -> Vec<Option<(f64, f64)>> {
        match &self.region {
            RegionSpec::Ball { dim, radius } => {
                vec![Some((-radius, *radius)); dim.value() as usize]
            }
            RegionSpec::Rect { r, h } => vec![Some((-r, *r)), Some((-h, *h))],
            RegionSpec::Interval { h } => vec![Some((-h, *h))],
            RegionSpec::CylinderOverRect { r, h } => vec![None, Some((-r, *r)), Some((-h, *h))],
            RegionSpec::SlabOverInterval { h } => vec![None, None, Some((-h, *h))],
            RegionSpec::Grid(g) => {
                let h = g.spacing;
                vec![
                    Some((g.origin[0] - h, g.origin[0] + g.cols as f64 * h)),
                    Some((g.origin[1] - h, g.origin[1] + g.rows as f64 * h)),
                ]
            }
        }
    }

    /// True when the point is in the closure of the region.
    fn contains(&self, x: &[f64]) -> bool {
        let tol = 1e-12;
        match &self.region {
            RegionSpec::Ball { radius, .. } => {
                x.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius * (1.0 + tol)
            }
            RegionSpec::Grid(_) => {
                let f = self.field.as_ref().expect("grid candidate carries its field");
                f.locate(x[0], x[1]).is_some()
            }
            _ => self.extents().iter().zip(x).all(|(e, &v)| match e {
                Some((lo, hi)) => v >= lo - tol * lo.abs() && v <= hi + tol * hi.abs(),
                None => v.is_finite(),
            }),
        }
    }

    /// Value and Laplacian, without the region check.
    fn eval_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let k0sq = self.k0 * self.k0;
        let v = match (&self.kind, &self.region) {
            (CandidateKind::Disk2D, _) => bessel_j(0, self.k0 * x[0].hypot(x[1])),
            (CandidateKind::Ball3D, _) => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let z = self.k0 * r;
                if z < SERIES_CUTOFF {
                    let z2 = z * z;
                    self.k0 * (1.0 - z2 / 6.0 * (1.0 - z2 / 20.0))
                } else {
                    z.sin() / r
                }
            }
            (CandidateKind::RectProduct, RegionSpec::Rect { r, h }) => {
                (PI * x[0] / (2.0 * r)).cos() * (PI * x[1] / (2.0 * h)).cos()
            }
            (CandidateKind::RectProduct, RegionSpec::CylinderOverRect { r, h }) => {
                (PI * x[1] / (2.0 * r)).cos() * (PI * x[2] / (2.0 * h)).cos()
            }
            (CandidateKind::SlabCosine, RegionSpec::Interval { h })
            | (CandidateKind::SlabCosine, RegionSpec::SlabOverInterval { h }) => {
                (PI * x[x.len() - 1] / (2.0 * h)).cos()
            }
            (CandidateKind::GridEigenfunction, _) => {
                let f = self.field.as_ref().expect("grid candidate carries its field");
                return match f.locate(x[0], x[1]) {
                    Some((r, c, tx, ty)) => (
                        f.interpolate(&f.values, r, c, tx, ty),
                        f.interpolate(&f.laplacian, r, c, tx, ty),
                    ),
                    None => (0.0, 0.0),
                };
            }
            _ => unreachable!("candidate kind always matches its region"),
        };
        (v, -k0sq * v)
    }

    /// Bilinear interpolation of the nodal FD Laplacian is returned for grid
    /// candidates; closed forms return the exact Laplacian.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, f64), SupersolutionError> {
        if x.len() != self.dimension() {
            return Err(SupersolutionError::PointDimension {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(SupersolutionError::OutOfRegion { point: x.to_vec() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// View as a planar field for the transform identity. The 3D ball has none;
    /// 3D product candidates restrict to their bounded cross-section.
    pub fn planar(&self) -> Option<PlanarCandidate<'_>> {
        match self.kind {
            CandidateKind::Ball3D => None,
            _ => Some(PlanarCandidate(self)),
        }
    }
}

/// See [`eval_candidate`](SupersolutionCandidate::eval).
pub fn eval_candidate(
    candidate: &SupersolutionCandidate,
    point: &[f64],
) -> Result<(f64, f64), SupersolutionError> {
    candidate.eval(point)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResidualMethod {
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "finite-difference")]
    FiniteDifference,
}

/// Outcome of checking `Δv + k²v ≤ tolerance` and `v > 0` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub max_residual: f64,
    pub min_value: f64,
    pub pass: bool,
    pub witness_max: Vec<f64>,
    pub witness_min: Vec<f64>,
    pub spacing: f64,
    pub method: ResidualMethod,
    /// `C h²`; zero for analytic residuals.
    #[serde(skip)]
    pub tolerance: f64,
    #[serde(skip)]
    pub error_constant: f64,
    /// Half-width of the window covering unbounded coordinates, if any.
    #[serde(skip)]
    pub window: Option<f64>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report fields are plain data")
    }
}

struct Lattice {
    nodes: Vec<Vec<f64>>,
    steps: Vec<f64>,
}

/// Interior lattice of the bounded coordinates and the window for the others.
fn lattice(
    candidate: &SupersolutionCandidate,
    spacing: Option<f64>,
) -> Result<Lattice, SupersolutionError> {
    let extents = candidate.extents();
    let shortest = extents
        .iter()
        .flatten()
        .map(|(lo, hi)| hi - lo)
        .fold(f64::INFINITY, f64::min);
    let spacing = spacing.unwrap_or(shortest / DEFAULT_CELLS as f64);
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(SupersolutionError::Resolution { spacing, cells: 0 });
    }
    let mut axes = Vec::new();
    let mut steps = Vec::new();
    for e in &extents {
        let (lo, hi, closed) = match e {
            Some((lo, hi)) => (*lo, *hi, false),
            None => (-WINDOW_HALF_WIDTH, WINDOW_HALF_WIDTH, true),
        };
        let cells = ((hi - lo) / spacing * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        if !closed && cells < MIN_CELLS {
            return Err(SupersolutionError::Resolution { spacing, cells });
        }
        let step = (hi - lo) / cells as f64;
        let range = if closed { 0..=cells } else { 1..=cells - 1 };
        axes.push(range.map(|i| lo + i as f64 * step).collect::<Vec<_>>());
        steps.push(step);
    }
    let ball_radius = match &candidate.region {
        RegionSpec::Ball { radius, .. } => Some(*radius * (1.0 - BOUNDARY_LAYER)),
        _ => None,
    };
    let mut nodes = vec![Vec::new()];
    for axis in &axes {
        nodes = nodes
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    if let Some(rad) = ball_radius {
        nodes.retain(|p| p.iter().map(|v| v * v).sum::<f64>() < rad * rad);
    }
    Ok(Lattice { nodes, steps })
}

fn fd_laplacian(candidate: &SupersolutionCandidate, x: &[f64], steps: &[f64], scale: f64) -> f64 {
    let centre = candidate.eval_unchecked(x).0;
    let mut y = x.to_vec();
    let mut total = 0.0;
    for (axis, &s) in steps.iter().enumerate() {
        let s = s * scale;
        y[axis] = x[axis] + s;
        let plus = candidate.eval_unchecked(&y).0;
        y[axis] = x[axis] - s;
        let minus = candidate.eval_unchecked(&y).0;
        y[axis] = x[axis];
        total += (plus - 2.0 * centre + minus) / (s * s);
    }
    total
}

fn check_wavenumber(k: f64) -> Result<(), SupersolutionError> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(SupersolutionError::Wavenumber(k))
    }
}

struct Extremes {
    max_residual: f64,
    witness_max: Vec<f64>,
    min_value: f64,
    witness_min: Vec<f64>,
}

fn extremes(samples: impl Iterator<Item = (Vec<f64>, f64, f64)>) -> Extremes {
    let mut out = Extremes {
        max_residual: f64::NEG_INFINITY,
        witness_max: Vec::new(),
        min_value: f64::INFINITY,
        witness_min: Vec::new(),
    };
    for (p, value, residual) in samples {
        if residual > out.max_residual {
            out.max_residual = residual;
            out.witness_max = p.clone();
        }
        if value < out.min_value {
            out.min_value = value;
            out.witness_min = p;
        }
    }
    out
}

/// Checks `Δv + k²v ≤ 0` and `v > 0` at the interior nodes with the analytic
/// residual (closed forms) or the nodal FD residual (grid candidates).
/// `spacing` is ignored for grid candidates, which use their own lattice.
pub fn verify_supersolution(
    candidate: &SupersolutionCandidate,
    k: f64,
    spacing: Option<f64>,
) -> Result<VerificationReport, SupersolutionError> {
    match candidate.kind {
        CandidateKind::GridEigenfunction => verify_grid(candidate, k),
        _ => verify_with_method(candidate, k, spacing, ResidualMethod::Analytic),
    }
}

/// Closed-form candidates with an explicit residual method. The FD tolerance
/// is `C h²` with `C h² = max |R_2h - R_h|`, the two-grid difference of the
/// FD residuals.
pub fn verify_with_method(
    candidate: &SupersolutionCandidate,
    k: f64,
    spacing: Option<f64>,
    method: ResidualMethod,
) -> Result<VerificationReport, SupersolutionError> {
    check_wavenumber(k)?;
    if candidate.kind == CandidateKind::GridEigenfunction {
        return verify_grid(candidate, k);
    }
    let lattice = lattice(candidate, spacing)?;
    let k2 = k * k;
    let k0sq = candidate.k0 * candidate.k0;
    let h = lattice.steps.iter().cloned().fold(0.0, f64::max);
    let window = candidate
        .extents()
        .iter()
        .any(Option::is_none)
        .then_some(WINDOW_HALF_WIDTH);
    let (ext, tolerance) = match method {
        ResidualMethod::Analytic => {
            let ext = extremes(lattice.nodes.into_iter().map(|p| {
                let v = candidate.eval_unchecked(&p).0;
                (p, v, (k2 - k0sq) * v)
            }));
            (ext, 0.0)
        }
        ResidualMethod::FiniteDifference => {
            let mut spread: f64 = 0.0;
            let ext = extremes(lattice.nodes.into_iter().map(|p| {
                let v = candidate.eval_unchecked(&p).0;
                let fine = fd_laplacian(candidate, &p, &lattice.steps, 1.0) + k2 * v;
                let coarse = fd_laplacian(candidate, &p, &lattice.steps, 2.0) + k2 * v;
                spread = spread.max((coarse - fine).abs());
                (p, v, fine)
            }));
            (ext, spread)
        }
    };
    Ok(VerificationReport {
        pass: ext.max_residual <= tolerance && ext.min_value > 0.0,
        max_residual: ext.max_residual,
        min_value: ext.min_value,
        witness_max: ext.witness_max,
        witness_min: ext.witness_min,
        spacing: h,
        method,
        tolerance,
        error_constant: tolerance / (h * h),
        window,
    })
}

/// Nodal check of the discrete eigenvector; the tolerance is the two-grid
/// eigenvalue error times `max v = 1`.
fn verify_grid(
    candidate: &SupersolutionCandidate,
    k: f64,
) -> Result<VerificationReport, SupersolutionError> {
    check_wavenumber(k)?;
    let field = candidate.field.as_ref().expect("grid candidate carries its field");
    let domain = &field.domain;
    let nodes = domain.interior_nodes();
    let span = |pick: fn(&(usize, usize)) -> usize| {
        let lo = nodes.iter().map(pick).min().unwrap_or(0);
        let hi = nodes.iter().map(pick).max().unwrap_or(0);
        hi - lo + 2
    };
    let cells = span(|n| n.0).min(span(|n| n.1));
    if cells < MIN_CELLS {
        return Err(SupersolutionError::Resolution {
            spacing: domain.spacing,
            cells,
        });
    }
    let w = field.cols();
    let k2 = k * k;
    let ext = extremes(nodes.iter().map(|&(r, c)| {
        let i = (r + 1) * w + c + 1;
        let v = field.values[i];
        (
            domain.node_position(r, c).to_vec(),
            v,
            field.laplacian[i] + k2 * v,
        )
    }));
    let h = domain.spacing;
    let tolerance = field.error_estimate;
    Ok(VerificationReport {
        pass: ext.max_residual <= tolerance && ext.min_value > 0.0,
        max_residual: ext.max_residual,
        min_value: ext.min_value,
        witness_max: ext.witness_max,
        witness_min: ext.witness_min,
        spacing: h,
        method: ResidualMethod::FiniteDifference,
        tolerance,
        error_constant: tolerance / (h * h),
        window: None,
    })
}

/// A smooth function of the plane with a known Laplacian.
pub trait ScalarField {
    fn value(&self, x: [f64; 2]) -> f64;
    fn laplacian(&self, x: [f64; 2]) -> f64;
}

/// A field given by two closures.
pub struct FnField<F, L> {
    pub value: F,
    pub laplacian: L,
}

impl<F: Fn([f64; 2]) -> f64, L: Fn([f64; 2]) -> f64> ScalarField for FnField<F, L> {
    fn value(&self, x: [f64; 2]) -> f64 {
        (self.value)(x)
    }

    fn laplacian(&self, x: [f64; 2]) -> f64 {
        (self.laplacian)(x)
    }
}

/// A candidate seen through its planar cross-section: 1D candidates depend on
/// the second coordinate, 3D product candidates on their two bounded ones.
pub struct PlanarCandidate<'a>(&'a SupersolutionCandidate);

impl PlanarCandidate<'_> {
    fn lift(&self, x: [f64; 2]) -> Vec<f64> {
        match self.0.dimension() {
            1 => vec![x[1]],
            2 => x.to_vec(),
            _ => vec![0.0, x[0], x[1]],
        }
    }
}

impl ScalarField for PlanarCandidate<'_> {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.0.eval_unchecked(&self.lift(x)).0
    }

    fn laplacian(&self, x: [f64; 2]) -> f64 {
        self.0.eval_unchecked(&self.lift(x)).1
    }
}

/// Rectangle `[lower, upper]` sampled with the given spacing; the identity
/// is checked at the nodes strictly inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarGrid {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub spacing: f64,
}

impl PlanarGrid {
    fn axis(&self, i: usize) -> (usize, f64) {
        let cells = ((self.upper[i] - self.lower[i]) / self.spacing).round().max(2.0) as usize;
        (cells, (self.upper[i] - self.lower[i]) / cells as f64)
    }
}

fn positive(v: &dyn ScalarField, p: [f64; 2]) -> Result<f64, SupersolutionError> {
    let value = v.value(p);
    if value > 0.0 {
        Ok(value)
    } else {
        Err(SupersolutionError::Positivity {
            point: p.to_vec(),
            value,
        })
    }
}

/// Both residuals at one point with stencil steps `(hx, hy)`; see
/// [`liouville_identity_residual`].
pub fn liouville_residuals_at(
    u: &dyn ScalarField,
    v: &dyn ScalarField,
    k: f64,
    p: [f64; 2],
    steps: [f64; 2],
) -> Result<(f64, f64), SupersolutionError> {
    check_wavenumber(k)?;
    let phi = |q: [f64; 2]| -> Result<f64, SupersolutionError> { Ok(u.value(q) / positive(v, q)?) };
    let centre = phi(p)?;
    let mut div = 0.0;
    for axis in 0..2 {
        let h = steps[axis];
        let shifted = |t: f64| {
            let mut q = p;
            q[axis] += t;
            q
        };
        let flux_plus = positive(v, shifted(0.5 * h))?.powi(2) * (phi(shifted(h))? - centre);
        let flux_minus = positive(v, shifted(-0.5 * h))?.powi(2) * (centre - phi(shifted(-h))?);
        div += (flux_plus - flux_minus) / (h * h);
    }
    let (uu, vv) = (u.value(p), v.value(p));
    let (lu, lv) = (u.laplacian(p), v.laplacian(p));
    Ok((
        (div - (vv * lu - uu * lv)).abs(),
        (div + (lv + k * k * vv) * vv * centre).abs(),
    ))
}

/// Residuals of `∇·(v²∇φ) = vΔu - uΔv` and of `∇·(v²∇φ) + (Δv + k²v)vφ = 0`
/// for `φ = u/v`, maximized over the interior nodes. The divergence is
/// discretized conservatively (`v²` at the half-way points); `Δu`, `Δv` are
/// exact. The second residual vanishes in the limit when `Δu + k²u = 0`.
pub fn liouville_identity_residual(
    u: &dyn ScalarField,
    v: &dyn ScalarField,
    k: f64,
    grid: &PlanarGrid,
) -> Result<(f64, f64), SupersolutionError> {
    check_wavenumber(k)?;
    let (nx, hx) = grid.axis(0);
    let (ny, hy) = grid.axis(1);
    for j in 0..=ny {
        for i in 0..=nx {
            positive(v, [grid.lower[0] + i as f64 * hx, grid.lower[1] + j as f64 * hy])?;
        }
    }
    let mut worst = (0.0f64, 0.0f64);
    for j in 1..ny {
        for i in 1..nx {
            let p = [grid.lower[0] + i as f64 * hx, grid.lower[1] + j as f64 * hy];
            let (a, b) = liouville_residuals_at(u, v, k, p, [hx, hy])?;
            worst = (worst.0.max(a), worst.1.max(b));
        }
    }
    Ok(worst)
}

/// Observed order of the two residuals at fixed sample points as the stencil
/// step halves from `h` to `h/4`.
pub fn liouville_convergence_order(
    u: &dyn ScalarField,
    v: &dyn ScalarField,
    k: f64,
    points: &[[f64; 2]],
    h: f64,
) -> Result<(f64, f64), SupersolutionError> {
    let worst = |step: f64| -> Result<(f64, f64), SupersolutionError> {
        points.iter().try_fold((0.0f64, 0.0f64), |acc, &p| {
            let (a, b) = liouville_residuals_at(u, v, k, p, [step, step])?;
            Ok((acc.0.max(a), acc.1.max(b)))
        })
    };
    let (a1, b1) = worst(h)?;
    let (a2, b2) = worst(0.5 * h)?;
    let (a3, b3) = worst(0.25 * h)?;
    let order = |e1: f64, e2: f64, e3: f64| 0.5 * ((e1 / e2).log2() + (e2 / e3).log2());
    Ok((order(a1, a2, a3), order(b1, b2, b3)))
}

/// Result of [`decide_admissibility`].
#[derive(Debug, Clone, PartialEq)]
pub enum Admissibility {
    /// `k² ≤ λ₁`: the candidate is a positive supersolution at `k`.
    Admissible {
        candidate: SupersolutionCandidate,
        error_band: f64,
    },
    /// `k² > λ₁`: the canonical candidate has `Δφ₁ + k²φ₁ = (k² - λ₁)φ₁ > 0`
    /// at the witness. This certifies only that this candidate fails.
    Inadmissible {
        witness: Vec<f64>,
        residual: f64,
        error_band: f64,
    },
    /// `k²` within the FD error band of `λ₁`.
    Indeterminate { lambda1: f64, error_band: f64 },
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Self::Admissible { .. })
    }
}

/// Decides whether a positive supersolution exists at `k` on a bounded region.
pub fn decide_admissibility(
    region: &RegionSpec,
    k: f64,
) -> Result<Admissibility, SupersolutionError> {
    check_wavenumber(k)?;
    region.validate()?;
    match region {
        RegionSpec::Ball { .. } | RegionSpec::Rect { .. } | RegionSpec::Interval { .. } => {
            let candidate = SupersolutionCandidate::for_region(region)?;
            if k <= candidate.k0 {
                return Ok(Admissibility::Admissible {
                    candidate,
                    error_band: 0.0,
                });
            }
            let witness = vec![0.0; candidate.dimension()];
            let (v, _) = candidate.eval_unchecked(&witness);
            Ok(Admissibility::Inadmissible {
                residual: (k * k - candidate.k0 * candidate.k0) * v,
                witness,
                error_band: 0.0,
            })
        }
        RegionSpec::Grid(domain) => {
            let eig = fd_dirichlet_eigs(domain, 1)?;
            let lambda1 = eig.extrapolated[0];
            let error_band = eig.error_estimates[0];
            let k2 = k * k;
            if (k2 - lambda1).abs() <= error_band {
                return Ok(Admissibility::Indeterminate {
                    lambda1,
                    error_band,
                });
            }
            let candidate = SupersolutionCandidate::from_eigen(domain, &eig);
            if k2 < lambda1 {
                return Ok(Admissibility::Admissible {
                    candidate,
                    error_band,
                });
            }
            let nodes = domain.interior_nodes();
            let (best, _) = eig
                .first_mode
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| {
                    if v > acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                });
            let (r, c) = nodes[best];
            let peak = eig.first_mode[best];
            Ok(Admissibility::Inadmissible {
                witness: domain.node_position(r, c).to_vec(),
                residual: (k2 - eig.eigenvalues[0]) * peak,
                error_band,
            })
        }
        other => Err(SupersolutionError::Unsupported(other.to_string())),
    }
}
