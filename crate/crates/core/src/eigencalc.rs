//! Dirichlet eigenvalues of `-Δ` and the wavenumber thresholds built on them.
//!
//! Closed forms cover balls, rectangles and intervals. Anything else is a
//! [`GridDomain`]: a mask of interior nodes on a uniform lattice, discretized
//! with the 5-point Laplacian (exterior neighbours are Dirichlet zeros) and
//! solved by block inverse iteration on a skyline Cholesky factor.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::{bessel_j, gamma0};

/// Largest number of eigenvalues [`fd_dirichlet_eigs`] computes.
pub const MAX_EIGENVALUES: usize = 10;
/// Bounding boxes more elongated than this are rejected.
pub const MAX_ASPECT_RATIO: f64 = 1e3;
/// Successive Ritz values must agree to this relative tolerance.
pub const RAYLEIGH_TOLERANCE: f64 = 1e-10;
/// Relative eigen-residual `|Ax - θx| / θ` required at convergence.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
pub const ITERATION_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("no closed form for region {0}")]
    Unsupported(String),
    #[error("region parameter {name} = {value} must be positive and finite")]
    Parameter { name: &'static str, value: f64 },
    #[error("grid domain has no interior nodes")]
    Empty,
    #[error("grid domain interior splits into {0} components")]
    Disconnected(usize),
    #[error("grid domain aspect ratio {0:.1} exceeds {MAX_ASPECT_RATIO}")]
    TooThin(f64),
    #[error("eigenvalue count {count} outside 1..={max}")]
    Count { count: usize, max: usize },
    #[error("inverse iteration did not converge in {iterations} steps (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("spacing {spacing} does not divide length {length}")]
    Spacing { spacing: f64, length: f64 },
    #[error("mask format: {0}")]
    Format(String),
}

/// Spatial dimension of a ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn value(self) -> u32 {
        match self {
            Self::Two => 2,
            Self::Three => 3,
        }
    }

    pub fn from_value(m: u32) -> Option<Self> {
        match m {
            2 => Some(Self::Two),
            3 => Some(Self::Three),
            _ => None,
        }
    }
}

/// Volume of the unit ball, `ω_2 = π`, `ω_3 = 4π/3`.
pub fn unit_ball_volume(dim: Dimension) -> f64 {
    match dim {
        Dimension::Two => PI,
        Dimension::Three => 4.0 * PI / 3.0,
    }
}

/// A-priori region containing the obstacles.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSpec {
    /// Open ball of radius `radius` centered at the origin.
    Ball { dim: Dimension, radius: f64 },
    /// `]-r, r[ × ]-h, h[`.
    Rect { r: f64, h: f64 },
    /// `]-h, h[`.
    Interval { h: f64 },
    /// `ℝ × ]-r, r[ × ]-h, h[`.
    CylinderOverRect { r: f64, h: f64 },
    /// `ℝ² × ]-h, h[`.
    SlabOverInterval { h: f64 },
    Grid(GridDomain),
}

impl RegionSpec {
    pub fn validate(&self) -> Result<(), EigenError> {
        let check = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(EigenError::Parameter { name, value })
            }
        };
        match self {
            Self::Ball { radius, .. } => check("radius", *radius),
            Self::Rect { r, h } | Self::CylinderOverRect { r, h } => {
                check("R", *r)?;
                check("h", *h)
            }
            Self::Interval { h } | Self::SlabOverInterval { h } => check("h", *h),
            Self::Grid(g) => g.check(),
        }
    }

    /// True for the variants with a bounded closure.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, Self::CylinderOverRect { .. } | Self::SlabOverInterval { .. })
    }
}

impl fmt::Display for RegionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ball { dim, radius } => write!(f, "ball {} {}", dim.value(), radius),
            Self::Rect { r, h } => write!(f, "rect {r} {h}"),
            Self::Interval { h } => write!(f, "interval {h}"),
            Self::CylinderOverRect { r, h } => write!(f, "cylinder {r} {h}"),
            Self::SlabOverInterval { h } => write!(f, "slab {h}"),
            Self::Grid(g) => write!(f, "grid {}x{} spacing {}", g.rows, g.cols, g.spacing),
        }
    }
}

impl RegionSpec {
    /// Parses `ball m R`, `rect R h`, `interval h`, `cylinder R h` or
    /// `slab h` from pre-split tokens. Masks are read with
    /// [`GridDomain::from_text`].
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self, EigenError> {
        let Some((kind, rest)) = tokens.split_first() else {
            return Err(EigenError::Format("empty region".into()));
        };
        let kind = kind.as_ref().to_ascii_lowercase();
        let numbers = |want: usize| -> Result<Vec<f64>, EigenError> {
            if rest.len() != want {
                return Err(EigenError::Format(format!(
                    "region `{kind}` takes {want} numbers, got {}",
                    rest.len()
                )));
            }
            rest.iter()
                .map(|t| {
                    t.as_ref()
                        .parse::<f64>()
                        .map_err(|_| EigenError::Format(format!("bad number `{}`", t.as_ref())))
                })
                .collect()
        };
        let region = match kind.as_str() {
            "ball" => {
                let v = numbers(2)?;
                let dim = Dimension::from_value(v[0] as u32)
                    .filter(|_| v[0].fract() == 0.0)
                    .ok_or_else(|| EigenError::Format(format!("ball dimension {} not 2 or 3", v[0])))?;
                Self::Ball { dim, radius: v[1] }
            }
            "rect" => {
                let v = numbers(2)?;
                Self::Rect { r: v[0], h: v[1] }
            }
            "interval" => Self::Interval { h: numbers(1)?[0] },
            "cylinder" => {
                let v = numbers(2)?;
                Self::CylinderOverRect { r: v[0], h: v[1] }
            }
            "slab" => Self::SlabOverInterval { h: numbers(1)?[0] },
            other => return Err(EigenError::Format(format!("unknown region `{other}`"))),
        };
        region.validate()?;
        Ok(region)
    }
}

impl FromStr for RegionSpec {
    type Err = EigenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        Self::from_tokens(&tokens)
    }
}

/// Interior-node mask on a uniform lattice. Node `(row, col)` sits at
/// `origin + spacing * (col, row)`; nodes outside the mask are Dirichlet zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
    mask: Vec<bool>,
}

impl GridDomain {
    /// Builds and validates a mask (`mask[row * cols + col]`).
    pub fn new(
        rows: usize,
        cols: usize,
        spacing: f64,
        origin: [f64; 2],
        mask: Vec<bool>,
    ) -> Result<Self, EigenError> {
        if mask.len() != rows * cols {
            return Err(EigenError::Format(format!(
                "mask has {} entries, expected {rows}x{cols}",
                mask.len()
            )));
        }
        let g = Self {
            rows,
            cols,
            spacing,
            origin,
            mask,
        };
        g.check()?;
        Ok(g)
    }

    /// Lattice with `origin = (spacing, spacing)`, the convention of mask files:
    /// the mask then tiles `]0, (cols+1)h[ × ]0, (rows+1)h[`.
    pub fn with_default_origin(
        rows: usize,
        cols: usize,
        spacing: f64,
        mask: Vec<bool>,
    ) -> Result<Self, EigenError> {
        Self::new(rows, cols, spacing, [spacing, spacing], mask)
    }

    /// `]x0, x0+width[ × ]y0, y0+height[`; spacing must divide both sides.
    pub fn rectangle(
        lower: [f64; 2],
        width: f64,
        height: f64,
        spacing: f64,
    ) -> Result<Self, EigenError> {
        let cells = |length: f64| -> Result<usize, EigenError> {
            if !(length > 0.0 && length.is_finite()) {
                return Err(EigenError::Parameter {
                    name: "length",
                    value: length,
                });
            }
            let n = (length / spacing).round();
            if n < 2.0 || (n * spacing - length).abs() > 1e-9 * length {
                return Err(EigenError::Spacing { spacing, length });
            }
            Ok(n as usize)
        };
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(EigenError::Parameter {
                name: "spacing",
                value: spacing,
            });
        }
        let nx = cells(width)?;
        let ny = cells(height)?;
        Self::new(
            ny - 1,
            nx - 1,
            spacing,
            [lower[0] + spacing, lower[1] + spacing],
            vec![true; (nx - 1) * (ny - 1)],
        )
    }

    /// Square `]0, side[²`.
    pub fn square(side: f64, spacing: f64) -> Result<Self, EigenError> {
        Self::rectangle([0.0, 0.0], side, side, spacing)
    }

    /// Nodes `(i h, j h)` with `x² + y² < radius²`.
    pub fn disk(radius: f64, spacing: f64) -> Result<Self, EigenError> {
        Self::from_predicate([-radius, -radius], [radius, radius], spacing, |x, y| {
            x * x + y * y < radius * radius
        })
    }

    /// Lattice nodes `(i h, j h)` inside `[lower, upper]` where `inside` holds.
    pub fn from_predicate(
        lower: [f64; 2],
        upper: [f64; 2],
        spacing: f64,
        inside: impl Fn(f64, f64) -> bool,
    ) -> Result<Self, EigenError> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(EigenError::Parameter {
                name: "spacing",
                value: spacing,
            });
        }
        let i0 = (lower[0] / spacing).floor() as i64;
        let i1 = (upper[0] / spacing).ceil() as i64;
        let j0 = (lower[1] / spacing).floor() as i64;
        let j1 = (upper[1] / spacing).ceil() as i64;
        let cols = (i1 - i0 + 1) as usize;
        let rows = (j1 - j0 + 1) as usize;
        let mut mask = Vec::with_capacity(rows * cols);
        for j in j0..=j1 {
            for i in i0..=i1 {
                mask.push(inside(i as f64 * spacing, j as f64 * spacing));
            }
        }
        Self::new(
            rows,
            cols,
            spacing,
            [i0 as f64 * spacing, j0 as f64 * spacing],
            mask,
        )
    }

    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && self.mask[row * self.cols + col]
    }

    pub fn interior_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Area of the interior cells, `count · h²`.
    pub fn area(&self) -> f64 {
        self.interior_count() as f64 * self.spacing * self.spacing
    }

    pub fn node_position(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + col as f64 * self.spacing,
            self.origin[1] + row as f64 * self.spacing,
        ]
    }

    /// Interior nodes in row-major order.
    pub fn interior_nodes(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| self.mask[r * self.cols + c])
            .collect()
    }

    fn components(&self) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut count = 0;
        for start in 0..self.mask.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(idx) = queue.pop_front() {
                let (r, c) = (idx / self.cols, idx % self.cols);
                let mut visit = |rr: usize, cc: usize| {
                    let n = rr * self.cols + cc;
                    if self.mask[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                };
                if r > 0 {
                    visit(r - 1, c);
                }
                if r + 1 < self.rows {
                    visit(r + 1, c);
                }
                if c > 0 {
                    visit(r, c - 1);
                }
                if c + 1 < self.cols {
                    visit(r, c + 1);
                }
            }
        }
        count
    }

    fn check(&self) -> Result<(), EigenError> {
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(EigenError::Parameter {
                name: "spacing",
                value: self.spacing,
            });
        }
        let nodes = self.interior_nodes();
        if nodes.is_empty() {
            return Err(EigenError::Empty);
        }
        let components = self.components();
        if components > 1 {
            return Err(EigenError::Disconnected(components));
        }
        let (rmin, rmax) = nodes
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), &(r, _)| (lo.min(r), hi.max(r)));
        let (cmin, cmax) = nodes
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), &(_, c)| (lo.min(c), hi.max(c)));
        let height = (rmax - rmin + 2) as f64;
        let width = (cmax - cmin + 2) as f64;
        let aspect = (width / height).max(height / width);
        if aspect > MAX_ASPECT_RATIO {
            return Err(EigenError::TooThin(aspect));
        }
        Ok(())
    }

    /// Every other node (odd indices) at twice the spacing.
    pub fn coarsened(&self) -> Option<Self> {
        let rows = self.rows / 2;
        let cols = self.cols / 2;
        if rows == 0 || cols == 0 {
            return None;
        }
        let mut mask = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                mask.push(self.mask[(2 * r + 1) * self.cols + 2 * c + 1]);
            }
        }
        if !mask.iter().any(|&m| m) {
            return None;
        }
        Some(Self {
            rows,
            cols,
            spacing: 2.0 * self.spacing,
            origin: [
                self.origin[0] + self.spacing,
                self.origin[1] + self.spacing,
            ],
            mask,
        })
    }

    /// Plain-text mask: `rows cols spacing`, then one line of `0`/`1` per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.spacing);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(if self.mask[r * self.cols + c] { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Reads the plain-text mask format; the origin is `(spacing, spacing)`.
    pub fn from_text(text: &str) -> Result<Self, EigenError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| EigenError::Format("empty input".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(EigenError::Format(format!(
                "header `{header}` must read `rows cols spacing`"
            )));
        }
        let parse_count = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| EigenError::Format(format!("bad count `{s}`")))
        };
        let rows = parse_count(fields[0])?;
        let cols = parse_count(fields[1])?;
        let spacing = fields[2]
            .parse::<f64>()
            .map_err(|_| EigenError::Format(format!("bad spacing `{}`", fields[2])))?;
        let mut mask = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| EigenError::Format(format!("missing row {r}")))?;
            if line.len() != cols {
                return Err(EigenError::Format(format!(
                    "row {r} has {} characters, expected {cols}",
                    line.len()
                )));
            }
            for ch in line.chars() {
                match ch {
                    '0' => mask.push(false),
                    '1' => mask.push(true),
                    other => {
                        return Err(EigenError::Format(format!(
                            "unexpected character `{other}` in row {r}"
                        )))
                    }
                }
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(EigenError::Format("trailing content after mask rows".into()));
        }
        Self::with_default_origin(rows, cols, spacing, mask)
    }
}

impl FromStr for GridDomain {
    type Err = EigenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_text(s)
    }
}

/// Eigenvalues of the discrete Dirichlet Laplacian with a two-grid error
/// estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    /// Ascending eigenvalues of the 5-point operator on the given grid.
    pub eigenvalues: Vec<f64>,
    pub spacing: f64,
    /// `|λ_h - λ_2h|` per eigenvalue; the eigenvalue itself when no coarse
    /// grid is available.
    pub error_estimates: Vec<f64>,
    /// Richardson values `(4λ_h - λ_2h) / 3`.
    pub extrapolated: Vec<f64>,
    /// First eigenvector on the interior nodes (row-major), positive, max 1.
    #[serde(skip)]
    pub first_mode: Vec<f64>,
    pub iterations: usize,
}

impl EigenResult {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Cholesky factor of a symmetric positive definite matrix in envelope
/// (skyline) storage; fill-in stays inside the envelope.
struct SkylineCholesky {
    /// first stored column of each row
    first: Vec<usize>,
    /// start of each row in `l`; row `i` holds `L[i][first[i]..=i]`
    start: Vec<usize>,
    l: Vec<f64>,
}

impl SkylineCholesky {
    fn factor(first: Vec<usize>, entry: impl Fn(usize, usize) -> f64) -> Option<Self> {
        let n = first.len();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for (i, &f) in first.iter().enumerate() {
            start.push(start[i] + i + 1 - f);
        }
        let mut l = vec![0.0; start[n]];
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let lo = fi.max(first[j]);
                let (done, row) = l.split_at_mut(start[i]);
                let row_i = &row[lo - fi..j - fi];
                let row_j: &[f64] = if j == i {
                    row_i
                } else {
                    &done[start[j] + lo - first[j]..start[j] + j - first[j]]
                };
                let s = entry(i, j) - dot(row_i, row_j);
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    row[i - fi] = s.sqrt();
                } else {
                    row[j - fi] = s / done[start[j + 1] - 1];
                }
            }
        }
        Some(Self { first, start, l })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.l[self.start[i]..self.start[i + 1]]
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            let row = self.row(i);
            let (off, diag) = row.split_at(row.len() - 1);
            x[i] = (x[i] - dot(off, &x[self.first[i]..i])) / diag[0];
        }
        for i in (0..x.len()).rev() {
            let row = self.row(i);
            let (off, diag) = row.split_at(row.len() - 1);
            x[i] /= diag[0];
            let xi = x[i];
            for (t, v) in x[self.first[i]..i].iter_mut().zip(off) {
                *t -= v * xi;
            }
        }
    }
}

/// 5-point operator on the interior nodes, numbered along the shorter side.
struct GridOperator {
    n: usize,
    diag: f64,
    off: f64,
    neighbours: Vec<Vec<usize>>,
    /// position of each interior node in the solver numbering, row-major order
    order: Vec<usize>,
}

impl GridOperator {
    fn new(domain: &GridDomain) -> Self {
        let transpose = domain.cols > domain.rows;
        let (outer, inner) = if transpose {
            (domain.cols, domain.rows)
        } else {
            (domain.rows, domain.cols)
        };
        let at = |o: usize, i: usize| {
            if transpose {
                domain.is_interior(i, o)
            } else {
                domain.is_interior(o, i)
            }
        };
        let mut index = vec![usize::MAX; outer * inner];
        let mut n = 0;
        for o in 0..outer {
            for i in 0..inner {
                if at(o, i) {
                    index[o * inner + i] = n;
                    n += 1;
                }
            }
        }
        let mut neighbours = vec![Vec::with_capacity(4); n];
        for o in 0..outer {
            for i in 0..inner {
                let me = index[o * inner + i];
                if me == usize::MAX {
                    continue;
                }
                let mut link = |oo: usize, ii: usize| {
                    let other = index[oo * inner + ii];
                    if other != usize::MAX {
                        neighbours[me].push(other);
                    }
                };
                if o > 0 {
                    link(o - 1, i);
                }
                if o + 1 < outer {
                    link(o + 1, i);
                }
                if i > 0 {
                    link(o, i - 1);
                }
                if i + 1 < inner {
                    link(o, i + 1);
                }
            }
        }
        let order = domain
            .interior_nodes()
            .into_iter()
            .map(|(r, c)| {
                if transpose {
                    index[c * inner + r]
                } else {
                    index[r * inner + c]
                }
            })
            .collect();
        let h2 = domain.spacing * domain.spacing;
        Self {
            n,
            diag: 4.0 / h2,
            off: -1.0 / h2,
            neighbours,
            order,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = self.diag * x[i];
            for &j in &self.neighbours[i] {
                s += self.off * x[j];
            }
            y[i] = s;
        }
    }

    fn factor(&self) -> Option<SkylineCholesky> {
        let first = (0..self.n)
            .map(|i| self.neighbours[i].iter().fold(i, |m, &j| m.min(j)))
            .collect();
        SkylineCholesky::factor(first, |i, j| {
            if i == j {
                self.diag
            } else if self.neighbours[i].contains(&j) {
                self.off
            } else {
                0.0
            }
        })
    }
}

struct RawEigen {
    values: Vec<f64>,
    first_mode: Vec<f64>,
    iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormalizes the columns in place (two passes of modified Gram-Schmidt).
fn orthonormalize(block: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for i in 0..block.len() {
            for j in 0..i {
                let (head, tail) = block.split_at_mut(i);
                let proj = dot(&tail[0], &head[j]);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= proj * y;
                }
            }
            let norm = dot(&block[i], &block[i]).sqrt();
            for x in block[i].iter_mut() {
                *x /= norm;
            }
        }
    }
}

/// Block inverse iteration with Rayleigh-Ritz: the block is kept
/// orthonormal, so lower eigenvectors are deflated from the higher ones.
fn inverse_iteration(domain: &GridDomain, count: usize) -> Result<RawEigen, EigenError> {
    let op = GridOperator::new(domain);
    let n = op.n;
    let block_size = (count + 4).min(n);
    let chol = op.factor().ok_or(EigenError::NonConvergence {
        iterations: 0,
        residual: f64::NAN,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1a1);
    let mut block: Vec<Vec<f64>> = (0..block_size)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut block);
    let mut previous = vec![f64::INFINITY; block_size];
    let mut worst_residual = f64::INFINITY;
    let mut image = vec![vec![0.0; n]; block_size];
    for iteration in 1..=ITERATION_CAP {
        for v in block.iter_mut() {
            chol.solve_in_place(v);
        }
        orthonormalize(&mut block);
        for (v, av) in block.iter().zip(image.iter_mut()) {
            op.apply(v, av);
        }
        let h = DMatrix::from_fn(block_size, block_size, |i, j| dot(&block[i], &image[j]));
        let h = 0.5 * (&h + h.transpose());
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block_size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let ritz: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let rotate = |vs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&col| {
                    let mut out = vec![0.0; n];
                    for (k, v) in vs.iter().enumerate() {
                        let c = eig.eigenvectors[(k, col)];
                        for (o, x) in out.iter_mut().zip(v) {
                            *o += c * x;
                        }
                    }
                    out
                })
                .collect()
        };
        block = rotate(&block);
        image = rotate(&image);

        let settled = (0..count)
            .all(|i| (ritz[i] - previous[i]).abs() <= RAYLEIGH_TOLERANCE * ritz[i].abs());
        worst_residual = (0..count)
            .map(|i| {
                let r: f64 = image[i]
                    .iter()
                    .zip(&block[i])
                    .map(|(a, x)| (a - ritz[i] * x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                r / ritz[i]
            })
            .fold(0.0, f64::max);
        previous = ritz.clone();
        if settled && worst_residual <= RESIDUAL_TOLERANCE {
            let mut mode = block[0].clone();
            let sum: f64 = mode.iter().sum();
            let peak = if sum < 0.0 {
                mode.iter().cloned().fold(f64::INFINITY, f64::min)
            } else {
                mode.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            };
            for v in mode.iter_mut() {
                *v /= peak;
            }
            let first_mode = op.order.iter().map(|&i| mode[i]).collect();
            return Ok(RawEigen {
                values: ritz[..count].to_vec(),
                first_mode,
                iterations: iteration,
            });
        }
    }
    Err(EigenError::NonConvergence {
        iterations: ITERATION_CAP,
        residual: worst_residual,
    })
}

/// Smallest `count` Dirichlet eigenvalues of the 5-point Laplacian on the
/// mask, with a two-grid error estimate and Richardson extrapolation.
pub fn fd_dirichlet_eigs(domain: &GridDomain, count: usize) -> Result<EigenResult, EigenError> {
    domain.check()?;
    if count == 0 || count > MAX_EIGENVALUES {
        return Err(EigenError::Count {
            count,
            max: MAX_EIGENVALUES,
        });
    }
    if count > domain.interior_count() {
        return Err(EigenError::Count {
            count,
            max: domain.interior_count(),
        });
    }
    let fine = inverse_iteration(domain, count)?;
    let coarse = domain
        .coarsened()
        .filter(|c| c.interior_count() >= count + 4)
        .map(|c| inverse_iteration(&c, count))
        .transpose()?;
    let (error_estimates, extrapolated) = match &coarse {
        Some(c) => fine
            .values
            .iter()
            .zip(&c.values)
            .map(|(f, c)| ((f - c).abs(), (4.0 * f - c) / 3.0))
            .unzip(),
        None => (fine.values.clone(), fine.values.clone()),
    };
    Ok(EigenResult {
        eigenvalues: fine.values,
        spacing: domain.spacing,
        error_estimates,
        extrapolated,
        first_mode: fine.first_mode,
        iterations: fine.iterations,
    })
}

/// Observed order `log2((λ_h1 - λ_h2) / (λ_h2 - λ_h3))` for spacings halving
/// from `h1` to `h3`.
pub fn convergence_order(coarse: f64, medium: f64, fine: f64) -> f64 {
    ((coarse - medium) / (medium - fine)).log2()
}

/// `λ_1` of the bounded region by closed form.
pub fn lambda1_closed_form(region: &RegionSpec) -> Result<f64, EigenError> {
    region.validate()?;
    match region {
        Region::Ball { dim, radius } => Ok(match dim {
            Dimension::Two => (gamma0() / radius).powi(2),
            Dimension::Three => (PI / radius).powi(2),
        }),
        Region::Rect { r, h } => Ok((PI / 2.0).powi(2) * (1.0 / (h * h) + 1.0 / (r * r))),
        Region::Interval { h } => Ok((PI / (2.0 * h)).powi(2)),
        other => Err(EigenError::Unsupported(other.to_string())),
    }
}

use RegionSpec as Region;

/// Largest admissible wavenumber `k₀`, the square root of `λ_1` of the
/// region's bounded factor.
pub fn uniqueness_threshold(region: &RegionSpec) -> Result<f64, EigenError> {
    region.validate()?;
    match region {
        Region::Ball { dim, radius } => Ok(match dim {
            Dimension::Two => gamma0() / radius,
            Dimension::Three => PI / radius,
        }),
        Region::Rect { r, h } | Region::CylinderOverRect { r, h } => {
            Ok(PI / 2.0 * (1.0 / (h * h) + 1.0 / (r * r)).sqrt())
        }
        Region::Interval { h } | Region::SlabOverInterval { h } => Ok(PI / (2.0 * h)),
        Region::Grid(g) => Ok(fd_dirichlet_eigs(g, 1)?.extrapolated[0].sqrt()),
    }
}

/// `λ_1` of the bounded factor: closed form, or the extrapolated FD value.
pub fn bounded_factor_lambda1(region: &RegionSpec) -> Result<f64, EigenError> {
    match region {
        Region::CylinderOverRect { r, h } => lambda1_closed_form(&Region::Rect { r: *r, h: *h }),
        Region::SlabOverInterval { h } => lambda1_closed_form(&Region::Interval { h: *h }),
        Region::Grid(g) => Ok(fd_dirichlet_eigs(g, 1)?.extrapolated[0]),
        other => lambda1_closed_form(other),
    }
}

/// First zero of `J_1`.
pub fn j1_first_zero() -> f64 {
    bisect(|x| bessel_j(1, x), 3.0, 4.5)
}

/// First positive zero of the spherical Bessel `j_1`, i.e. of `tan x - x`.
pub fn spherical_j1_first_zero() -> f64 {
    bisect(|x| x.sin() - x * x.cos(), 4.0, 4.7)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `λ_2` of a ball: `(j_{1,1}/R)²` in 2D, `(x_{1,1}/R)²` in 3D.
pub fn lambda2_ball(dim: Dimension, radius: f64) -> f64 {
    match dim {
        Dimension::Two => (j1_first_zero() / radius).powi(2),
        Dimension::Three => (spherical_j1_first_zero() / radius).powi(2),
    }
}

/// The improved bound `k < √λ_2`: closed form for balls, FD (extrapolated)
/// for grid domains.
pub fn gintides_threshold(region: &RegionSpec) -> Result<f64, EigenError> {
    region.validate()?;
    match region {
        Region::Ball { dim, radius } => Ok(lambda2_ball(*dim, *radius).sqrt()),
        Region::Grid(g) => Ok(fd_dirichlet_eigs(g, 2)?.extrapolated[1].sqrt()),
        other => Err(EigenError::Unsupported(other.to_string())),
    }
}

/// `ω_m k^{-m}`, the volume below which the difference of two nested
/// obstacles is too small to host a Dirichlet eigenfunction at `k`.
pub fn volume_bound(k: f64, dim: Dimension) -> f64 {
    unit_ball_volume(dim) * k.powi(-(dim.value() as i32))
}
