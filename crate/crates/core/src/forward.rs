//! Exterior sound-soft scattering in the plane.
//!
//! The scattered field is the combined layer
//!
//! ```text
//! w(x) = ∫ ( ∂Φ(x,y)/∂ν(y) - iη Φ(x,y) ) ψ(y) ds(y),   Φ = (i/4) H0(k|x-y|),  η = k,
//! ```
//!
//! which radiates by construction and gives a boundary equation that is
//! uniquely solvable for every `k > 0`. The equation is discretized on
//! `N = 2m` equispaced nodes; kernels are split as
//! `K1(t,τ) ln(4 sin²((t-τ)/2)) + K2(t,τ)` and the log part integrated with
//! the trigonometric product weights `R_j(t)`.
//!
//! Far fields use `w(r x̂) = e^{ikr} F(x̂) / √r + O(r^{-3/2})`, so that
//! `F(x̂) = e^{-iπ/4} / √(8πk) ∫ (k ν·x̂ + η) e^{-ik x̂·y} ψ(y) ds(y)`.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_4, PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{min_enclosing_ball, perimeter, BoundaryCurve, Jet, Point};
use crate::specfun::{self, jy01, EULER_GAMMA};

/// Largest `k · diameter` the solver accepts.
pub const MAX_ELECTRICAL_SIZE: f64 = 50.0;
/// Minimum nodes per wavelength along the boundary.
pub const NODES_PER_WAVELENGTH: f64 = 6.0;
/// Required relative residual of the dense solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Default number of far-field observation angles.
pub const DEFAULT_ANGLES: usize = 360;
/// Query points must keep this many node spacings away from the boundary.
pub const PROXIMITY_SPACINGS: f64 = 3.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForwardError {
    #[error("wavenumber must be positive and finite, got {0}")]
    Wavenumber(f64),
    #[error("incident direction must be a unit vector, got ({0}, {1})")]
    Direction(f64, f64),
    #[error("node count {0} must be even and at least 8")]
    NodeCount(usize),
    #[error("{n} nodes cannot resolve k = {k} on this curve (need at least {required})")]
    UnderResolved { n: usize, k: f64, required: usize },
    #[error("k * diameter = {size:.3} exceeds the supported envelope {max}")]
    TooLarge { size: f64, max: f64 },
    #[error("dense solve failed: relative residual {residual:.3e}, condition estimate {condition:.3e}")]
    Singular { residual: f64, condition: f64 },
    #[error("density does not belong to this problem: {0}")]
    Mismatch(String),
    #[error("point ({x}, {y}) is {distance:.3e} from the boundary, minimum is {required:.3e}")]
    Proximity {
        x: f64,
        y: f64,
        distance: f64,
        required: f64,
    },
    #[error("point ({x}, {y}) lies inside the obstacle")]
    Interior { x: f64, y: f64 },
    #[error("series truncation {given} below the required {required}")]
    Truncation { given: usize, required: usize },
    #[error("disk radius must be positive, got {0}")]
    Radius(f64),
    #[error("angle grid needs at least one sample")]
    EmptyGrid,
}

/// Wavenumber and incident direction of the plane wave `e^{ik x·d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub k: f64,
    pub d: [f64; 2],
}

impl WaveParams {
    pub fn new(k: f64, d: [f64; 2]) -> Result<Self, ForwardError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(ForwardError::Wavenumber(k));
        }
        if !((d[0].hypot(d[1]) - 1.0).abs() <= 1e-14) {
            return Err(ForwardError::Direction(d[0], d[1]));
        }
        Ok(Self { k, d })
    }

    /// Incident direction `(cos θ, sin θ)`.
    pub fn from_angle(k: f64, theta: f64) -> Result<Self, ForwardError> {
        let (s, c) = theta.sin_cos();
        Self::new(k, [c, s])
    }

    pub fn direction_angle(&self) -> f64 {
        self.d[1].atan2(self.d[0])
    }

    pub fn incident(&self, x: Point) -> Complex64 {
        Complex64::from_polar(1.0, self.k * (x[0] * self.d[0] + x[1] * self.d[1]))
    }

    /// Coupling parameter of the combined layer.
    pub fn coupling(&self) -> f64 {
        self.k
    }
}

/// Layer density on the equispaced nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub nodes: Vec<f64>,
    pub values: Vec<Complex64>,
    pub n: usize,
    /// Relative residual `|Aψ - b| / |b|` of the solve (0 for synthetic densities).
    pub residual: f64,
    curve: BoundaryCurve,
    wave: WaveParams,
}

impl Density {
    /// The zero density; its scattered field vanishes identically.
    pub fn zeros(curve: &BoundaryCurve, wave: WaveParams, n: usize) -> Result<Self, ForwardError> {
        check_node_count(n)?;
        Ok(Self {
            nodes: node_params(n),
            values: vec![Complex64::new(0.0, 0.0); n],
            n,
            residual: 0.0,
            curve: curve.clone(),
            wave,
        })
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn wave(&self) -> WaveParams {
        self.wave
    }

    fn check(&self, curve: &BoundaryCurve, wave: &WaveParams) -> Result<(), ForwardError> {
        if &self.curve != curve {
            return Err(ForwardError::Mismatch(format!(
                "density solved on `{}`, evaluated on `{}`",
                self.curve, curve
            )));
        }
        if &self.wave != wave {
            return Err(ForwardError::Mismatch(format!(
                "density solved for k = {}, d = {:?}; requested k = {}, d = {:?}",
                self.wave.k, self.wave.d, wave.k, wave.d
            )));
        }
        Ok(())
    }
}

/// Uniform periodic grid of observation angles `θ_i = 2πi/count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleGrid {
    pub count: usize,
}

impl AngleGrid {
    pub fn uniform(count: usize) -> Result<Self, ForwardError> {
        if count == 0 {
            return Err(ForwardError::EmptyGrid);
        }
        Ok(Self { count })
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| TAU * i as f64 / self.count as f64)
            .collect()
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            count: DEFAULT_ANGLES,
        }
    }
}

/// Far-field samples on a uniform angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub angles: Vec<f64>,
    pub values: Vec<Complex64>,
    pub wave: WaveParams,
}

impl FarFieldPattern {
    /// `(∫ |F|² dθ)^{1/2}` by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        l2_on_circle(self.values.iter().map(|v| v.norm_sqr()), self.values.len())
    }

    /// `(∫ |F - G|² dθ)^{1/2}`; both patterns must share the angle grid.
    pub fn l2_distance(&self, other: &Self) -> Result<f64, ForwardError> {
        if self.values.len() != other.values.len() {
            return Err(ForwardError::Mismatch(format!(
                "angle grids differ: {} vs {} samples",
                self.values.len(),
                other.values.len()
            )));
        }
        Ok(l2_on_circle(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).norm_sqr()),
            self.values.len(),
        ))
    }

    /// Relative L² distance `|F - G| / |G|`.
    pub fn relative_l2_distance(&self, reference: &Self) -> Result<f64, ForwardError> {
        Ok(self.l2_distance(reference)? / reference.l2_norm())
    }
}

fn l2_on_circle(squares: impl Iterator<Item = f64>, count: usize) -> f64 {
    (squares.sum::<f64>() * TAU / count as f64).sqrt()
}

fn check_node_count(n: usize) -> Result<(), ForwardError> {
    if n < 8 || n % 2 != 0 {
        return Err(ForwardError::NodeCount(n));
    }
    Ok(())
}

fn node_params(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// Fewest nodes accepted for wavenumber `k` on `curve`.
pub fn minimum_nodes(curve: &BoundaryCurve, k: f64) -> usize {
    let wavelengths = k * perimeter(curve) / TAU;
    let n = (NODES_PER_WAVELENGTH * wavelengths).ceil() as usize;
    let n = n.max(8);
    n + (n & 1)
}

/// Log-quadrature weights `R(t - t_j)` for `N = 2m` nodes as a function of
/// the offset `s = t - t_j`.
fn log_weight(m: usize, s: f64) -> f64 {
    let mf = m as f64;
    let mut sum = 0.0;
    for p in 1..m {
        sum += (p as f64 * s).cos() / p as f64;
    }
    -TAU / mf * sum - PI / (mf * mf) * (mf * s).cos()
}

/// Kernel pieces `(K1, K2)` of the combined operator between the
/// collocation point `x` (parameter `t`) and source node `y` (parameter `tau`).
struct KernelParts {
    log: Complex64,
    smooth: Complex64,
}

fn kernel(k: f64, eta: f64, x: &Jet, t: f64, y: &Jet, tau: f64) -> KernelParts {
    let speed = y.dx[0].hypot(y.dx[1]);
    let diff = [x.x[0] - y.x[0], x.x[1] - y.x[1]];
    let r = diff[0].hypot(diff[1]);
    let gap = (t - tau).rem_euclid(TAU);
    if r == 0.0 || gap == 0.0 {
        // diagonal limits
        let curvature_term =
            (y.dx[1] * y.ddx[0] - y.dx[0] * y.ddx[1]) / (TAU * speed * speed);
        let m1 = -speed / TAU;
        let m2 = Complex64::new(
            -(EULER_GAMMA + (0.5 * k * speed).ln()) * FRAC_1_PI * speed,
            0.5 * speed,
        );
        return KernelParts {
            log: -I * eta * m1,
            smooth: curvature_term - I * eta * m2,
        };
    }
    let q = y.dx[1] * diff[0] - y.dx[0] * diff[1];
    let b = jy01(k * r);
    let h0 = Complex64::new(b.j0, b.y0);
    let h1 = Complex64::new(b.j1, b.y1);
    let logt = (4.0 * (0.5 * gap).sin().powi(2)).ln();

    let l = I * (0.5 * k * q / r) * h1;
    let l1 = -k * q * b.j1 / (TAU * r);
    let m = 0.5 * I * h0 * speed;
    let m1 = -b.j0 * speed / TAU;
    let l2 = l - l1 * logt;
    let m2 = m - m1 * logt;
    KernelParts {
        log: l1 - I * eta * m1,
        smooth: l2 - I * eta * m2,
    }
}

fn check_resolution(curve: &BoundaryCurve, wave: &WaveParams, n: usize) -> Result<(), ForwardError> {
    check_node_count(n)?;
    let size = wave.k * 2.0 * min_enclosing_ball(curve).1;
    if size > MAX_ELECTRICAL_SIZE {
        return Err(ForwardError::TooLarge {
            size,
            max: MAX_ELECTRICAL_SIZE,
        });
    }
    let required = minimum_nodes(curve, wave.k);
    if n < required {
        return Err(ForwardError::UnderResolved {
            n,
            k: wave.k,
            required,
        });
    }
    Ok(())
}

/// Assembles the Nyström matrix `I + Σ_j (R_{|i-j|} K1 + (π/m) K2)`.
fn assemble(curve: &BoundaryCurve, wave: &WaveParams, n: usize) -> (DMatrix<Complex64>, Vec<Jet>) {
    let m = n / 2;
    let params = node_params(n);
    let jets: Vec<Jet> = params.iter().map(|&t| curve.jet(t)).collect();
    let weights: Vec<f64> = (0..n)
        .map(|d| log_weight(m, TAU * d as f64 / n as f64))
        .collect();
    let (k, eta) = (wave.k, wave.coupling());
    let smooth_weight = PI / m as f64;
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let parts = kernel(k, eta, &jets[i], params[i], &jets[j], params[j]);
                    let d = if i >= j { i - j } else { j - i };
                    let mut a = weights[d] * parts.log + smooth_weight * parts.smooth;
                    if i == j {
                        a += 1.0;
                    }
                    a
                })
                .collect()
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    (matrix, jets)
}

fn vector_norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the combined-field boundary equation on `n` nodes.
pub fn solve_exterior_dirichlet(
    curve: &BoundaryCurve,
    wave: WaveParams,
    n: usize,
) -> Result<Density, ForwardError> {
    WaveParams::new(wave.k, wave.d)?;
    check_resolution(curve, &wave, n)?;
    let (matrix, jets) = assemble(curve, &wave, n);
    let rhs = DVector::from_iterator(n, jets.iter().map(|j| -2.0 * wave.incident(j.x)));

    let lu = matrix.clone().lu();
    let condition = {
        let u = lu.u();
        let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    };
    let Some(mut sol) = lu.solve(&rhs) else {
        return Err(ForwardError::Singular {
            residual: f64::INFINITY,
            condition,
        });
    };
    let rhs_norm = vector_norm(&rhs);
    let mut residual = vector_norm(&(&matrix * &sol - &rhs)) / rhs_norm;
    if residual > RESIDUAL_TOLERANCE {
        // one step of iterative refinement
        if let Some(correction) = lu.solve(&(&rhs - &matrix * &sol)) {
            sol += correction;
            residual = vector_norm(&(&matrix * &sol - &rhs)) / rhs_norm;
        }
    }
    if !(residual <= RESIDUAL_TOLERANCE) || sol.iter().any(|z| !z.is_finite()) {
        return Err(ForwardError::Singular {
            residual,
            condition,
        });
    }
    Ok(Density {
        nodes: node_params(n),
        values: sol.iter().copied().collect(),
        n,
        residual,
        curve: curve.clone(),
        wave,
    })
}

/// Far-field values at arbitrary observation angles.
pub fn far_field_at(
    curve: &BoundaryCurve,
    density: &Density,
    wave: WaveParams,
    angles: &[f64],
) -> Result<Vec<Complex64>, ForwardError> {
    density.check(curve, &wave)?;
    let k = wave.k;
    let eta = wave.coupling();
    let jets: Vec<Jet> = density.nodes.iter().map(|&t| curve.jet(t)).collect();
    let prefactor = Complex64::from_polar(1.0, -FRAC_PI_4) / (8.0 * PI * k).sqrt()
        * (TAU / density.n as f64);
    Ok(angles
        .iter()
        .map(|&theta| {
            let (s, c) = theta.sin_cos();
            let sum: Complex64 = jets
                .iter()
                .zip(&density.values)
                .map(|(y, psi)| {
                    let speed = y.dx[0].hypot(y.dx[1]);
                    let normal_dot = y.dx[1] * c - y.dx[0] * s;
                    let phase = Complex64::from_polar(1.0, -k * (c * y.x[0] + s * y.x[1]));
                    (k * normal_dot + eta * speed) * phase * psi
                })
                .sum();
            prefactor * sum
        })
        .collect())
}

/// Far-field pattern of the solved density on a uniform grid.
pub fn far_field(
    curve: &BoundaryCurve,
    density: &Density,
    wave: WaveParams,
    grid: AngleGrid,
) -> Result<FarFieldPattern, ForwardError> {
    let angles = grid.angles();
    let values = far_field_at(curve, density, wave, &angles)?;
    Ok(FarFieldPattern {
        angles,
        values,
        wave,
    })
}

/// Smallest distance from the boundary at which [`total_field`] evaluates.
pub fn minimum_distance(curve: &BoundaryCurve, n: usize) -> f64 {
    PROXIMITY_SPACINGS * TAU / n as f64 * curve.max_speed()
}

/// Total field `u = e^{ik x·d} + w` at exterior points.
pub fn total_field(
    curve: &BoundaryCurve,
    density: &Density,
    wave: WaveParams,
    points: &[Point],
) -> Result<Vec<Complex64>, ForwardError> {
    density.check(curve, &wave)?;
    let required = minimum_distance(curve, density.n);
    for &p in points {
        if curve.contains(p) {
            return Err(ForwardError::Interior { x: p[0], y: p[1] });
        }
        let distance = curve.distance_to(p);
        if distance < required * (1.0 - 1e-9) {
            return Err(ForwardError::Proximity {
                x: p[0],
                y: p[1],
                distance,
                required,
            });
        }
    }
    let k = wave.k;
    let eta = wave.coupling();
    let jets: Vec<Jet> = density.nodes.iter().map(|&t| curve.jet(t)).collect();
    let weight = TAU / density.n as f64;
    Ok(points
        .iter()
        .map(|&p| {
            let scattered: Complex64 = jets
                .iter()
                .zip(&density.values)
                .map(|(y, psi)| {
                    let speed = y.dx[0].hypot(y.dx[1]);
                    let diff = [p[0] - y.x[0], p[1] - y.x[1]];
                    let r = diff[0].hypot(diff[1]);
                    let q = y.dx[1] * diff[0] - y.dx[0] * diff[1];
                    let b = jy01(k * r);
                    let h0 = Complex64::new(b.j0, b.y0);
                    let h1 = Complex64::new(b.j1, b.y1);
                    // ∂Φ/∂ν |x'| and Φ |x'|
                    let double = I * (0.25 * k * q / r) * h1;
                    let single = 0.25 * I * h0 * speed;
                    (double - I * eta * single) * psi
                })
                .sum();
            wave.incident(p) + weight * scattered
        })
        .collect())
}

/// Trigonometric interpolant of nodal values at parameter `t`.
fn trig_interpolate(values: &[Complex64], t: f64) -> Complex64 {
    let n = values.len();
    let m = n / 2;
    values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let s = t - TAU * j as f64 / n as f64;
            let mut basis = 1.0 + (m as f64 * s).cos();
            for p in 1..m {
                basis += 2.0 * (p as f64 * s).cos();
            }
            v * basis / n as f64
        })
        .sum()
}

/// Total field on the boundary at arbitrary parameters, via the Nyström
/// interpolant of the boundary equation. Vanishes for an exact solution.
pub fn boundary_total_field(
    curve: &BoundaryCurve,
    density: &Density,
    wave: WaveParams,
    params: &[f64],
) -> Result<Vec<Complex64>, ForwardError> {
    density.check(curve, &wave)?;
    let n = density.n;
    let m = n / 2;
    let (k, eta) = (wave.k, wave.coupling());
    let jets: Vec<Jet> = density.nodes.iter().map(|&t| curve.jet(t)).collect();
    Ok(params
        .iter()
        .map(|&t| {
            let x = curve.jet(t);
            let psi_t = trig_interpolate(&density.values, t);
            let integral: Complex64 = jets
                .iter()
                .zip(&density.nodes)
                .zip(&density.values)
                .map(|((y, &tau), psi)| {
                    let parts = kernel(k, eta, &x, t, y, tau);
                    (log_weight(m, t - tau) * parts.log + PI / m as f64 * parts.smooth) * psi
                })
                .sum();
            wave.incident(x.x) + 0.5 * (psi_t + integral)
        })
        .collect())
}

/// Lowest truncation order accepted by [`disk_farfield_series`].
pub fn minimum_truncation(k: f64, radius: f64) -> usize {
    (k * radius).ceil() as usize + 20
}

/// Far field of the sound-soft disk of the given radius centered at the
/// origin, by separation of variables:
/// `F(θ) = -e^{-iπ/4} √(2/(πk)) Σ_{|n|≤N} J_n(ka)/H_n(ka) e^{in(θ-θ_d)}`.
pub fn disk_farfield_series(
    radius: f64,
    wave: WaveParams,
    grid: AngleGrid,
    truncation: usize,
) -> Result<FarFieldPattern, ForwardError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ForwardError::Radius(radius));
    }
    let required = minimum_truncation(wave.k, radius);
    if truncation < required {
        return Err(ForwardError::Truncation {
            given: truncation,
            required,
        });
    }
    let coeffs = disk_coefficients(radius, wave.k, truncation);
    let theta_d = wave.direction_angle();
    let prefactor = -Complex64::from_polar(1.0, -FRAC_PI_4) * (2.0 / (PI * wave.k)).sqrt();
    let angles = grid.angles();
    let values = angles
        .iter()
        .map(|&theta| {
            let s = theta - theta_d;
            let mut sum = coeffs[0];
            // smallest terms first
            for (n, a) in coeffs.iter().enumerate().skip(1).rev() {
                sum += 2.0 * a * (n as f64 * s).cos();
            }
            prefactor * sum
        })
        .collect();
    Ok(FarFieldPattern {
        angles,
        values,
        wave,
    })
}

/// Mode ratios `J_n(ka) / H_n(ka)`, `n = 0..=truncation`.
pub fn disk_coefficients(radius: f64, k: f64, truncation: usize) -> Vec<Complex64> {
    specfun::j_over_h1_seq(truncation as u32, k * radius)
}

/// Phase `α` in `∫|F|² dθ = c(k) Im(e^{iα} F(d))`.
pub const OPTICAL_PHASE: f64 = -FRAC_PI_4;

/// `c(k) = √(8π/k)` for the far-field normalization used here.
pub fn optical_constant(k: f64) -> f64 {
    (8.0 * PI / k).sqrt()
}

/// Forward-scattering side `c(k) Im(e^{iα} F(θ_d))` of the optical theorem.
pub fn extinction(wave: WaveParams, forward_value: Complex64) -> f64 {
    optical_constant(wave.k) * (Complex64::from_polar(1.0, OPTICAL_PHASE) * forward_value).im
}

/// Relative optical-theorem defect `|∫|F|² - c Im(e^{iα}F(d))| / ∫|F|²`.
pub fn optical_theorem_residual(
    curve: &BoundaryCurve,
    density: &Density,
    pattern: &FarFieldPattern,
) -> Result<f64, ForwardError> {
    let wave = pattern.wave;
    let forward = far_field_at(curve, density, wave, &[wave.direction_angle()])?[0];
    let energy = pattern.l2_norm().powi(2);
    Ok((energy - extinction(wave, forward)).abs() / energy)
}

/// Largest `|F(x̂; d) - F(-d; -x̂)|` over `(θ_in, θ_obs)` angle pairs, with
/// two independent solves per pair.
pub fn reciprocity_residual(
    curve: &BoundaryCurve,
    k: f64,
    pairs: &[(f64, f64)],
    n: usize,
) -> Result<f64, ForwardError> {
    pairs.iter().try_fold(0.0f64, |worst, &(theta_in, theta_obs)| {
        let w1 = WaveParams::from_angle(k, theta_in)?;
        let d1 = solve_exterior_dirichlet(curve, w1, n)?;
        let a = far_field_at(curve, &d1, w1, &[theta_obs])?[0];
        let w2 = WaveParams::from_angle(k, theta_obs + PI)?;
        let d2 = solve_exterior_dirichlet(curve, w2, n)?;
        let b = far_field_at(curve, &d2, w2, &[theta_in + PI])?[0];
        Ok(worst.max((a - b).norm()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_wave(k: f64) -> WaveParams {
        WaveParams::new(k, [1.0, 0.0]).unwrap()
    }

    fn kite() -> BoundaryCurve {
        BoundaryCurve::kite([0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn wave_params_validation() {
        assert!(WaveParams::new(0.0, [1.0, 0.0]).is_err());
        assert!(WaveParams::new(-1.0, [1.0, 0.0]).is_err());
        assert!(WaveParams::new(1.0, [1.0, 0.1]).is_err());
        assert!(WaveParams::from_angle(2.0, 0.3).is_ok());
    }

    #[test]
    fn log_weights_integrate_constants() {
        // ∫ ln(4 sin²(s/2)) ds over a period is zero
        for m in [4usize, 16, 64] {
            let total: f64 = (0..2 * m).map(|j| log_weight(m, PI * j as f64 / m as f64)).sum();
            assert!(total.abs() < 1e-12, "m={m}: {total}");
        }
        // ∫ ln(4 sin²(s/2)) cos(s) ds = -2π
        let m = 16;
        let total: f64 = (0..2 * m)
            .map(|j| {
                let s = PI * j as f64 / m as f64;
                log_weight(m, s) * s.cos()
            })
            .sum();
        assert!((total + TAU).abs() < 1e-12, "{total}");
    }

    #[test]
    fn node_count_preconditions() {
        let w = unit_wave(1.0);
        let c = BoundaryCurve::unit_circle();
        assert_eq!(
            solve_exterior_dirichlet(&c, w, 7),
            Err(ForwardError::NodeCount(7))
        );
        assert_eq!(
            solve_exterior_dirichlet(&c, w, 6),
            Err(ForwardError::NodeCount(6))
        );
        let k = WaveParams::new(20.0, [1.0, 0.0]).unwrap();
        assert!(matches!(
            solve_exterior_dirichlet(&c, k, 16),
            Err(ForwardError::UnderResolved { .. })
        ));
        let big = WaveParams::new(30.0, [1.0, 0.0]).unwrap();
        assert!(matches!(
            solve_exterior_dirichlet(&c, big, 1024),
            Err(ForwardError::TooLarge { .. })
        ));
    }

    #[test]
    fn solve_residual_is_small() {
        for curve in [BoundaryCurve::unit_circle(), kite()] {
            let d = solve_exterior_dirichlet(&curve, unit_wave(2.0), 64).unwrap();
            assert!(d.residual <= RESIDUAL_TOLERANCE);
        }
    }

    #[test]
    fn boundary_condition_off_nodes() {
        let c = BoundaryCurve::unit_circle();
        let w = unit_wave(1.0);
        let d = solve_exterior_dirichlet(&c, w, 64).unwrap();
        let ts: Vec<f64> = (0..97).map(|i| 0.013 + TAU * i as f64 / 97.0).collect();
        let u = boundary_total_field(&c, &d, w, &ts).unwrap();
        let worst = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "max |u| on boundary = {worst:e}");
    }

    #[test]
    fn disk_matches_series() {
        let c = BoundaryCurve::unit_circle();
        for k in [0.5, 1.0, 3.0] {
            let w = unit_wave(k);
            let d = solve_exterior_dirichlet(&c, w, 128).unwrap();
            let f = far_field(&c, &d, w, AngleGrid::default()).unwrap();
            let oracle =
                disk_farfield_series(1.0, w, AngleGrid::default(), minimum_truncation(k, 1.0))
                    .unwrap();
            let rel = f.relative_l2_distance(&oracle).unwrap();
            assert!(rel <= 1e-6, "k={k}: relative L2 {rel:e}");
        }
    }

    #[test]
    fn kite_self_convergence() {
        let w = unit_wave(1.0);
        let g = AngleGrid::default();
        let ff = |n| {
            let d = solve_exterior_dirichlet(&kite(), w, n).unwrap();
            far_field(&kite(), &d, w, g).unwrap()
        };
        let (f32, f64_, f128) = (ff(32), ff(64), ff(128));
        let coarse = f64_.l2_distance(&f32).unwrap();
        let fine = f128.l2_distance(&f64_).unwrap();
        assert!(coarse >= 1e3 * fine, "change {coarse:e} -> {fine:e}");
    }

    #[test]
    fn disk_rotation_equivariance() {
        let c = BoundaryCurve::unit_circle();
        let g = AngleGrid::uniform(72).unwrap();
        let base = unit_wave(1.5);
        let d0 = solve_exterior_dirichlet(&c, base, 64).unwrap();
        let f0 = far_field(&c, &d0, base, g).unwrap();
        // rotate the incident direction by 10 grid steps
        let shift = 10;
        let rot = WaveParams::from_angle(1.5, TAU * shift as f64 / 72.0).unwrap();
        let d1 = solve_exterior_dirichlet(&c, rot, 64).unwrap();
        let f1 = far_field(&c, &d1, rot, g).unwrap();
        for i in 0..72 {
            let diff = (f1.values[(i + shift) % 72] - f0.values[i]).norm();
            assert!(diff < 1e-8, "i={i}: {diff:e}");
        }
    }

    #[test]
    fn kite_reciprocity() {
        let pairs: Vec<(f64, f64)> = (0..4)
            .map(|p| (0.4 + 1.3 * p as f64, 2.1 - 0.7 * p as f64))
            .collect();
        assert!(reciprocity_residual(&kite(), 1.0, &pairs, 128).unwrap() < 1e-6);
    }

    #[test]
    fn boundary_limit_along_normals() {
        // u is smooth up to the boundary, so a polynomial through admissible
        // distances extrapolates to the boundary value u = 0
        let c = BoundaryCurve::unit_circle();
        let w = unit_wave(1.0);
        let n = 128;
        let dens = solve_exterior_dirichlet(&c, w, n).unwrap();
        let d0 = minimum_distance(&c, n);
        let offsets: Vec<f64> = (0..10).map(|j| d0 * (1.0 + 0.5 * j as f64)).collect();
        for t in [0.3, 1.7, 2.9, 4.4] {
            let s = crate::geometry::curve_eval(&c, t);
            let pts: Vec<Point> = offsets
                .iter()
                .map(|&o| [s.point[0] + o * s.outward_normal[0], s.point[1] + o * s.outward_normal[1]])
                .collect();
            let vals = total_field(&c, &dens, w, &pts).unwrap();
            // Lagrange extrapolation to offset 0
            let mut limit = Complex64::new(0.0, 0.0);
            for (i, vi) in vals.iter().enumerate() {
                let weight: f64 = offsets
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &oj)| oj / (oj - offsets[i]))
                    .product();
                limit += weight * vi;
            }
            assert!(limit.norm() <= 1e-4, "t = {t}: {limit}");
        }
    }

    #[test]
    fn density_mismatch_is_reported() {
        let c = BoundaryCurve::unit_circle();
        let w = unit_wave(1.0);
        let d = solve_exterior_dirichlet(&c, w, 32).unwrap();
        assert!(matches!(
            far_field(&kite(), &d, w, AngleGrid::default()),
            Err(ForwardError::Mismatch(_))
        ));
        assert!(matches!(
            far_field(&c, &d, unit_wave(2.0), AngleGrid::default()),
            Err(ForwardError::Mismatch(_))
        ));
    }

    #[test]
    fn zero_density_gives_incident_field() {
        let c = BoundaryCurve::unit_circle();
        let w = WaveParams::from_angle(1.3, 0.4).unwrap();
        let d = Density::zeros(&c, w, 16).unwrap();
        let pts = [[3.0, 0.0], [-2.0, 5.0], [0.0, -4.0]];
        let u = total_field(&c, &d, w, &pts).unwrap();
        for (p, v) in pts.iter().zip(u) {
            assert_eq!(v, w.incident(*p));
        }
    }

    #[test]
    fn total_field_rejects_close_and_interior_points() {
        let c = BoundaryCurve::unit_circle();
        let w = unit_wave(1.0);
        let d = solve_exterior_dirichlet(&c, w, 64).unwrap();
        assert!(matches!(
            total_field(&c, &d, w, &[[1.01, 0.0]]),
            Err(ForwardError::Proximity { .. })
        ));
        assert!(matches!(
            total_field(&c, &d, w, &[[0.2, 0.1]]),
            Err(ForwardError::Interior { .. })
        ));
    }

    #[test]
    fn total_field_matches_disk_series() {
        // exact scattered field of the disk: -Σ i^n J_n(ka)/H_n(ka) H_n(kr) e^{in(θ-θd)}
        let c = BoundaryCurve::unit_circle();
        let w = unit_wave(1.0);
        let d = solve_exterior_dirichlet(&c, w, 64).unwrap();
        let p = [1.3, 0.9];
        let u = total_field(&c, &d, w, &[p]).unwrap()[0];
        let r = p[0].hypot(p[1]);
        let theta = p[1].atan2(p[0]);
        let a = disk_coefficients(1.0, 1.0, 40);
        let h = specfun::hankel1_seq(40, r).unwrap();
        let mut ws = a[0] * h[0];
        for n in 1..=40 {
            ws += 2.0 * I.powi(n as i32) * a[n] * h[n] * (n as f64 * theta).cos();
        }
        let exact = w.incident(p) - ws;
        assert!((u - exact).norm() < 1e-9, "{u} vs {exact}");
    }

    #[test]
    fn series_truncation_guards() {
        let w = unit_wave(2.0);
        assert!(matches!(
            disk_farfield_series(1.0, w, AngleGrid::default(), 10),
            Err(ForwardError::Truncation { .. })
        ));
        let a = disk_farfield_series(1.0, w, AngleGrid::default(), 22).unwrap();
        let b = disk_farfield_series(1.0, w, AngleGrid::default(), 32).unwrap();
        assert!(a.l2_distance(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn series_mirror_symmetry() {
        let w = WaveParams::from_angle(2.0, 0.7).unwrap();
        let theta_d = w.direction_angle();
        let coeffs = disk_coefficients(1.0, 2.0, 30);
        let eval = |theta: f64| {
            let mut s = coeffs[0];
            for (n, a) in coeffs.iter().enumerate().skip(1) {
                s += 2.0 * a * (n as f64 * (theta - theta_d)).cos();
            }
            s
        };
        for s in [0.1, 0.9, 2.0, 3.0] {
            assert!((eval(theta_d + s) - eval(theta_d - s)).norm() < 1e-13);
        }
        let f = disk_farfield_series(1.0, WaveParams::new(2.0, [1.0, 0.0]).unwrap(), AngleGrid::uniform(360).unwrap(), 30).unwrap();
        for i in 1..180 {
            assert!((f.values[i] - f.values[360 - i]).norm() < 1e-13);
        }
    }

    #[test]
    fn small_disk_is_monopole_dominated() {
        let a = disk_coefficients(1.0, 0.1, minimum_truncation(0.1, 1.0));
        let total: f64 = a[0].norm_sqr() + 2.0 * a[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!(a[0].norm_sqr() / total >= 0.99);
    }

    #[test]
    fn optical_constant_from_disk_series() {
        // derive c(k) from the series and compare with √(8π/k)
        for k in [0.3, 1.0, 4.0] {
            let w = unit_wave(k);
            let f = disk_farfield_series(1.0, w, AngleGrid::default(), minimum_truncation(k, 1.0)).unwrap();
            let energy = f.l2_norm().powi(2);
            let forward = f.values[0];
            let derived = energy / (Complex64::from_polar(1.0, OPTICAL_PHASE) * forward).im;
            assert!((derived / optical_constant(k) - 1.0).abs() < 1e-12, "k={k}");
        }
    }
}
