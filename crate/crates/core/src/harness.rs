//! Far-field separation sweeps: distance between the patterns of two
//! obstacles as a function of `k`, next to the solver error floor and the
//! uniqueness threshold of a region containing both.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::eigencalc::{uniqueness_threshold, Dimension, EigenError, GridDomain, RegionSpec};
use crate::forward::{
    far_field, minimum_nodes, solve_exterior_dirichlet, AngleGrid, FarFieldPattern, ForwardError,
    WaveParams, DEFAULT_ANGLES,
};
use crate::geometry::{min_enclosing_ball_of, BoundaryCurve, GeometryError};

pub const DEFAULT_NODES: usize = 128;
pub const CSV_HEADER: &str = "k,delta,error_floor,threshold_k0,below_threshold";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("configuration is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Incident direction given as an angle in radians or as a unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    Angle(f64),
    Vector([f64; 2]),
}

/// Wavenumbers as an explicit list or `{"linspace": [first, last, count]}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    List(Vec<f64>),
    Linspace { linspace: (f64, f64, usize) },
}

impl KSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Linspace {
                linspace: (a, b, n),
            } => match n {
                0 => Vec::new(),
                1 => vec![*a],
                _ => (0..*n)
                    .map(|i| a + (b - a) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

fn default_angles() -> usize {
    DEFAULT_ANGLES
}

/// JSON sweep description. Curves and the optional region use the text
/// grammars of [`BoundaryCurve`] and [`RegionSpec`] (plus `mask <path>`).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub curve_a: String,
    pub curve_b: String,
    pub d: DirectionSpec,
    pub k: KSpec,
    #[serde(default = "default_nodes")]
    pub n: usize,
    #[serde(default = "default_angles")]
    pub angles: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub region: Option<String>,
}

/// A checked [`SweepConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub curve_a: BoundaryCurve,
    pub curve_b: BoundaryCurve,
    pub direction: [f64; 2],
    pub ks: Vec<f64>,
    pub n: usize,
    pub angles: AngleGrid,
    pub region: RegionSpec,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Validates every precondition of a sweep; relative mask and output
    /// paths are taken relative to `base`.
    pub fn plan(&self, base: Option<&Path>) -> Result<SweepPlan, HarnessError> {
        let curve_a: BoundaryCurve = self.curve_a.parse()?;
        let curve_b: BoundaryCurve = self.curve_b.parse()?;
        let direction = match self.d {
            DirectionSpec::Angle(theta) if theta.is_finite() => [theta.cos(), theta.sin()],
            DirectionSpec::Vector(v) if ((v[0].hypot(v[1])) - 1.0).abs() <= 1e-14 => v,
            other => {
                return Err(HarnessError::Config(format!(
                    "direction {other:?} is not a finite angle or unit vector"
                )))
            }
        };
        let ks = self.k.values();
        if ks.is_empty() {
            return Err(HarnessError::Config("no wavenumbers given".into()));
        }
        if let Some(bad) = ks.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(HarnessError::Config(format!(
                "wavenumber {bad} is not strictly positive"
            )));
        }
        if ks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config(
                "wavenumbers must be strictly increasing".into(),
            ));
        }
        if self.n < 8 || self.n % 2 != 0 {
            return Err(HarnessError::Config(format!(
                "node count {} must be even and at least 8",
                self.n
            )));
        }
        let kmax = ks[ks.len() - 1];
        for curve in [&curve_a, &curve_b] {
            let required = minimum_nodes(curve, kmax);
            if self.n < required {
                return Err(HarnessError::Config(format!(
                    "n = {} cannot resolve `{curve}` at k = {kmax}; need {required}",
                    self.n
                )));
            }
        }
        let angles =
            AngleGrid::uniform(self.angles).map_err(|e| HarnessError::Config(e.to_string()))?;
        let region = match &self.region {
            Some(spec) => parse_region(spec, base)?,
            None => enclosing_region(&curve_a, &curve_b),
        };
        region.validate()?;
        Ok(SweepPlan {
            curve_a,
            curve_b,
            direction,
            ks,
            n: self.n,
            angles,
            region,
            output: self.output.as_ref().map(|p| match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p.clone(),
            }),
        })
    }
}

/// Region grammar of [`RegionSpec`] extended by `mask <path>`.
pub fn parse_region(spec: &str, base: Option<&Path>) -> Result<RegionSpec, HarnessError> {
    let tokens: Vec<&str> = spec.split_whitespace().collect();
    if tokens.first().map(|t| t.eq_ignore_ascii_case("mask")) == Some(true) {
        if tokens.len() != 2 {
            return Err(HarnessError::Config("`mask` takes one path".into()));
        }
        let path = match base {
            Some(b) => b.join(tokens[1]),
            None => PathBuf::from(tokens[1]),
        };
        let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        return Ok(RegionSpec::Grid(GridDomain::from_text(&text)?));
    }
    Ok(RegionSpec::from_tokens(&tokens)?)
}

/// The disk of the minimal circle enclosing both curves.
pub fn enclosing_region(a: &BoundaryCurve, b: &BoundaryCurve) -> RegionSpec {
    let (_, radius) = min_enclosing_ball_of(&[a.clone(), b.clone()]);
    RegionSpec::Ball {
        dim: Dimension::Two,
        radius,
    }
}

/// One line of the sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    /// L² distance of the two far-field patterns on the circle.
    pub delta: f64,
    /// Largest n-versus-2n far-field change of the two obstacles.
    pub error_floor: f64,
    pub threshold_k0: f64,
    pub below_threshold: bool,
    /// Solver failure of this row; `delta` and `error_floor` are NaN then.
    pub failure: Option<String>,
}

fn pattern(
    curve: &BoundaryCurve,
    wave: WaveParams,
    n: usize,
    grid: AngleGrid,
) -> Result<FarFieldPattern, ForwardError> {
    let density = solve_exterior_dirichlet(curve, wave, n)?;
    far_field(curve, &density, wave, grid)
}

/// L² distance between the far fields computed with `n1` and `n2` nodes.
pub fn self_consistency(
    curve: &BoundaryCurve,
    wave: WaveParams,
    n1: usize,
    n2: usize,
) -> Result<f64, ForwardError> {
    self_consistency_on(curve, wave, n1, n2, AngleGrid::default())
}

pub fn self_consistency_on(
    curve: &BoundaryCurve,
    wave: WaveParams,
    n1: usize,
    n2: usize,
    grid: AngleGrid,
) -> Result<f64, ForwardError> {
    if n2 < n1 {
        return Err(ForwardError::NodeCount(n2));
    }
    let coarse = pattern(curve, wave, n1, grid)?;
    if n1 == n2 {
        return Ok(0.0);
    }
    let fine = pattern(curve, wave, n2, grid)?;
    coarse.l2_distance(&fine)
}

fn sweep_row(plan: &SweepPlan, k: f64, threshold_k0: f64) -> SweepRow {
    let below_threshold = k <= threshold_k0;
    let compute = || -> Result<(f64, f64), ForwardError> {
        let wave = WaveParams::new(k, plan.direction)?;
        let a = pattern(&plan.curve_a, wave, plan.n, plan.angles)?;
        let b = pattern(&plan.curve_b, wave, plan.n, plan.angles)?;
        let a2 = pattern(&plan.curve_a, wave, 2 * plan.n, plan.angles)?;
        let b2 = pattern(&plan.curve_b, wave, 2 * plan.n, plan.angles)?;
        let floor = a.l2_distance(&a2)?.max(b.l2_distance(&b2)?);
        Ok((a.l2_distance(&b)?, floor))
    };
    match compute() {
        Ok((delta, error_floor)) => SweepRow {
            k,
            delta,
            error_floor,
            threshold_k0,
            below_threshold,
            failure: None,
        },
        Err(e) => SweepRow {
            k,
            delta: f64::NAN,
            error_floor: f64::NAN,
            threshold_k0,
            below_threshold,
            failure: Some(e.to_string()),
        },
    }
}

/// Runs the rows in parallel; the output is ordered by `k`.
pub fn separation_sweep(plan: &SweepPlan) -> Result<Vec<SweepRow>, HarnessError> {
    let threshold_k0 = uniqueness_threshold(&plan.region)?;
    let mut rows: Vec<SweepRow> = plan
        .ks
        .par_iter()
        .map(|&k| sweep_row(plan, k, threshold_k0))
        .collect();
    rows.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(rows)
}

fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// CSV with [`CSV_HEADER`], floats with 17 significant digits.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            number(r.k),
            number(r.delta),
            number(r.error_floor),
            number(r.threshold_k0),
            r.below_threshold
        )?;
    }
    Ok(())
}

/// Outcome of one [`selftest`] check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Fast invariant checks across all modules.
pub fn selftest() -> Vec<CheckOutcome> {
    use crate::forward::{disk_farfield_series, minimum_truncation, optical_theorem_residual};
    use crate::specfun::{bessel_j_seq, bessel_y_seq, gamma0, wronskian};
    use crate::supersolution::{verify_supersolution, SupersolutionCandidate};

    let mut out = Vec::new();
    let mut record = |name, pass, detail: String| out.push(CheckOutcome { name, pass, detail });

    let g0 = gamma0();
    record("gamma0", (g0 - 2.404825557695773).abs() < 1e-12, format!("{g0:.15}"));

    let mut worst: f64 = 0.0;
    for &x in &[0.5, 3.0, 17.0, 40.0] {
        let j = bessel_j_seq(21, x);
        match bessel_y_seq(21, x) {
            Ok(y) => {
                for n in 0..20 {
                    let w = j[n + 1] * y[n] - j[n] * y[n + 1];
                    worst = worst.max((w / wronskian(x) - 1.0).abs());
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    record("wronskian", worst < 1e-10, format!("max relative defect {worst:.2e}"));

    let disk = BoundaryCurve::unit_circle();
    let forward = (|| -> Result<(f64, f64), ForwardError> {
        let wave = WaveParams::new(1.0, [1.0, 0.0])?;
        let density = solve_exterior_dirichlet(&disk, wave, 64)?;
        let bie = far_field(&disk, &density, wave, AngleGrid::default())?;
        let series =
            disk_farfield_series(1.0, wave, AngleGrid::default(), minimum_truncation(1.0, 1.0))?;
        Ok((
            bie.relative_l2_distance(&series)?,
            optical_theorem_residual(&disk, &density, &bie)?,
        ))
    })();
    match forward {
        Ok((rel, optical)) => {
            record("disk-oracle", rel < 1e-6, format!("relative L2 {rel:.2e}"));
            record("optical-theorem", optical < 1e-5, format!("residual {optical:.2e}"));
        }
        Err(e) => record("forward", false, e.to_string()),
    }

    match GridDomain::square(1.0, 1.0 / 32.0)
        .map_err(HarnessError::from)
        .and_then(|g| Ok(crate::eigencalc::fd_dirichlet_eigs(&g, 1)?))
    {
        Ok(res) => {
            let rel = (res.extrapolated[0] / (2.0 * std::f64::consts::PI.powi(2)) - 1.0).abs();
            record("fd-square", rel < 1e-3, format!("relative error {rel:.2e}"));
        }
        Err(e) => record("fd-square", false, e.to_string()),
    }

    let slab = RegionSpec::SlabOverInterval { h: 1.0 };
    let signs = SupersolutionCandidate::for_region(&slab).and_then(|c| {
        Ok((
            verify_supersolution(&c, c.k0, None)?.pass,
            verify_supersolution(&c, 1.1 * c.k0, None)?.pass,
        ))
    });
    match signs {
        Ok((at, above)) => record(
            "slab-supersolution",
            at && !above,
            format!("pass at k0: {at}, pass at 1.1 k0: {above}"),
        ),
        Err(e) => record("slab-supersolution", false, e.to_string()),
    }
    out
}
