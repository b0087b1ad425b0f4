//! Smooth closed obstacle boundaries in the plane.
//!
//! Every curve is a 2π-periodic, counterclockwise parametrization
//! `x(t)`, so the normal `(x2', -x1') / |x'|` points into the exterior.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = [f64; 2];

/// Amplitude of the cos 2t term in the kite parametrization.
pub const KITE_BEND: f64 = 0.65;
/// Vertical stretch of the kite.
pub const KITE_HEIGHT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("unknown curve kind `{0}` (expected circle, ellipse, kite or star)")]
    UnknownKind(String),
    #[error("curve `{kind}` expects {expected} numbers, got {got}")]
    Arity {
        kind: String,
        expected: String,
        got: usize,
    },
    #[error("cannot parse `{0}` as a number")]
    Number(String),
    #[error("invalid curve parameters: {0}")]
    Invalid(String),
}

/// A preset boundary curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCurve {
    Circle {
        center: Point,
        radius: f64,
    },
    Ellipse {
        center: Point,
        a: f64,
        b: f64,
    },
    /// `center + scale * (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)`.
    Kite {
        center: Point,
        scale: f64,
    },
    /// Star-shaped curve with radius `r0 + Σ c_j cos(jt) + s_j sin(jt)`.
    TrigStar {
        center: Point,
        r0: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

/// Position and frame of a curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub point: Point,
    /// `dx/dt`, not normalized.
    pub tangent: Point,
    pub outward_normal: Point,
    pub speed: f64,
}

/// Point, first and second derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Jet {
    pub x: Point,
    pub dx: Point,
    pub ddx: Point,
}

impl BoundaryCurve {
    pub fn circle(center: Point, radius: f64) -> Result<Self, GeometryError> {
        Self::Circle { center, radius }.validated()
    }

    pub fn ellipse(center: Point, a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::Ellipse { center, a, b }.validated()
    }

    pub fn kite(center: Point, scale: f64) -> Result<Self, GeometryError> {
        Self::Kite { center, scale }.validated()
    }

    pub fn trig_star(
        center: Point,
        r0: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        Self::TrigStar {
            center,
            r0,
            cos,
            sin,
        }
        .validated()
    }

    /// Unit circle at the origin.
    pub fn unit_circle() -> Self {
        Self::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    /// Checks the documented parameter ranges.
    ///
    /// Stars must satisfy `Σ |c_j| + |s_j| < r0`, which keeps the radius
    /// positive and the curve simple.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = |v: f64| v.is_finite();
        let center = self.center();
        if !center.iter().all(|&c| finite(c)) {
            return Err(GeometryError::Invalid("center must be finite".into()));
        }
        match self {
            Self::Circle { radius, .. } if !(*radius > 0.0 && finite(*radius)) => {
                Err(GeometryError::Invalid(format!("radius {radius} must be > 0")))
            }
            Self::Ellipse { a, b, .. }
                if !(*a > 0.0 && *b > 0.0 && finite(*a) && finite(*b)) =>
            {
                Err(GeometryError::Invalid(format!(
                    "semi-axes {a}, {b} must be > 0"
                )))
            }
            Self::Kite { scale, .. } if !(*scale > 0.0 && finite(*scale)) => {
                Err(GeometryError::Invalid(format!("scale {scale} must be > 0")))
            }
            Self::TrigStar { r0, cos, sin, .. } => {
                if !(*r0 > 0.0 && finite(*r0)) {
                    return Err(GeometryError::Invalid(format!("r0 {r0} must be > 0")));
                }
                if !cos.iter().chain(sin).all(|v| finite(*v)) {
                    return Err(GeometryError::Invalid("coefficients must be finite".into()));
                }
                let wobble: f64 = cos.iter().chain(sin).map(|v| v.abs()).sum();
                if wobble >= *r0 {
                    return Err(GeometryError::Invalid(format!(
                        "star coefficients sum to {wobble}, must stay below r0 = {r0}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn validated(self) -> Result<Self, GeometryError> {
        self.validate()?;
        Ok(self)
    }

    pub fn center(&self) -> Point {
        match self {
            Self::Circle { center, .. }
            | Self::Ellipse { center, .. }
            | Self::Kite { center, .. }
            | Self::TrigStar { center, .. } => *center,
        }
    }

    /// A point inside the obstacle.
    pub fn interior_point(&self) -> Point {
        match self {
            // the kite's centroid sits left of its nominal origin
            Self::Kite { center, scale } => [center[0] - 0.5 * scale, center[1]],
            _ => self.center(),
        }
    }

    pub(crate) fn jet(&self, t: f64) -> Jet {
        let (s, c) = t.sin_cos();
        match self {
            Self::Circle { center, radius } => Jet {
                x: [center[0] + radius * c, center[1] + radius * s],
                dx: [-radius * s, radius * c],
                ddx: [-radius * c, -radius * s],
            },
            Self::Ellipse { center, a, b } => Jet {
                x: [center[0] + a * c, center[1] + b * s],
                dx: [-a * s, b * c],
                ddx: [-a * c, -b * s],
            },
            Self::Kite { center, scale } => {
                let (s2, c2) = (2.0 * t).sin_cos();
                Jet {
                    x: [
                        center[0] + scale * (c + KITE_BEND * c2 - KITE_BEND),
                        center[1] + scale * KITE_HEIGHT * s,
                    ],
                    dx: [
                        scale * (-s - 2.0 * KITE_BEND * s2),
                        scale * KITE_HEIGHT * c,
                    ],
                    ddx: [
                        scale * (-c - 4.0 * KITE_BEND * c2),
                        -scale * KITE_HEIGHT * s,
                    ],
                }
            }
            Self::TrigStar {
                center,
                r0,
                cos,
                sin,
            } => {
                let (mut r, mut dr, mut ddr) = (*r0, 0.0, 0.0);
                for (j, cj) in cos.iter().enumerate() {
                    let m = (j + 1) as f64;
                    let (sm, cm) = (m * t).sin_cos();
                    r += cj * cm;
                    dr -= cj * m * sm;
                    ddr -= cj * m * m * cm;
                }
                for (j, sj) in sin.iter().enumerate() {
                    let m = (j + 1) as f64;
                    let (sm, cm) = (m * t).sin_cos();
                    r += sj * sm;
                    dr += sj * m * cm;
                    ddr -= sj * m * m * sm;
                }
                Jet {
                    x: [center[0] + r * c, center[1] + r * s],
                    dx: [dr * c - r * s, dr * s + r * c],
                    ddx: [
                        ddr * c - 2.0 * dr * s - r * c,
                        ddr * s + 2.0 * dr * c - r * s,
                    ],
                }
            }
        }
    }

    pub fn point(&self, t: f64) -> Point {
        self.jet(t).x
    }

    /// Samples `n` points at `t_j = 2πj/n`.
    pub fn sample_points(&self, n: usize) -> Vec<Point> {
        (0..n)
            .map(|j| self.point(TAU * j as f64 / n as f64))
            .collect()
    }

    /// Maximum of `|x'(t)|` over a dense sample.
    pub fn max_speed(&self) -> f64 {
        (0..2048)
            .map(|j| curve_eval(self, TAU * j as f64 / 2048.0).speed)
            .fold(0.0, f64::max)
    }

    /// Largest distance between two boundary points.
    pub fn diameter(&self) -> f64 {
        2.0 * min_enclosing_ball(self).1
    }

    /// Winding number of the boundary around `p`, rounded to an integer.
    pub fn winding_number(&self, p: Point) -> i64 {
        winding_number_of(&self.sample_points(4096), p).round() as i64
    }

    /// True when `p` lies strictly inside the obstacle.
    pub fn contains(&self, p: Point) -> bool {
        self.winding_number(p) != 0
    }

    /// Distance from `p` to the curve.
    pub fn distance_to(&self, p: Point) -> f64 {
        let n = 1024;
        let dist = |t: f64| {
            let x = self.point(t);
            ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)).sqrt()
        };
        let h = TAU / n as f64;
        let best = (0..n)
            .map(|j| j as f64 * h)
            .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
            .unwrap_or(0.0);
        let t = golden_section(|t| -dist(t), best - h, best + h);
        dist(t).min(dist(best))
    }
}

/// Evaluates the curve at `t` (taken mod 2π).
pub fn curve_eval(curve: &BoundaryCurve, t: f64) -> CurveSample {
    let jet = curve.jet(t.rem_euclid(TAU));
    let speed = jet.dx[0].hypot(jet.dx[1]);
    CurveSample {
        point: jet.x,
        tangent: jet.dx,
        outward_normal: [jet.dx[1] / speed, -jet.dx[0] / speed],
        speed,
    }
}

pub(crate) fn winding_number_of(points: &[Point], p: Point) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let (ax, ay) = (a[0] - p[0], a[1] - p[1]);
        let (bx, by) = (b[0] - p[0], b[1] - p[1]);
        total += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    total / TAU
}

/// Maximizes a unimodal `f` on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..80 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn circle_two(a: Point, b: Point) -> (Point, f64) {
    let c = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    (c, 0.5 * dist(a, b))
}

fn circle_three(a: Point, b: Point, c: Point) -> (Point, f64) {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        // collinear: the widest pair spans the circle
        let cands = [circle_two(a, b), circle_two(a, c), circle_two(b, c)];
        return cands
            .into_iter()
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .expect("three candidates");
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    ([a[0] + ux, a[1] + uy], ux.hypot(uy))
}

/// Smallest circle containing every point (Welzl, iterative form).
pub fn min_enclosing_circle(points: &[Point]) -> (Point, f64) {
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
    let inside = |c: &(Point, f64), p: Point| dist(c.0, p) <= c.1 * (1.0 + 1e-14) + 1e-300;
    let mut circle = match pts.first() {
        Some(&p) => (p, 0.0),
        None => return ([0.0, 0.0], 0.0),
    };
    for i in 1..pts.len() {
        if inside(&circle, pts[i]) {
            continue;
        }
        circle = (pts[i], 0.0);
        for j in 0..i {
            if inside(&circle, pts[j]) {
                continue;
            }
            circle = circle_two(pts[i], pts[j]);
            for k in 0..j {
                if !inside(&circle, pts[k]) {
                    circle = circle_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    circle
}

/// Minimal enclosing ball of a curve: sampled Welzl, then each near-extremal
/// sample is polished by a local maximization of the distance to the center
/// and the circle recomputed.
pub fn min_enclosing_ball(curve: &BoundaryCurve) -> (Point, f64) {
    min_enclosing_ball_of(std::slice::from_ref(curve))
}

/// Minimal enclosing ball of several curves.
pub fn min_enclosing_ball_of(curves: &[BoundaryCurve]) -> (Point, f64) {
    const SAMPLES: usize = 4096;
    let h = TAU / SAMPLES as f64;
    let mut points: Vec<Point> = curves
        .iter()
        .flat_map(|c| c.sample_points(SAMPLES))
        .collect();
    let (center, radius) = min_enclosing_circle(&points);
    for curve in curves {
        for j in 0..SAMPLES {
            let t = j as f64 * h;
            if dist(curve.point(t), center) > radius - 1e-3 * radius {
                let best = golden_section(|s| dist(curve.point(s), center), t - h, t + h);
                points.push(curve.point(best));
            }
        }
    }
    let (center, radius) = min_enclosing_circle(&points);
    // contain every sample exactly
    let reach = points.iter().map(|&p| dist(p, center)).fold(radius, f64::max);
    (center, reach)
}

impl fmt::Display for BoundaryCurve {
    /// Writes the CLI grammar form (`circle cx cy r`, ...).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Circle { center, radius } => {
                write!(f, "circle {} {} {}", center[0], center[1], radius)
            }
            Self::Ellipse { center, a, b } => {
                write!(f, "ellipse {} {} {} {}", center[0], center[1], a, b)
            }
            Self::Kite { center, scale } => {
                write!(f, "kite {} {} {}", center[0], center[1], scale)
            }
            Self::TrigStar {
                center,
                r0,
                cos,
                sin,
            } => {
                write!(f, "star {} {} {}", center[0], center[1], r0)?;
                for c in cos {
                    write!(f, " {c}")?;
                }
                if !sin.is_empty() {
                    write!(f, " sin")?;
                    for s in sin {
                        write!(f, " {s}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn parse_number(token: &str) -> Result<f64, GeometryError> {
    // Rust float parsing is locale independent and only accepts `.`
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| GeometryError::Number(token.to_string()))
}

impl BoundaryCurve {
    /// Parses `circle cx cy r`, `ellipse cx cy a b`, `kite cx cy s` or
    /// `star cx cy r0 c1 .. cn [sin s1 .. sm]` from pre-split tokens.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self, GeometryError> {
        let Some((kind, rest)) = tokens.split_first() else {
            return Err(GeometryError::UnknownKind(String::new()));
        };
        let kind = kind.as_ref().to_ascii_lowercase();
        let arity = |expected: &str| GeometryError::Arity {
            kind: kind.clone(),
            expected: expected.to_string(),
            got: rest.len(),
        };
        match kind.as_str() {
            "circle" | "ellipse" | "kite" => {
                let want = if kind == "ellipse" { 4 } else { 3 };
                if rest.len() != want {
                    return Err(arity(&want.to_string()));
                }
                let v = rest
                    .iter()
                    .map(|t| parse_number(t.as_ref()))
                    .collect::<Result<Vec<_>, _>>()?;
                match kind.as_str() {
                    "circle" => Self::circle([v[0], v[1]], v[2]),
                    "ellipse" => Self::ellipse([v[0], v[1]], v[2], v[3]),
                    _ => Self::kite([v[0], v[1]], v[2]),
                }
            }
            "star" => {
                let split = rest.iter().position(|t| t.as_ref() == "sin");
                let (head, tail) = match split {
                    Some(i) => (&rest[..i], &rest[i + 1..]),
                    None => (rest, &rest[rest.len()..]),
                };
                if head.len() < 3 {
                    return Err(arity("at least 3"));
                }
                let head = head
                    .iter()
                    .map(|t| parse_number(t.as_ref()))
                    .collect::<Result<Vec<_>, _>>()?;
                let sin = tail
                    .iter()
                    .map(|t| parse_number(t.as_ref()))
                    .collect::<Result<Vec<_>, _>>()?;
                Self::trig_star([head[0], head[1]], head[2], head[3..].to_vec(), sin)
            }
            other => Err(GeometryError::UnknownKind(other.to_string())),
        }
    }
}

impl FromStr for BoundaryCurve {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        Self::from_tokens(&tokens)
    }
}

/// Arc length by the trapezoid rule.
pub fn perimeter(curve: &BoundaryCurve) -> f64 {
    let n = 1024;
    (0..n)
        .map(|j| curve_eval(curve, TAU * j as f64 / n as f64).speed)
        .sum::<f64>()
        * TAU
        / n as f64
}
