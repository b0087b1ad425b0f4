//! Cylindrical Bessel and Hankel functions of integer order and real argument.
//!
//! `J_n` comes from Miller's downward recurrence normalized by
//! `J_0 + 2 Σ J_2k = 1`. The same pass accumulates the Neumann series for
//! `Y_0` and `Y_1`; above [`ASYMPTOTIC_CROSSOVER`] those two are taken from
//! the Hankel asymptotic expansion instead. Higher `Y_n` use upward
//! recurrence, which is stable for the second kind.

use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

/// Complex values returned by the Hankel routines.
pub type ComplexScalar = Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Arguments at or above this use the asymptotic expansion for `Y_0`, `Y_1`.
pub const ASYMPTOTIC_CROSSOVER: f64 = 25.0;

const RESCALE_ABOVE: f64 = 1e100;
const TINY_ARGUMENT: f64 = 1e-100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument {x} is outside the domain x > 0")]
    Domain { x: f64 },
    #[error("Y_{order}({x}) overflows double precision")]
    Overflow { order: u32, x: f64 },
}

/// `J_0, J_1, Y_0, Y_1` at one argument, the only orders the boundary
/// integral kernels need.
#[derive(Debug, Clone, Copy)]
pub struct Jy01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

struct Miller {
    j: Vec<f64>,
    /// Σ_{k≥1} (-1)^k J_2k / k
    neumann0: f64,
    /// Σ_{k≥1} (-1)^k (J_{2k-1} - J_{2k+1}) / k
    neumann1: f64,
}

fn miller_start(nmax: usize, x: f64) -> usize {
    let m = (nmax as f64).max(x);
    let start = (m + 20.0 + (40.0 * m).sqrt()).ceil() as usize;
    start + (start & 1)
}

/// Downward recurrence for `x >= TINY_ARGUMENT`; returns `J_0..=J_nmax`
/// (at least up to order 1) plus the Neumann sums.
fn miller(nmax: usize, x: f64) -> Miller {
    let keep = nmax.max(1);
    let start = miller_start(keep, x);
    let mut j = vec![0.0; keep + 1];

    // values at orders k+1 and k
    let mut above = 0.0_f64;
    let mut current = 1e-30_f64;
    let mut norm = 0.0_f64;
    let mut s0 = 0.0_f64;
    let mut s1 = 0.0_f64;
    let mut k = start;
    loop {
        if k <= keep {
            j[k] = current;
        }
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * current;
            let half = (k / 2) as f64;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            s0 += sign * current / half;
        }
        if k == 0 {
            norm += current;
            break;
        }
        let below = 2.0 * k as f64 / x * current - above;
        // k = 2m: below is J_{2m-1}, above is J_{2m+1}
        if k % 2 == 0 {
            let m = k / 2;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            s1 += sign * (below - above) / m as f64;
        }
        above = current;
        current = below;
        k -= 1;
        if current.abs() > RESCALE_ABOVE {
            let f = 1.0 / RESCALE_ABOVE;
            current *= f;
            above *= f;
            norm *= f;
            s0 *= f;
            s1 *= f;
            for v in j.iter_mut() {
                *v *= f;
            }
        }
    }
    let scale = 1.0 / norm;
    for v in j.iter_mut() {
        *v *= scale;
    }
    Miller {
        j,
        neumann0: s0 * scale,
        neumann1: s1 * scale,
    }
}

/// Hankel asymptotic expansion for orders 0 and 1: returns `(J_n, Y_n)`.
fn asymptotic(order: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (order as f64).powi(2);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut k = 0usize;
    let mut last = f64::INFINITY;
    while term.abs() > 1e-18 && term.abs() < last {
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        last = term.abs();
        k += 1;
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * x);
    }
    // chi = x - order*pi/2 - pi/4
    let (s, c) = x.sin_cos();
    let (cos_chi, sin_chi) = match order % 4 {
        0 => ((c + s) / 2f64.sqrt(), (s - c) / 2f64.sqrt()),
        1 => ((s - c) / 2f64.sqrt(), -(c + s) / 2f64.sqrt()),
        _ => unreachable!("asymptotic expansion only used for orders 0 and 1"),
    };
    let amp = (FRAC_2_PI / x).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

fn tiny_argument_jy01(x: f64) -> Jy01 {
    Jy01 {
        j0: 1.0,
        j1: 0.5 * x,
        y0: FRAC_2_PI * ((0.5 * x).ln() + EULER_GAMMA),
        y1: -FRAC_2_PI / x,
    }
}

/// `J_0, J_1, Y_0, Y_1` at `x > 0`.
pub fn jy01(x: f64) -> Jy01 {
    debug_assert!(x > 0.0);
    if x < TINY_ARGUMENT {
        return tiny_argument_jy01(x);
    }
    if x >= ASYMPTOTIC_CROSSOVER {
        let (j0, y0) = asymptotic(0, x);
        let (j1, y1) = asymptotic(1, x);
        return Jy01 { j0, j1, y0, y1 };
    }
    let m = miller(1, x);
    neumann_jy01(&m, x)
}

fn neumann_jy01(m: &Miller, x: f64) -> Jy01 {
    let (j0, j1) = (m.j[0], m.j[1]);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    Jy01 {
        j0,
        j1,
        y0: FRAC_2_PI * log_term * j0 - 2.0 * FRAC_2_PI * m.neumann0,
        y1: FRAC_2_PI * (log_term * j1 - j0 / x) + FRAC_2_PI * m.neumann1,
    }
}

/// `J_0(x), ..., J_nmax(x)` for any real `x`.
pub fn bessel_j_seq(nmax: u32, x: f64) -> Vec<f64> {
    let n = nmax as usize;
    let ax = x.abs();
    let mut out = if ax == 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        v
    } else if ax < TINY_ARGUMENT {
        // leading power-series term (x/2)^n / n!
        let mut v = Vec::with_capacity(n + 1);
        let mut t = 1.0;
        for k in 0..=n {
            v.push(t);
            t *= 0.5 * ax / (k + 1) as f64;
        }
        v
    } else {
        let mut v = miller(n, ax).j;
        v.truncate(n + 1);
        v
    };
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Bessel function of the first kind `J_n(x)`.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    bessel_j_seq(order, x)[order as usize]
}

/// `J_n'(x)` from `J_{n-1} - J_{n+1}`.
pub fn bessel_j_derivative(order: u32, x: f64) -> f64 {
    let j = bessel_j_seq(order + 1, x);
    if order == 0 {
        -j[1]
    } else {
        0.5 * (j[order as usize - 1] - j[order as usize + 1])
    }
}

/// `Y_0..=Y_nmax`; entries past an overflow are infinite.
fn y_seq_raw(nmax: u32, x: f64) -> Vec<f64> {
    let base = jy01(x);
    let n = nmax as usize;
    let mut y = Vec::with_capacity(n.max(1) + 1);
    y.push(base.y0);
    y.push(base.y1);
    for k in 1..n {
        let next = 2.0 * k as f64 / x * y[k] - y[k - 1];
        y.push(if next.is_finite() { next } else { f64::NEG_INFINITY });
    }
    y.truncate(n + 1);
    y
}

/// `Y_0(x), ..., Y_nmax(x)` for `x > 0`.
pub fn bessel_y_seq(nmax: u32, x: f64) -> Result<Vec<f64>, SpecFunError> {
    if !(x > 0.0) {
        return Err(SpecFunError::Domain { x });
    }
    let y = y_seq_raw(nmax, x);
    if let Some(k) = y.iter().position(|v| !v.is_finite()) {
        return Err(SpecFunError::Overflow { order: k as u32, x });
    }
    Ok(y)
}

pub fn bessel_y(order: u32, x: f64) -> Result<f64, SpecFunError> {
    Ok(bessel_y_seq(order, x)?[order as usize])
}

pub fn bessel_y_derivative(order: u32, x: f64) -> Result<f64, SpecFunError> {
    let y = bessel_y_seq(order + 1, x)?;
    Ok(if order == 0 {
        -y[1]
    } else {
        0.5 * (y[order as usize - 1] - y[order as usize + 1])
    })
}

/// `H^(1)_0(x), ..., H^(1)_nmax(x)` for `x > 0`.
pub fn hankel1_seq(nmax: u32, x: f64) -> Result<Vec<ComplexScalar>, SpecFunError> {
    let y = bessel_y_seq(nmax, x)?;
    let j = bessel_j_seq(nmax, x);
    Ok(j.into_iter()
        .zip(y)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// Hankel function of the first kind `H^(1)_n(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(order: u32, x: f64) -> Result<ComplexScalar, SpecFunError> {
    Ok(hankel1_seq(order, x)?[order as usize])
}

pub fn hankel1_derivative(order: u32, x: f64) -> Result<ComplexScalar, SpecFunError> {
    let h = hankel1_seq(order + 1, x)?;
    Ok(if order == 0 {
        -h[1]
    } else {
        0.5 * (h[order as usize - 1] - h[order as usize + 1])
    })
}

/// Ratios `J_n(x) / H^(1)_n(x)` for `n = 0..=nmax`, zero where `Y_n` overflows.
pub(crate) fn j_over_h1_seq(nmax: u32, x: f64) -> Vec<ComplexScalar> {
    let j = bessel_j_seq(nmax, x);
    let y = y_seq_raw(nmax, x);
    j.into_iter()
        .zip(y)
        .map(|(jn, yn)| {
            if yn.is_finite() {
                jn / Complex64::new(jn, yn)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Smallest positive zero of `J_0`, found once by bisection on `[2, 3]`.
pub fn gamma0() -> f64 {
    static GAMMA0: OnceLock<f64> = OnceLock::new();
    *GAMMA0.get_or_init(|| {
        let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
        let f_lo = bessel_j(0, lo);
        assert!(f_lo > 0.0 && bessel_j(0, hi) < 0.0, "J0 must change sign on [2, 3]");
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f = bessel_j(0, mid);
            if f == 0.0 {
                return mid;
            }
            if f > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if bessel_j(0, lo).abs() <= bessel_j(0, hi).abs() {
            lo
        } else {
            hi
        }
    })
}

/// `2 / (pi x)`, the Wronskian `J_n Y_n' - J_n' Y_n`.
pub fn wronskian(x: f64) -> f64 {
    2.0 / (PI * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series for J_n, used as an independent oracle.
    fn j_series(n: u32, x: f64) -> f64 {
        let half = 0.5 * x;
        let mut term = half.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= -half * half / (m as f64 * (m + n as usize) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    }

    /// Ascending series for Y_0 with harmonic numbers.
    fn y0_series(x: f64) -> f64 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut sum = 0.0;
        for m in 1..200 {
            term *= -q / (m as f64 * m as f64);
            harmonic += 1.0 / m as f64;
            sum -= term * harmonic;
            if term.abs() < 1e-18 {
                break;
            }
        }
        FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j_series(0, x) + sum)
    }

    #[test]
    fn j0_at_zero_is_one() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn j0_at_one_matches_series() {
        let oracle = j_series(0, 1.0);
        assert!((oracle - 0.7651976865579666).abs() < 1e-15);
        assert!((bessel_j(0, 1.0) - oracle).abs() < 1e-15);
    }

    #[test]
    fn j_matches_series_small_arguments() {
        for n in [0u32, 1, 2, 5, 10, 25, 60] {
            for &x in &[0.01, 0.3, 1.0, 2.5, 4.0, 7.5] {
                let a = bessel_j(n, x);
                let b = j_series(n, x);
                let tol = 1e-12 * b.abs().max(1e-2);
                assert!((a - b).abs() <= tol, "J_{n}({x}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn negative_argument_parity() {
        assert!((bessel_j(3, -2.0) + bessel_j(3, 2.0)).abs() < 1e-16);
        assert!((bessel_j(2, -2.0) - bessel_j(2, 2.0)).abs() < 1e-16);
    }

    #[test]
    fn y0_matches_series() {
        for &x in &[1e-6, 0.05, 0.5, 1.0, 3.0, 6.0] {
            let a = bessel_y(0, x).unwrap();
            let b = y0_series(x);
            assert!((a - b).abs() < 1e-13 * b.abs().max(1.0), "Y0({x}): {a} vs {b}");
        }
    }

    #[test]
    fn hankel_at_one() {
        let h = hankel1(0, 1.0).unwrap();
        assert!((h.re - 0.7651976865).abs() < 1e-10);
        assert!((h.im - 0.0882569642).abs() < 1e-10);
        assert!((h.im - y0_series(1.0)).abs() < 1e-14);
    }

    #[test]
    fn neumann_and_asymptotic_routes_agree_near_crossover() {
        for &x in &[25.0, 27.3, 31.0, 40.0] {
            let m = miller(1, x);
            let via_series = neumann_jy01(&m, x);
            let (j0, y0) = asymptotic(0, x);
            let (j1, y1) = asymptotic(1, x);
            for (a, b) in [
                (via_series.j0, j0),
                (via_series.j1, j1),
                (via_series.y0, y0),
                (via_series.y1, y1),
            ] {
                assert!((a - b).abs() < 1e-13, "x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_argument_modulus() {
        let h = hankel1(0, 100.0).unwrap();
        let lead = (2.0 / (PI * 100.0)).sqrt();
        assert!((h.norm() - lead).abs() < 0.01 * lead);
    }

    #[test]
    fn wronskian_identity() {
        for n in [0u32, 1, 4, 17, 40, 60] {
            for &x in &[0.2, 1.0, 9.0, 30.0, 120.0, 200.0] {
                let j = bessel_j(n, x);
                let jp = bessel_j_derivative(n, x);
                let Ok(y) = bessel_y(n, x) else { continue };
                let yp = bessel_y_derivative(n, x).unwrap();
                let w = j * yp - jp * y;
                let expect = wronskian(x);
                assert!(
                    (w - expect).abs() <= 1e-10 * expect,
                    "n={n} x={x}: {w} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn domain_and_overflow_errors() {
        assert!(matches!(hankel1(0, 0.0), Err(SpecFunError::Domain { .. })));
        assert!(matches!(hankel1(0, -1.0), Err(SpecFunError::Domain { .. })));
        assert!(matches!(
            hankel1(60, 1e-8),
            Err(SpecFunError::Overflow { .. })
        ));
        assert!(hankel1(60, 1.0).unwrap().im.is_finite());
    }

    #[test]
    fn gamma0_is_a_simple_zero() {
        let g = gamma0();
        assert!((g - 2.404825557695773).abs() < 1e-12);
        assert!(bessel_j(0, g).abs() < 1e-12);
        assert!(bessel_j(0, g - 1e-9) > 0.0);
        assert!(bessel_j(0, g + 1e-9) < 0.0);
        assert!((g * g - 5.783185962946785).abs() < 1e-11);
    }
}
