//! Special functions and scalar solvers.
//!
//! The Gaussian tail `Q(x) = ½·erfc(x/√2)` is evaluated from an erfc that
//! switches between the exponentially scaled power series of `erf` (small
//! arguments) and the Laplace continued fraction of `erfc` (large
//! arguments). Relative accuracy stays near 1e-14 down to the underflow
//! threshold, which is what URLLC targets of 1e-5 and below need.
//!
//! Solvers are deterministic: the same inputs always walk the same path.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A probability strictly inside the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            domain(format!("probability must lie in (0, 1), got {value}"))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Termination settings shared by [`bisect`] and [`fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-10,
            abs_tolerance: 1e-14,
            max_iterations: 200,
        }
    }
}

impl SolverSettings {
    pub fn new(rel_tolerance: f64, abs_tolerance: f64, max_iterations: usize) -> Result<Self> {
        if !(rel_tolerance > 0.0) || !(abs_tolerance > 0.0) || max_iterations == 0 {
            return domain(format!(
                "solver settings need positive tolerances and at least one iteration \
                 (rel = {rel_tolerance}, abs = {abs_tolerance}, max = {max_iterations})"
            ));
        }
        Ok(Self {
            rel_tolerance,
            abs_tolerance,
            max_iterations,
        })
    }

    fn tolerance_at(&self, x: f64) -> f64 {
        self.abs_tolerance.max(self.rel_tolerance * x.abs())
    }
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `exp(-x²)` with the square split so that rounding in `x²` does not
/// get amplified for large `x`.
fn exp_neg_square(x: f64) -> f64 {
    let hi = (x * 4096.0).trunc() / 4096.0;
    let lo = x - hi;
    (-hi * hi).exp() * (-lo * (x + hi)).exp()
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!
    let two_x2 = 2.0 * x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= two_x2 / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * exp_neg_square(x) * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..=500 {
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    exp_neg_square(x) / (SQRT_PI * f)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else if x < 27.3 {
        erfc_continued_fraction(x)
    } else {
        0.0
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`q_function`]. Negative for `p > 0.5`.
pub fn inv_q_function(p: Probability) -> f64 {
    let p = p.value();
    if p == 0.5 {
        return 0.0;
    }
    // 1 - p is exact for p in [0.5, 1)
    let (tail, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    sign * upper_tail_quantile(tail)
}

fn upper_tail_quantile(p: f64) -> f64 {
    let target = p.ln();
    let mut lo = 0.0_f64;
    let mut hi = 40.0_f64;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if q_function(mid).ln() > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    // Newton on ln Q(x) - ln p; d/dx ln Q = -φ/Q.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let q = q_function(x);
        let step = (q.ln() - target) * q / normal_pdf(x);
        if !step.is_finite() {
            break;
        }
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F>(f: F, lo: f64, hi: f64, settings: &SolverSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    bisect_counted(f, lo, hi, settings).map(|(x, _)| x)
}

pub(crate) fn bisect_counted<F>(
    f: F,
    lo: f64,
    hi: f64,
    settings: &SolverSettings,
) -> Result<(f64, usize)>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok((lo, 0));
    }
    if f_hi == 0.0 {
        return Ok((hi, 0));
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let mut mid = lo;
    let mut f_mid = f_lo;
    for iteration in 1..=settings.max_iterations {
        mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Ok((mid, iteration));
        }
        f_mid = f(mid);
        if f_mid == 0.0 || f_mid.abs() <= settings.abs_tolerance {
            return Ok((mid, iteration));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo <= settings.tolerance_at(mid) {
            return Ok((lo + 0.5 * (hi - lo), iteration));
        }
    }
    Err(Error::Convergence {
        iterations: settings.max_iterations,
        last: mid,
        residual: f_mid,
        detail: format!("bisection bracket [{lo}, {hi}] still wider than tolerance"),
    })
}

/// Which strategy produced a [`FixedPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Iteration,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub value: f64,
    /// Total function evaluations across both strategies.
    pub iterations: usize,
    pub strategy: Strategy,
}

const OSCILLATION_LIMIT: usize = 3;

/// Solves `x = g(x)` by direct iteration from `x0`.
///
/// After three direction reversals, or when iteration runs out of budget,
/// the solver bisects `x - g(x)` between visited points of opposite
/// residual sign.
pub fn fixed_point<G>(g: G, x0: f64, settings: &SolverSettings) -> Result<FixedPoint>
where
    G: Fn(f64) -> f64,
{
    fixed_point_with_fallback(g, x0, None, settings)
}

/// Like [`fixed_point`], but with a caller-supplied bracket of the residual
/// `x - g(x)` to bisect if iteration does not settle.
pub fn fixed_point_with_fallback<G>(
    g: G,
    x0: f64,
    bracket: Option<(f64, f64)>,
    settings: &SolverSettings,
) -> Result<FixedPoint>
where
    G: Fn(f64) -> f64,
{
    if !x0.is_finite() {
        return domain(format!("fixed-point seed must be finite, got {x0}"));
    }
    let residual = |x: f64| x - g(x);
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut x = x0;
    let mut last_step = 0.0_f64;
    let mut reversals = 0;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        let next = g(x);
        iterations += 1;
        if !next.is_finite() {
            break;
        }
        let step = next - x;
        history.push((x, -step));
        if step.abs() <= settings.tolerance_at(x) {
            return Ok(FixedPoint {
                value: x,
                iterations,
                strategy: Strategy::Iteration,
            });
        }
        if last_step != 0.0 && step.signum() != last_step.signum() {
            reversals += 1;
            if reversals >= OSCILLATION_LIMIT {
                break;
            }
        }
        last_step = step;
        x = next;
    }

    let (lo, hi) = match sign_change(&history).or(bracket) {
        Some(b) => b,
        None => {
            let last = history.last().copied().unwrap_or((x, f64::NAN));
            return Err(Error::Convergence {
                iterations,
                last: last.0,
                residual: last.1,
                detail: format!(
                    "iteration did not settle and no residual sign change was found \
                     among {} visited points",
                    history.len()
                ),
            });
        }
    };
    match bisect_counted(residual, lo, hi, settings) {
        Ok((value, used)) => Ok(FixedPoint {
            value,
            iterations: iterations + used,
            strategy: Strategy::Bisection,
        }),
        Err(Error::Convergence {
            iterations: used,
            last,
            residual,
            detail,
        }) => Err(Error::Convergence {
            iterations: iterations + used,
            last,
            residual,
            detail,
        }),
        Err(e) => Err(e),
    }
}

/// Tightest pair of visited points whose residuals differ in sign.
fn sign_change(history: &[(f64, f64)]) -> Option<(f64, f64)> {
    let below = history
        .iter()
        .filter(|(_, r)| *r < 0.0)
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    let above = history
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    Some((below.0.min(above.0), below.0.max(above.0)))
}
