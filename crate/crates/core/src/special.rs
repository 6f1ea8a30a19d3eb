//! Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for real `x > 0`.
//!
//! Below `x = 1` the power series around the origin is used; above it the
//! Lentz continued fraction, which directly yields the scaled value
//! `e^x E1(x)`. The scaled form is what the closed-form success
//! probabilities consume: products such as `e^{tc} E1(t(a + c))` are
//! rewritten as `e^{tc - t(a+c)} · e1_scaled(t(a + c))`, which never overflows.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 1.0;
const MAX_ITER: usize = 1_000;
const TINY: f64 = 1e-300;

/// `E1(x)` for `x > 0`. Relative error below `1e-14` on the tested range.
pub fn e1(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= SERIES_LIMIT {
        Ok(series(x))
    } else {
        Ok(continued_fraction(x) * (-x).exp())
    }
}

/// `e^x · E1(x)` for `x > 0`; finite for every finite positive `x` and
/// behaves like `1/x` as `x → ∞`.
pub fn e1_scaled(x: f64) -> Result<f64> {
    check_domain(x)?;
    if x <= SERIES_LIMIT {
        Ok(series(x) * x.exp())
    } else if x.is_infinite() {
        Ok(0.0)
    } else {
        Ok(continued_fraction(x))
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::DomainError(x))
    }
}

/// `-γ - ln x + Σ_{k≥1} (-1)^{k+1} x^k / (k·k!)`.
fn series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0; // (-1)^{k+1} x^k / k!
    for k in 1..MAX_ITER {
        let kf = k as f64;
        power *= if k == 1 { x } else { -x / kf };
        let term = power / kf;
        sum += term;
        if term.abs() < f64::EPSILON * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Modified Lentz evaluation of `e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))`.
fn continued_fraction(x: f64) -> f64 {
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            break;
        }
    }
    h
}
