//! Univariate truncated normal sampling.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::normal::{ln_std_normal_cdf, std_normal_cdf, std_normal_inv_cdf};
use crate::error::{Error, Result};

/// Standardized lower bound beyond which exponential rejection replaces inversion.
const TAIL_SWITCH: f64 = 6.0;
const MIN_LOG_MASS: f64 = -690.7755; // ln(1e-300)

/// Draws from N(mean, sd²) restricted to the open interval (lower, upper).
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    rng: &mut R,
) -> Result<f64> {
    if !(sd > 0.0 && sd.is_finite()) || !mean.is_finite() {
        return Err(Error::invalid(format!("truncated normal needs finite mean and sd > 0, got ({mean}, {sd})")));
    }
    let lo = lower.unwrap_or(f64::NEG_INFINITY);
    let hi = upper.unwrap_or(f64::INFINITY);
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::invalid(format!("truncation needs lower < upper, got ({lo}, {hi})")));
    }
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let z = standard_truncated(a, b, rng).ok_or(Error::ImpossibleTruncation { lower: lo, upper: hi })?;
    let x = mean + sd * z;
    Ok(clamp_inside(x, lo, hi))
}

/// Draws N(mean, 1) restricted to (0, ∞) when `positive`, (−∞, 0) otherwise.
///
/// Exact and much cheaper than inversion: plain rejection from the untruncated
/// normal when the kept side holds at least half the mass, otherwise Robert's
/// translated-exponential proposal with the optimal rate. Both accept with
/// probability above one half.
pub fn sample_unit_half_line<R: Rng + ?Sized>(mean: f64, positive: bool, rng: &mut R) -> Result<f64> {
    if !mean.is_finite() {
        return Err(Error::invalid(format!("truncated normal needs a finite mean, got {mean}")));
    }
    // reduce to Z ~ N(0, 1) restricted to (a, ∞)
    let (a, sign) = if positive { (-mean, 1.0) } else { (mean, -1.0) };
    if a > 30.0 && ln_std_normal_cdf(-a) < MIN_LOG_MASS {
        let (lo, hi) = if positive { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, 0.0) };
        return Err(Error::ImpossibleTruncation { lower: lo, upper: hi });
    }
    let z = if a <= 0.0 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > a {
                break z;
            }
        }
    } else {
        let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = Exp1.sample(rng);
            let z = a + e / alpha;
            let log_accept = -0.5 * (z - alpha) * (z - alpha);
            if rng.gen::<f64>().ln() <= log_accept {
                break z;
            }
        }
    };
    let x = sign * (z - a);
    Ok(if positive { clamp_inside(x, 0.0, f64::INFINITY) } else { clamp_inside(x, f64::NEG_INFINITY, 0.0) })
}

/// Rounding in `mean + sd*z` can land on a bound; nudge strictly inside.
fn clamp_inside(x: f64, lo: f64, hi: f64) -> f64 {
    let mut x = x;
    if x <= lo {
        x = next_up(lo);
    }
    if x >= hi {
        x = next_down(hi);
    }
    if x <= lo {
        // interval holds no float strictly inside; midpoint is the best we can do
        x = 0.5 * (lo + hi);
    }
    x
}

fn next_up(x: f64) -> f64 {
    if x.is_infinite() {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Standard normal truncated to (a, b). `None` when the interval mass underflows.
fn standard_truncated<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Option<f64> {
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return Some(rng.sample(StandardNormal));
    }
    // Work in the upper tail: mirror intervals lying below zero.
    if b <= 0.0 {
        return standard_truncated(-b, -a, rng).map(|z| -z);
    }
    if log_mass(a, b) < MIN_LOG_MASS {
        return None;
    }
    if a >= TAIL_SWITCH {
        return Some(upper_tail(a, b, rng));
    }
    for _ in 0..64 {
        let z = if a >= 0.0 {
            // both tail probabilities via Φ(−·) to keep precision
            let pa = std_normal_cdf(-a);
            let pb = std_normal_cdf(-b);
            let u: f64 = rng.gen();
            let p = pb + u * (pa - pb);
            if !(p > 0.0 && p < 1.0) {
                continue;
            }
            -std_normal_inv_cdf(p).ok()?
        } else {
            let pa = std_normal_cdf(a);
            let pb = std_normal_cdf(b);
            let u: f64 = rng.gen();
            let p = pa + u * (pb - pa);
            if !(p > 0.0 && p < 1.0) {
                continue;
            }
            std_normal_inv_cdf(p).ok()?
        };
        if z > a && z < b {
            return Some(z);
        }
    }
    Some(0.5 * (a.max(-1e300) + b.min(1e300)))
}

fn log_mass(a: f64, b: f64) -> f64 {
    // mass of (a, b) with a ≥ 0 or straddling zero
    if a >= 0.0 {
        let la = ln_std_normal_cdf(-a);
        let lb = ln_std_normal_cdf(-b);
        la + (-(lb - la).exp()).ln_1p()
    } else {
        (std_normal_cdf(b) - std_normal_cdf(a)).ln()
    }
}

/// Robert (1995) rejection sampler for (a, b) with a ≥ 6.
fn upper_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b.is_finite() && a * (b - a) < 1.0 {
        // narrow interval: uniform proposal, density ratio exp(−(z² − a²)/2)
        loop {
            let z = a + (b - a) * rng.gen::<f64>();
            let log_accept = -0.5 * (z * z - a * a);
            if rng.gen::<f64>().ln() <= log_accept && z > a && z < b {
                return z;
            }
        }
    }
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = a + e / alpha;
        let log_accept = -0.5 * (z - alpha) * (z - alpha);
        if rng.gen::<f64>().ln() <= log_accept && z > a && z < b {
            return z;
        }
    }
}
