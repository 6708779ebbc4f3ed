//! Chi-square(1) tail probabilities through the complementary error function.
//!
//! `erfc` uses the series
//! `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1))`
//! below `x = 2.5`, where all terms are positive so nothing cancels, and the
//! continued fraction
//! `erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`
//! (modified Lentz evaluation) above it.

use crate::error::StatsError;

const SERIES_LIMIT: f64 = 2.5;
const TINY: f64 = 1e-300;

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..500 {
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * (-x2).exp() * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..1000 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < SERIES_LIMIT {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// Survival function of the chi-square distribution with one degree of
/// freedom: `P(X >= chi2) = erfc(sqrt(chi2 / 2))`.
pub fn chi2_p_value(chi2: f64) -> Result<f64, StatsError> {
    if chi2.is_nan() || chi2 < 0.0 {
        return Err(StatsError::InvalidArgument(format!(
            "chi-square statistic must be non-negative, got {chi2}"
        )));
    }
    if chi2 == 0.0 {
        return Ok(1.0);
    }
    Ok(erfc((chi2 / 2.0).sqrt()).clamp(0.0, 1.0))
}
