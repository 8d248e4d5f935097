//! Goodness-of-fit and significance measures: McFadden pseudo-R², the
//! likelihood-ratio test against the intercept-only model, and the
//! chi-square tail probability it requires.
//!
//! The regularized incomplete gamma function is implemented in-house
//! (power series plus Lentz continued fraction) so results are bit-stable
//! across platforms.

use crate::binning::BinSeries;
use crate::error::{Error, Result};
use crate::glm::{self, LogisticFit, Weighting};

/// Intercept-only maximum-likelihood fit.
#[derive(Debug, Clone, Copy)]
pub struct NullFit {
    /// Logit of the weighted mean proportion.
    pub intercept: f64,
    pub loglik: f64,
    /// True when the pooled proportion is exactly 0 or 1.
    pub degenerate: bool,
}

/// Likelihood-ratio test of a fit against its intercept-only null.
#[derive(Debug, Clone, Copy)]
pub struct LrTest {
    /// Deviance difference `2 (l_hat - l_0)`.
    pub statistic: f64,
    /// Number of non-intercept parameters.
    pub df: usize,
    pub p_value: f64,
}

/// Fits the intercept-only model: `p_hat = sum(w y) / sum(w)`.
pub fn fit_null(series: &BinSeries, weighting: Weighting) -> NullFit {
    let (y, w) = glm::responses_and_weights(series, weighting);
    let sw: f64 = w.iter().sum();
    let swy: f64 = y.iter().zip(&w).map(|(yi, wi)| yi * wi).sum();
    let p_hat = if sw > 0.0 { swy / sw } else { 0.5 };
    if p_hat <= 0.0 || p_hat >= 1.0 {
        let intercept = if p_hat <= 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        return NullFit {
            intercept,
            loglik: 0.0,
            degenerate: true,
        };
    }
    let intercept = (p_hat / (1.0 - p_hat)).ln();
    let loglik: f64 = y
        .iter()
        .zip(&w)
        .map(|(yi, wi)| {
            let mut term = 0.0;
            if *yi > 0.0 {
                term += yi * p_hat.ln();
            }
            if *yi < 1.0 {
                term += (1.0 - yi) * (1.0 - p_hat).ln();
            }
            wi * term
        })
        .sum();
    NullFit {
        intercept,
        loglik,
        degenerate: false,
    }
}

/// McFadden pseudo-R²: `1 - loglik / loglik_null`.
///
/// A fitted likelihood below the null signals a broken fit and is an error
/// (beyond a small numerical slack, which is clamped).
pub fn mcfadden_r2(loglik: f64, loglik_null: f64) -> Result<f64> {
    if loglik < loglik_null - 1e-9 {
        return Err(Error::NestingViolation {
            loglik,
            loglik_null,
        });
    }
    if loglik_null == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - loglik / loglik_null).clamp(0.0, 1.0))
}

pub(crate) fn lr_statistic(loglik: f64, loglik_null: f64, df: usize) -> LrTest {
    let statistic = (2.0 * (loglik - loglik_null)).max(0.0);
    LrTest {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    }
}

/// Likelihood-ratio test of a fit against the intercept-only model under
/// the same weighting.
pub fn lr_test(fit: &LogisticFit) -> LrTest {
    lr_statistic(fit.loglik, fit.loglik_null, fit.degree)
}

/// Upper-tail probability of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    debug_assert!(x >= 0.0);
    debug_assert!(df >= 1);
    if x <= 0.0 {
        return 1.0;
    }
    let a = df as f64 / 2.0;
    let half_x = x / 2.0;
    if x < df as f64 + 1.0 {
        1.0 - lower_gamma_series(a, half_x)
    } else {
        upper_gamma_cf(a, half_x)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection formula
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma via its power series.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma via Lentz's continued fraction.
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b.max(TINY);
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}
