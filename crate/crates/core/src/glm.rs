//! Binomial logistic regression fitted by iteratively reweighted least
//! squares (Newton-Raphson on the binomial log-likelihood).
//!
//! The predictor is the bin midpoint, standardized to zero mean and unit
//! sample standard deviation before polynomial expansion; raw calendar-year
//! powers up to degree 6 would otherwise produce catastrophically
//! conditioned normal equations. Coefficients are reported on both scales.
//!
//! Two weightings are supported. `Weighted` assigns each bin a prior weight
//! equal to its trials (the successes/failures form of the binomial
//! likelihood); `Unweighted` fits the bin proportions directly with unit
//! weight, i.e. the Bernoulli-form cross-entropy with fractional responses.

use nalgebra::{DMatrix, DVector};

use crate::binning::BinSeries;
use crate::diagnostics;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 30;
const LOGLIK_TOL: f64 = 1e-10;
const COEF_TOL: f64 = 1e-8;
const SEPARATION_COEF_BOUND: f64 = 30.0;
const SEPARATION_LOGLIK_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weighting {
    /// Prior weight = trials in the bin.
    Weighted,
    /// Unit weight per bin proportion.
    Unweighted,
}

impl Weighting {
    pub fn label(&self) -> &'static str {
        match self {
            Weighting::Weighted => "weighted",
            Weighting::Unweighted => "unweighted",
        }
    }
}

/// Standardized polynomial design: row i is `(1, z_i, z_i^2, ..., z_i^d)`
/// with `z = (midpoint - center) / scale`.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    pub degree: usize,
    pub center: f64,
    pub scale: f64,
    rows: Vec<Vec<f64>>,
}

impl DesignSpec {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_params(&self) -> usize {
        self.degree + 1
    }

    pub fn standardize(&self, year: f64) -> f64 {
        (year - self.center) / self.scale
    }
}

/// Builds the standardized polynomial design for a bin series.
///
/// Requires at least `degree + 2` bins (one residual degree of freedom)
/// and at least 2 distinct midpoints. Centering uses the sample mean and
/// the sample (n-1) standard deviation of the midpoints.
pub fn build_design(series: &BinSeries, degree: usize) -> Result<DesignSpec> {
    let n = series.len();
    let needed = degree + 2;
    if n < needed {
        return Err(Error::Underdetermined {
            n_bins: n,
            degree,
            needed,
        });
    }
    let midpoints = series.midpoints();
    let center = midpoints.iter().sum::<f64>() / n as f64;
    let var = midpoints
        .iter()
        .map(|m| (m - center).powi(2))
        .sum::<f64>()
        / (n as f64 - 1.0);
    let scale = var.sqrt();
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateAbscissa);
    }
    let rows = midpoints
        .iter()
        .map(|m| {
            let z = (m - center) / scale;
            let mut row = Vec::with_capacity(degree + 1);
            let mut p = 1.0;
            for _ in 0..=degree {
                row.push(p);
                p *= z;
            }
            row
        })
        .collect();
    Ok(DesignSpec {
        degree,
        center,
        scale,
        rows,
    })
}

/// Per-bin (response, weight) under a weighting mode.
pub(crate) fn responses_and_weights(series: &BinSeries, weighting: Weighting) -> (Vec<f64>, Vec<f64>) {
    let y: Vec<f64> = series.bins().iter().map(|b| b.proportion()).collect();
    let w: Vec<f64> = match weighting {
        Weighting::Weighted => series.bins().iter().map(|b| b.trials() as f64).collect(),
        Weighting::Unweighted => vec![1.0; series.len()],
    };
    (y, w)
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(eta)) without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn linear_predictor(beta: &[f64], row: &[f64]) -> f64 {
    row.iter().zip(beta).map(|(x, b)| x * b).sum()
}

/// Exact binomial log-likelihood `sum_i w_i (y_i eta_i - log(1+e^eta_i))`,
/// finite for all finite coefficients (0 log 0 := 0 handled implicitly).
pub fn log_likelihood(
    beta_std: &[f64],
    design: &DesignSpec,
    series: &BinSeries,
    weighting: Weighting,
) -> f64 {
    let (y, w) = responses_and_weights(series, weighting);
    design
        .rows()
        .iter()
        .zip(y.iter().zip(&w))
        .map(|(row, (yi, wi))| {
            let eta = linear_predictor(beta_std, row);
            wi * (yi * eta - softplus(eta))
        })
        .sum()
}

/// Score vector `sum_i w_i (y_i - p_i) x_i` on the standardized scale.
pub fn loglik_gradient(
    beta_std: &[f64],
    design: &DesignSpec,
    series: &BinSeries,
    weighting: Weighting,
) -> Vec<f64> {
    let (y, w) = responses_and_weights(series, weighting);
    let mut grad = vec![0.0; design.n_params()];
    for (row, (yi, wi)) in design.rows().iter().zip(y.iter().zip(&w)) {
        let p = sigmoid(linear_predictor(beta_std, row));
        let r = wi * (yi - p);
        for (g, x) in grad.iter_mut().zip(row) {
            *g += r * x;
        }
    }
    grad
}

/// Highest attainable log-likelihood: each bin predicted at its own proportion.
fn saturated_loglik(series: &BinSeries, weighting: Weighting) -> f64 {
    let (y, w) = responses_and_weights(series, weighting);
    y.iter()
        .zip(&w)
        .map(|(yi, wi)| {
            let mut ll = 0.0;
            if *yi > 0.0 {
                ll += yi * yi.ln();
            }
            if *yi < 1.0 {
                ll += (1.0 - yi) * (1.0 - yi).ln();
            }
            wi * ll
        })
        .sum()
}

/// Result of a logistic fit, with coefficients on both the standardized
/// and the raw calendar-year scale.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub degree: usize,
    pub weighting: Weighting,
    pub coeffs_std: Vec<f64>,
    pub coeffs_raw: Vec<f64>,
    pub center: f64,
    pub scale: f64,
    pub loglik: f64,
    pub loglik_null: f64,
    pub mcfadden_r2: f64,
    pub p_value: f64,
    pub df_residual: i64,
    pub n_bins: usize,
    pub iterations: usize,
    pub converged: bool,
    pub separation: bool,
}

impl LogisticFit {
    /// Probability of the innovative form at a calendar year.
    pub fn predict(&self, year: f64) -> f64 {
        let z = (year - self.center) / self.scale;
        let mut eta = 0.0;
        let mut p = 1.0;
        for b in &self.coeffs_std {
            eta += b * p;
            p *= z;
        }
        sigmoid(eta)
    }

    /// Year at which the fitted probability crosses 0.5 (degree-1 only).
    pub fn t_half(&self) -> Result<f64> {
        if self.degree != 1 {
            return Err(Error::UnsupportedConversion(self.degree));
        }
        Ok(-self.coeffs_raw[0] / self.coeffs_raw[1])
    }

    /// Flat CSV record; `beta_raw` columns are padded up to `max_degree`.
    pub fn to_csv_row(&self, change: &str, window: u32, overlap: u32, max_degree: usize) -> String {
        let mut fields = vec![
            change.to_string(),
            self.degree.to_string(),
            self.weighting.label().to_string(),
            window.to_string(),
            overlap.to_string(),
        ];
        for k in 0..=max_degree {
            fields.push(
                self.coeffs_raw
                    .get(k)
                    .map(|b| format!("{b:e}"))
                    .unwrap_or_default(),
            );
        }
        fields.push(format!("{:e}", self.loglik));
        fields.push(format!("{:e}", self.loglik_null));
        fields.push(format!("{:.6}", self.mcfadden_r2));
        fields.push(format!("{:e}", self.p_value));
        fields.push(self.df_residual.to_string());
        fields.push(self.converged.to_string());
        fields.push(self.separation.to_string());
        fields.join(",")
    }

    pub fn csv_header(max_degree: usize) -> String {
        let mut fields = vec![
            "change".to_string(),
            "degree".to_string(),
            "weighting".to_string(),
            "window".to_string(),
            "overlap".to_string(),
        ];
        for k in 0..=max_degree {
            fields.push(format!("beta{k}_raw"));
        }
        for tail in ["loglik", "loglik_null", "r2", "p_value", "df", "converged", "separation"] {
            fields.push(tail.to_string());
        }
        fields.join(",")
    }
}

/// Re-expresses standardized polynomial coefficients in raw year powers:
/// `sum_k b_k ((t-c)/s)^k = sum_j beta_j t^j` as a polynomial identity.
pub fn destandardize(coeffs_std: &[f64], center: f64, scale: f64) -> Vec<f64> {
    let d = coeffs_std.len().saturating_sub(1);
    let mut raw = vec![0.0; d + 1];
    // binomial expansion of ((t - c)/s)^k
    let mut binom = vec![vec![0.0; d + 1]; d + 1];
    for (k, row) in binom.iter_mut().enumerate() {
        row[0] = 1.0;
        for j in 1..=k {
            row[j] = row[j - 1] * (k - j + 1) as f64 / j as f64;
        }
    }
    for (k, b) in coeffs_std.iter().enumerate() {
        let sk = scale.powi(k as i32);
        for j in 0..=k {
            raw[j] += b / sk * binom[k][j] * (-center).powi((k - j) as i32);
        }
    }
    raw
}

struct IrlsOutcome {
    beta: Vec<f64>,
    loglik: f64,
    iterations: usize,
    converged: bool,
    separation: bool,
}

fn run_irls(design: &DesignSpec, series: &BinSeries, weighting: Weighting) -> Result<IrlsOutcome> {
    let (y, w) = responses_and_weights(series, weighting);
    let p_count = design.n_params();
    let n = design.n_rows();
    let sat = saturated_loglik(series, weighting);

    let mut beta = vec![0.0; p_count];
    let mut loglik = log_likelihood(&beta, design, series, weighting);
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;

    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        // Newton system: (X^T W X) d = X^T w (y - p), W_ii = w_i p_i (1-p_i)
        let mut hess = DMatrix::<f64>::zeros(p_count, p_count);
        let mut score = DVector::<f64>::zeros(p_count);
        for i in 0..n {
            let row = &design.rows()[i];
            let p = sigmoid(linear_predictor(&beta, row));
            let wi = w[i] * p * (1.0 - p);
            let ri = w[i] * (y[i] - p);
            for a in 0..p_count {
                score[a] += ri * row[a];
                for b in a..p_count {
                    hess[(a, b)] += wi * row[a] * row[b];
                }
            }
        }
        for a in 0..p_count {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        let direction = match hess.clone().cholesky() {
            Some(chol) => chol.solve(&score),
            None => {
                if iter == 0 {
                    // at beta = 0 the weights are strictly positive, so a
                    // failed factorization means a rank-deficient design
                    return Err(Error::SingularDesign);
                }
                break;
            }
        };

        // step-halving: never accept a step that decreases the likelihood
        let mut scale_step = 1.0;
        let mut accepted = false;
        let mut new_beta = beta.clone();
        let mut new_loglik = loglik;
        for _ in 0..=MAX_HALVINGS {
            for (nb, (b, d)) in new_beta.iter_mut().zip(beta.iter().zip(direction.iter())) {
                *nb = b + scale_step * d;
            }
            new_loglik = log_likelihood(&new_beta, design, series, weighting);
            if new_loglik.is_finite() && new_loglik >= loglik {
                accepted = true;
                break;
            }
            scale_step *= 0.5;
        }
        if !accepted {
            break;
        }

        last_step = new_beta
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let delta_ll = new_loglik - loglik;
        beta = new_beta;
        loglik = new_loglik;
        if delta_ll.abs() < LOGLIK_TOL && last_step < COEF_TOL {
            converged = true;
            break;
        }
    }

    let max_coef = beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let separation = max_coef > SEPARATION_COEF_BOUND
        || (sat - loglik < SEPARATION_LOGLIK_GAP && !converged && last_step > COEF_TOL);
    Ok(IrlsOutcome {
        beta,
        loglik,
        iterations,
        converged,
        separation,
    })
}

/// Fits a degree-`degree` polynomial logistic model to a bin series.
///
/// Non-convergence and separation are reported in the returned flags rather
/// than as errors; a rank-deficient design is an error.
pub fn fit_logistic(series: &BinSeries, degree: usize, weighting: Weighting) -> Result<LogisticFit> {
    let design = build_design(series, degree)?;
    let outcome = run_irls(&design, series, weighting)?;
    let null = diagnostics::fit_null(series, weighting);
    let r2 = diagnostics::mcfadden_r2(outcome.loglik, null.loglik)?;
    let lr = diagnostics::lr_statistic(outcome.loglik, null.loglik, degree);
    let coeffs_raw = destandardize(&outcome.beta, design.center, design.scale);
    Ok(LogisticFit {
        degree,
        weighting,
        coeffs_raw,
        center: design.center,
        scale: design.scale,
        loglik: outcome.loglik,
        loglik_null: null.loglik,
        mcfadden_r2: r2,
        p_value: lr.p_value,
        df_residual: series.len() as i64 - (degree as i64 + 1),
        n_bins: series.len(),
        iterations: outcome.iterations,
        converged: outcome.converged,
        separation: outcome.separation,
        coeffs_std: outcome.beta,
    })
}

/// The classical s-curve parameterization `p(t) = 1 / (1 + a e^{-rt})`,
/// with `t` in raw calendar years, plus the half-way year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiotrowskiParams {
    /// Shift parameter for calendar-year time, `a = exp(-beta0_raw)`.
    pub a: f64,
    /// Rate parameter, equal to the raw slope.
    pub r: f64,
    /// Calendar year at which the fitted probability is 0.5.
    pub t_half: f64,
}

/// Converts a degree-1 fit to the classical parameterization.
pub fn to_piotrowski(fit: &LogisticFit) -> Result<PiotrowskiParams> {
    if fit.degree != 1 {
        return Err(Error::UnsupportedConversion(fit.degree));
    }
    let beta0 = fit.coeffs_raw[0];
    let beta1 = fit.coeffs_raw[1];
    Ok(PiotrowskiParams {
        a: (-beta0).exp(),
        r: beta1,
        t_half: -beta0 / beta1,
    })
}
