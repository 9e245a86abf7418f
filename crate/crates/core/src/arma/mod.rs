//! ARMA(R,M) and ARMAX(R,M) estimation and forecasting for quarterly growth
//! series, with AIC-based order selection.
//!
//! Estimation minimizes the conditional sum of squares (conditional Gaussian
//! likelihood): pre-sample observations are set to the series mean,
//! pre-sample innovations to zero, and all innovations enter the objective.
//! Stationarity and invertibility are enforced through the partial-
//! autocorrelation reparameterization, and the innovation variance is
//! profiled out analytically.

mod optim;
mod transform;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{QuarterDate, QuarterlySeries, SeriesKind};
use optim::{bfgs_polish, nelder_mead};
use transform::unconstrained_to_stationary;

/// Model order and shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmaSpec {
    pub ar_order: usize,
    pub ma_order: usize,
    pub include_intercept: bool,
    pub exogenous: bool,
}

impl ArmaSpec {
    pub fn new(
        ar_order: usize,
        ma_order: usize,
        include_intercept: bool,
        exogenous: bool,
    ) -> Result<Self> {
        if ar_order + ma_order == 0 && !include_intercept {
            return Err(Error::InvalidParameter {
                detail: "model needs at least one AR/MA term or an intercept".into(),
            });
        }
        Ok(Self {
            ar_order,
            ma_order,
            include_intercept,
            exogenous,
        })
    }

    /// Number of mean-equation parameters (excluding the innovation variance).
    pub fn n_params(&self) -> usize {
        usize::from(self.include_intercept)
            + self.ar_order
            + self.ma_order
            + usize::from(self.exogenous)
    }
}

/// A fitted ARMA/ARMAX model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmaFit {
    pub spec: ArmaSpec,
    pub intercept: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub beta_exog: Option<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub sample_window: Option<(QuarterDate, QuarterDate)>,
}

/// Conditional-sum-of-squares objective: innovations from the recursion
/// `e_t = x_t - c - sum phi_j x_{t-j} - sum theta_j e_{t-j} - b exog_t`,
/// with pre-sample x set to the series mean and pre-sample e to zero.
/// Returns the Gaussian negative log-likelihood (sigma^2 profiled at the
/// mean squared innovation) and the innovation sequence; the objective is
/// +infinity when any intermediate value is non-finite.
pub fn css_objective(
    intercept: f64,
    phi: &[f64],
    theta: &[f64],
    beta_exog: Option<f64>,
    series: &[f64],
    exog: Option<&[f64]>,
) -> (f64, Vec<f64>) {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut eps = vec![0.0; n];
    for t in 0..n {
        let mut e = series[t] - intercept;
        for (j, &p) in phi.iter().enumerate() {
            let lag = j + 1;
            e -= p * if t >= lag { series[t - lag] } else { mean };
        }
        for (j, &q) in theta.iter().enumerate() {
            let lag = j + 1;
            if t >= lag {
                e -= q * eps[t - lag];
            }
        }
        if let (Some(b), Some(x)) = (beta_exog, exog) {
            e -= b * x[t];
        }
        if !e.is_finite() {
            return (f64::INFINITY, eps);
        }
        eps[t] = e;
    }
    let sigma2 = eps.iter().map(|e| e * e).sum::<f64>() / n as f64;
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return (f64::INFINITY, eps);
    }
    let nll = 0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0);
    (nll, eps)
}

/// Parameter vector layout: [intercept?, z_ar.., z_ma.., beta?].
fn decode(params: &[f64], spec: &ArmaSpec) -> (f64, Vec<f64>, Vec<f64>, Option<f64>) {
    let mut i = 0;
    let intercept = if spec.include_intercept {
        i += 1;
        params[0]
    } else {
        0.0
    };
    let phi = unconstrained_to_stationary(&params[i..i + spec.ar_order]);
    i += spec.ar_order;
    let theta: Vec<f64> = unconstrained_to_stationary(&params[i..i + spec.ma_order])
        .iter()
        .map(|v| -v)
        .collect();
    i += spec.ma_order;
    let beta = if spec.exogenous { Some(params[i]) } else { None };
    (intercept, phi, theta, beta)
}

const RESTARTS: usize = 3;
const BASE_SEED: u64 = 0x41524d41; // restart randomization, keyed per (R,M) cell

/// Fit an ARMA/ARMAX model to a growth series by CSS minimization.
pub fn fit_arma(
    series: &QuarterlySeries,
    spec: ArmaSpec,
    exog: Option<&QuarterlySeries>,
) -> Result<ArmaFit> {
    if series.kind() != SeriesKind::GrowthRate {
        return Err(Error::KindMismatch {
            expected: "GrowthRate",
            got: series.kind().name(),
        });
    }
    let exog_values = match (spec.exogenous, exog) {
        (true, Some(x)) => {
            if x.start() != series.start() || x.len() != series.len() {
                return Err(Error::Misaligned {
                    detail: "exogenous series must share the growth series' start and length"
                        .into(),
                });
            }
            Some(x.values())
        }
        (true, None) => {
            return Err(Error::MissingExogenous {
                detail: "spec declares an exogenous term".into(),
            })
        }
        (false, _) => None,
    };
    let fit = fit_arma_values(series.values(), spec, exog_values)?;
    Ok(ArmaFit {
        sample_window: Some((series.start(), series.end())),
        ..fit
    })
}

/// CSS fit on raw values; used by `fit_arma` and by simulation-driven tests.
pub fn fit_arma_values(
    values: &[f64],
    spec: ArmaSpec,
    exog: Option<&[f64]>,
) -> Result<ArmaFit> {
    let n = values.len();
    let dim = spec.n_params();
    let warmup = spec.ar_order.max(spec.ma_order);
    if n < dim + warmup + 2 {
        return Err(Error::InsufficientData {
            needed: dim + warmup + 2,
            got: n,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if variance <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    if let Some(x) = exog {
        if x.len() != n {
            return Err(Error::MissingExogenous {
                detail: format!("exogenous has {} values, series has {n}", x.len()),
            });
        }
    }

    let mut objective = |params: &[f64]| -> f64 {
        let (c, phi, theta, beta) = decode(params, &spec);
        css_objective(c, &phi, &theta, beta, values, exog).0
    };

    // deterministic start: mean intercept, zero AR/MA, least-squares slope
    // for the exogenous term
    let mut start = Vec::with_capacity(dim);
    let beta0 = exog.map(|x| {
        let xm = x.iter().sum::<f64>() / n as f64;
        let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
        if sxx > 0.0 {
            x.iter()
                .zip(values)
                .map(|(xv, yv)| (xv - xm) * (yv - mean))
                .sum::<f64>()
                / sxx
        } else {
            0.0
        }
    });
    if spec.include_intercept {
        let xm = exog.map(|x| x.iter().sum::<f64>() / n as f64).unwrap_or(0.0);
        start.push(mean - beta0.unwrap_or(0.0) * xm);
    }
    start.extend(std::iter::repeat_n(0.0, spec.ar_order + spec.ma_order));
    if spec.exogenous {
        start.push(beta0.unwrap_or(0.0));
    }

    let cell_seed = BASE_SEED
        ^ ((spec.ar_order as u64) << 32)
        ^ ((spec.ma_order as u64) << 16)
        ^ u64::from(spec.exogenous);
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
    let mut starts = vec![start.clone()];
    for _ in 0..RESTARTS {
        let jitter: Vec<f64> = start
            .iter()
            .map(|v| v + 0.3 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        starts.push(jitter);
    }

    let max_evals = 400 * (dim + 2);
    let mut best: Option<optim::OptimOutcome> = None;
    for s in &starts {
        let out = nelder_mead(&mut objective, s, max_evals);
        if best.as_ref().is_none_or(|b| out.f < b.f) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let polish = bfgs_polish(&mut objective, &best.x, 200);
    let (final_x, final_f, converged) = if polish.f <= best.f {
        (polish.x, polish.f, polish.converged || best.converged)
    } else {
        (best.x, best.f, best.converged)
    };
    if !final_f.is_finite() {
        return Err(Error::Numeric {
            detail: "objective did not attain a finite value".into(),
        });
    }

    let (intercept, phi, theta, beta_exog) = decode(&final_x, &spec);
    let (nll, residuals) = css_objective(intercept, &phi, &theta, beta_exog, values, exog);
    let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;
    let loglik = -nll;
    let k = (dim + 1) as f64; // mean parameters plus sigma^2
    let aic = 2.0 * k - 2.0 * loglik;
    Ok(ArmaFit {
        spec,
        intercept,
        phi,
        theta,
        beta_exog,
        sigma2,
        loglik,
        aic,
        residuals,
        converged,
        sample_window: None,
    })
}

type Complex = (f64, f64);

fn c_mul(a: Complex, b: Complex) -> Complex {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn c_div(a: Complex, b: Complex) -> Complex {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

fn c_abs(a: Complex) -> f64 {
    (a.0 * a.0 + a.1 * a.1).sqrt()
}

/// Roots of `c0 + c1 z + ... + cp z^p` by Durand-Kerner iteration.
/// Trailing near-zero coefficients are trimmed first.
fn poly_roots(coeffs: &[f64]) -> Vec<Complex> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().is_some_and(|v| v.abs() < 1e-10) {
        c.pop();
    }
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return vec![];
    }
    let eval = |z: Complex| -> Complex {
        let mut acc = (0.0, 0.0);
        for &coef in c.iter().rev() {
            acc = c_mul(acc, z);
            acc.0 += coef;
        }
        acc
    };
    let seed = (0.4, 0.9);
    let mut roots: Vec<Complex> = Vec::with_capacity(degree);
    let mut cur = seed;
    for _ in 0..degree {
        roots.push(cur);
        cur = c_mul(cur, seed);
    }
    let lead = (c[degree], 0.0);
    for _ in 0..300 {
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let mut denom = lead;
            for j in 0..degree {
                if j != i {
                    denom = c_mul(denom, (roots[i].0 - roots[j].0, roots[i].1 - roots[j].1));
                }
            }
            let delta = c_div(eval(roots[i]), denom);
            roots[i].0 -= delta.0;
            roots[i].1 -= delta.1;
            max_step = max_step.max(c_abs(delta));
        }
        if max_step < 1e-12 {
            break;
        }
    }
    roots
}

/// Relative root-separation tolerance below which an AR/MA root pair is
/// treated as a canceling common factor.
const COMMON_FACTOR_TOL: f64 = 0.05;

impl ArmaFit {
    /// True when the fitted AR and MA polynomials share a (near-)common
    /// root. Such a factor pair cancels in the transfer function, leaving
    /// the parameters unidentified; order selection skips these fits.
    pub fn has_common_factors(&self) -> bool {
        if self.phi.is_empty() || self.theta.is_empty() {
            return false;
        }
        let mut ar_poly = vec![1.0];
        ar_poly.extend(self.phi.iter().map(|p| -p));
        let mut ma_poly = vec![1.0];
        ma_poly.extend(self.theta.iter().copied());
        let ar_roots = poly_roots(&ar_poly);
        let ma_roots = poly_roots(&ma_poly);
        for a in &ar_roots {
            for m in &ma_roots {
                let dist = ((a.0 - m.0).powi(2) + (a.1 - m.1).powi(2)).sqrt();
                if dist <= COMMON_FACTOR_TOL * c_abs(*a).min(c_abs(*m)).max(1.0) {
                    return true;
                }
            }
        }
        false
    }
}

/// The default AIC search grid: all (R, M) with R, M in 0..=4.
pub fn default_order_grid() -> Vec<(usize, usize)> {
    let mut grid = Vec::with_capacity(25);
    for r in 0..=4 {
        for m in 0..=4 {
            grid.push((r, m));
        }
    }
    grid
}

/// Fit every (R, M) on the grid and return the converged fit with minimum
/// AIC; ties break toward smaller R+M, then smaller R. The intercept is
/// always estimated.
pub fn select_order(
    series: &QuarterlySeries,
    exog: Option<&QuarterlySeries>,
    grid: &[(usize, usize)],
) -> Result<(ArmaSpec, ArmaFit)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            detail: "order grid is empty".into(),
        });
    }
    let fits: Vec<((usize, usize), Result<ArmaFit>)> = grid
        .par_iter()
        .map(|&cell| {
            let res = ArmaSpec::new(cell.0, cell.1, true, exog.is_some())
                .and_then(|spec| fit_arma(series, spec, exog));
            (cell, res)
        })
        .collect();

    let mut best: Option<(&(usize, usize), &ArmaFit)> = None;
    let mut failures = Vec::new();
    for (cell, res) in &fits {
        match res {
            Ok(fit) if fit.converged && fit.aic.is_finite() && fit.has_common_factors() => {
                failures.push(format!(
                    "({},{}) has near-canceling AR/MA factors",
                    cell.0, cell.1
                ));
            }
            Ok(fit) if fit.converged && fit.aic.is_finite() => {
                let better = match best {
                    None => true,
                    Some((bc, bf)) => {
                        let key = (fit.aic, cell.0 + cell.1, cell.0);
                        let bkey = (bf.aic, bc.0 + bc.1, bc.0);
                        key.partial_cmp(&bkey) == Some(std::cmp::Ordering::Less)
                    }
                };
                if better {
                    best = Some((cell, fit));
                }
            }
            Ok(_) => failures.push(format!("({},{}) did not converge", cell.0, cell.1)),
            Err(e) => failures.push(format!("({},{}): {e}", cell.0, cell.1)),
        }
    }
    match best {
        Some((_, fit)) => Ok((fit.spec, fit.clone())),
        None => Err(Error::NoConvergedFit {
            failures: failures.join("; "),
        }),
    }
}

/// Innovations implied by a fitted model over a history (the CSS recursion
/// run with the fitted parameters).
pub fn filter_innovations(fit: &ArmaFit, history: &[f64], exog_history: Option<&[f64]>) -> Vec<f64> {
    css_objective(
        fit.intercept,
        &fit.phi,
        &fit.theta,
        fit.beta_exog,
        history,
        exog_history,
    )
    .1
}

/// Dynamic h-step forecast: future innovations are set to zero and forecast
/// values feed back into the recursion. For an exogenous model the future
/// exogenous path must be supplied.
pub fn arma_forecast(
    fit: &ArmaFit,
    history: &[f64],
    exog_history: Option<&[f64]>,
    exog_future: Option<&[f64]>,
    horizon: usize,
) -> Result<Vec<f64>> {
    let r = fit.spec.ar_order;
    let m = fit.spec.ma_order;
    let warmup = r.max(m);
    if history.len() < warmup.max(1) {
        return Err(Error::InsufficientData {
            needed: warmup.max(1),
            got: history.len(),
        });
    }
    if fit.spec.exogenous {
        match exog_history {
            Some(x) if x.len() == history.len() => {}
            _ => {
                return Err(Error::MissingExogenous {
                    detail: "exogenous history must align with the regional history".into(),
                })
            }
        }
        match exog_future {
            Some(x) if x.len() >= horizon => {}
            _ => {
                return Err(Error::MissingExogenous {
                    detail: format!("need {horizon} future exogenous values"),
                })
            }
        }
    }
    let eps = filter_innovations(fit, history, exog_history);
    let n = history.len();
    let mut xs = history.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let t = n + step;
        let mut v = fit.intercept;
        for (j, &p) in fit.phi.iter().enumerate() {
            v += p * xs[t - (j + 1)];
        }
        for (j, &q) in fit.theta.iter().enumerate() {
            let lag = j + 1;
            if t >= lag && t - lag < n {
                v += q * eps[t - lag];
            }
        }
        if let (Some(b), Some(x)) = (fit.beta_exog, exog_future) {
            v += b * x[step];
        }
        xs.push(v);
        out.push(v);
    }
    Ok(out)
}

/// Moving-average representation weights psi_0..psi_{h-1}.
pub fn psi_weights(fit: &ArmaFit, horizon: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(horizon);
    if horizon == 0 {
        return psi;
    }
    psi.push(1.0);
    for k in 1..horizon {
        let mut v = if k <= fit.spec.ma_order {
            fit.theta[k - 1]
        } else {
            0.0
        };
        for (j, &p) in fit.phi.iter().enumerate() {
            let lag = j + 1;
            if k >= lag {
                v += p * psi[k - lag];
            }
        }
        psi.push(v);
    }
    psi
}
