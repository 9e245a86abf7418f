//! ADF and augmented-MTAR unit-root tests on demeaned log-ratio series,
//! including Monte-Carlo simulation of the nonstandard critical values for
//! the joint threshold F-statistic.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::{f_test_restrictions, ols_fit, DesignMatrix, OlsFit};
use crate::series::{DemeanedRatio, QuarterDate, QuarterlySeries};

/// Default augmentation: four lagged differences.
pub const DEFAULT_MTAR_LAGS: usize = 4;

/// Name of the statistic whose critical values this module simulates.
pub const MTAR_STATISTIC: &str = "phi-mu-star";

/// Heaviside indicator on the previous change: 1 when `delta_prev >= 0`.
pub fn heaviside(delta_prev: f64) -> u8 {
    debug_assert!(delta_prev.is_finite());
    if delta_prev >= 0.0 {
        1
    } else {
        0
    }
}

struct MtarColumns {
    columns: Vec<Vec<f64>>,
    response: Vec<f64>,
    indicator: Vec<u8>,
    first_usable: usize, // observation index of the first regression row
}

/// Shared column construction for the MTAR regression
/// `dy_t = b1 I_t y_{t-1} + b2 (1 - I_t) y_{t-1} + sum_j b_{2+j} dy_{t-j}`
/// with `I_t = H(dy_{t-1})`.
///
/// The first usable row needs `dy_{t-lags}` and the indicator's `dy_{t-1}`,
/// so it sits at observation index `max(lags + 1, 2)`.
fn mtar_columns(values: &[f64], lags: usize) -> Result<MtarColumns> {
    let n = values.len();
    let first_usable = (lags + 1).max(2);
    let k = 2 + lags;
    // at least one residual degree of freedom
    let min_len = first_usable + k + 1;
    if n < min_len {
        return Err(Error::InsufficientData {
            needed: min_len,
            got: n,
        });
    }
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect(); // d[i] = dy_{i+1}
    let rows = n - first_usable;
    let mut columns = vec![Vec::with_capacity(rows); k];
    let mut response = Vec::with_capacity(rows);
    let mut indicator = Vec::with_capacity(rows);
    for t in first_usable..n {
        let ylag = values[t - 1];
        let ind = heaviside(d[t - 2]);
        indicator.push(ind);
        columns[0].push(if ind == 1 { ylag } else { 0.0 });
        columns[1].push(if ind == 0 { ylag } else { 0.0 });
        for j in 1..=lags {
            columns[1 + j].push(d[t - 1 - j]);
        }
        response.push(d[t - 1]);
    }
    Ok(MtarColumns {
        columns,
        response,
        indicator,
        first_usable,
    })
}

fn mtar_labels(lags: usize) -> Vec<String> {
    let mut labels = vec!["ylag_up".to_string(), "ylag_down".to_string()];
    for j in 1..=lags {
        labels.push(format!("dlag{j}"));
    }
    labels
}

/// Restriction system for the joint null that both threshold coefficients
/// are zero.
fn threshold_restrictions(k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r1 = vec![0.0; k];
    let mut r2 = vec![0.0; k];
    r1[0] = 1.0;
    r2[1] = 1.0;
    (vec![r1, r2], vec![0.0, 0.0])
}

/// The assembled MTAR regression: response, regressors, and the indicator
/// path over the usable range.
#[derive(Debug, Clone)]
pub struct MtarDesign {
    pub design: DesignMatrix,
    pub response: Vec<f64>,
    pub indicator: Vec<u8>,
    pub usable_start: QuarterDate,
    pub usable_end: QuarterDate,
    pub lags: usize,
}

/// Build the augmented MTAR design from a demeaned ratio series.
pub fn build_mtar_design(ratio: &DemeanedRatio, lags: usize) -> Result<MtarDesign> {
    let series = ratio.series();
    let parts = mtar_columns(series.values(), lags)?;
    let design = DesignMatrix::from_columns_allow_zero(mtar_labels(lags), parts.columns)?;
    Ok(MtarDesign {
        design,
        response: parts.response,
        indicator: parts.indicator,
        usable_start: series.date_at(parts.first_usable),
        usable_end: series.end(),
        lags,
    })
}

/// F-statistic of the joint threshold null on a demeaned value sequence.
pub(crate) fn mtar_f_statistic(values: &[f64], lags: usize) -> Result<f64> {
    let parts = mtar_columns(values, lags)?;
    let x = DesignMatrix::from_columns_allow_zero(mtar_labels(lags), parts.columns)?;
    let fit = ols_fit(&x, &parts.response)?;
    let (big_r, small_r) = threshold_restrictions(x.k());
    Ok(f_test_restrictions(&fit, &x, &parts.response, &big_r, &small_r)?.statistic)
}

/// One interpolated critical value actually used for a rejection decision.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UsedCriticalValue {
    pub confidence: f64,
    pub n_obs: usize,
    pub value: f64,
}

/// MTAR unit-root test result.
#[derive(Debug, Clone, Serialize)]
pub struct MtarResult {
    pub fit: OlsFit,
    pub f_statistic: f64,
    pub critical_values: Vec<UsedCriticalValue>,
    pub reject_90: bool,
    pub reject_95: bool,
    pub n_usable: usize,
    /// Length of the ratio series the test ran on (the interpolation axis).
    pub n_series: usize,
    pub lags: usize,
    /// Set when `n_series` fell outside the table's tabulated range and the
    /// critical values were clamped to the nearest row.
    pub interpolation_clamped: bool,
}

/// Run the augmented MTAR unit-root test against a critical-value table.
pub fn mtar_test(
    ratio: &DemeanedRatio,
    table: &CriticalValueTable,
    lags: usize,
) -> Result<MtarResult> {
    let design = build_mtar_design(ratio, lags)?;
    let fit = ols_fit(&design.design, &design.response)?;
    let (big_r, small_r) = threshold_restrictions(design.design.k());
    let f = f_test_restrictions(&fit, &design.design, &design.response, &big_r, &small_r)?;

    let n_series = ratio.series().len();
    let (cv90, clamp90) = table.interpolate(n_series, 0.90)?;
    let (cv95, clamp95) = table.interpolate(n_series, 0.95)?;
    let n_usable = design.response.len();
    Ok(MtarResult {
        f_statistic: f.statistic,
        critical_values: vec![
            UsedCriticalValue {
                confidence: 0.90,
                n_obs: n_series,
                value: cv90,
            },
            UsedCriticalValue {
                confidence: 0.95,
                n_obs: n_series,
                value: cv95,
            },
        ],
        reject_90: f.statistic > cv90,
        reject_95: f.statistic > cv95,
        n_usable,
        n_series,
        lags,
        interpolation_clamped: clamp90 || clamp95,
        fit,
    })
}

/// ADF regression result. Critical values are not bundled; the t-statistic
/// is reported for the caller to assess.
#[derive(Debug, Clone, Serialize)]
pub struct AdfResult {
    pub fit: OlsFit,
    pub t_statistic: f64,
    pub level_coefficient: f64,
    pub lags: usize,
    pub n_usable: usize,
    pub diagnostics: Vec<String>,
}

/// Augmented Dickey-Fuller regression: first difference on an intercept, the
/// lagged level, and `lags` lagged differences.
pub fn adf_test(series: &QuarterlySeries, lags: usize) -> Result<AdfResult> {
    let v = series.values();
    let n = v.len();
    let first_usable = lags + 1;
    let k = 2 + lags;
    let min_len = first_usable + k + 1;
    if n < min_len {
        return Err(Error::InsufficientData {
            needed: min_len,
            got: n,
        });
    }
    let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let rows = n - first_usable;
    let mut columns = vec![Vec::with_capacity(rows); k];
    let mut response = Vec::with_capacity(rows);
    for t in first_usable..n {
        columns[0].push(1.0);
        columns[1].push(v[t - 1]);
        for j in 1..=lags {
            columns[1 + j].push(d[t - 1 - j]);
        }
        response.push(d[t - 1]);
    }
    let mut labels = vec!["const".to_string(), "level_lag".to_string()];
    for j in 1..=lags {
        labels.push(format!("dlag{j}"));
    }
    let x = DesignMatrix::from_columns(labels, columns)?;
    let fit = ols_fit(&x, &response)?;

    let mut diagnostics = Vec::new();
    let dep_scale = response.iter().map(|r| r * r).sum::<f64>() / rows as f64;
    if fit.sigma2 <= 1e-12 * dep_scale.max(1e-300) {
        diagnostics.push(
            "residual variance is (near) zero; a deterministic component such as a linear \
             trend is likely; the specification includes an intercept only, no trend term"
                .to_string(),
        );
    }
    let t_statistic = fit.t_statistics[1];
    if !t_statistic.is_finite() {
        diagnostics.push("t-statistic on the level coefficient is undefined".to_string());
    }
    Ok(AdfResult {
        t_statistic,
        level_coefficient: fit.coefficients[1],
        lags,
        n_usable: rows,
        diagnostics,
        fit,
    })
}

/// Critical-value table for the joint threshold F-statistic, keyed by sample
/// size and quantile. Reproducible from (seed, replications, n_obs, lags)
/// when simulated; `replications == 0` marks a tabulated source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub statistic: String,
    pub seed: u64,
    pub replications: u32,
    pub lags: usize,
    pub rows: Vec<CriticalValueRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueRow {
    pub n_obs: usize,
    pub quantiles: BTreeMap<String, f64>,
}

/// Map a quantile to its serialized key ("0.9", "0.95", ...).
pub fn quantile_key(q: f64) -> String {
    format!("{q}")
}

impl CriticalValueTable {
    /// Tabulated values quoted from Enders (2001), Table 5, for the demeaned
    /// momentum-threshold F-statistic at 100 and 200 observations.
    pub fn enders_2001() -> Self {
        let row = |n_obs: usize, q90: f64, q95: f64| CriticalValueRow {
            n_obs,
            quantiles: BTreeMap::from([
                (quantile_key(0.90), q90),
                (quantile_key(0.95), q95),
            ]),
        };
        Self {
            statistic: MTAR_STATISTIC.to_string(),
            seed: 0,
            replications: 0,
            lags: DEFAULT_MTAR_LAGS,
            rows: vec![row(100, 3.81, 4.72), row(200, 3.69, 4.71)],
        }
    }

    pub fn quantile(&self, n_obs: usize, q: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n_obs == n_obs)
            .and_then(|r| r.quantiles.get(&quantile_key(q)))
            .copied()
    }

    /// Critical value at confidence `q` for a series of length `n`, linearly
    /// interpolated between tabulated sample sizes. Outside the tabulated
    /// range the nearest row is used and the clamp flag is set.
    pub fn interpolate(&self, n: usize, q: f64) -> Result<(f64, bool)> {
        let key = quantile_key(q);
        let mut rows: Vec<(usize, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.quantiles.get(&key).map(|&v| (r.n_obs, v)))
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidParameter {
                detail: format!("critical-value table has no quantile {q}"),
            });
        }
        rows.sort_by_key(|&(n_obs, _)| n_obs);
        let (min_n, min_v) = rows[0];
        let (max_n, max_v) = rows[rows.len() - 1];
        if n <= min_n {
            return Ok((min_v, n < min_n));
        }
        if n >= max_n {
            return Ok((max_v, n > max_n));
        }
        let hi = rows.iter().position(|&(n_obs, _)| n_obs >= n).expect("bracketed");
        let (n1, v1) = rows[hi - 1];
        let (n2, v2) = rows[hi];
        let w = (n - n1) as f64 / (n2 - n1) as f64;
        Ok((v1 + w * (v2 - v1), false))
    }

    /// Append the rows of another table with identical provenance.
    pub fn merge(&mut self, other: CriticalValueTable) -> Result<()> {
        if self.statistic != other.statistic
            || self.seed != other.seed
            || self.replications != other.replications
            || self.lags != other.lags
        {
            return Err(Error::InvalidParameter {
                detail: "cannot merge critical-value tables with different provenance".into(),
            });
        }
        for row in other.rows {
            if self.rows.iter().any(|r| r.n_obs == row.n_obs) {
                continue;
            }
            self.rows.push(row);
        }
        self.rows.sort_by_key(|r| r.n_obs);
        Ok(())
    }
}

/// Empirical quantile with linear interpolation between order statistics.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Simulate the null distribution of the joint threshold F-statistic.
///
/// Each replication draws a driftless random walk of length `n_obs` with
/// standard normal innovations, demeans it over the full sample, assembles
/// the MTAR design with `lags` lagged differences, and computes the joint
/// F-statistic. Replication `i` uses an independent RNG stream keyed by `i`,
/// so the output is identical for a given seed regardless of the degree of
/// parallelism.
pub fn simulate_critical_values(
    n_obs: usize,
    replications: u32,
    seed: u64,
    quantiles: &[f64],
    lags: usize,
) -> Result<CriticalValueTable> {
    if replications == 0 {
        return Err(Error::InvalidParameter {
            detail: "replications must be positive".into(),
        });
    }
    if quantiles.iter().any(|q| !(0.0..1.0).contains(q) || *q <= 0.0) {
        return Err(Error::InvalidParameter {
            detail: "quantiles must lie strictly inside (0, 1)".into(),
        });
    }
    let mut stats = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let mut level = 0.0;
            let mut path = Vec::with_capacity(n_obs);
            for _ in 0..n_obs {
                level += rng.sample::<f64, _>(StandardNormal);
                path.push(level);
            }
            let mean = path.iter().sum::<f64>() / n_obs as f64;
            for v in &mut path {
                *v -= mean;
            }
            mtar_f_statistic(&path, lags)
        })
        .collect::<Result<Vec<f64>>>()?;
    stats.sort_by(|a, b| a.total_cmp(b));

    let mut qmap = BTreeMap::new();
    for &q in quantiles {
        qmap.insert(quantile_key(q), empirical_quantile(&stats, q));
    }
    Ok(CriticalValueTable {
        statistic: MTAR_STATISTIC.to_string(),
        seed,
        replications,
        lags,
        rows: vec![CriticalValueRow {
            n_obs,
            quantiles: qmap,
        }],
    })
}
