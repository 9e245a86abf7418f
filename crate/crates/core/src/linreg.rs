//! Ordinary least squares with coefficient inference, linear-restriction
//! F-tests, and ACF/PACF diagnostics.
//!
//! The solver runs on a Householder QR decomposition; the normal-equations
//! route exists only as a test oracle. A column is declared linearly
//! dependent when its residual norm after projection on the prior columns
//! falls below 1e-10 of its original norm.

use serde::Serialize;

use crate::dist::f_sf;
use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Column-major design matrix with named columns.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>, // column-major, n * k
    labels: Vec<String>,
}

impl DesignMatrix {
    /// Build from columns, rejecting all-zero columns.
    pub fn from_columns(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let dm = Self::from_columns_allow_zero(labels, columns)?;
        for j in 0..dm.k {
            if dm.column(j).iter().all(|&v| v == 0.0) {
                return Err(Error::RankDeficient {
                    column: dm.labels[j].clone(),
                });
            }
        }
        Ok(dm)
    }

    /// Build from columns, permitting all-zero columns (the fit itself will
    /// still reject them as rank deficient).
    pub fn from_columns_allow_zero(labels: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let k = columns.len();
        if k == 0 || labels.len() != k {
            return Err(Error::DimensionMismatch {
                detail: format!("{} columns with {} labels", k, labels.len()),
            });
        }
        let n = columns[0].len();
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    detail: format!(
                        "column {:?} has {} rows, expected {}",
                        labels[j],
                        c.len(),
                        n
                    ),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    detail: format!("non-finite entry in column {:?}", labels[j]),
                });
            }
        }
        if n <= k {
            return Err(Error::InsufficientData { needed: k + 1, got: n });
        }
        let mut data = Vec::with_capacity(n * k);
        for c in &columns {
            data.extend_from_slice(c);
        }
        Ok(Self { n, k, data, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    /// True when some column is a nonzero constant (an intercept).
    pub fn has_intercept(&self) -> bool {
        (0..self.k).any(|j| {
            let c = self.column(j);
            let first = c[0];
            first != 0.0 && c.iter().all(|&v| v == first)
        })
    }

    fn mat_vec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &b) in beta.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.column(j)) {
                *o += b * x;
            }
        }
        out
    }
}

/// Householder QR of a column-major matrix, with the sequential rank check.
struct Qr {
    k: usize,
    /// Reflector vectors, v_j spans rows j..m.
    vs: Vec<Vec<f64>>,
    betas: Vec<f64>,
    /// Upper-triangular factor, row-major k x k.
    r: Vec<f64>,
}

impl Qr {
    /// `label` resolves a column index to a name for the rank-deficiency error.
    fn factor(m: usize, k: usize, cols: &[f64], label: impl Fn(usize) -> String) -> Result<Self> {
        let mut a = cols.to_vec();
        let orig_norms: Vec<f64> = (0..k)
            .map(|j| a[j * m..(j + 1) * m].iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let mut vs = Vec::with_capacity(k);
        let mut betas = Vec::with_capacity(k);
        let mut r = vec![0.0; k * k];
        for j in 0..k {
            let col = &a[j * m + j..(j + 1) * m];
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= RANK_TOL * orig_norms[j] {
                return Err(Error::RankDeficient { column: label(j) });
            }
            let alpha = if col[0] >= 0.0 { -norm } else { norm };
            let mut v = col.to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            let beta = 2.0 / vnorm2;
            // apply H_j to the remaining columns and record R's row j
            r[j * k + j] = alpha;
            for l in (j + 1)..k {
                let target = &mut a[l * m + j..(l + 1) * m];
                let w: f64 = beta * v.iter().zip(target.iter()).map(|(x, y)| x * y).sum::<f64>();
                for (t, x) in target.iter_mut().zip(&v) {
                    *t -= w * x;
                }
                r[j * k + l] = target[0];
            }
            vs.push(v);
            betas.push(beta);
        }
        Ok(Self { k, vs, betas, r })
    }

    /// Apply Q^T in place.
    fn qt_apply(&self, y: &mut [f64]) {
        for (j, (v, &beta)) in self.vs.iter().zip(&self.betas).enumerate() {
            let target = &mut y[j..];
            let w: f64 = beta * v.iter().zip(target.iter()).map(|(x, t)| x * t).sum::<f64>();
            for (t, x) in target.iter_mut().zip(v) {
                *t -= w * x;
            }
        }
    }

    /// Apply Q in place (reflectors in reverse order).
    fn q_apply(&self, y: &mut [f64]) {
        for j in (0..self.vs.len()).rev() {
            let v = &self.vs[j];
            let beta = self.betas[j];
            let target = &mut y[j..];
            let w: f64 = beta * v.iter().zip(target.iter()).map(|(x, t)| x * t).sum::<f64>();
            for (t, x) in target.iter_mut().zip(v) {
                *t -= w * x;
            }
        }
    }

    /// Solve R x = z for upper-triangular R.
    fn r_solve(&self, z: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let tail: f64 = self.r[i * k + i + 1..(i + 1) * k]
                .iter()
                .zip(&x[i + 1..k])
                .map(|(a, b)| a * b)
                .sum();
            x[i] = (z[i] - tail) / self.r[i * k + i];
        }
        x
    }

    /// (X'X)^{-1} = R^{-1} R^{-T}.
    fn xtx_inverse(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        // invert R by back substitution on basis vectors
        let mut rinv = vec![0.0; k * k]; // row-major
        for col in 0..k {
            let mut e = vec![0.0; k];
            e[col] = 1.0;
            let x = self.r_solve(&e);
            for row in 0..k {
                rinv[row * k + col] = x[row];
            }
        }
        let mut out = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                let mut s = 0.0;
                for l in 0..k {
                    s += rinv[i * k + l] * rinv[j * k + l];
                }
                out[i][j] = s;
                out[j][i] = s;
            }
        }
        out
    }
}

/// A fitted least-squares model.
#[derive(Debug, Clone, Serialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub sigma2: f64,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub dof: usize,
    pub covariance: Vec<Vec<f64>>,
}

/// OLS of `y` on the columns of `x` with classical (homoskedastic) inference.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<OlsFit> {
    let (n, k) = (x.n(), x.k());
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            detail: format!("y has {} rows, design has {}", y.len(), n),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            detail: "non-finite value in response".into(),
        });
    }
    let qr = Qr::factor(n, k, &x.data, |j| x.labels[j].clone())?;
    let mut qty = y.to_vec();
    qr.qt_apply(&mut qty);
    let coefficients = qr.r_solve(&qty[..k]);

    let fitted = x.mat_vec(&coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = n - k;
    let sigma2 = rss / dof as f64;

    let has_intercept = x.has_intercept();
    let tss = if has_intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let r2 = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else if rss <= f64::EPSILON {
        1.0
    } else {
        0.0
    };
    let centering = if has_intercept { 1 } else { 0 };
    let adjusted_r2 = 1.0 - (1.0 - r2) * (n - centering) as f64 / dof as f64;

    let unscaled = qr.xtx_inverse();
    let covariance: Vec<Vec<f64>> = unscaled
        .iter()
        .map(|row| row.iter().map(|v| v * sigma2).collect())
        .collect();
    let standard_errors: Vec<f64> = (0..k).map(|j| covariance[j][j].max(0.0).sqrt()).collect();
    let t_statistics: Vec<f64> = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&b, &se)| if se > 0.0 { b / se } else { f64::NAN })
        .collect();

    Ok(OlsFit {
        coefficients,
        standard_errors,
        t_statistics,
        residuals,
        rss,
        sigma2,
        r2,
        adjusted_r2,
        dof,
        covariance,
    })
}

/// Result of an F-test of linear restrictions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FTestResult {
    pub statistic: f64,
    pub df_numerator: usize,
    pub df_denominator: usize,
    pub p_value: f64,
}

/// F-test of the restrictions `R beta = r` against an unrestricted fit.
///
/// The restricted residual sum of squares is obtained by refitting under the
/// restrictions: beta is reparameterized as a particular solution plus the
/// null space of R. The p-value comes from the F(q, n-k) distribution.
pub fn f_test_restrictions(
    fit: &OlsFit,
    x: &DesignMatrix,
    y: &[f64],
    big_r: &[Vec<f64>],
    small_r: &[f64],
) -> Result<FTestResult> {
    let k = x.k();
    let n = x.n();
    let q = big_r.len();
    if q == 0 || q > k || small_r.len() != q || big_r.iter().any(|row| row.len() != k) {
        return Err(Error::DimensionMismatch {
            detail: format!("restriction system is {}x{} with {} rhs values (k = {})",
                q, big_r.first().map_or(0, |r| r.len()), small_r.len(), k),
        });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            detail: format!("y has {} rows, design has {}", y.len(), n),
        });
    }

    // QR of R^T (k x q): R^T = Q [U; 0]. Columns q..k of Q span null(R).
    let mut rt = vec![0.0; k * q]; // column-major, k rows
    for (i, row) in big_r.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            rt[i * k + j] = v;
        }
    }
    let qr = Qr::factor(k, q, &rt, |_| String::new())
        .map_err(|_| Error::InfeasibleRestrictions)?;

    // Particular solution: R beta_p = r  <=>  U^T w = r, beta_p = Q [w; 0].
    let mut w = vec![0.0; q];
    for i in 0..q {
        let mut s = small_r[i];
        for (j, &wj) in w[..i].iter().enumerate() {
            s -= qr.r[j * q + i] * wj;
        }
        let d = qr.r[i * q + i];
        if d.abs() < 1e-300 {
            return Err(Error::InfeasibleRestrictions);
        }
        w[i] = s / d;
    }
    let mut beta_p = vec![0.0; k];
    beta_p[..q].copy_from_slice(&w);
    qr.q_apply(&mut beta_p);

    let adjusted: Vec<f64> = y
        .iter()
        .zip(x.mat_vec(&beta_p))
        .map(|(a, b)| a - b)
        .collect();

    let rss_r = if q == k {
        adjusted.iter().map(|v| v * v).sum::<f64>()
    } else {
        // Restricted regressors X Z, where Z's columns are Q e_j, j = q..k.
        let free = k - q;
        let mut cols = Vec::with_capacity(free);
        for j in q..k {
            let mut z = vec![0.0; k];
            z[j] = 1.0;
            qr.q_apply(&mut z);
            cols.push(x.mat_vec(&z));
        }
        let labels = (0..free).map(|j| format!("restricted_{j}")).collect();
        let xr = DesignMatrix::from_columns_allow_zero(labels, cols)?;
        ols_fit(&xr, &adjusted)?.rss
    };

    let dof = n - k;
    let num = ((rss_r - fit.rss) / q as f64).max(0.0);
    let den = fit.rss / dof as f64;
    let statistic = if den > 0.0 {
        num / den
    } else if num <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(FTestResult {
        statistic,
        df_numerator: q,
        df_denominator: dof,
        p_value: f_sf(statistic, q as f64, dof as f64),
    })
}

/// Sample correlogram: (lag, value) pairs plus the 95% confidence half-width
/// `1.96 / sqrt(n)`.
#[derive(Debug, Clone, Serialize)]
pub struct Correlogram {
    pub values: Vec<(usize, f64)>,
    pub conf_halfwidth: f64,
}

/// Sample autocorrelation function for lags 0..=max_lag.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Correlogram> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::InvalidParameter {
            detail: format!("max_lag {max_lag} must be below series length {n}"),
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let values = (0..=max_lag)
        .map(|h| {
            let num: f64 = (0..n - h)
                .map(|t| (series[t] - mean) * (series[t + h] - mean))
                .sum();
            (h, num / denom)
        })
        .collect();
    Ok(Correlogram {
        values,
        conf_halfwidth: 1.96 / (n as f64).sqrt(),
    })
}

/// Sample partial autocorrelation function for lags 1..=max_lag, via the
/// Durbin-Levinson recursion on the sample ACF.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Correlogram> {
    if max_lag < 1 {
        return Err(Error::InvalidParameter {
            detail: "pacf requires max_lag >= 1".into(),
        });
    }
    let acf = acf(series, max_lag)?;
    let rho: Vec<f64> = acf.values.iter().map(|&(_, v)| v).collect();

    let mut values = Vec::with_capacity(max_lag);
    let mut phi_prev: Vec<f64> = Vec::new();
    for m in 1..=max_lag {
        let num = rho[m]
            - phi_prev
                .iter()
                .enumerate()
                .map(|(j, &p)| p * rho[m - 1 - j])
                .sum::<f64>();
        let den = 1.0
            - phi_prev
                .iter()
                .enumerate()
                .map(|(j, &p)| p * rho[j + 1])
                .sum::<f64>();
        if den.abs() < 1e-12 {
            return Err(Error::Numeric {
                detail: format!("Durbin-Levinson recursion singular at lag {m}"),
            });
        }
        let a = num / den;
        let mut phi = Vec::with_capacity(m);
        for j in 0..m - 1 {
            phi.push(phi_prev[j] - a * phi_prev[m - 2 - j]);
        }
        phi.push(a);
        values.push((m, a));
        phi_prev = phi;
    }
    Ok(Correlogram {
        values,
        conf_halfwidth: acf.conf_halfwidth,
    })
}

/// Significance stars at 1/2/3-sigma thresholds on |t|.
pub fn sigma_stars(t: f64) -> &'static str {
    if !t.is_finite() {
        return "";
    }
    match t.abs() {
        a if a >= 3.0 => "***",
        a if a >= 2.0 => "**",
        a if a >= 1.0 => "*",
        _ => "",
    }
}
