//! `unitroot`: the threshold unit-root test per region on the demeaned
//! regional/national log ratio, plus residual correlograms for plotting.

use anyhow::{Context, Result};
use hpiconv_core::linreg::{acf, pacf, sigma_stars};
use hpiconv_core::series::{demean, log_ratio};
use hpiconv_core::unitroot::{mtar_test, MtarResult};
use serde::Serialize;

use crate::commands::{load_critval_table, load_data};
use crate::config::RunConfig;
use crate::output::{safe_name, OutputSet};

#[derive(Serialize)]
struct CoefficientRow {
    name: String,
    estimate: f64,
    std_error: f64,
    t_statistic: f64,
    stars: String,
}

#[derive(Serialize)]
struct UnitrootRow {
    region: String,
    n_series: usize,
    n_usable: usize,
    lags: usize,
    coefficients: Vec<CoefficientRow>,
    r2: f64,
    adjusted_r2: f64,
    f_statistic: f64,
    critical_values: Vec<UsedCv>,
    reject_90: bool,
    reject_95: bool,
    interpolation_clamped: bool,
}

#[derive(Serialize)]
struct UsedCv {
    confidence: f64,
    value: f64,
}

fn coefficient_name(i: usize) -> String {
    match i {
        0 => "ylag_up".to_string(),
        1 => "ylag_down".to_string(),
        j => format!("dlag{}", j - 1),
    }
}

fn row_from_result(region: &str, res: &MtarResult) -> UnitrootRow {
    let coefficients = res
        .fit
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &b)| CoefficientRow {
            name: coefficient_name(i),
            estimate: b,
            std_error: res.fit.standard_errors[i],
            t_statistic: res.fit.t_statistics[i],
            stars: sigma_stars(res.fit.t_statistics[i]).to_string(),
        })
        .collect();
    UnitrootRow {
        region: region.to_string(),
        n_series: res.n_series,
        n_usable: res.n_usable,
        lags: res.lags,
        coefficients,
        r2: res.fit.r2,
        adjusted_r2: res.fit.adjusted_r2,
        f_statistic: res.f_statistic,
        critical_values: res
            .critical_values
            .iter()
            .map(|cv| UsedCv {
                confidence: cv.confidence,
                value: cv.value,
            })
            .collect(),
        reject_90: res.reject_90,
        reject_95: res.reject_95,
        interpolation_clamped: res.interpolation_clamped,
    }
}

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let data = load_data(config)?;
    let table = load_critval_table(config)?;
    let mut rows = Vec::new();

    for (region, _) in &data.regions {
        let pair = data.pair(region)?;
        let ratio = demean(&log_ratio(&pair)?, None)
            .with_context(|| format!("demeaning the log ratio for {region}"))?;
        let res = mtar_test(&ratio, &table, config.mtar_lags)
            .with_context(|| format!("unit-root test for region {region}"))?;

        // residual correlogram for the diagnostics plots
        let max_lag = 20.min(res.fit.residuals.len().saturating_sub(1));
        let a = acf(&res.fit.residuals, max_lag)
            .with_context(|| format!("residual ACF for region {region}"))?;
        let p = pacf(&res.fit.residuals, max_lag)
            .with_context(|| format!("residual PACF for region {region}"))?;
        let mut body = String::from("lag,acf,pacf,halfwidth\n");
        for &(lag, v) in &a.values {
            let pacf_cell = p
                .values
                .iter()
                .find(|&&(l, _)| l == lag)
                .map(|&(_, v)| format!("{v}"))
                .unwrap_or_default();
            body.push_str(&format!("{lag},{v},{pacf_cell},{}\n", a.conf_halfwidth));
        }
        out.write_csv(&format!("residacf_{}.csv", safe_name(region)), &body)?;

        rows.push(row_from_result(region, &res));
    }

    if config.wants("csv") {
        let lags = config.mtar_lags;
        let mut header = String::from("region,n_series,n_usable");
        for i in 0..2 + lags {
            let name = coefficient_name(i);
            header.push_str(&format!(",{name},{name}_t,{name}_stars"));
        }
        header.push_str(
            ",r2,adjusted_r2,f_statistic,cv_90,cv_95,reject_90,reject_95,interpolation_clamped\n",
        );
        let mut body = header;
        for r in &rows {
            body.push_str(&format!("{},{},{}", r.region, r.n_series, r.n_usable));
            for c in &r.coefficients {
                body.push_str(&format!(",{},{},{}", c.estimate, c.t_statistic, c.stars));
            }
            let cv90 = r
                .critical_values
                .iter()
                .find(|c| c.confidence == 0.90)
                .map(|c| c.value)
                .unwrap_or(f64::NAN);
            let cv95 = r
                .critical_values
                .iter()
                .find(|c| c.confidence == 0.95)
                .map(|c| c.value)
                .unwrap_or(f64::NAN);
            body.push_str(&format!(
                ",{},{},{},{cv90},{cv95},{},{},{}\n",
                r.r2, r.adjusted_r2, r.f_statistic, r.reject_90, r.reject_95,
                r.interpolation_clamped
            ));
        }
        out.write_csv("unitroot.csv", &body)?;
    }
    if config.wants("json") {
        out.write_json("unitroot.json", &rows)?;
    }
    Ok(())
}
