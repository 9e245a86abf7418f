//! `fit`: AIC order selection on the full sample, re-estimation on the
//! training sample, and the threshold fit used for forecasting. Fitted
//! models are persisted as JSON for the forecast stage.

use anyhow::{Context, Result};
use hpiconv_core::arma::{fit_arma, select_order, ArmaFit};
use hpiconv_core::series::{demean, hpa, log_ratio};
use hpiconv_core::unitroot::mtar_test;
use serde::Serialize;

use crate::commands::{load_critval_table, load_data, model_file_name, through, MtarModelFile};
use crate::config::RunConfig;
use crate::output::OutputSet;

#[derive(Serialize)]
struct FitSummaryRow {
    region: String,
    model: String,
    sample: String,
    ar_order: usize,
    ma_order: usize,
    intercept: f64,
    phi: Vec<f64>,
    theta: Vec<f64>,
    beta_exog: Option<f64>,
    sigma2: f64,
    loglik: f64,
    aic: f64,
    converged: bool,
}

fn summary_row(region: &str, model: &str, sample: &str, fit: &ArmaFit) -> FitSummaryRow {
    FitSummaryRow {
        region: region.to_string(),
        model: model.to_string(),
        sample: sample.to_string(),
        ar_order: fit.spec.ar_order,
        ma_order: fit.spec.ma_order,
        intercept: fit.intercept,
        phi: fit.phi.clone(),
        theta: fit.theta.clone(),
        beta_exog: fit.beta_exog,
        sigma2: fit.sigma2,
        loglik: fit.loglik,
        aic: fit.aic,
        converged: fit.converged,
    }
}

fn grid(config: &RunConfig) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for r in 0..=config.max_ar {
        for m in 0..=config.max_ma {
            cells.push((r, m));
        }
    }
    cells
}

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let data = load_data(config)?;
    let train_end = config.require_train_end()?;
    let table = load_critval_table(config)?;
    let cells = grid(config);
    let national_hpa = hpa(&data.national)?;
    let mut rows: Vec<FitSummaryRow> = Vec::new();

    for (region, _) in &data.regions {
        let pair = data.pair(region)?;
        let regional_hpa = hpa(pair.regional())?;

        // order selection on the full sample, per-series and with the
        // national growth as the exogenous input
        let (arma_spec, arma_full) = select_order(&regional_hpa, None, &cells)
            .with_context(|| format!("ARMA order selection for region {region}"))?;
        let (armax_spec, armax_full) =
            select_order(&regional_hpa, Some(&national_hpa), &cells)
                .with_context(|| format!("ARMAX order selection for region {region}"))?;

        // re-estimate both at the selected orders on the training sample
        let train_reg = through(&regional_hpa, train_end)?;
        let train_nat = through(&national_hpa, train_end)?;
        let arma_train = fit_arma(&train_reg, arma_spec, None)
            .with_context(|| format!("ARMA training fit for region {region}"))?;
        let armax_train = fit_arma(&train_reg, armax_spec, Some(&train_nat))
            .with_context(|| format!("ARMAX training fit for region {region}"))?;
        for (name, fit) in [("arma", &arma_train), ("armax", &armax_train)] {
            if !fit.converged {
                eprintln!(
                    "warning: region {region}: {name}({},{}) training fit did not converge",
                    fit.spec.ar_order, fit.spec.ma_order
                );
            }
        }

        // threshold model on the training ratio, demeaned by its own mean
        let train_pair = hpiconv_core::series::AlignedPair::new(
            through(pair.regional(), train_end)?,
            through(pair.national(), train_end)?,
        )?;
        let train_ratio = demean(&log_ratio(&train_pair)?, None)?;
        let mtar = mtar_test(&train_ratio, &table, config.mtar_lags)
            .with_context(|| format!("threshold training fit for region {region}"))?;
        let mtar_file = MtarModelFile {
            coefficients: mtar.fit.coefficients.clone(),
            lags: mtar.lags,
            sigma2: mtar.fit.sigma2,
            train_mean: train_ratio.mean(),
            f_statistic: mtar.f_statistic,
            sample_window: (
                train_ratio.series().start(),
                train_ratio.series().end(),
            ),
        };

        out.write_json(&model_file_name(region, "arma", "full"), &arma_full)?;
        out.write_json(&model_file_name(region, "arma", "train"), &arma_train)?;
        out.write_json(&model_file_name(region, "armax", "full"), &armax_full)?;
        out.write_json(&model_file_name(region, "armax", "train"), &armax_train)?;
        out.write_json(&model_file_name(region, "mtar", "train"), &mtar_file)?;

        rows.push(summary_row(region, "arma", "full", &arma_full));
        rows.push(summary_row(region, "arma", "train", &arma_train));
        rows.push(summary_row(region, "armax", "full", &armax_full));
        rows.push(summary_row(region, "armax", "train", &armax_train));
    }

    if config.wants("csv") {
        let mut body =
            String::from("region,model,sample,parameter,estimate\n");
        for r in &rows {
            let mut push = |param: &str, value: f64| {
                body.push_str(&format!(
                    "{},{},{},{param},{value}\n",
                    r.region, r.model, r.sample
                ));
            };
            push("intercept", r.intercept);
            for (i, p) in r.phi.iter().enumerate() {
                push(&format!("phi{}", i + 1), *p);
            }
            for (i, t) in r.theta.iter().enumerate() {
                push(&format!("theta{}", i + 1), *t);
            }
            if let Some(b) = r.beta_exog {
                push("beta_exog", b);
            }
            push("sigma2", r.sigma2);
            push("aic", r.aic);
        }
        out.write_csv("fits.csv", &body)?;
    }
    if config.wants("json") {
        out.write_json("fits.json", &rows)?;
    }
    Ok(())
}
