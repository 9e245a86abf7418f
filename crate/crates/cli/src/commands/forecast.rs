//! `forecast`: rolling-origin dynamic forecasts from the persisted training
//! fits. With `--scenario`, forecasts run forward from the end of the data
//! along a supplied national growth path instead.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hpiconv_core::arma::ArmaFit;
use hpiconv_core::forecast::{
    rolling_forecasts, ArmaForecaster, DynamicForecaster, ForecastInputs, ForecastPanel,
    ForecastProtocol, MtarForecaster, OriginContext, PanelEntry,
};
use hpiconv_core::series::{QuarterDate, QuarterlySeries};

use crate::commands::{load_data, model_file_name, panel_file_name, read_json_data, MtarModelFile};
use crate::config::RunConfig;
use crate::output::{safe_name, OutputSet};

fn load_models(dir: &Path, region: &str) -> Result<(ArmaForecaster, ArmaForecaster, MtarForecaster)> {
    let arma: ArmaFit = read_json_data(&dir.join(model_file_name(region, "arma", "train")))?;
    let armax: ArmaFit = read_json_data(&dir.join(model_file_name(region, "armax", "train")))?;
    let mtar: MtarModelFile = read_json_data(&dir.join(model_file_name(region, "mtar", "train")))?;
    Ok((
        ArmaForecaster::new(arma),
        ArmaForecaster::new(armax),
        MtarForecaster {
            coefficients: mtar.coefficients,
            lags: mtar.lags,
            sigma2: mtar.sigma2,
        },
    ))
}

fn write_panel(config: &RunConfig, out: &mut OutputSet, region: &str, panel: &ForecastPanel) -> Result<()> {
    out.write_csv(
        &panel_file_name(region, &panel.model_name, panel.horizon, "csv"),
        &panel.to_csv(),
    )?;
    if config.wants("json") {
        out.write_json(
            &panel_file_name(region, &panel.model_name, panel.horizon, "json"),
            panel,
        )?;
    }
    Ok(())
}

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let data = load_data(config)?;
    let train_end = config.require_train_end()?;

    if let Some(scenario_path) = &config.scenario {
        return run_scenario(config, out, scenario_path, &data, train_end);
    }

    let sample_end = config.sample_end.unwrap_or_else(|| data.national.end());
    let protocol = ForecastProtocol::new(train_end, sample_end, config.horizons.clone())?;

    for (region, _) in &data.regions {
        let pair = data.pair(region)?;
        let inputs = ForecastInputs::from_levels(&pair, train_end)?;
        let (arma, armax, mtar) = load_models(out.dir(), region)
            .with_context(|| format!("loading training fits for region {region} (run `fit` first)"))?;
        let models: [&dyn DynamicForecaster; 3] = [&arma, &armax, &mtar];
        for model in models {
            let rolled = rolling_forecasts(model, &protocol, &inputs)
                .with_context(|| format!("rolling {} forecasts for region {region}", model.name()))?;
            for warning in &rolled.warnings {
                eprintln!("warning: region {region}: {warning}");
            }
            for panel in &rolled.panels {
                write_panel(config, out, region, panel)?;
            }
        }
    }
    Ok(())
}

/// Parse a scenario file: CSV rows of `date,growth` for the national path.
fn parse_scenario(path: &Path) -> Result<QuarterlySeries> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    let mut rows: Vec<(QuarterDate, f64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let date: QuarterDate = record
            .get(0)
            .context("scenario row is missing its date")?
            .parse()?;
        let value: f64 = record
            .get(1)
            .context("scenario row is missing its value")?
            .parse()
            .context("scenario value is not numeric")?;
        rows.push((date, value));
    }
    if rows.is_empty() {
        bail!("scenario {} has no rows", path.display());
    }
    rows.sort_by_key(|(d, _)| *d);
    for w in rows.windows(2) {
        if w[1].0 != w[0].0.next() {
            bail!("scenario is not a contiguous quarterly path at {}", w[1].0);
        }
    }
    Ok(QuarterlySeries::new(
        rows[0].0,
        rows.iter().map(|(_, v)| *v).collect(),
        "scenario",
        hpiconv_core::SeriesKind::GrowthRate,
    )?)
}

/// Forecast forward from the last observation along the scenario national
/// growth path; there are no realized values to compare against.
fn run_scenario(
    config: &RunConfig,
    out: &mut OutputSet,
    scenario_path: &Path,
    data: &crate::commands::LoadedData,
    train_end: QuarterDate,
) -> Result<()> {
    let scenario = parse_scenario(scenario_path)?;
    let origin = data.national.end();
    let max_h = config.horizons.iter().copied().max().expect("validated");
    for k in 1..=max_h {
        let date = origin.add_quarters(k as i64);
        if !scenario.covers(date) {
            bail!(
                "scenario must cover {date} (origin {origin} plus horizon {max_h})"
            );
        }
    }
    let start_idx = scenario
        .index_of(origin.next())
        .context("scenario must start no later than the first forecast quarter")?;
    let future = &scenario.values()[start_idx..start_idx + max_h];

    for (region, _) in &data.regions {
        let pair = data.pair(region)?;
        let inputs = ForecastInputs::from_levels(&pair, train_end)?;
        let (arma, armax, mtar) = load_models(out.dir(), region)
            .with_context(|| format!("loading training fits for region {region} (run `fit` first)"))?;
        let oi = inputs
            .regional_hpa
            .index_of(origin)
            .context("growth series must reach the forecast origin")?;
        let ri = inputs
            .ratio
            .series()
            .index_of(origin)
            .context("ratio series must reach the forecast origin")?;
        let ctx = OriginContext {
            origin,
            regional_history: &inputs.regional_hpa.values()[..=oi],
            national_history: &inputs.national_hpa.values()[..=oi],
            national_future: future,
            ratio_history: &inputs.ratio.values()[..=ri],
        };
        let models: [&dyn DynamicForecaster; 3] = [&arma, &armax, &mtar];
        for model in models {
            let path = model
                .forecast(&ctx, max_h)
                .with_context(|| format!("scenario {} forecast for region {region}", model.name()))?;
            let entries: Vec<PanelEntry> = (0..max_h)
                .map(|k| PanelEntry {
                    origin,
                    target: origin.add_quarters(k as i64 + 1),
                    predicted: path.predicted[k],
                    realized: f64::NAN,
                    band_halfwidth: path.band_halfwidth[k],
                })
                .collect();
            let panel = ForecastPanel {
                model_name: model.name().to_string(),
                horizon: max_h,
                entries,
            };
            out.write_csv(
                &format!("scenario_{}_{}.csv", safe_name(region), model.name()),
                &panel.to_csv(),
            )?;
            if config.wants("json") {
                out.write_json(
                    &format!("scenario_{}_{}.json", safe_name(region), model.name()),
                    &panel,
                )?;
            }
        }
    }
    Ok(())
}
