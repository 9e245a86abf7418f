//! `report`: SVG plots: the regional/national log ratios, residual
//! correlograms, and rolling forecast fans with their 2-sigma bands.

use anyhow::{Context, Result};
use hpiconv_core::forecast::ForecastPanel;
use hpiconv_core::series::{hpa, log_ratio, QuarterDate};

use crate::commands::{load_data, panel_file_name};
use crate::config::RunConfig;
use crate::output::{safe_name, OutputSet};
use crate::svg::{document, Line, Panel, PALETTE};

fn year_axis(date: QuarterDate) -> f64 {
    date.year() as f64 + (date.quarter() as f64 - 1.0) / 4.0
}

const MODELS: [&str; 3] = ["arma", "armax", "mtar"];

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    if !config.wants("svg") {
        eprintln!("report: svg not among the requested formats; nothing to do");
        return Ok(());
    }
    let data = load_data(config)?;
    let desc = out.meta().svg_desc();

    // log-ratio overview across all regions
    let mut ratio_panel = Panel::new("log ratio of regional to national index");
    ratio_panel.height = 320.0;
    for (i, (region, _)) in data.regions.iter().enumerate() {
        let pair = data.pair(region)?;
        let ratio = log_ratio(&pair)?;
        let points = ratio
            .values()
            .iter()
            .enumerate()
            .map(|(t, &v)| (year_axis(ratio.date_at(t)), v))
            .collect();
        ratio_panel.lines.push(Line {
            label: region.clone(),
            color: PALETTE[i % PALETTE.len()].to_string(),
            points,
            dashed: false,
        });
    }
    out.write_text("plot_ratio.svg", &document(&[ratio_panel], &desc))?;

    // residual correlograms per region (written by `unitroot`)
    for (region, _) in &data.regions {
        let path = out
            .dir()
            .join(format!("residacf_{}.csv", safe_name(region)));
        let text = std::fs::read_to_string(&path).with_context(|| {
            format!("cannot read {} (run `unitroot` first)", path.display())
        })?;
        let mut acf_stems = Vec::new();
        let mut pacf_stems = Vec::new();
        let mut halfwidth = 0.0;
        for line in text.lines() {
            if line.starts_with('#') || line.starts_with("lag,") || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let lag: f64 = fields[0].parse()?;
            let acf_v: f64 = fields[1].parse()?;
            if !fields[2].is_empty() {
                pacf_stems.push((lag, fields[2].parse::<f64>()?));
            }
            halfwidth = fields[3].parse()?;
            acf_stems.push((lag, acf_v));
        }
        let mut acf_panel = Panel::new(format!("{region}: residual autocorrelation"));
        acf_panel.stems = acf_stems;
        acf_panel.band = Some(halfwidth);
        let mut pacf_panel = Panel::new(format!("{region}: residual partial autocorrelation"));
        pacf_panel.stems = pacf_stems;
        pacf_panel.band = Some(halfwidth);
        out.write_text(
            &format!("plot_residacf_{}.svg", safe_name(region)),
            &document(&[acf_panel, pacf_panel], &desc),
        )?;
    }

    // forecast fans per region and model: one row per horizon
    let history_quarters = 12;
    for (region, _) in &data.regions {
        let pair = data.pair(region)?;
        let growth = hpa(pair.regional())?;
        for model in MODELS {
            let mut panels = Vec::new();
            for &h in &config.horizons {
                let path = out.dir().join(panel_file_name(region, model, h, "csv"));
                let text = std::fs::read_to_string(&path).with_context(|| {
                    format!("cannot read {} (run `forecast` first)", path.display())
                })?;
                let panel = ForecastPanel::from_csv(model, h, &text)?;
                let mut row = Panel::new(format!("{region} {model}: {h}-step forecasts"));
                if let Some(first) = panel.entries.first() {
                    let hist_start = first.target.add_quarters(-(history_quarters as i64));
                    let hist_points: Vec<(f64, f64)> = growth
                        .values()
                        .iter()
                        .enumerate()
                        .map(|(t, &v)| (growth.date_at(t), v))
                        .filter(|(d, _)| *d >= hist_start)
                        .map(|(d, v)| (year_axis(d), v))
                        .collect();
                    row.lines.push(Line {
                        label: "actual".into(),
                        color: "#d62728".into(),
                        points: hist_points,
                        dashed: false,
                    });
                    let pred: Vec<(f64, f64)> = panel
                        .entries
                        .iter()
                        .map(|e| (year_axis(e.target), e.predicted))
                        .collect();
                    let upper: Vec<(f64, f64)> = panel
                        .entries
                        .iter()
                        .map(|e| (year_axis(e.target), e.predicted + e.band_halfwidth))
                        .collect();
                    let lower: Vec<(f64, f64)> = panel
                        .entries
                        .iter()
                        .map(|e| (year_axis(e.target), e.predicted - e.band_halfwidth))
                        .collect();
                    row.lines.push(Line {
                        label: "forecast".into(),
                        color: "#1f77b4".into(),
                        points: pred,
                        dashed: false,
                    });
                    for band in [upper, lower] {
                        row.lines.push(Line {
                            label: String::new(),
                            color: "#2ca02c".into(),
                            points: band,
                            dashed: true,
                        });
                    }
                }
                panels.push(row);
            }
            out.write_text(
                &format!("plot_forecast_{}_{model}.svg", safe_name(region)),
                &document(&panels, &desc),
            )?;
        }
    }
    Ok(())
}
