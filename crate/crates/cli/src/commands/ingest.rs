//! `ingest`: load and validate the input panel, then emit descriptive
//! statistics for every level series and its growth rates.

use anyhow::{Context, Result};
use hpiconv_core::series::{describe, hpa, QuarterlySeries, SeriesSummary};
use serde::Serialize;

use crate::commands::load_data;
use crate::config::RunConfig;
use crate::output::OutputSet;

#[derive(Serialize)]
struct DescribeRow {
    series: String,
    variant: &'static str,
    #[serde(flatten)]
    summary: SeriesSummary,
}

#[derive(Serialize)]
struct DescribeReport {
    conventions: &'static str,
    rows: Vec<DescribeRow>,
}

const CONVENTIONS: &str = "std_dev uses the (n-1) denominator; skewness is m3/m2^1.5; \
kurtosis is excess (m4/m2^2 - 3); degenerate series report both as 0";

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let data = load_data(config)?;
    let mut rows = Vec::new();
    let mut push = |name: &str, series: &QuarterlySeries| -> Result<()> {
        rows.push(DescribeRow {
            series: name.to_string(),
            variant: "level",
            summary: describe(series),
        });
        let growth = hpa(series).with_context(|| format!("growth rates for {name}"))?;
        rows.push(DescribeRow {
            series: name.to_string(),
            variant: "growth",
            summary: describe(&growth),
        });
        Ok(())
    };
    push(data.national.label(), &data.national)?;
    for (name, series) in &data.regions {
        push(name, series)?;
    }

    if config.wants("csv") {
        let mut body = String::from(
            "series,variant,count,min,max,last,mean,median,std_dev,skewness,excess_kurtosis,degenerate\n",
        );
        for r in &rows {
            let s = &r.summary;
            body.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.series,
                r.variant,
                s.count,
                s.min,
                s.max,
                s.last,
                s.mean,
                s.median,
                s.std_dev,
                s.skewness,
                s.excess_kurtosis,
                s.degenerate
            ));
        }
        out.write_csv("describe.csv", &body)?;
    }
    if config.wants("json") {
        out.write_json(
            "describe.json",
            &DescribeReport {
                conventions: CONVENTIONS,
                rows,
            },
        )?;
    }
    Ok(())
}
