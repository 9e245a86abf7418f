//! Subcommand implementations and their shared data-loading helpers.

pub mod critvals;
pub mod evaluate;
pub mod fit;
pub mod forecast;
pub mod ingest;
pub mod report;
pub mod synth;
pub mod unitroot;

use std::path::Path;

use anyhow::{bail, Context, Result};
use hpiconv_core::series::{load_csv, AlignedPair, QuarterlySeries};
use hpiconv_core::unitroot::CriticalValueTable;
use hpiconv_core::QuarterDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub struct LoadedData {
    pub national: QuarterlySeries,
    /// Regional series in configuration order.
    pub regions: Vec<(String, QuarterlySeries)>,
}

pub fn load_data(config: &RunConfig) -> Result<LoadedData> {
    let path = config.require_data()?;
    let national_name = config.require_national()?;
    let regions = config.require_regions()?;
    let mut columns = vec![national_name.clone()];
    columns.extend(regions.iter().cloned());
    let mut map = load_csv(path, &config.date_column, &columns)
        .with_context(|| format!("loading {}", path.display()))?;
    let national = map.remove(national_name).expect("requested column present");
    let regions = regions
        .iter()
        .map(|r| (r.clone(), map.remove(r).expect("requested column present")))
        .collect();
    Ok(LoadedData { national, regions })
}

impl LoadedData {
    pub fn pair(&self, region: &str) -> Result<AlignedPair> {
        let (_, series) = self
            .regions
            .iter()
            .find(|(name, _)| name == region)
            .with_context(|| format!("region {region:?} not loaded"))?;
        AlignedPair::new(series.clone(), self.national.clone())
            .with_context(|| format!("aligning region {region:?} with the national series"))
    }
}

/// Restrict a series to the observations at or before `end`.
pub fn through(series: &QuarterlySeries, end: QuarterDate) -> Result<QuarterlySeries> {
    let idx = series
        .index_of(end)
        .with_context(|| format!("{end} is outside {}", series.label()))?;
    Ok(QuarterlySeries::new(
        series.start(),
        series.values()[..=idx].to_vec(),
        series.label(),
        series.kind(),
    )?)
}

/// Critical values: a simulated table from disk when configured, the
/// tabulated Enders (2001) values otherwise.
pub fn load_critval_table(config: &RunConfig) -> Result<CriticalValueTable> {
    match &config.critvals_file {
        Some(path) => {
            let table: CriticalValueTable = read_json_data(path)?;
            if table.statistic != hpiconv_core::unitroot::MTAR_STATISTIC {
                bail!(
                    "critical-value table {} holds statistic {:?}",
                    path.display(),
                    table.statistic
                );
            }
            Ok(table)
        }
        None => Ok(CriticalValueTable::enders_2001()),
    }
}

#[derive(Serialize, Deserialize)]
struct Document<T> {
    meta: serde_json::Value,
    data: T,
}

/// Read the `data` part of a {"meta", "data"} JSON document.
pub fn read_json_data<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let doc: Document<T> = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(doc.data)
}

/// Fitted threshold model persisted for the forecast stage.
#[derive(Debug, Serialize, Deserialize)]
pub struct MtarModelFile {
    pub coefficients: Vec<f64>,
    pub lags: usize,
    pub sigma2: f64,
    pub train_mean: f64,
    pub f_statistic: f64,
    pub sample_window: (QuarterDate, QuarterDate),
}

pub fn model_file_name(region: &str, model: &str, sample: &str) -> String {
    format!(
        "model_{}_{model}_{sample}.json",
        crate::output::safe_name(region)
    )
}

pub fn panel_file_name(region: &str, model: &str, horizon: usize, ext: &str) -> String {
    format!(
        "panel_{}_{model}_h{horizon}.{ext}",
        crate::output::safe_name(region)
    )
}
