//! `critvals`: Monte-Carlo critical-value tables for the threshold
//! F-statistic, cached on disk by content key (statistic, lags,
//! replications, seed).

use anyhow::{Context, Result};
use hpiconv_core::unitroot::{simulate_critical_values, CriticalValueTable, MTAR_STATISTIC};

use crate::commands::read_json_data;
use crate::config::RunConfig;
use crate::output::OutputSet;

pub fn table_file_name(lags: usize, reps: u32, seed: u64) -> String {
    format!("critvals_{MTAR_STATISTIC}_l{lags}_r{reps}_s{seed}.json")
}

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let name = table_file_name(config.mtar_lags, config.reps, config.seed);
    let path = out.dir().join(&name);

    // cache hit: an existing table with the same content key covering all
    // requested sample sizes is reused untouched
    if path.exists() {
        if let Ok(table) = read_json_data::<CriticalValueTable>(&path) {
            let key_matches = table.statistic == MTAR_STATISTIC
                && table.seed == config.seed
                && table.replications == config.reps
                && table.lags == config.mtar_lags;
            let covered = config
                .critval_n
                .iter()
                .all(|n| table.rows.iter().any(|r| r.n_obs == *n));
            if key_matches && covered {
                eprintln!("critical-value cache hit: {}", path.display());
                return Ok(());
            }
        }
    }

    let mut table: Option<CriticalValueTable> = None;
    for &n in &config.critval_n {
        let row = simulate_critical_values(
            n,
            config.reps,
            config.seed,
            &config.confidence,
            config.mtar_lags,
        )
        .with_context(|| format!("simulating critical values at {n} observations"))?;
        match table.as_mut() {
            None => table = Some(row),
            Some(t) => t.merge(row)?,
        }
    }
    let table = table.expect("critval_n validated non-empty");
    out.write_json(&name, &table)?;
    Ok(())
}
