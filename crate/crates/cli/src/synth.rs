//! Seeded synthetic demonstration dataset: a national index plus nine
//! regional indices over 1976Q1..2012Q2, so the whole pipeline runs without
//! proprietary data.
//!
//! Regions R1..R5 have log ratios to the national index that follow a
//! stationary threshold process (they converge); R6..R9 have random-walk
//! ratios (they do not).

use hpiconv_core::QuarterDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const SYNTH_START: (i32, u8) = (1976, 1);
pub const SYNTH_QUARTERS: usize = 146;
pub const CONVERGING_REGIONS: usize = 5;
pub const RANDOM_WALK_REGIONS: usize = 4;

pub struct SyntheticPanel {
    pub start: QuarterDate,
    pub national: Vec<f64>,
    /// (column name, level series) for each region.
    pub regions: Vec<(String, Vec<f64>)>,
}

pub fn generate(seed: u64) -> SyntheticPanel {
    let start = QuarterDate::new(SYNTH_START.0, SYNTH_START.1).expect("valid start");
    let n = SYNTH_QUARTERS;

    // national quarterly growth: persistent AR(1) around ~1.2% per quarter
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut growth = 0.012;
    let mut national = Vec::with_capacity(n);
    let mut level = 20.0;
    national.push(level);
    for _ in 1..n {
        growth = 0.012 * (1.0 - 0.7) + 0.7 * growth + 0.010 * rng.sample::<f64, _>(StandardNormal);
        level *= growth.exp();
        national.push(level);
    }

    let mut regions = Vec::with_capacity(CONVERGING_REGIONS + RANDOM_WALK_REGIONS);
    for r in 0..CONVERGING_REGIONS + RANDOM_WALK_REGIONS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + r as u64);
        let offset = -0.2 + 0.05 * r as f64;
        let ratio = if r < CONVERGING_REGIONS {
            threshold_ratio(&mut rng, n, offset)
        } else {
            random_walk_ratio(&mut rng, n, offset)
        };
        let levels: Vec<f64> = national
            .iter()
            .zip(&ratio)
            .map(|(nat, y)| nat * y.exp())
            .collect();
        regions.push((format!("R{}", r + 1), levels));
    }
    SyntheticPanel {
        start,
        national,
        regions,
    }
}

/// Stationary threshold dynamics around `offset`: slow adjustment after an
/// up move, fast adjustment after a down move.
fn threshold_ratio(rng: &mut ChaCha8Rng, n: usize, offset: f64) -> Vec<f64> {
    let (beta_up, beta_down) = (-0.08, -0.45);
    let lag_coefs = [0.25, 0.10];
    let sigma = 0.012;
    let burn = 200;
    let mut dev = 0.0f64; // deviation from the long-run offset
    let mut changes = [0.0f64; 2];
    let mut out = Vec::with_capacity(n);
    for i in 0..n + burn {
        let rho = if changes[0] >= 0.0 { beta_up } else { beta_down };
        let mut dy = rho * dev + lag_coefs[0] * changes[0] + lag_coefs[1] * changes[1];
        dy += sigma * rng.sample::<f64, _>(StandardNormal);
        dev += dy;
        changes = [dy, changes[0]];
        if i >= burn {
            out.push(offset + dev);
        }
    }
    out
}

fn random_walk_ratio(rng: &mut ChaCha8Rng, n: usize, offset: f64) -> Vec<f64> {
    let sigma = 0.012;
    let mut y = offset;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        y += sigma * rng.sample::<f64, _>(StandardNormal);
        out.push(y);
    }
    out
}

/// Render the panel as the CSV layout the loader expects.
pub fn to_csv(panel: &SyntheticPanel) -> String {
    let mut out = String::from("date,USA");
    for (name, _) in &panel.regions {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..panel.national.len() {
        let date = panel.start.add_quarters(i as i64);
        out.push_str(&format!("{date},{:.6}", panel.national[i]));
        for (_, levels) in &panel.regions {
            out.push_str(&format!(",{:.6}", levels[i]));
        }
        out.push('\n');
    }
    out
}
