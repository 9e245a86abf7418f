//! `synth`: write the seeded synthetic demonstration dataset.

use anyhow::Result;

use crate::config::RunConfig;
use crate::output::OutputSet;
use crate::synth::{generate, to_csv};

pub fn run(config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    let panel = generate(config.seed);
    let body = to_csv(&panel);
    out.write_csv("synthetic.csv", &body)?;
    Ok(())
}
