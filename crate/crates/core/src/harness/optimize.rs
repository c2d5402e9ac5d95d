use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scenario, SimConfig, SCHEMA_LINE};
use crate::error::Result;
use crate::optimizer::{ascend, AscentResult, ObjectiveContext};

/// Runs the SIM phase optimization for the direct paths of `trial`.
pub fn run_optimize(scn: &Scenario, trial: u64) -> Result<AscentResult> {
    let paths = scn.paths(trial, super::SimMode::Optimized)?;
    let (tx, rx) = scn.initial_stacks(trial)?;
    let mut ctx = ObjectiveContext::new(tx, rx, &paths.direct)?;
    ascend(&mut ctx, &scn.config().optimizer)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSweepRow {
    pub layers: usize,
    pub initial: f64,
    pub final_objective: f64,
    pub iterations: usize,
}

/// Optimizes the same trial once per entry of `layers`, used as the number
/// of TX layers `Q`; `Q̃` stays as configured.
pub fn layer_sweep(scn: &Scenario, trial: u64, layers: &[usize]) -> Result<Vec<LayerSweepRow>> {
    layers
        .par_iter()
        .map(|&q| {
            let mut cfg = scn.config().clone();
            cfg.sim = SimConfig { tx_layers: q, ..cfg.sim };
            let res = run_optimize(&Scenario::new(cfg)?, trial)?;
            Ok(LayerSweepRow {
                layers: q,
                initial: res.initial(),
                final_objective: res.final_objective(),
                iterations: res.trace.len() - 1,
            })
        })
        .collect()
}

pub fn write_layer_sweep_csv<W: Write>(rows: &[LayerSweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "layers,initial,final,iterations")?;
    for r in rows {
        writeln!(w, "{},{:.12e},{:.12e},{}", r.layers, r.initial, r.final_objective, r.iterations)?;
    }
    Ok(())
}
