//! Experiment driver: configuration, per-trial channel realizations, BER
//! sweeps, channel exports and SIM optimization runs.
//!
//! Every random draw of a trial comes from its own ChaCha stream, keyed by
//! trial index and purpose, so a trial sees the same paths, bits and noise
//! whatever the SIM mode, detector or thread count.

mod ber;
mod config;
mod export;
mod optimize;

pub use ber::{run_ber, write_ber_csv, BerRecord};
pub use config::{
    DetectorConfig, DetectorKind, ExperimentConfig, NormalizationConfig, RisConfig, RisPhaseMode, SimConfig, SimMode,
    SweepConfig, SystemConfig, WaveformConfig,
};
pub use export::{export_channel, write_magnitude_csv, write_path_csv, ChannelExport, PathRow};
pub use optimize::{layer_sweep, run_optimize, write_layer_sweep_csv, LayerSweepRow};

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;

use crate::channel::{assemble_hbar, sample_paths, ArrayKind, EffectiveChannel, FrameDims, Frontend, Link, PathSet};
use crate::error::{Error, Result};
use crate::geometry::UlaSpec;
use crate::linalg::CMatrix;
use crate::metasurface::{RisPanel, Side, SimStack};
use crate::optimizer::{ascend, AscentResult, ObjectiveContext};
use crate::rng::{stream_id, substream};
use crate::waveform::{Modem, WaveformSpec};

/// First line of every CSV the crate writes.
pub const SCHEMA_LINE: &str = "# mpdd-sim schema v1";

const SLOT_PATHS: u64 = 0;
const SLOT_SIM_PHASES: u64 = 1;
const SLOT_RIS_PHASES: u64 = 2;
const SLOT_BITS: u64 = 3;
const SLOT_NOISE: u64 = 16;

/// One trial's channel under one SIM mode.
#[derive(Debug, Clone)]
pub struct Realization {
    pub paths: PathSet,
    /// Time-domain channel, scaled by the same factor as `wf`.
    pub td: EffectiveChannel,
    /// Waveform-domain channel.
    pub wf: EffectiveChannel,
    pub ascent: Option<AscentResult>,
}

/// Resolved configuration plus everything that is shared between trials.
#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: ExperimentConfig,
    seed: u64,
    spec: WaveformSpec,
    modem: Modem,
    tx_sim: Option<SimStack>,
    rx_sim: Option<SimStack>,
}

impl Scenario {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let cfg = cfg.resolve()?;
        let seed = cfg.seed()?;
        let spec = cfg.waveform_spec()?;
        let modem = Modem::new(spec)?;
        let needs_sim = cfg.sim_modes.iter().any(|m| *m != SimMode::None);
        let (tx_sim, rx_sim) = if needs_sim {
            let g = cfg.sim.geometry;
            (
                Some(SimStack::new(Side::Tx, cfg.system.n_t, cfg.sim.tx_layers, g)?),
                Some(SimStack::new(Side::Rx, cfg.system.n_r, cfg.sim.rx_layers, g)?),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            cfg,
            seed,
            spec,
            modem,
            tx_sim,
            rx_sim,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn modem(&self) -> &Modem {
        &self.modem
    }

    pub fn streams(&self) -> usize {
        self.cfg.system.streams()
    }

    pub fn frame_len(&self) -> usize {
        self.spec.n * self.streams()
    }

    pub(crate) fn rng(&self, trial: u64, slot: u64) -> crate::rng::SimRng {
        substream(self.seed, stream_id(trial, slot))
    }

    pub(crate) fn noise_slot(point: usize) -> u64 {
        SLOT_NOISE + point as u64
    }

    pub(crate) fn bits_slot() -> u64 {
        SLOT_BITS
    }

    /// Paths of `trial`, with angle fields drawn for the array kind of `mode`.
    pub fn paths(&self, trial: u64, mode: SimMode) -> Result<PathSet> {
        let kind = if mode == SimMode::None { ArrayKind::Ula } else { ArrayKind::Upa };
        let sampling = crate::channel::PathSampling {
            num_ris: self.cfg.ris.count,
            tx_array: kind,
            rx_array: kind,
            ..self.cfg.channel.clone()
        };
        sample_paths(&mut self.rng(trial, SLOT_PATHS), &sampling)
    }

    /// SIM stacks at the starting phases of `trial`.
    pub fn initial_stacks(&self, trial: u64) -> Result<(SimStack, SimStack)> {
        let (mut tx, mut rx) = match (&self.tx_sim, &self.rx_sim) {
            (Some(t), Some(r)) => (t.clone(), r.clone()),
            _ => return Err(Error::Config("SIM modes need sim settings".into())),
        };
        if !self.cfg.sim.random_init {
            return Ok((tx, rx));
        }
        let mut rng = self.rng(trial, SLOT_SIM_PHASES);
        for stack in [&mut tx, &mut rx] {
            let phases: Vec<Vec<f64>> = (0..stack.num_layers())
                .map(|_| (0..stack.num_atoms()).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
                .collect();
            stack.set_all_phases(&phases)?;
        }
        Ok((tx, rx))
    }

    fn ris_panels(&self, trial: u64) -> Result<Vec<RisPanel>> {
        let r = &self.cfg.ris;
        let mut rng = self.rng(trial, SLOT_RIS_PHASES);
        (0..r.count)
            .map(|_| {
                let mut panel = RisPanel::new(r.jx, r.jz)?;
                if r.phase_mode == RisPhaseMode::Random {
                    panel.phases = (0..panel.num_atoms()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
                }
                Ok(panel)
            })
            .collect()
    }

    /// Builds (and for [`SimMode::Optimized`], optimizes) the channel of `trial`.
    pub fn realize(&self, trial: u64, mode: SimMode) -> Result<Realization> {
        let paths = self.paths(trial, mode)?;
        let (tx, rx, ascent) = match mode {
            SimMode::None => (
                Frontend::Bare(UlaSpec::new(self.cfg.system.n_t)?),
                Frontend::Bare(UlaSpec::new(self.cfg.system.n_r)?),
                None,
            ),
            SimMode::Unoptimized => {
                let (t, r) = self.initial_stacks(trial)?;
                (Frontend::Sim(t), Frontend::Sim(r), None)
            }
            SimMode::Optimized => {
                let (t, r) = self.initial_stacks(trial)?;
                let mut ctx = ObjectiveContext::new(t, r, &paths.direct)?;
                let res = ascend(&mut ctx, &self.cfg.optimizer)?;
                let (t, r) = ctx.into_stacks();
                (Frontend::Sim(t), Frontend::Sim(r), Some(res))
            }
        };
        let ds = self.streams();
        let (nt, nr) = (self.cfg.system.n_t, self.cfg.system.n_r);
        let link = Link::new(tx, rx, self.ris_panels(trial)?)?
            .with_beamformers(CMatrix::identity(nt, ds), CMatrix::identity(nr, ds))?;
        let dims = FrameDims::for_paths(self.spec.n, ds, &paths)?;
        let mut td = assemble_hbar(&paths, &link, dims, self.spec.cp_rule())?;
        let mut wf = self.modem.effective_channel(&td)?;
        if self.cfg.normalization.equal_frobenius {
            let factor = wf.normalize_power(self.frame_len() as f64)?;
            td.scale(factor);
        }
        Ok(Realization { paths, td, wf, ascent })
    }
}

/// Writes `cfg` as pretty JSON to `dir/resolved_config.json`.
pub fn write_resolved_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("resolved_config.json"), cfg.to_json() + "\n")?;
    Ok(())
}
