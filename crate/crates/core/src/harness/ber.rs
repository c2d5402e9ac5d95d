use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DetectorKind, Scenario, SimMode, SCHEMA_LINE};
use crate::channel::{apply_channel, WaveformTag};
use crate::detect::{gabp_detect, lmmse_detect, zf_detect, GabpConfig};
use crate::error::Result;
use crate::linalg::CVector;
use crate::waveform::{qpsk_demap, qpsk_map};

/// Noise floor handed to the detectors at the noise-free point, relative to `E_S`.
const NOISELESS_FLOOR: f64 = 1e-12;

/// Bit-error count for one (SNR, detector, SIM mode) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub trials: usize,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub waveform: WaveformTag,
    pub detector: DetectorKind,
    pub sim_mode: SimMode,
}

struct Point {
    snr_db: f64,
    noise_var: f64,
    trials: usize,
    /// `[mode][detector]`
    errors: Vec<Vec<u64>>,
    active: bool,
}

/// Errors of one trial, `[point][mode][detector]`, for the active points only.
type TrialErrors = Vec<(usize, Vec<Vec<u64>>)>;

fn detect(scn: &Scenario, kind: DetectorKind, h: &crate::linalg::CMatrix, y: &CVector, noise_var: f64) -> Result<CVector> {
    let d = &scn.config().detector;
    match kind {
        DetectorKind::Gabp => {
            let cfg = GabpConfig {
                max_iters: d.max_iters,
                damping: d.damping,
                symbol_energy: d.symbol_energy,
                noise_var,
            };
            Ok(gabp_detect(h, y, &cfg)?.estimate)
        }
        DetectorKind::Lmmse => lmmse_detect(h, y, noise_var, d.symbol_energy, d.lmmse_scaled),
        DetectorKind::Zf => zf_detect(h, y),
    }
}

fn run_trial(scn: &Scenario, trial: u64, points: &[(usize, f64)]) -> Result<TrialErrors> {
    let cfg = scn.config();
    let es = cfg.detector.symbol_energy;
    let len = scn.frame_len();
    let mut bit_rng = scn.rng(trial, Scenario::bits_slot());
    let bits: Vec<u8> = (0..2 * len).map(|_| bit_rng.random_range(0..2)).collect();
    let x = qpsk_map(&bits, es)?;
    let s = scn.modem().modulate(&x)?;

    let mut out: TrialErrors = points.iter().map(|&(i, _)| (i, Vec::new())).collect();
    for &mode in &cfg.sim_modes {
        let real = scn.realize(trial, mode)?;
        for (slot, &(i, noise_var)) in out.iter_mut().zip(points) {
            let r = apply_channel(&real.td.hbar, &s, noise_var, &mut scn.rng(trial, Scenario::noise_slot(i)))?;
            let y = scn.modem().demodulate(&r)?;
            let det_var = noise_var.max(NOISELESS_FLOOR * es);
            let counts = cfg
                .detector
                .kinds
                .iter()
                .map(|&k| {
                    let est = detect(scn, k, &real.wf.hbar, &y, det_var)?;
                    Ok(qpsk_demap(&est).iter().zip(&bits).filter(|(a, b)| a != b).count() as u64)
                })
                .collect::<Result<Vec<_>>>()?;
            slot.1.push(counts);
        }
    }
    Ok(out)
}

/// Monte-Carlo BER sweep. Trials run in fixed-size batches in parallel; each
/// point stops once it has `trials` trials and `min_errors` errors for every
/// (mode, detector) pair, or `max_trials` trials.
pub fn run_ber(scn: &Scenario) -> Result<Vec<BerRecord>> {
    let cfg = scn.config();
    let sw = &cfg.sweep;
    let es = cfg.detector.symbol_energy;
    let (n_modes, n_det) = (cfg.sim_modes.len(), cfg.detector.kinds.len());
    let mut points: Vec<Point> = sw
        .snr_db
        .iter()
        .map(|&snr| (snr, es / 10f64.powf(snr / 10.0)))
        .chain(sw.noiseless.then_some((f64::INFINITY, 0.0)))
        .map(|(snr_db, noise_var)| Point {
            snr_db,
            noise_var,
            trials: 0,
            errors: vec![vec![0; n_det]; n_modes],
            active: true,
        })
        .collect();

    let mut next = 0usize;
    while points.iter().any(|p| p.active) {
        let active: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.active)
            .map(|(i, p)| (i, p.noise_var))
            .collect();
        let batch: Vec<u64> = (next..next + sw.batch).map(|t| t as u64).collect();
        next += sw.batch;
        let results = batch
            .par_iter()
            .map(|&t| run_trial(scn, t, &active))
            .collect::<Result<Vec<_>>>()?;

        for trial in results {
            for (i, per_mode) in trial {
                let p = &mut points[i];
                p.trials += 1;
                for (acc, counts) in p.errors.iter_mut().zip(per_mode) {
                    for (a, c) in acc.iter_mut().zip(counts) {
                        *a += c;
                    }
                }
            }
        }
        for p in points.iter_mut().filter(|p| p.active) {
            let enough = p.errors.iter().flatten().all(|&e| e >= sw.min_errors);
            if (p.trials >= sw.trials && enough) || p.trials >= sw.max_trials {
                p.active = false;
                log::info!("SNR {} dB done after {} trials", p.snr_db, p.trials);
            }
        }
    }

    let bits_per_trial = 2 * scn.frame_len() as u64;
    let tag = scn.modem().spec().kind.tag();
    let mut records = Vec::new();
    for p in &points {
        for (m, &mode) in cfg.sim_modes.iter().enumerate() {
            for (d, &det) in cfg.detector.kinds.iter().enumerate() {
                let bits = bits_per_trial * p.trials as u64;
                records.push(BerRecord {
                    snr_db: p.snr_db,
                    trials: p.trials,
                    bit_errors: p.errors[m][d],
                    bits,
                    ber: p.errors[m][d] as f64 / bits as f64,
                    waveform: tag,
                    detector: det,
                    sim_mode: mode,
                });
            }
        }
    }
    Ok(records)
}

pub fn write_ber_csv<W: Write>(records: &[BerRecord], mut w: W) -> Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "snr_db,trials,bit_errors,bits,ber,waveform,detector,sim_mode")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{:.6e},{},{},{}",
            r.snr_db, r.trials, r.bit_errors, r.bits, r.ber, r.waveform, r.detector, r.sim_mode
        )?;
    }
    Ok(())
}
