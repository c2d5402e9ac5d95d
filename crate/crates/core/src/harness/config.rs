use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::PathSampling;
use crate::error::{Error, Result};
use crate::metasurface::SimLayerGeometry;
use crate::optimizer::AscentConfig;
use crate::waveform::{default_afdm_c1, WaveformKind, WaveformSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Defaults to `min(n_t, n_r)`.
    pub d_s: Option<usize>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { n_t: 1, n_r: 1, d_s: None }
    }
}

impl SystemConfig {
    pub fn streams(&self) -> usize {
        self.d_s.unwrap_or(self.n_t.min(self.n_r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub tx_layers: usize,
    pub rx_layers: usize,
    pub geometry: SimLayerGeometry,
    /// Start from uniformly random phases instead of all-zero phases.
    pub random_init: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tx_layers: 2,
            rx_layers: 2,
            geometry: SimLayerGeometry::default(),
            random_init: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RisPhaseMode {
    #[default]
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisConfig {
    pub count: usize,
    pub jx: usize,
    pub jz: usize,
    pub phase_mode: RisPhaseMode,
}

impl Default for RisConfig {
    fn default() -> Self {
        Self {
            count: 0,
            jx: 4,
            jz: 4,
            phase_mode: RisPhaseMode::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    pub kind: WaveformKind,
    pub n: usize,
    /// OTFS delay bins; defaults to the largest divisor of `n` not above `√n`.
    pub k_tilde: Option<usize>,
    pub k_tilde_prime: Option<usize>,
    /// AFDM chirp rate; defaults to `(2⌈f_max⌉ + 1) / (2N)`.
    pub c1: Option<f64>,
    pub c2: f64,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            kind: WaveformKind::Ofdm,
            n: 64,
            k_tilde: None,
            k_tilde_prime: None,
            c1: None,
            c2: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Gabp,
    Lmmse,
    Zf,
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorKind::Gabp => "gabp",
            DetectorKind::Lmmse => "lmmse",
            DetectorKind::Zf => "zf",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub kinds: Vec<DetectorKind>,
    pub max_iters: usize,
    pub damping: f64,
    pub symbol_energy: f64,
    /// Use `σ²/E_S` instead of `σ²` as the LMMSE regularizer.
    pub lmmse_scaled: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            kinds: vec![DetectorKind::Gabp, DetectorKind::Lmmse, DetectorKind::Zf],
            max_iters: 20,
            damping: 0.5,
            symbol_energy: 1.0,
            lmmse_scaled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_db: Vec<f64>,
    /// Adds a noise-free point, reported with `snr_db = inf`.
    pub noiseless: bool,
    /// Minimum trials per point.
    pub trials: usize,
    /// A point keeps running until every detector has seen this many bit
    /// errors or `max_trials` is reached.
    pub min_errors: u64,
    pub max_trials: usize,
    /// Trials evaluated between stopping checks.
    pub batch: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            noiseless: false,
            trials: 100,
            min_errors: 100,
            max_trials: 2000,
            batch: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    /// Scale every effective channel to `‖H̄‖_F² = N d_s`.
    pub equal_frobenius: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self { equal_frobenius: true }
    }
}

/// How the front ends are built for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    /// Bare ULAs.
    None,
    /// SIMs at their starting phases (all zero unless `sim.random_init`).
    Unoptimized,
    /// SIMs optimized from those starting phases.
    Optimized,
}

impl std::fmt::Display for SimMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimMode::None => "none",
            SimMode::Unoptimized => "unoptimized",
            SimMode::Optimized => "optimized",
        })
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub system: SystemConfig,
    pub sim: SimConfig,
    pub ris: RisConfig,
    pub channel: PathSampling,
    pub waveform: WaveformConfig,
    pub detector: DetectorConfig,
    pub sweep: SweepConfig,
    pub normalization: NormalizationConfig,
    pub optimizer: AscentConfig,
    pub sim_modes: Vec<SimMode>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            system: SystemConfig::default(),
            sim: SimConfig::default(),
            ris: RisConfig::default(),
            channel: PathSampling::default(),
            waveform: WaveformConfig::default(),
            detector: DetectorConfig::default(),
            sweep: SweepConfig::default(),
            normalization: NormalizationConfig::default(),
            optimizer: AscentConfig::default(),
            sim_modes: vec![SimMode::Unoptimized, SimMode::Optimized],
        }
    }
}

fn otfs_default_grid(n: usize) -> usize {
    (1..=n).rev().find(|k| n.is_multiple_of(*k) && k * k <= n).unwrap_or(1)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Largest Doppler a composite path can carry.
    fn max_composite_doppler(&self) -> f64 {
        let direct = match &self.channel.dopplers {
            Some(f) => f.iter().fold(0.0, |a: f64, v| a.max(v.abs())),
            None => self.channel.max_doppler,
        };
        if self.ris.count > 0 {
            direct.max(2.0 * self.channel.max_doppler)
        } else {
            direct
        }
    }

    fn max_composite_delay(&self) -> usize {
        let direct = match &self.channel.delays {
            Some(d) => d.iter().copied().max().unwrap_or(0),
            None => self.channel.max_delay,
        };
        if self.ris.count > 0 {
            direct.max(2 * self.channel.max_delay)
        } else {
            direct
        }
    }

    /// Fills every defaulted field that depends on other fields and checks
    /// cross-field consistency.
    pub fn resolve(mut self) -> Result<Self> {
        let n = self.waveform.n;
        if self.waveform.kind == WaveformKind::Otfs {
            match (self.waveform.k_tilde, self.waveform.k_tilde_prime) {
                (None, None) => {
                    let kp = otfs_default_grid(n);
                    self.waveform.k_tilde = Some(n / kp);
                    self.waveform.k_tilde_prime = Some(kp);
                }
                (Some(k), None) if k > 0 && n.is_multiple_of(k) => self.waveform.k_tilde_prime = Some(n / k),
                (None, Some(k)) if k > 0 && n.is_multiple_of(k) => self.waveform.k_tilde = Some(n / k),
                _ => {}
            }
        }
        if self.waveform.kind == WaveformKind::Afdm && self.waveform.c1.is_none() {
            self.waveform.c1 = Some(default_afdm_c1(n.max(1), self.max_composite_doppler()));
        }
        if self.system.d_s.is_none() {
            self.system.d_s = Some(self.system.streams());
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let sys = &self.system;
        if sys.n_t == 0 || sys.n_r == 0 {
            return bad("system.n_t and system.n_r must be positive".into());
        }
        let ds = sys.streams();
        if ds == 0 || ds > sys.n_t.min(sys.n_r) {
            return bad(format!("system.d_s = {ds} must lie in 1..=min(n_t, n_r) = {}", sys.n_t.min(sys.n_r)));
        }
        self.waveform_spec()?.validate()?;
        self.channel.validate()?;
        let max_delay = self.max_composite_delay();
        if max_delay >= self.waveform.n {
            return bad(format!(
                "largest path delay {max_delay} must be below the frame length {}",
                self.waveform.n
            ));
        }
        if self.sim_modes.is_empty() {
            return bad("sim_modes must not be empty".into());
        }
        if self.sim_modes.iter().any(|m| *m != SimMode::None) {
            self.sim.geometry.validate()?;
            if self.sim.tx_layers == 0 || self.sim.rx_layers == 0 {
                return bad("sim.tx_layers and sim.rx_layers must be positive".into());
            }
        }
        if self.ris.count > 0 && self.ris.jx * self.ris.jz == 0 {
            return bad("ris.jx and ris.jz must be positive".into());
        }
        let det = &self.detector;
        if det.kinds.is_empty() {
            return bad("detector.kinds must not be empty".into());
        }
        if det.max_iters == 0 {
            return bad("detector.max_iters must be positive".into());
        }
        if !(det.damping > 0.0 && det.damping <= 1.0) {
            return bad(format!("detector.damping must lie in (0, 1], got {}", det.damping));
        }
        if !(det.symbol_energy > 0.0 && det.symbol_energy.is_finite()) {
            return bad(format!("detector.symbol_energy must be positive, got {}", det.symbol_energy));
        }
        let sw = &self.sweep;
        if sw.snr_db.is_empty() && !sw.noiseless {
            return bad("sweep.snr_db must list at least one point".into());
        }
        if sw.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("sweep.snr_db entries must be finite; use sweep.noiseless for a noise-free point".into());
        }
        if sw.trials == 0 || sw.batch == 0 {
            return bad("sweep.trials and sweep.batch must be positive".into());
        }
        if sw.max_trials < sw.trials {
            return bad(format!("sweep.max_trials {} is below sweep.trials {}", sw.max_trials, sw.trials));
        }
        self.optimizer.validate()?;
        Ok(())
    }

    pub fn waveform_spec(&self) -> Result<WaveformSpec> {
        let w = &self.waveform;
        let spec = match w.kind {
            WaveformKind::Ofdm => WaveformSpec::ofdm(w.n),
            WaveformKind::Otfs => {
                let kt = w.k_tilde.unwrap_or(w.n / otfs_default_grid(w.n.max(1)).max(1));
                let ktp = w.k_tilde_prime.unwrap_or(if kt > 0 { w.n / kt } else { 0 });
                WaveformSpec { n: w.n, ..WaveformSpec::otfs(kt, ktp) }
            }
            WaveformKind::Afdm => {
                let c1 = w.c1.unwrap_or_else(|| default_afdm_c1(w.n.max(1), self.max_composite_doppler()));
                WaveformSpec::afdm(w.n, c1, w.c2)
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("no seed given".into()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn empty_document_uses_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap().resolve().unwrap();
        assert_eq!(cfg.waveform.n, 64);
        assert_eq!(cfg.system.d_s, Some(1));
        assert_eq!(cfg.channel.max_delay, 14);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"sistem": {}}"#).is_err());
    }

    #[test]
    fn otfs_grid_and_afdm_chirp_are_filled_in() {
        let cfg = ExperimentConfig::from_json(r#"{"waveform": {"kind": "otfs", "n": 64}}"#).unwrap().resolve().unwrap();
        assert_eq!((cfg.waveform.k_tilde, cfg.waveform.k_tilde_prime), (Some(8), Some(8)));
        let cfg = ExperimentConfig::from_json(r#"{"waveform": {"kind": "afdm", "n": 256}}"#).unwrap().resolve().unwrap();
        assert_eq!(cfg.waveform.c1, Some(5.0 / 512.0));
    }

    #[test]
    fn inconsistent_configs_name_the_problem() {
        let cases = [
            (r#"{"waveform": {"kind": "otfs", "n": 64, "k_tilde": 3, "k_tilde_prime": 3}}"#, "OTFS grid"),
            (r#"{"system": {"n_t": 1, "n_r": 2, "d_s": 2}}"#, "d_s"),
            (r#"{"waveform": {"n": 8}}"#, "frame length"),
            (r#"{"detector": {"kinds": []}}"#, "detector.kinds"),
            (r#"{"sweep": {"trials": 10, "max_trials": 5}}"#, "max_trials"),
            (r#"{"channel": {"direct_paths": 2, "delays": [1]}}"#, "fixed delays"),
        ];
        for (text, needle) in cases {
            let err = ExperimentConfig::from_json(text).unwrap().resolve().unwrap_err().to_string();
            assert!(err.contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn ris_doubles_the_delay_budget() {
        let text = r#"{"ris": {"count": 1}, "channel": {"max_delay": 40}}"#;
        assert!(ExperimentConfig::from_json(text).unwrap().resolve().is_err());
    }
}
