//! Simulation of metasurface-parametrized doubly-dispersive MIMO channels.
//!
//! The crate models links whose transmitter and receiver are fronted by
//! stacked intelligent metasurfaces (SIMs), with optional RIS panels in the
//! environment, over channels with per-path delay and Doppler. It builds
//! the time-domain effective channel, converts it to the OFDM, OTFS or AFDM
//! domain, optimizes the SIM phases for received power and detects QPSK
//! frames with GaBP, LMMSE or ZF.
//!
//! ```
//! use mpdd_sim::harness::{ExperimentConfig, Scenario, SimMode, WaveformConfig};
//! use mpdd_sim::waveform::WaveformKind;
//!
//! let cfg = ExperimentConfig {
//!     seed: Some(1),
//!     waveform: WaveformConfig { kind: WaveformKind::Afdm, n: 32, ..Default::default() },
//!     channel: mpdd_sim::channel::PathSampling { max_delay: 4, ..Default::default() },
//!     sim_modes: vec![SimMode::None],
//!     ..Default::default()
//! };
//! let scn = Scenario::new(cfg).unwrap();
//! let real = scn.realize(0, SimMode::None).unwrap();
//! assert_eq!(real.wf.hbar.shape(), (32, 32));
//! ```
//!
//! Lengths are in wavelengths and indices start at zero. The guide in
//! `book/` walks through each stage.

pub mod channel;
pub mod detect;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod metasurface;
pub mod optimizer;
pub mod rng;
pub mod waveform;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/metasurfaces.md")]
    mod metasurfaces {}
    #[doc = include_str!("../../../book/src/waveforms.md")]
    mod waveforms {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
