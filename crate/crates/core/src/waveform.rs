//! OFDM, OTFS and AFDM modems and the matching waveform-domain channels.
//!
//! Every waveform is described by a unitary transform `T` with
//! `modulate = Tᴴ` and `demodulate = T`:
//!
//! * OFDM: `T = F_N`
//! * OTFS: `T = F_{K̃′} ⊗ I_{K̃}` (column-stacked `K̃ × K̃′` frames)
//! * AFDM: `T = Λ₂ F_N Λ₁`, `Λ_i = diag(e^{-j2π c_i n²})`
//!
//! The waveform-domain channel of a path is `T G Tᴴ`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channel::{CpPhaseRule, EffectiveChannel, PathTerm, WaveformTag};
use crate::error::{Error, Result};
use crate::linalg::{cis, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformKind {
    Ofdm,
    Otfs,
    Afdm,
}

impl WaveformKind {
    pub fn tag(self) -> WaveformTag {
        match self {
            WaveformKind::Ofdm => WaveformTag::Ofdm,
            WaveformKind::Otfs => WaveformTag::Otfs,
            WaveformKind::Afdm => WaveformTag::Afdm,
        }
    }
}

impl std::str::FromStr for WaveformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ofdm" => Ok(WaveformKind::Ofdm),
            "otfs" => Ok(WaveformKind::Otfs),
            "afdm" => Ok(WaveformKind::Afdm),
            other => Err(Error::Config(format!("unknown waveform '{other}'"))),
        }
    }
}

/// Waveform parameters for one frame of `n` samples per stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub kind: WaveformKind,
    pub n: usize,
    /// OTFS delay bins `K̃`.
    pub k_tilde: usize,
    /// OTFS Doppler bins `K̃′`.
    pub k_tilde_prime: usize,
    pub c1: f64,
    pub c2: f64,
}

impl WaveformSpec {
    pub fn ofdm(n: usize) -> Self {
        Self {
            kind: WaveformKind::Ofdm,
            n,
            k_tilde: n,
            k_tilde_prime: 1,
            c1: 0.0,
            c2: 0.0,
        }
    }

    pub fn otfs(k_tilde: usize, k_tilde_prime: usize) -> Self {
        Self {
            kind: WaveformKind::Otfs,
            n: k_tilde * k_tilde_prime,
            k_tilde,
            k_tilde_prime,
            c1: 0.0,
            c2: 0.0,
        }
    }

    pub fn afdm(n: usize, c1: f64, c2: f64) -> Self {
        Self {
            kind: WaveformKind::Afdm,
            n,
            k_tilde: n,
            k_tilde_prime: 1,
            c1,
            c2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("frame length must be positive".into()));
        }
        if self.kind == WaveformKind::Otfs && self.k_tilde * self.k_tilde_prime != self.n {
            return Err(Error::Config(format!(
                "OTFS grid {}x{} does not cover N = {}",
                self.k_tilde, self.k_tilde_prime, self.n
            )));
        }
        if !(self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::Config("AFDM chirp rates must be finite".into()));
        }
        Ok(())
    }

    /// Prefix phase rule the transmitter must use for this waveform.
    pub fn cp_rule(&self) -> CpPhaseRule {
        match self.kind {
            WaveformKind::Afdm => cpp_phase_rule(self.c1, self.n),
            _ => CpPhaseRule::Zero,
        }
    }
}

/// Chirp-periodic prefix rule for chirp rate `c1`; the zero rule when `c1 = 0`.
pub fn cpp_phase_rule(c1: f64, _n: usize) -> CpPhaseRule {
    if c1 == 0.0 {
        CpPhaseRule::Zero
    } else {
        CpPhaseRule::Chirp { c1 }
    }
}

/// `c₁ = (2⌈f_max⌉ + 1) / (2N)`.
pub fn default_afdm_c1(n: usize, max_doppler: f64) -> f64 {
    (2.0 * max_doppler.ceil() + 1.0) / (2.0 * n as f64)
}

/// Planned transforms for one [`WaveformSpec`].
#[derive(Clone)]
pub struct Modem {
    spec: WaveformSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    chirp1: Vec<C64>,
    chirp2: Vec<C64>,
}

impl std::fmt::Debug for Modem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Modem").field("spec", &self.spec).finish()
    }
}

fn chirp(c: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| {
            let i = i as f64;
            cis(-2.0 * PI * c * i * i)
        })
        .collect()
}

impl Modem {
    pub fn new(spec: WaveformSpec) -> Result<Self> {
        spec.validate()?;
        let len = match spec.kind {
            WaveformKind::Otfs => spec.k_tilde_prime,
            _ => spec.n,
        };
        let mut planner = FftPlanner::new();
        Ok(Self {
            spec,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            chirp1: chirp(spec.c1, spec.n),
            chirp2: chirp(spec.c2, spec.n),
        })
    }

    pub fn spec(&self) -> &WaveformSpec {
        &self.spec
    }

    /// `x ← T x` for one stream.
    fn forward_in_place(&self, x: &mut [C64]) {
        match self.spec.kind {
            WaveformKind::Ofdm => self.dft(x, &self.fwd),
            WaveformKind::Otfs => self.otfs_dft(x, &self.fwd),
            WaveformKind::Afdm => {
                mul_assign(x, &self.chirp1, false);
                self.dft(x, &self.fwd);
                mul_assign(x, &self.chirp2, false);
            }
        }
    }

    /// `x ← Tᴴ x` for one stream.
    fn inverse_in_place(&self, x: &mut [C64]) {
        match self.spec.kind {
            WaveformKind::Ofdm => self.dft(x, &self.inv),
            WaveformKind::Otfs => self.otfs_dft(x, &self.inv),
            WaveformKind::Afdm => {
                mul_assign(x, &self.chirp2, true);
                self.dft(x, &self.inv);
                mul_assign(x, &self.chirp1, true);
            }
        }
    }

    fn dft(&self, x: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(x);
        let s = 1.0 / (x.len() as f64).sqrt();
        x.iter_mut().for_each(|z| *z *= s);
    }

    /// DFT along `k′` for every delay bin `k` (entries `k + K̃ k′`).
    fn otfs_dft(&self, x: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let (kt, ktp) = (self.spec.k_tilde, self.spec.k_tilde_prime);
        let mut buf = vec![C64::new(0.0, 0.0); ktp];
        for k in 0..kt {
            for (kp, b) in buf.iter_mut().enumerate() {
                *b = x[k + kt * kp];
            }
            self.dft(&mut buf, plan);
            for (kp, b) in buf.iter().enumerate() {
                x[k + kt * kp] = *b;
            }
        }
    }

    fn check_len(&self, len: usize, context: &'static str) -> Result<usize> {
        let n = self.spec.n;
        if len == 0 || !len.is_multiple_of(n) {
            return Err(Error::dim(context, format!("a multiple of {n}"), len));
        }
        Ok(len / n)
    }

    /// Stacked symbols to stacked time samples, `(I ⊗ Tᴴ) x`.
    pub fn modulate(&self, x: &CVector) -> Result<CVector> {
        self.check_len(x.len(), "Modem::modulate")?;
        let mut s = x.clone();
        for chunk in s.as_mut_slice().chunks_mut(self.spec.n) {
            self.inverse_in_place(chunk);
        }
        Ok(s)
    }

    /// Stacked time samples to stacked symbol estimates, `(I ⊗ T) r`.
    pub fn demodulate(&self, r: &CVector) -> Result<CVector> {
        self.check_len(r.len(), "Modem::demodulate")?;
        let mut y = r.clone();
        for chunk in y.as_mut_slice().chunks_mut(self.spec.n) {
            self.forward_in_place(chunk);
        }
        Ok(y)
    }

    /// Dense `T`.
    pub fn transform_matrix(&self) -> CMatrix {
        let n = self.spec.n;
        let mut t = CMatrix::identity(n, n);
        for mut col in t.column_iter_mut() {
            self.forward_in_place(col.as_mut_slice());
        }
        t
    }

    /// `T G Tᴴ` for one `N × N` matrix.
    pub fn conjugate(&self, g: &CMatrix) -> Result<CMatrix> {
        let n = self.spec.n;
        if g.shape() != (n, n) {
            return Err(Error::dim("Modem::conjugate", format!("{n}×{n}"), format!("{:?}", g.shape())));
        }
        // (T (T G)ᴴ)ᴴ = T G Tᴴ
        let mut a = g.clone();
        for mut col in a.column_iter_mut() {
            self.forward_in_place(col.as_mut_slice());
        }
        let mut b = a.adjoint();
        for mut col in b.column_iter_mut() {
            self.forward_in_place(col.as_mut_slice());
        }
        Ok(b.adjoint())
    }

    /// Waveform-domain channel from a time-domain one.
    pub fn effective_channel(&self, td: &EffectiveChannel) -> Result<EffectiveChannel> {
        if td.tag != WaveformTag::Td {
            return Err(Error::Config(format!("expected a time-domain channel, got {}", td.tag)));
        }
        if td.dims.n != self.spec.n {
            return Err(Error::dim("Modem::effective_channel", self.spec.n, td.dims.n));
        }
        let want = self.spec.cp_rule();
        if td.cp_rule != want {
            return Err(Error::Config(format!(
                "{} needs prefix rule {want:?}, channel was built with {:?}",
                self.spec.kind.tag(),
                td.cp_rule
            )));
        }
        let terms = td
            .terms
            .iter()
            .map(|t| {
                Ok(PathTerm {
                    g: self.conjugate(&t.g)?,
                    ..t.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EffectiveChannel::from_terms(terms, self.spec.kind.tag(), td.cp_rule, td.dims))
    }
}

fn mul_assign(x: &mut [C64], d: &[C64], conj: bool) {
    for (z, c) in x.iter_mut().zip(d) {
        *z *= if conj { c.conj() } else { *c };
    }
}

/// Gray-mapped QPSK with symbol energy `symbol_energy`:
/// bits `(b₀, b₁)` map to `c_x((1 - 2b₀) + j(1 - 2b₁))`, `c_x = √(E_S/2)`.
pub fn qpsk_map(bits: &[u8], symbol_energy: f64) -> Result<CVector> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::dim("qpsk_map", "an even number of bits", bits.len()));
    }
    let cx = (symbol_energy / 2.0).sqrt();
    let sign = |b: u8| if b == 0 { 1.0 } else { -1.0 };
    Ok(CVector::from_iterator(
        bits.len() / 2,
        bits.chunks_exact(2).map(|b| C64::new(cx * sign(b[0]), cx * sign(b[1]))),
    ))
}

/// Hard QPSK decisions by the signs of the real and imaginary parts.
pub fn qpsk_demap(symbols: &CVector) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|z| [u8::from(z.re < 0.0), u8::from(z.im < 0.0)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dft_matrix;
    use crate::rng::{complex_normal, substream};
    use rand::Rng;

    fn random_vec(len: usize, seed: u64) -> CVector {
        let mut rng = substream(seed, 0);
        CVector::from_fn(len, |_, _| complex_normal(&mut rng, 1.0))
    }

    fn all_specs(n: usize) -> Vec<WaveformSpec> {
        let kt = (1..=n).rev().find(|k| n.is_multiple_of(*k) && k * k <= n).unwrap_or(1);
        vec![
            WaveformSpec::ofdm(n),
            WaveformSpec::otfs(n / kt, kt),
            WaveformSpec::afdm(n, default_afdm_c1(n, 2.0), 0.1),
        ]
    }

    #[test]
    fn ofdm_unit_vector_modulates_to_constant() {
        let m = Modem::new(WaveformSpec::ofdm(8)).unwrap();
        let mut x = CVector::zeros(8);
        x[0] = C64::new(1.0, 0.0);
        let s = m.modulate(&x).unwrap();
        for z in s.iter() {
            assert!((z - C64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-14);
        }
        assert!((m.demodulate(&s).unwrap() - x).norm() < 1e-14);
    }

    #[test]
    fn transform_matches_dense_definitions() {
        let n = 12;
        let f = dft_matrix(n);
        let t = Modem::new(WaveformSpec::ofdm(n)).unwrap().transform_matrix();
        assert!((t - &f).norm() < 1e-12);

        let (c1, c2) = (0.07, 0.013);
        let l1 = crate::linalg::diag(&chirp(c1, n));
        let l2 = crate::linalg::diag(&chirp(c2, n));
        let t = Modem::new(WaveformSpec::afdm(n, c1, c2)).unwrap().transform_matrix();
        assert!((t - l2 * &f * l1).norm() < 1e-12);

        let (kt, ktp) = (3, 4);
        let t = Modem::new(WaveformSpec::otfs(kt, ktp)).unwrap().transform_matrix();
        let expected = crate::linalg::kron(&dft_matrix(ktp), &CMatrix::identity(kt, kt));
        assert!((t - expected).norm() < 1e-12);
    }

    #[test]
    fn otfs_matches_explicit_two_point_dft() {
        // K̃ = K̃′ = 2, x = vec(I₂) = [1, 0, 0, 1]; s = vec(X F₂ᴴ)
        let m = Modem::new(WaveformSpec::otfs(2, 2)).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let x = CVector::from_vec(vec![one, zero, zero, one]);
        let s = m.modulate(&x).unwrap();
        let h = 1.0 / 2f64.sqrt();
        // X F₂ᴴ = [[1,0],[0,1]] · [[1,1],[1,-1]]/√2
        let expected = [h, h, h, -h];
        for (z, e) in s.iter().zip(expected) {
            assert!((z - C64::new(e, 0.0)).norm() < 1e-14, "{s}");
        }
    }

    #[test]
    fn afdm_without_chirp_equals_ofdm() {
        let x = random_vec(16, 1);
        let a = Modem::new(WaveformSpec::afdm(16, 0.0, 0.0)).unwrap().modulate(&x).unwrap();
        let o = Modem::new(WaveformSpec::ofdm(16)).unwrap().modulate(&x).unwrap();
        assert!((a - o).norm() < 1e-13);
    }

    #[test]
    fn otfs_with_single_delay_bin_is_ofdm() {
        let x = random_vec(16, 2);
        let a = Modem::new(WaveformSpec::otfs(1, 16)).unwrap().modulate(&x).unwrap();
        let o = Modem::new(WaveformSpec::ofdm(16)).unwrap().modulate(&x).unwrap();
        assert!((a - o).norm() < 1e-13);
    }

    #[test]
    fn round_trips_over_stacked_streams() {
        for n in [16, 64, 256] {
            for spec in all_specs(n) {
                let m = Modem::new(spec).unwrap();
                let x = random_vec(2 * n, n as u64);
                let back = m.demodulate(&m.modulate(&x).unwrap()).unwrap();
                assert!((back - &x).norm() < 1e-10 * x.norm(), "{spec:?}");
            }
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let m = Modem::new(WaveformSpec::ofdm(8)).unwrap();
        assert!(m.modulate(&CVector::zeros(7)).is_err());
        assert!(m.demodulate(&CVector::zeros(0)).is_err());
        assert!(Modem::new(WaveformSpec { n: 10, ..WaveformSpec::otfs(3, 3) }).is_err());
    }

    #[test]
    fn cpp_rule_reduces_to_zero_rule() {
        assert_eq!(cpp_phase_rule(0.0, 8), CpPhaseRule::Zero);
        assert_eq!(cpp_phase_rule(0.25, 8), CpPhaseRule::Chirp { c1: 0.25 });
        assert_eq!(WaveformSpec::ofdm(8).cp_rule(), CpPhaseRule::Zero);
    }

    #[test]
    fn default_c1_for_integer_doppler() {
        assert_eq!(default_afdm_c1(256, 2.0), 5.0 / 512.0);
        assert_eq!(default_afdm_c1(64, 1.3), 5.0 / 128.0);
    }

    #[test]
    fn qpsk_gray_mapping() {
        let es = 2.0;
        let s = qpsk_map(&[0, 0, 0, 1, 1, 0, 1, 1], es).unwrap();
        let e = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
        for (z, (re, im)) in s.iter().zip(e) {
            assert_eq!(*z, C64::new(re, im));
        }
        assert_eq!(qpsk_demap(&s), vec![0, 0, 0, 1, 1, 0, 1, 1]);
        let s = qpsk_map(&[0, 0], 1.0).unwrap();
        assert!((s[0].norm_sqr() - 1.0).abs() < 1e-15);
        assert!(qpsk_map(&[0, 1, 1], 1.0).is_err());
    }

    #[test]
    fn qpsk_random_round_trip() {
        let mut rng = substream(5, 0);
        let bits: Vec<u8> = (0..1000).map(|_| rng.random_range(0..2)).collect();
        assert_eq!(qpsk_demap(&qpsk_map(&bits, 1.0).unwrap()), bits);
    }
}
