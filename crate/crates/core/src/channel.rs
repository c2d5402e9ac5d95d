//! Doubly-dispersive channel: random path sets, per-path spatial factors,
//! the delay/Doppler matrices `G = Θ Ω^f Π^ℓ`, and the Kronecker-structured
//! effective channel `H̄ = Σ Ȟ ⊗ G`.
//!
//! Conventions:
//!
//! * Stacked signals are stream-major: sample `n` of stream `u` sits at
//!   index `u * N + n`. In `Ȟ ⊗ G` the left factor indexes streams.
//! * `Π^ℓ` delays by `ℓ` samples cyclically, `(Π^ℓ s)[n] = s[(n - ℓ) mod N]`.
//! * `Ω^f = diag(e^{-j2π f n / N})`. With this sign, a path with integer
//!   Doppler `f` lands on cyclic diagonal `col - row = f` of the OFDM
//!   effective channel and on `col - row = f + 2Nc₁ℓ` for AFDM.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ula_response, PathAngles, UlaSpec};
use crate::linalg::{cis, frobenius_sq, kron_accumulate, CMatrix, CVector, C64};
use crate::metasurface::{sim_transfer, RisPanel, Side, SimStack};
use crate::rng::complex_normal;

/// One propagation path (or one leg of a RIS-relayed path).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdPath {
    pub gain: C64,
    pub delay_taps: usize,
    /// Doppler normalized to the frame, `f = N ν / F_s`; may be fractional.
    pub doppler_norm: f64,
    pub angles: PathAngles,
}

/// Paths of one RIS: TX-SIM → RIS (`inbound`) and RIS → RX-SIM (`outbound`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RisLegs {
    pub inbound: Vec<DdPath>,
    pub outbound: Vec<DdPath>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub direct: Vec<DdPath>,
    pub ris: Vec<RisLegs>,
}

/// RIS-relayed composite: outbound leg `outbound` after inbound leg
/// `inbound` through RIS `ris`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composite {
    pub ris: usize,
    pub outbound: usize,
    pub inbound: usize,
    pub delay_taps: usize,
    pub doppler_norm: f64,
}

impl PathSet {
    pub fn composites(&self) -> impl Iterator<Item = Composite> + '_ {
        self.ris.iter().enumerate().flat_map(|(k, legs)| {
            legs.outbound.iter().enumerate().flat_map(move |(pb, out)| {
                legs.inbound.iter().enumerate().map(move |(pt, inb)| Composite {
                    ris: k,
                    outbound: pb,
                    inbound: pt,
                    delay_taps: out.delay_taps + inb.delay_taps,
                    doppler_norm: out.doppler_norm + inb.doppler_norm,
                })
            })
        })
    }

    /// Largest delay over direct paths and RIS composites.
    pub fn max_delay(&self) -> usize {
        let direct = self.direct.iter().map(|p| p.delay_taps).max().unwrap_or(0);
        let relayed = self.composites().map(|c| c.delay_taps).max().unwrap_or(0);
        direct.max(relayed)
    }

    pub fn max_abs_doppler(&self) -> f64 {
        let direct = self.direct.iter().map(|p| p.doppler_norm.abs());
        let relayed = self.composites().map(|c| c.doppler_norm.abs());
        direct.chain(relayed).fold(0.0, f64::max)
    }
}

/// Angular support of the array at one end of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    /// Planar aperture (SIM outer layer, RIS): azimuth in `[-π/2, π/2]`.
    #[default]
    Upa,
    /// Bare linear array: the azimuth field carries the ULA angle in `[0, π]`.
    Ula,
}

impl ArrayKind {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> (f64, f64) {
        let az = match self {
            ArrayKind::Upa => rng.random_range(-PI / 2.0..=PI / 2.0),
            ArrayKind::Ula => rng.random_range(0.0..=PI),
        };
        (az, rng.random_range(0.0..=PI))
    }
}

/// Parameters for [`sample_paths`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathSampling {
    /// `P`
    pub direct_paths: usize,
    /// `P̃` (TX-SIM → RIS) per RIS
    pub ris_inbound_paths: usize,
    /// `P̄` (RIS → RX-SIM) per RIS
    pub ris_outbound_paths: usize,
    /// `K`
    pub num_ris: usize,
    /// Delays are uniform on the integer taps `0..=max_delay`.
    pub max_delay: usize,
    /// Jakes Doppler `f = f_max cos θ`, `θ ~ U[-π, π]`.
    pub max_doppler: f64,
    /// Fixed direct-path delays (overrides the random draw when set).
    pub delays: Option<Vec<usize>>,
    /// Fixed direct-path Dopplers (overrides the random draw when set).
    pub dopplers: Option<Vec<f64>>,
    pub tx_array: ArrayKind,
    pub rx_array: ArrayKind,
}

impl Default for PathSampling {
    fn default() -> Self {
        Self {
            direct_paths: 5,
            ris_inbound_paths: 2,
            ris_outbound_paths: 2,
            num_ris: 0,
            max_delay: 14,
            max_doppler: 2.0,
            delays: None,
            dopplers: None,
            tx_array: ArrayKind::Upa,
            rx_array: ArrayKind::Upa,
        }
    }
}

impl PathSampling {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_doppler >= 0.0 && self.max_doppler.is_finite()) {
            return Err(Error::Config(format!(
                "max_doppler must be finite and non-negative, got {}",
                self.max_doppler
            )));
        }
        if let Some(d) = &self.delays {
            if d.len() != self.direct_paths {
                return Err(Error::Config(format!(
                    "{} fixed delays given for {} direct paths",
                    d.len(),
                    self.direct_paths
                )));
            }
        }
        if let Some(f) = &self.dopplers {
            if f.len() != self.direct_paths {
                return Err(Error::Config(format!(
                    "{} fixed Dopplers given for {} direct paths",
                    f.len(),
                    self.direct_paths
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("fixed Dopplers must be finite".into()));
            }
        }
        Ok(())
    }
}

fn draw_path<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &PathSampling,
    out_kind: ArrayKind,
    in_kind: ArrayKind,
) -> DdPath {
    let gain = complex_normal(rng, 1.0);
    let delay_taps = rng.random_range(0..=cfg.max_delay);
    let theta: f64 = rng.random_range(-PI..=PI);
    let doppler_norm = cfg.max_doppler * theta.cos();
    let (azimuth_out, elevation_out) = out_kind.draw(rng);
    let (azimuth_in, elevation_in) = in_kind.draw(rng);
    DdPath {
        gain,
        delay_taps,
        doppler_norm,
        angles: PathAngles {
            azimuth_in,
            elevation_in,
            azimuth_out,
            elevation_out,
        },
    }
}

/// Random path set: `CN(0,1)` gains, uniform integer delays, Jakes Dopplers
/// and uniform angles. Per-path power normalization (`1/√P` etc.) is applied
/// later in the spatial factors.
pub fn sample_paths<R: Rng + ?Sized>(rng: &mut R, cfg: &PathSampling) -> Result<PathSet> {
    cfg.validate()?;
    let mut direct: Vec<DdPath> = (0..cfg.direct_paths)
        .map(|_| draw_path(rng, cfg, cfg.tx_array, cfg.rx_array))
        .collect();
    if let Some(d) = &cfg.delays {
        for (p, &l) in direct.iter_mut().zip(d) {
            p.delay_taps = l;
        }
    }
    if let Some(f) = &cfg.dopplers {
        for (p, &v) in direct.iter_mut().zip(f) {
            p.doppler_norm = v;
        }
    }
    let ris = (0..cfg.num_ris)
        .map(|_| RisLegs {
            inbound: (0..cfg.ris_inbound_paths)
                .map(|_| draw_path(rng, cfg, cfg.tx_array, ArrayKind::Upa))
                .collect(),
            outbound: (0..cfg.ris_outbound_paths)
                .map(|_| draw_path(rng, cfg, ArrayKind::Upa, cfg.rx_array))
                .collect(),
        })
        .collect();
    Ok(PathSet { direct, ris })
}

/// Frame layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDims {
    /// Samples per frame `N`.
    pub n: usize,
    /// Streams `d_s`.
    pub d_s: usize,
    /// Cyclic prefix length `N_CP`.
    pub n_cp: usize,
}

impl FrameDims {
    pub fn new(n: usize, d_s: usize, n_cp: usize) -> Result<Self> {
        if n == 0 || d_s == 0 {
            return Err(Error::Config(format!("frame needs n >= 1 and d_s >= 1, got n={n}, d_s={d_s}")));
        }
        Ok(Self { n, d_s, n_cp })
    }

    /// `N_CP` set to the largest delay of `paths`.
    pub fn for_paths(n: usize, d_s: usize, paths: &PathSet) -> Result<Self> {
        Self::new(n, d_s, paths.max_delay())
    }

    pub fn len(&self) -> usize {
        self.n * self.d_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Phase picked up by wrapped samples when the prefix is stripped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum CpPhaseRule {
    /// Plain cyclic prefix: `φ_CP ≡ 0`.
    Zero,
    /// Chirp-periodic prefix: `φ_CP(n) = c₁ (N² - 2Nn)`.
    Chirp { c1: f64 },
}

impl CpPhaseRule {
    /// `φ_CP(m)` for frame length `n`.
    pub fn phase(&self, m: usize, n: usize) -> f64 {
        match *self {
            CpPhaseRule::Zero => 0.0,
            CpPhaseRule::Chirp { c1 } => {
                let (m, n) = (m as f64, n as f64);
                c1 * (n * n - 2.0 * n * m)
            }
        }
    }

    /// Diagonal of `Θ` for a path with delay `delay`: entry `i < delay` is
    /// `e^{-j2π φ_CP(delay - i)}`, the rest are ones.
    pub fn theta_diagonal(&self, delay: usize, n: usize) -> Vec<C64> {
        (0..n)
            .map(|i| {
                if i < delay {
                    cis(-2.0 * PI * self.phase(delay - i, n))
                } else {
                    C64::new(1.0, 0.0)
                }
            })
            .collect()
    }
}

/// `G = Θ Ω^f Π^ℓ` as a dense `N × N` matrix.
pub fn build_g(delay: usize, doppler: f64, n: usize, rule: CpPhaseRule) -> Result<CMatrix> {
    if delay >= n {
        return Err(Error::Config(format!("delay {delay} must be below the frame length {n}")));
    }
    if !doppler.is_finite() {
        return Err(Error::Config(format!("non-finite Doppler {doppler}")));
    }
    let theta = rule.theta_diagonal(delay, n);
    let mut g = CMatrix::zeros(n, n);
    for (i, th) in theta.iter().enumerate() {
        let col = (i + n - delay) % n;
        g[(i, col)] = th * cis(-2.0 * PI * doppler * i as f64 / n as f64);
    }
    Ok(g)
}

/// Either a SIM or a bare ULA at one end of the link.
#[derive(Debug, Clone)]
pub enum Frontend {
    Sim(SimStack),
    Bare(UlaSpec),
}

impl Frontend {
    pub fn num_antennas(&self) -> usize {
        match self {
            Frontend::Sim(s) => s.num_antennas(),
            Frontend::Bare(u) => u.num_elements,
        }
    }

    /// Size of the aperture the propagation paths see (`M` or `N_T`).
    pub fn aperture(&self) -> usize {
        match self {
            Frontend::Sim(s) => s.num_atoms(),
            Frontend::Bare(u) => u.num_elements,
        }
    }

    pub fn array_kind(&self) -> ArrayKind {
        match self {
            Frontend::Sim(_) => ArrayKind::Upa,
            Frontend::Bare(_) => ArrayKind::Ula,
        }
    }

    pub fn steering(&self, azimuth: f64, elevation: f64) -> CVector {
        match self {
            Frontend::Sim(s) => s.steering(azimuth, elevation),
            Frontend::Bare(u) => ula_response(u, azimuth).expect("validated ULA"),
        }
    }

    pub fn stack(&self) -> Option<&SimStack> {
        match self {
            Frontend::Sim(s) => Some(s),
            Frontend::Bare(_) => None,
        }
    }

    pub fn stack_mut(&mut self) -> Option<&mut SimStack> {
        match self {
            Frontend::Sim(s) => Some(s),
            Frontend::Bare(_) => None,
        }
    }

    /// TX: `R_TX^{1/2} Υ_T`; RX: `Υ_R R_RX^{1/2}`; identity without a SIM.
    fn coupling(&self) -> CMatrix {
        match self {
            Frontend::Sim(s) => {
                let t = sim_transfer(s);
                match s.side() {
                    Side::Tx => s.correlation_root() * t,
                    Side::Rx => t * s.correlation_root(),
                }
            }
            Frontend::Bare(u) => CMatrix::identity(u.num_elements, u.num_elements),
        }
    }
}

/// TX/RX front ends, ambient RIS panels and digital beamformers.
#[derive(Debug, Clone)]
pub struct Link {
    pub tx: Frontend,
    pub rx: Frontend,
    pub ris: Vec<RisPanel>,
    /// `V`, `N_T × d_s`
    pub precoder: CMatrix,
    /// `U`, `N_R × d_s`
    pub combiner: CMatrix,
}

impl Link {
    /// Link with truncated-identity beamformers.
    pub fn new(tx: Frontend, rx: Frontend, ris: Vec<RisPanel>) -> Result<Self> {
        if let Frontend::Sim(s) = &tx {
            if s.side() != Side::Tx {
                return Err(Error::Config("TX front end holds an RX-side SIM".into()));
            }
        }
        if let Frontend::Sim(s) = &rx {
            if s.side() != Side::Rx {
                return Err(Error::Config("RX front end holds a TX-side SIM".into()));
            }
        }
        let (nt, nr) = (tx.num_antennas(), rx.num_antennas());
        let ds = nt.min(nr);
        Ok(Self {
            tx,
            rx,
            ris,
            precoder: CMatrix::identity(nt, ds),
            combiner: CMatrix::identity(nr, ds),
        })
    }

    pub fn with_beamformers(mut self, precoder: CMatrix, combiner: CMatrix) -> Result<Self> {
        let (nt, nr) = (self.tx.num_antennas(), self.rx.num_antennas());
        if precoder.nrows() != nt || combiner.nrows() != nr || precoder.ncols() != combiner.ncols() {
            return Err(Error::dim(
                "Link::with_beamformers",
                format!("V: {nt}×d, U: {nr}×d"),
                format!("V: {:?}, U: {:?}", precoder.shape(), combiner.shape()),
            ));
        }
        self.precoder = precoder;
        self.combiner = combiner;
        Ok(self)
    }

    pub fn streams(&self) -> usize {
        self.precoder.ncols()
    }

    /// Cached outer factors `U^H C_R` and `C_T V` of every spatial factor.
    pub fn factors(&self) -> LinkFactors {
        LinkFactors {
            left: self.combiner.adjoint() * self.rx.coupling(),
            right: self.tx.coupling() * &self.precoder,
        }
    }
}

/// `U^H C_R` (`d_s × D_R`) and `C_T V` (`D_T × d_s`).
#[derive(Debug, Clone)]
pub struct LinkFactors {
    pub left: CMatrix,
    pub right: CMatrix,
}

/// `scale · U^H C_R · response · C_T V`, where `response` is the
/// `D_R × D_T` array response matrix of the path (`B_p`, or `B_p̄ Φ_k B_p̃`
/// for a RIS composite).
pub fn spatial_factor(factors: &LinkFactors, response: &CMatrix, scale: C64) -> Result<CMatrix> {
    if factors.left.ncols() != response.nrows() || response.ncols() != factors.right.nrows() {
        return Err(Error::dim(
            "spatial_factor",
            format!("{}×{}", factors.left.ncols(), factors.right.nrows()),
            format!("{}×{}", response.nrows(), response.ncols()),
        ));
    }
    Ok((&factors.left * response * &factors.right) * scale)
}

/// Which path a term of the effective channel came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermSource {
    Direct(usize),
    Ris(Composite),
}

/// One summand `Ȟ ⊗ G` of the effective channel.
#[derive(Debug, Clone)]
pub struct PathTerm {
    pub source: TermSource,
    pub delay_taps: usize,
    pub doppler_norm: f64,
    /// `Ȟ`, `d_s × d_s`
    pub spatial: CMatrix,
    /// `G` (or its waveform-domain conjugate), `N × N`
    pub g: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformTag {
    Td,
    Ofdm,
    Otfs,
    Afdm,
}

impl std::fmt::Display for WaveformTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            WaveformTag::Td => "td",
            WaveformTag::Ofdm => "ofdm",
            WaveformTag::Otfs => "otfs",
            WaveformTag::Afdm => "afdm",
        };
        f.write_str(s)
    }
}

/// `H̄ = Σ Ȟ ⊗ G` together with its summands.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub hbar: CMatrix,
    pub terms: Vec<PathTerm>,
    pub tag: WaveformTag,
    pub cp_rule: CpPhaseRule,
    pub dims: FrameDims,
}

impl EffectiveChannel {
    /// Sums the Kronecker products of `terms`.
    pub fn from_terms(terms: Vec<PathTerm>, tag: WaveformTag, cp_rule: CpPhaseRule, dims: FrameDims) -> Self {
        let len = dims.len();
        let mut hbar = CMatrix::zeros(len, len);
        for t in &terms {
            kron_accumulate(&mut hbar, &t.spatial, &t.g);
        }
        Self {
            hbar,
            terms,
            tag,
            cp_rule,
            dims,
        }
    }

    /// Block `(v, u)`: the `N × N` map from stream `u` to stream `v`.
    pub fn block(&self, v: usize, u: usize) -> CMatrix {
        let n = self.dims.n;
        self.hbar.view((v * n, u * n), (n, n)).into_owned()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_sq(&self.hbar).sqrt()
    }

    /// Multiplies `H̄` and every spatial factor by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.hbar *= C64::new(factor, 0.0);
        for t in &mut self.terms {
            t.spatial *= C64::new(factor, 0.0);
        }
    }

    /// Rescales so that `‖H̄‖_F² = target`.
    pub fn normalize_power(&mut self, target: f64) -> Result<f64> {
        let norm = self.frobenius_norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical(format!("cannot normalize a channel with norm {norm}")));
        }
        let factor = target.sqrt() / norm;
        self.scale(factor);
        Ok(factor)
    }
}

/// Spatial factors of every direct path and RIS composite.
pub fn spatial_factors(paths: &PathSet, link: &Link) -> Result<Vec<(TermSource, usize, f64, CMatrix)>> {
    if paths.ris.len() > link.ris.len() {
        return Err(Error::Config(format!(
            "path set references {} RIS panels but the link has {}",
            paths.ris.len(),
            link.ris.len()
        )));
    }
    let factors = link.factors();
    let (dt, dr) = (link.tx.aperture() as f64, link.rx.aperture() as f64);
    let mut out = Vec::new();

    let p = paths.direct.len() as f64;
    for (i, path) in paths.direct.iter().enumerate() {
        let a = &path.angles;
        let b_r = link.rx.steering(a.azimuth_in, a.elevation_in);
        let b_t = link.tx.steering(a.azimuth_out, a.elevation_out);
        let response = b_r * b_t.adjoint();
        let scale = path.gain * (dt * dr / p).sqrt();
        let h = spatial_factor(&factors, &response, scale)?;
        out.push((TermSource::Direct(i), path.delay_taps, path.doppler_norm, h));
    }

    for c in paths.composites() {
        let legs = &paths.ris[c.ris];
        let panel = &link.ris[c.ris];
        let (out_leg, in_leg) = (&legs.outbound[c.outbound], &legs.inbound[c.inbound]);
        let (pb, pt) = (legs.outbound.len() as f64, legs.inbound.len() as f64);
        let j = panel.num_atoms() as f64;

        let a = &out_leg.angles;
        let b_out = link.rx.steering(a.azimuth_in, a.elevation_in) * panel.steering(a.azimuth_out, a.elevation_out).adjoint();
        let a = &in_leg.angles;
        let b_in = panel.steering(a.azimuth_in, a.elevation_in) * link.tx.steering(a.azimuth_out, a.elevation_out).adjoint();
        let response = b_out * panel.phase_matrix()? * b_in;
        let scale = out_leg.gain * in_leg.gain * j * (dr * dt / (pb * pt)).sqrt();
        let h = spatial_factor(&factors, &response, scale)?;
        out.push((TermSource::Ris(c), c.delay_taps, c.doppler_norm, h));
    }
    Ok(out)
}

/// Time-domain effective channel.
pub fn assemble_hbar(paths: &PathSet, link: &Link, dims: FrameDims, rule: CpPhaseRule) -> Result<EffectiveChannel> {
    if link.streams() != dims.d_s {
        return Err(Error::dim("assemble_hbar", format!("{} streams", link.streams()), dims.d_s));
    }
    let max_delay = paths.max_delay();
    if max_delay > dims.n_cp {
        return Err(Error::Config(format!(
            "path delay {max_delay} exceeds the cyclic prefix length {}",
            dims.n_cp
        )));
    }
    let terms = spatial_factors(paths, link)?
        .into_iter()
        .map(|(source, delay, doppler, spatial)| {
            Ok(PathTerm {
                source,
                delay_taps: delay,
                doppler_norm: doppler,
                spatial,
                g: build_g(delay, doppler, dims.n, rule)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectiveChannel::from_terms(terms, WaveformTag::Td, rule, dims))
}

/// `r = H̄ s + w` with `w ~ CN(0, noise_var I)`.
pub fn apply_channel<R: Rng + ?Sized>(hbar: &CMatrix, s: &CVector, noise_var: f64, rng: &mut R) -> Result<CVector> {
    if hbar.ncols() != s.len() {
        return Err(Error::dim("apply_channel", hbar.ncols(), s.len()));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::Config(format!("noise variance must be non-negative, got {noise_var}")));
    }
    let mut r = hbar * s;
    if noise_var > 0.0 {
        for z in r.iter_mut() {
            *z += complex_normal(rng, noise_var);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::metasurface::SimLayerGeometry;
    use crate::rng::substream;

    fn unit_paths(spec: &[(usize, f64)]) -> PathSet {
        PathSet {
            direct: spec
                .iter()
                .map(|&(l, f)| DdPath {
                    gain: C64::new(1.0, 0.0),
                    delay_taps: l,
                    doppler_norm: f,
                    angles: PathAngles::default(),
                })
                .collect(),
            ris: vec![],
        }
    }

    fn siso_bare() -> Link {
        let u = UlaSpec::new(1).unwrap();
        Link::new(Frontend::Bare(u), Frontend::Bare(u), vec![]).unwrap()
    }

    #[test]
    fn g_identity_and_permutation() {
        let g = build_g(0, 0.0, 8, CpPhaseRule::Zero).unwrap();
        assert_eq!(g, CMatrix::identity(8, 8));
        let g = build_g(5, 0.0, 8, CpPhaseRule::Zero).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let e = if j == (i + 8 - 5) % 8 { 1.0 } else { 0.0 };
                assert_eq!(g[(i, j)], C64::new(e, 0.0));
            }
        }
        assert!(build_g(8, 0.0, 8, CpPhaseRule::Zero).is_err());
    }

    #[test]
    fn shift_powers_compose_cyclically() {
        let n = 7;
        let p = |l| build_g(l, 0.0, n, CpPhaseRule::Zero).unwrap();
        for (a, b) in [(2, 3), (4, 5), (6, 6)] {
            assert_eq!(p(a) * p(b), p((a + b) % n));
        }
        assert_eq!(p(1).pow(n as u32), CMatrix::identity(n, n));
    }

    #[test]
    fn g_matches_per_sample_evaluation() {
        let (n, l, f) = (256, 5, -2.0);
        let g = build_g(l, f, n, CpPhaseRule::Zero).unwrap();
        let s = CVector::from_fn(n, |i, _| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()));
        let r = &g * &s;
        for i in 0..n {
            let expected = cis(-2.0 * PI * f * i as f64 / n as f64) * s[(i + n - l) % n];
            assert!((r[i] - expected).norm() < 1e-12);
        }
        // one unit-modulus entry per row
        for i in 0..n {
            let nz: Vec<_> = g.row(i).iter().filter(|z| z.norm() > 0.0).cloned().collect();
            assert_eq!(nz.len(), 1);
            assert!((nz[0].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn g_is_unitary_for_fractional_doppler() {
        for rule in [CpPhaseRule::Zero, CpPhaseRule::Chirp { c1: 3.0 / 64.0 }] {
            let g = build_g(3, 0.37, 32, rule).unwrap();
            assert!((g.adjoint() * &g - CMatrix::identity(32, 32)).norm() < 1e-10);
        }
    }

    #[test]
    fn chirp_theta_matches_direct_formula() {
        let (n, c1, l) = (8usize, 1.0 / 16.0, 2usize);
        let th = CpPhaseRule::Chirp { c1 }.theta_diagonal(l, n);
        let nf = n as f64;
        let expected = [
            cis(-2.0 * PI * c1 * (nf * nf - 2.0 * nf * 2.0)),
            cis(-2.0 * PI * c1 * (nf * nf - 2.0 * nf * 1.0)),
        ];
        assert!((th[0] - expected[0]).norm() < 1e-12);
        assert!((th[1] - expected[1]).norm() < 1e-12);
        assert!(th[2..].iter().all(|z| *z == C64::new(1.0, 0.0)));
        // zero delay or zero c1: identity
        assert!(CpPhaseRule::Chirp { c1 }.theta_diagonal(0, n).iter().all(|z| *z == C64::new(1.0, 0.0)));
        assert!(CpPhaseRule::Chirp { c1: 0.0 }.theta_diagonal(5, n).iter().all(|z| (*z - 1.0).norm() < 1e-15));
    }

    #[test]
    fn single_clean_path_gives_identity() {
        let paths = unit_paths(&[(0, 0.0)]);
        let dims = FrameDims::new(16, 1, 0).unwrap();
        let h = assemble_hbar(&paths, &siso_bare(), dims, CpPhaseRule::Zero).unwrap();
        assert!((h.hbar.clone() - CMatrix::identity(16, 16)).norm() < 1e-14);
    }

    #[test]
    fn delay_beyond_prefix_is_rejected() {
        let paths = unit_paths(&[(4, 0.0)]);
        let dims = FrameDims::new(16, 1, 3).unwrap();
        assert!(matches!(
            assemble_hbar(&paths, &siso_bare(), dims, CpPhaseRule::Zero),
            Err(Error::Config(_))
        ));
    }

    fn mimo_sim_link(nt: usize, nr: usize, ris: usize) -> Link {
        let g = SimLayerGeometry::grid(2, 2);
        let tx = SimStack::new(Side::Tx, nt, 2, g).unwrap();
        let rx = SimStack::new(Side::Rx, nr, 2, g).unwrap();
        let panels = (0..ris).map(|_| RisPanel::new(2, 2).unwrap()).collect();
        Link::new(Frontend::Sim(tx), Frontend::Sim(rx), panels).unwrap()
    }

    #[test]
    fn kronecker_blocks_match_term_sums() {
        let link = mimo_sim_link(2, 2, 1);
        let cfg = PathSampling {
            direct_paths: 3,
            num_ris: 1,
            max_delay: 3,
            ..Default::default()
        };
        let paths = sample_paths(&mut substream(4, 0), &cfg).unwrap();
        let dims = FrameDims::for_paths(16, 2, &paths).unwrap();
        let h = assemble_hbar(&paths, &link, dims, CpPhaseRule::Zero).unwrap();
        assert_eq!(h.terms.len(), 3 + 4);
        for v in 0..2 {
            for u in 0..2 {
                let mut expected = CMatrix::zeros(16, 16);
                for t in &h.terms {
                    expected += &t.g * t.spatial[(v, u)];
                }
                assert!((h.block(v, u) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn no_ris_means_direct_only() {
        let link = mimo_sim_link(2, 2, 0);
        let cfg = PathSampling {
            direct_paths: 2,
            num_ris: 0,
            max_delay: 3,
            ..Default::default()
        };
        let paths = sample_paths(&mut substream(8, 0), &cfg).unwrap();
        assert!(paths.ris.is_empty());
        let dims = FrameDims::for_paths(8, 2, &paths).unwrap();
        let h = assemble_hbar(&paths, &link, dims, CpPhaseRule::Zero).unwrap();
        let mut direct = CMatrix::zeros(16, 16);
        for t in &h.terms {
            direct += kron(&t.spatial, &t.g);
        }
        assert!((h.hbar - direct).norm() < 1e-12);
    }

    #[test]
    fn rank_one_spatial_factor_norm() {
        let link = mimo_sim_link(2, 2, 0);
        let f = link.factors();
        let b_r = link.rx.steering(0.3, 1.0);
        let b_t = link.tx.steering(-0.4, 2.0);
        let scale = C64::new(0.7, -0.2);
        let h = spatial_factor(&f, &(&b_r * b_t.adjoint()), scale).unwrap();
        let expected = scale.norm() * (&f.left * &b_r).norm() * (b_t.adjoint() * &f.right).norm();
        assert!((h.norm() - expected).abs() < 1e-12 * expected.max(1.0));
        assert_eq!(h.clone().rank(1e-9 * h.norm()), 1);
    }

    #[test]
    fn bare_arrays_reduce_to_conventional_mimo() {
        let (nt, nr) = (2, 3);
        let tx = Frontend::Bare(UlaSpec::new(nt).unwrap());
        let rx = Frontend::Bare(UlaSpec::new(nr).unwrap());
        let link = Link::new(tx, rx, vec![]).unwrap();
        let cfg = PathSampling {
            direct_paths: 2,
            tx_array: ArrayKind::Ula,
            rx_array: ArrayKind::Ula,
            ..Default::default()
        };
        let paths = sample_paths(&mut substream(2, 0), &cfg).unwrap();
        let hs = spatial_factors(&paths, &link).unwrap();
        for (p, (_, _, _, h)) in paths.direct.iter().zip(&hs) {
            let a_r = ula_response(&UlaSpec::new(nr).unwrap(), p.angles.azimuth_in).unwrap();
            let a_t = ula_response(&UlaSpec::new(nt).unwrap(), p.angles.azimuth_out).unwrap();
            let full = (&a_r * a_t.adjoint()) * (p.gain * ((nt * nr) as f64 / 2.0).sqrt());
            // U^H (.) V with truncated identities keeps the leading 2×2 block
            let expected = full.view((0, 0), (2, 2)).into_owned();
            assert!((h - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn ris_phase_rotation_preserves_norm() {
        let mut link = mimo_sim_link(2, 2, 1);
        let cfg = PathSampling {
            direct_paths: 0,
            num_ris: 1,
            ris_inbound_paths: 1,
            ris_outbound_paths: 1,
            ..Default::default()
        };
        let paths = sample_paths(&mut substream(6, 0), &cfg).unwrap();
        let before = spatial_factors(&paths, &link).unwrap()[0].3.norm();
        link.ris[0].phases = vec![1.3; 4];
        let after = spatial_factors(&paths, &link).unwrap()[0].3.norm();
        assert!((before - after).abs() < 1e-12 * before);
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let cfg = PathSampling {
            direct_paths: 6,
            num_ris: 2,
            max_delay: 7,
            max_doppler: 1.5,
            ..Default::default()
        };
        let a = sample_paths(&mut substream(1, 2), &cfg).unwrap();
        let b = sample_paths(&mut substream(1, 2), &cfg).unwrap();
        assert_eq!(a, b);
        for p in a.direct.iter().chain(a.ris.iter().flat_map(|l| l.inbound.iter().chain(&l.outbound))) {
            assert!(p.delay_taps <= 7);
            assert!(p.doppler_norm.abs() <= 1.5);
            assert!((-PI / 2.0..=PI / 2.0).contains(&p.angles.azimuth_out));
            assert!((0.0..=PI).contains(&p.angles.elevation_in));
        }
    }

    #[test]
    fn degenerate_sampling() {
        let cfg = PathSampling {
            direct_paths: 1,
            max_delay: 0,
            max_doppler: 0.0,
            ..Default::default()
        };
        let p = sample_paths(&mut substream(0, 0), &cfg).unwrap();
        assert_eq!(p.direct.len(), 1);
        assert_eq!(p.direct[0].delay_taps, 0);
        assert_eq!(p.direct[0].doppler_norm, 0.0);
    }

    #[test]
    fn fixed_delays_and_dopplers_override() {
        let cfg = PathSampling {
            direct_paths: 3,
            delays: Some(vec![0, 5, 14]),
            dopplers: Some(vec![0.0, -2.0, 1.0]),
            ..Default::default()
        };
        let p = sample_paths(&mut substream(0, 0), &cfg).unwrap();
        let dl: Vec<_> = p.direct.iter().map(|d| (d.delay_taps, d.doppler_norm)).collect();
        assert_eq!(dl, vec![(0, 0.0), (5, -2.0), (14, 1.0)]);
        let bad = PathSampling {
            delays: Some(vec![1]),
            ..cfg
        };
        assert!(sample_paths(&mut substream(0, 0), &bad).is_err());
    }

    #[test]
    fn noiseless_identity_channel_passes_signal() {
        let s = CVector::from_fn(8, |i, _| C64::new(i as f64, -1.0));
        let r = apply_channel(&CMatrix::identity(8, 8), &s, 0.0, &mut substream(0, 0)).unwrap();
        assert_eq!(r, s);
        assert!(apply_channel(&CMatrix::identity(8, 8), &s, -1.0, &mut substream(0, 0)).is_err());
    }

    #[test]
    fn noise_is_reproducible_and_has_the_right_power() {
        let h = CMatrix::identity(4, 4);
        let s = CVector::zeros(4);
        let a = apply_channel(&h, &s, 0.5, &mut substream(3, 0)).unwrap();
        let b = apply_channel(&h, &s, 0.5, &mut substream(3, 0)).unwrap();
        assert_eq!(a, b);

        // |w|² per entry is exponential with mean σ² and std σ²
        let (var, draws) = (0.5, 10_000);
        let mut rng = substream(3, 1);
        let total: f64 = (0..draws / 4)
            .map(|_| apply_channel(&h, &s, var, &mut rng).unwrap().norm_squared())
            .sum();
        let mean = total / draws as f64;
        let sigma = var / (draws as f64).sqrt();
        assert!((mean - var).abs() < 3.0 * sigma, "mean {mean}");
    }
}
