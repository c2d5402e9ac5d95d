//! Stacked intelligent metasurfaces (SIMs) and reflective RIS panels.
//!
//! Coordinates are in wavelengths. Antennas sit on the x-axis at `y = 0`;
//! SIM layer `ℓ` (0-based, innermost first) is the plane
//! `y = antenna_distance + ℓ * layer_spacing`, with its meta-atoms on an
//! `mx × mz` grid centered on the y-axis. Atom `ix * mz + iz` matches the
//! element ordering of [`crate::geometry::upa_response`].

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{upa_response, UpaSpec};
use crate::linalg::{cis, diag, symmetric_psd_sqrt, to_complex, CMatrix, CVector, C64, J};

/// Which end of the link a SIM is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Tx,
    Rx,
}

/// Layer layout shared by every layer of a stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimLayerGeometry {
    pub mx: usize,
    pub mz: usize,
    /// Distance between adjacent layers.
    pub layer_spacing: f64,
    /// Pitch of the meta-atom grid along x and z.
    pub atom_spacing: f64,
    /// Area occupied by one meta-atom (ρ).
    pub atom_area: f64,
    /// Distance from the antenna array to the innermost layer.
    pub antenna_distance: f64,
    /// Pitch of the feeding antenna ULA.
    pub antenna_spacing: f64,
    /// Force `cos ε = 1` for every pair instead of the geometric angle.
    pub normal_incidence: bool,
}

impl Default for SimLayerGeometry {
    fn default() -> Self {
        Self {
            mx: 10,
            mz: 10,
            layer_spacing: 5.0,
            atom_spacing: 0.5,
            atom_area: 0.25,
            antenna_distance: 5.0,
            antenna_spacing: 0.5,
            normal_incidence: false,
        }
    }
}

impl SimLayerGeometry {
    pub fn grid(mx: usize, mz: usize) -> Self {
        Self {
            mx,
            mz,
            ..Self::default()
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.mx * self.mz
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_atoms() == 0 {
            return Err(Error::Config(format!(
                "SIM layer needs at least one meta-atom, got {}x{}",
                self.mx, self.mz
            )));
        }
        for (name, v) in [
            ("layer_spacing", self.layer_spacing),
            ("atom_spacing", self.atom_spacing),
            ("atom_area", self.atom_area),
            ("antenna_distance", self.antenna_distance),
            ("antenna_spacing", self.antenna_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("SIM {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Planar-array description of one layer, used for steering vectors.
    pub fn upa(&self) -> UpaSpec {
        UpaSpec {
            nx: self.mx,
            nz: self.mz,
            dx: self.atom_spacing,
            dz: self.atom_spacing,
        }
    }

    pub fn layer_layout(&self, layer: usize) -> Layout {
        Layout::Grid {
            mx: self.mx,
            mz: self.mz,
            pitch: self.atom_spacing,
            y: self.antenna_distance + layer as f64 * self.layer_spacing,
        }
    }

    pub fn antenna_layout(&self, num_antennas: usize) -> Layout {
        Layout::Ula {
            n: num_antennas,
            pitch: self.antenna_spacing,
            y: 0.0,
        }
    }
}

/// A set of radiating points lying in a plane `y = const`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// Centered `mx × mz` grid in the x-z plane.
    Grid { mx: usize, mz: usize, pitch: f64, y: f64 },
    /// Centered line of `n` points along x.
    Ula { n: usize, pitch: f64, y: f64 },
}

impl Layout {
    pub fn positions(&self) -> Vec<[f64; 3]> {
        match *self {
            Layout::Grid { mx, mz, pitch, y } => {
                let cx = (mx as f64 - 1.0) / 2.0;
                let cz = (mz as f64 - 1.0) / 2.0;
                (0..mx * mz)
                    .map(|m| {
                        let (ix, iz) = (m / mz, m % mz);
                        [(ix as f64 - cx) * pitch, y, (iz as f64 - cz) * pitch]
                    })
                    .collect()
            }
            Layout::Ula { n, pitch, y } => {
                let c = (n as f64 - 1.0) / 2.0;
                (0..n).map(|i| [(i as f64 - c) * pitch, y, 0.0]).collect()
            }
        }
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Rayleigh-Sommerfeld coefficient between two points at distance `d` whose
/// propagation direction makes angle `ε` with the source-plane normal.
pub fn diffraction_coefficient(atom_area: f64, cos_eps: f64, d: f64) -> C64 {
    let amp = atom_area * cos_eps / d;
    (C64::new(1.0 / (2.0 * PI * d), 0.0) - J) * cis(2.0 * PI * d) * amp
}

/// Diffraction matrix with one row per destination point and one column per
/// source point.
pub fn diffraction_matrix(
    src: &Layout,
    dst: &Layout,
    atom_area: f64,
    normal_incidence: bool,
) -> Result<CMatrix> {
    let src = src.positions();
    let dst = dst.positions();
    let mut out = CMatrix::zeros(dst.len(), src.len());
    for (i, p) in dst.iter().enumerate() {
        for (j, s) in src.iter().enumerate() {
            let d = distance(p, s);
            if d <= 1e-12 {
                return Err(Error::Geometry(format!(
                    "source {j} and destination {i} coincide at {s:?}"
                )));
            }
            let cos_eps = if normal_incidence {
                1.0
            } else {
                (p[1] - s[1]).abs() / d
            };
            out[(i, j)] = diffraction_coefficient(atom_area, cos_eps, d);
        }
    }
    Ok(out)
}

/// Diagonal matrix `diag(e^{j phases})`.
pub fn phase_layer_matrix(phases: &[f64]) -> Result<CMatrix> {
    Ok(diag(&phasors(phases)?))
}

fn phasors(phases: &[f64]) -> Result<Vec<C64>> {
    phases
        .iter()
        .map(|&p| {
            if p.is_finite() {
                Ok(cis(p))
            } else {
                Err(Error::Config(format!("non-finite phase {p}")))
            }
        })
        .collect()
}

/// `sinc(x) = sin(πx) / (πx)`
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Spatial correlation `[R]_{m,m'} = sinc(2 d_{m,m'})` over the meta-atoms of
/// one layer.
pub fn correlation_matrix(geometry: &SimLayerGeometry) -> DMatrix<f64> {
    let pos = geometry.layer_layout(0).positions();
    let m = pos.len();
    DMatrix::from_fn(m, m, |i, j| sinc(2.0 * distance(&pos[i], &pos[j])))
}

/// Principal square root of the layer correlation matrix.
pub fn correlation_root(geometry: &SimLayerGeometry) -> Result<CMatrix> {
    geometry.validate()?;
    let r = correlation_matrix(geometry);
    let (root, clamped) = symmetric_psd_sqrt(&r);
    if clamped > 0 {
        warn!("correlation matrix had {clamped} negative eigenvalue(s); clamped to zero");
    }
    Ok(to_complex(&root))
}

/// A stack of transmissive metasurface layers in front of a ULA.
///
/// For the TX side `diffraction[0]` is `M × N_T` and maps antennas onto the
/// innermost layer, later entries map layer `q-1` onto layer `q`. For the RX
/// side `diffraction[0]` is `N_R × M̃` (innermost layer onto antennas) and
/// `diffraction[q]` maps layer `q` onto layer `q-1`.
#[derive(Debug, Clone)]
pub struct SimStack {
    side: Side,
    num_antennas: usize,
    geometry: SimLayerGeometry,
    phases: Vec<Vec<f64>>,
    diffraction: Vec<CMatrix>,
    correlation_root: CMatrix,
}

impl SimStack {
    /// Builds a stack with all phases at zero.
    pub fn new(
        side: Side,
        num_antennas: usize,
        num_layers: usize,
        geometry: SimLayerGeometry,
    ) -> Result<Self> {
        geometry.validate()?;
        if num_layers == 0 {
            return Err(Error::Config("a SIM needs at least one layer".into()));
        }
        if num_antennas == 0 {
            return Err(Error::Config("a SIM needs at least one antenna".into()));
        }
        let (area, normal) = (geometry.atom_area, geometry.normal_incidence);
        let antennas = geometry.antenna_layout(num_antennas);
        let mut diffraction = Vec::with_capacity(num_layers);
        for q in 0..num_layers {
            let layer = geometry.layer_layout(q);
            let prev = if q == 0 {
                antennas
            } else {
                geometry.layer_layout(q - 1)
            };
            let mat = match side {
                Side::Tx => diffraction_matrix(&prev, &layer, area, normal)?,
                Side::Rx => diffraction_matrix(&layer, &prev, area, normal)?,
            };
            diffraction.push(mat);
        }
        Ok(Self {
            side,
            num_antennas,
            geometry,
            phases: vec![vec![0.0; geometry.num_atoms()]; num_layers],
            diffraction,
            correlation_root: correlation_root(&geometry)?,
        })
    }

    /// Assembles a stack from explicit parts; shapes are checked.
    pub fn from_parts(
        side: Side,
        geometry: SimLayerGeometry,
        phases: Vec<Vec<f64>>,
        diffraction: Vec<CMatrix>,
        correlation_root: CMatrix,
    ) -> Result<Self> {
        let m = geometry.num_atoms();
        if diffraction.is_empty() || diffraction.len() != phases.len() {
            return Err(Error::dim(
                "SimStack::from_parts",
                format!("{} diffraction matrices", phases.len()),
                diffraction.len(),
            ));
        }
        let num_antennas = match side {
            Side::Tx => diffraction[0].ncols(),
            Side::Rx => diffraction[0].nrows(),
        };
        let first_ok = match side {
            Side::Tx => diffraction[0].nrows() == m,
            Side::Rx => diffraction[0].ncols() == m,
        };
        if !first_ok || diffraction[1..].iter().any(|d| d.shape() != (m, m)) {
            return Err(Error::dim("SimStack::from_parts", format!("{m} atoms per layer"), "mismatched layer shape"));
        }
        if phases.iter().any(|p| p.len() != m) || correlation_root.shape() != (m, m) {
            return Err(Error::dim("SimStack::from_parts", format!("{m} atoms per layer"), "mismatched phase/correlation shape"));
        }
        Ok(Self {
            side,
            num_antennas,
            geometry,
            phases,
            diffraction,
            correlation_root,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn num_layers(&self) -> usize {
        self.phases.len()
    }

    pub fn num_atoms(&self) -> usize {
        self.geometry.num_atoms()
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn geometry(&self) -> &SimLayerGeometry {
        &self.geometry
    }

    pub fn diffraction(&self, layer: usize) -> &CMatrix {
        &self.diffraction[layer]
    }

    pub fn correlation_root(&self) -> &CMatrix {
        &self.correlation_root
    }

    pub fn phases(&self, layer: usize) -> &[f64] {
        &self.phases[layer]
    }

    pub fn all_phases(&self) -> &[Vec<f64>] {
        &self.phases
    }

    pub fn set_phases(&mut self, layer: usize, phases: &[f64]) -> Result<()> {
        if layer >= self.num_layers() {
            return Err(Error::Config(format!(
                "layer {layer} out of range for a {}-layer SIM",
                self.num_layers()
            )));
        }
        if phases.len() != self.num_atoms() {
            return Err(Error::dim("SimStack::set_phases", self.num_atoms(), phases.len()));
        }
        phasors(phases)?;
        self.phases[layer].copy_from_slice(phases);
        Ok(())
    }

    pub fn set_all_phases(&mut self, phases: &[Vec<f64>]) -> Result<()> {
        if phases.len() != self.num_layers() {
            return Err(Error::dim("SimStack::set_all_phases", self.num_layers(), phases.len()));
        }
        for (q, p) in phases.iter().enumerate() {
            self.set_phases(q, p)?;
        }
        Ok(())
    }

    /// `e^{j ζ}` for every atom of `layer`.
    pub fn layer_phasors(&self, layer: usize) -> Vec<C64> {
        self.phases[layer].iter().map(|&p| cis(p)).collect()
    }

    /// Phase matrix (`Ψ_q` or `Δ_q`) of one layer.
    pub fn phase_matrix(&self, layer: usize) -> CMatrix {
        diag(&self.layer_phasors(layer))
    }

    /// Steering vector over the outermost layer.
    pub fn steering(&self, azimuth: f64, elevation: f64) -> CVector {
        upa_response(&self.geometry.upa(), azimuth, elevation)
            .expect("validated geometry yields a valid UPA")
    }
}

/// Scale the rows of `m` by `d`, i.e. `diag(d) * m`.
pub(crate) fn scale_rows(m: &mut CMatrix, d: &[C64]) {
    for (i, s) in d.iter().enumerate() {
        let mut row = m.row_mut(i);
        row *= *s;
    }
}

/// Scale the columns of `m` by `d`, i.e. `m * diag(d)`.
pub(crate) fn scale_cols(m: &mut CMatrix, d: &[C64]) {
    for (j, s) in d.iter().enumerate() {
        let mut col = m.column_mut(j);
        col *= *s;
    }
}

/// Overall SIM propagation matrix.
///
/// TX: `Ψ_Q Γ_Q ⋯ Ψ_1 Γ_1` (`M × N_T`). RX: `Ξ_1 Δ_1 ⋯ Ξ_Q̃ Δ_Q̃` (`N_R × M̃`).
pub fn sim_transfer(stack: &SimStack) -> CMatrix {
    match stack.side {
        Side::Tx => {
            let mut x = stack.diffraction[0].clone();
            scale_rows(&mut x, &stack.layer_phasors(0));
            for q in 1..stack.num_layers() {
                x = &stack.diffraction[q] * x;
                scale_rows(&mut x, &stack.layer_phasors(q));
            }
            x
        }
        Side::Rx => {
            let mut x = stack.diffraction[0].clone();
            scale_cols(&mut x, &stack.layer_phasors(0));
            for q in 1..stack.num_layers() {
                x *= &stack.diffraction[q];
                scale_cols(&mut x, &stack.layer_phasors(q));
            }
            x
        }
    }
}

/// A reflective RIS with a `jx × jz` grid of meta-atoms at half-wavelength
/// pitch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisPanel {
    pub jx: usize,
    pub jz: usize,
    pub phases: Vec<f64>,
}

impl RisPanel {
    pub fn new(jx: usize, jz: usize) -> Result<Self> {
        if jx * jz == 0 {
            return Err(Error::Config(format!("RIS needs at least one element, got {jx}x{jz}")));
        }
        Ok(Self {
            jx,
            jz,
            phases: vec![0.0; jx * jz],
        })
    }

    pub fn num_atoms(&self) -> usize {
        self.jx * self.jz
    }

    pub fn upa(&self) -> UpaSpec {
        UpaSpec {
            nx: self.jx,
            nz: self.jz,
            dx: 0.5,
            dz: 0.5,
        }
    }

    /// `Φ_k`
    pub fn phase_matrix(&self) -> Result<CMatrix> {
        if self.phases.len() != self.num_atoms() {
            return Err(Error::dim("RisPanel::phase_matrix", self.num_atoms(), self.phases.len()));
        }
        phase_layer_matrix(&self.phases)
    }

    pub fn steering(&self, azimuth: f64, elevation: f64) -> CVector {
        upa_response(&self.upa(), azimuth, elevation).expect("validated RIS grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_sq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy_geometry() -> SimLayerGeometry {
        SimLayerGeometry::grid(2, 2)
    }

    #[test]
    fn phase_layer_trivial_cases() {
        let m = phase_layer_matrix(&[0.0; 4]).unwrap();
        assert_eq!(m, CMatrix::identity(4, 4));
        let m = phase_layer_matrix(&[PI, 0.0]).unwrap();
        assert!((m[(0, 0)] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((m[(1, 1)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(phase_layer_matrix(&[f64::NAN]).is_err());
    }

    #[test]
    fn phase_layer_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phases: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let m = phase_layer_matrix(&phases).unwrap();
        for i in 0..16 {
            assert!((m[(i, i)].norm() - 1.0).abs() < 1e-14);
        }
        assert!((m.adjoint() * &m - CMatrix::identity(16, 16)).norm() < 1e-13);
    }

    #[test]
    fn on_axis_coefficient_matches_scalar_formula() {
        // two atoms 5λ apart on-axis: (1/4)/5 * (1/(10π) - j) * e^{j10π}
        let src = Layout::Grid { mx: 1, mz: 1, pitch: 0.5, y: 0.0 };
        let dst = Layout::Grid { mx: 1, mz: 1, pitch: 0.5, y: 5.0 };
        let g = diffraction_matrix(&src, &dst, 0.25, false).unwrap();
        let expected = C64::new(0.25 / 5.0 / (10.0 * PI), -0.25 / 5.0);
        assert!((g[(0, 0)] - expected).norm() < 1e-14, "{}", g[(0, 0)]);
    }

    #[test]
    fn coefficient_magnitude_decreases_with_distance() {
        let mut last = f64::INFINITY;
        for i in 0..200 {
            let d = 1.0 + i as f64 * 0.05;
            let mag = diffraction_coefficient(0.25, 1.0, d).norm();
            assert!(mag < last);
            last = mag;
        }
    }

    #[test]
    fn coincident_points_are_rejected() {
        let l = Layout::Grid { mx: 2, mz: 2, pitch: 0.5, y: 1.0 };
        assert!(matches!(diffraction_matrix(&l, &l, 0.25, false), Err(Error::Geometry(_))));
    }

    #[test]
    fn full_size_layer_matrix_is_finite() {
        let g = SimLayerGeometry::default();
        let m = diffraction_matrix(&g.layer_layout(0), &g.layer_layout(1), g.atom_area, false).unwrap();
        assert_eq!(m.shape(), (100, 100));
        assert!(m.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn normal_incidence_flag_drops_cosine() {
        let g = SimLayerGeometry::default();
        let exact = diffraction_matrix(&g.layer_layout(0), &g.layer_layout(1), 0.25, false).unwrap();
        let forced = diffraction_matrix(&g.layer_layout(0), &g.layer_layout(1), 0.25, true).unwrap();
        // broadside-aligned pairs agree, oblique ones differ
        assert!((exact[(0, 0)] - forced[(0, 0)]).norm() < 1e-15);
        assert!(forced[(0, 99)].norm() > exact[(0, 99)].norm());
    }

    #[test]
    fn transfer_shapes() {
        for q in 1..4 {
            let tx = SimStack::new(Side::Tx, 3, q, toy_geometry()).unwrap();
            assert_eq!(sim_transfer(&tx).shape(), (4, 3));
            let rx = SimStack::new(Side::Rx, 2, q, toy_geometry()).unwrap();
            assert_eq!(sim_transfer(&rx).shape(), (2, 4));
        }
    }

    #[test]
    fn single_layer_identity_phases_is_first_diffraction() {
        let tx = SimStack::new(Side::Tx, 2, 1, toy_geometry()).unwrap();
        assert_eq!(sim_transfer(&tx), *tx.diffraction(0));
    }

    #[test]
    fn two_layer_transfer_matches_explicit_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for side in [Side::Tx, Side::Rx] {
            let mut s = SimStack::new(side, 2, 2, toy_geometry()).unwrap();
            for q in 0..2 {
                let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
                s.set_phases(q, &p).unwrap();
            }
            let (p0, p1) = (s.phase_matrix(0), s.phase_matrix(1));
            let (d0, d1) = (s.diffraction(0), s.diffraction(1));
            let explicit = match side {
                Side::Tx => &p1 * d1 * &p0 * d0,
                Side::Rx => d0 * &p0 * d1 * &p1,
            };
            assert!((sim_transfer(&s) - explicit).norm() < 1e-14);
        }
    }

    #[test]
    fn single_atom_perturbation_is_rank_one() {
        // Changing one phase on layer q of a TX stack changes Υ_T by
        // (e^{jδ}-1) e^{jζ} L_q e_m s_m^T, a rank-one update.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = SimStack::new(Side::Tx, 2, 3, toy_geometry()).unwrap();
        for q in 0..3 {
            let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            s.set_phases(q, &p).unwrap();
        }
        let base = sim_transfer(&s);
        let (q, m, delta) = (1, 2, 1e-3);
        let mut p = s.phases(q).to_vec();
        p[m] += delta;
        let mut t = s.clone();
        t.set_phases(q, &p).unwrap();
        let diff = sim_transfer(&t) - &base;

        let left = s.phase_matrix(2) * s.diffraction(2);
        let right = s.diffraction(1) * s.phase_matrix(0) * s.diffraction(0);
        let factor = (cis(delta) - 1.0) * cis(s.phases(q)[m]);
        let predicted = left.column(m) * right.row(m) * factor;
        assert!((diff - predicted).norm() < 1e-14);
    }

    #[test]
    fn correlation_trivial_cases() {
        let one = correlation_root(&SimLayerGeometry::grid(1, 1)).unwrap();
        assert!((one[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        let r = correlation_matrix(&SimLayerGeometry::grid(2, 1));
        assert!((r[(0, 1)]).abs() < 1e-15);
        assert_eq!(r[(0, 0)], 1.0);
    }

    #[test]
    fn half_wavelength_grid_correlation_structure() {
        let g = SimLayerGeometry::default();
        let r = correlation_matrix(&g);
        // axis-aligned neighbours sit on integer sinc arguments, diagonal ones do not
        assert!(r[(0, 1)].abs() < 1e-15);
        assert!(r[(0, 10)].abs() < 1e-15);
        let diag_neighbour = r[(0, 11)];
        let expected = sinc(2f64.sqrt());
        assert!((diag_neighbour - expected).abs() < 1e-14);
        assert!(diag_neighbour.abs() > 0.1);
        assert!(r.diagonal().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn correlation_root_squares_back() {
        let g = SimLayerGeometry::default();
        let r = to_complex(&correlation_matrix(&g));
        let s = correlation_root(&g).unwrap();
        let err = frobenius_sq(&(&s * &s - &r)).sqrt();
        assert!(err <= 1e-8 * frobenius_sq(&r).sqrt(), "err {err}");
        assert!((&s - s.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn ris_phase_matrix_unit_modulus() {
        let mut ris = RisPanel::new(2, 3).unwrap();
        ris.phases = vec![0.1, 0.2, 0.3, 4.0, 5.0, 6.0];
        let phi = ris.phase_matrix().unwrap();
        assert!(phi.diagonal().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert!(RisPanel::new(0, 3).is_err());
    }
}
