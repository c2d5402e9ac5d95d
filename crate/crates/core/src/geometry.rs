//! Steering vectors for uniform linear and planar arrays.
//!
//! All lengths are in wavelengths and all angles in radians. Element indices
//! are 0-based, so element `n` carries the phase factor of the `n`-th power
//! of the inter-element progression.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CVector};

/// Uniform linear array of `num_elements` antennas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UlaSpec {
    pub num_elements: usize,
    /// Inter-element spacing `d/λ`.
    #[serde(default = "half_wavelength")]
    pub element_spacing: f64,
}

/// Uniform planar array in the x-z plane with `nx * nz` elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaSpec {
    pub nx: usize,
    pub nz: usize,
    #[serde(default = "half_wavelength")]
    pub dx: f64,
    #[serde(default = "half_wavelength")]
    pub dz: f64,
}

fn half_wavelength() -> f64 {
    0.5
}

/// Departure (`out`) and arrival (`in`) directions of one propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathAngles {
    pub azimuth_in: f64,
    pub elevation_in: f64,
    pub azimuth_out: f64,
    pub elevation_out: f64,
}

impl UlaSpec {
    pub fn new(num_elements: usize) -> Result<Self> {
        Self::with_spacing(num_elements, 0.5)
    }

    pub fn with_spacing(num_elements: usize, element_spacing: f64) -> Result<Self> {
        let spec = Self {
            num_elements,
            element_spacing,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements == 0 {
            return Err(Error::Config("ULA needs at least one element".into()));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::Config(format!(
                "ULA spacing must be positive, got {}",
                self.element_spacing
            )));
        }
        Ok(())
    }
}

impl UpaSpec {
    pub fn new(nx: usize, nz: usize) -> Result<Self> {
        Self::with_spacing(nx, nz, 0.5, 0.5)
    }

    pub fn with_spacing(nx: usize, nz: usize, dx: f64, dz: f64) -> Result<Self> {
        let spec = Self { nx, nz, dx, dz };
        spec.validate()?;
        Ok(spec)
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.nz
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::Config(format!(
                "UPA needs at least one element per axis, got {}x{}",
                self.nx, self.nz
            )));
        }
        for (name, v) in [("dx", self.dx), ("dz", self.dz)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("UPA {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `a_n = e^{-j 2π (d/λ) n sin(angle)} / √A`.
pub fn ula_response(spec: &UlaSpec, angle: f64) -> Result<CVector> {
    spec.validate()?;
    let a = spec.num_elements;
    let norm = 1.0 / (a as f64).sqrt();
    let step = -2.0 * PI * spec.element_spacing * angle.sin();
    Ok(CVector::from_fn(a, |n, _| cis(step * n as f64) * norm))
}

/// Planar steering vector `b_x ⊗ b_z / √(B_x B_z)`; element `ix * nz + iz`
/// carries `e^{-j2π(dx·ix·sinφ·sinθ + dz·iz·cosθ)}`.
pub fn upa_response(spec: &UpaSpec, azimuth: f64, elevation: f64) -> Result<CVector> {
    spec.validate()?;
    let norm = 1.0 / (spec.num_elements() as f64).sqrt();
    let kx = -2.0 * PI * spec.dx * azimuth.sin() * elevation.sin();
    let kz = -2.0 * PI * spec.dz * elevation.cos();
    let nz = spec.nz;
    Ok(CVector::from_fn(spec.num_elements(), |m, _| {
        let (ix, iz) = (m / nz, m % nz);
        cis(kx * ix as f64 + kz * iz as f64) * norm
    }))
}
