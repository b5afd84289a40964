//! Plate and fluid value types plus the closed-form quantities derived from them.
//!
//! Everything here is in SI units. Design-file units (GPa, %, mm) only
//! appear in [`PlateFile`], which is the JSON form read from disk.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic, simply supported rectangular plate.
///
/// Construct through [`PlateSpec::new`], which enforces the physical bounds,
/// so every value of this type is a valid plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateSpec {
    density: f64,
    youngs_modulus: f64,
    poisson_ratio: f64,
    loss_factor: f64,
    thickness: f64,
    width: f64,
    length: f64,
}

impl PlateSpec {
    /// `density` kg/m³, `youngs_modulus` Pa, `loss_factor` as a fraction,
    /// `thickness`, `width` (a) and `length` (b) in metres.
    pub fn new(
        density: f64,
        youngs_modulus: f64,
        poisson_ratio: f64,
        loss_factor: f64,
        thickness: f64,
        width: f64,
        length: f64,
    ) -> Result<Self> {
        positive("rho", density)?;
        positive("E", youngs_modulus)?;
        positive("h", thickness)?;
        positive("a", width)?;
        positive("b", length)?;
        if !(0.0..0.5).contains(&poisson_ratio) {
            return Err(Error::validation(
                "nu",
                format!("{poisson_ratio} outside [0, 0.5)"),
            ));
        }
        if !(loss_factor >= 0.0 && loss_factor.is_finite()) {
            return Err(Error::validation(
                "eta",
                format!("{loss_factor} must be finite and >= 0"),
            ));
        }
        Ok(PlateSpec {
            density,
            youngs_modulus,
            poisson_ratio,
            loss_factor,
            thickness,
            width,
            length,
        })
    }

    pub fn density(&self) -> f64 {
        self.density
    }
    pub fn youngs_modulus(&self) -> f64 {
        self.youngs_modulus
    }
    pub fn poisson_ratio(&self) -> f64 {
        self.poisson_ratio
    }
    pub fn loss_factor(&self) -> f64 {
        self.loss_factor
    }
    pub fn thickness(&self) -> f64 {
        self.thickness
    }
    pub fn width(&self) -> f64 {
        self.width
    }
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn with_loss_factor(&self, loss_factor: f64) -> Result<Self> {
        let p = *self;
        Self::new(
            p.density,
            p.youngs_modulus,
            p.poisson_ratio,
            loss_factor,
            p.thickness,
            p.width,
            p.length,
        )
    }

    pub fn with_dimensions(&self, width: f64, length: f64) -> Result<Self> {
        let p = *self;
        Self::new(
            p.density,
            p.youngs_modulus,
            p.poisson_ratio,
            p.loss_factor,
            p.thickness,
            width,
            length,
        )
    }

    pub fn with_density(&self, density: f64) -> Result<Self> {
        let p = *self;
        Self::new(
            density,
            p.youngs_modulus,
            p.poisson_ratio,
            p.loss_factor,
            p.thickness,
            p.width,
            p.length,
        )
    }

    pub fn with_youngs_modulus(&self, youngs_modulus: f64) -> Result<Self> {
        let p = *self;
        Self::new(
            p.density,
            youngs_modulus,
            p.poisson_ratio,
            p.loss_factor,
            p.thickness,
            p.width,
            p.length,
        )
    }

    /// Surface S = a·b (m²).
    pub fn area(&self) -> f64 {
        self.width * self.length
    }

    /// Complex bending stiffness D = E h³ / (12 (1 − ν²)) · (1 + iη), in N·m.
    pub fn bending_stiffness(&self) -> Complex64 {
        Complex64::new(1.0, self.loss_factor) * self.bending_stiffness_real()
    }

    /// Real part D_R of the bending stiffness.
    pub fn bending_stiffness_real(&self) -> f64 {
        self.youngs_modulus * self.thickness.powi(3)
            / (12.0 * (1.0 - self.poisson_ratio * self.poisson_ratio))
    }

    /// m = ρ h (kg/m²).
    pub fn surface_mass_density(&self) -> f64 {
        self.density * self.thickness
    }

    /// R = D_R / (m a⁴ b⁴).
    pub fn resonance_coefficient(&self) -> f64 {
        let ab = self.width * self.length;
        self.bending_stiffness_real() / (self.surface_mass_density() * ab.powi(4))
    }

    /// Lowest coincidence frequency (grazing incidence), in Hz.
    pub fn critical_frequency(&self, fluid: &FluidSpec) -> f64 {
        fluid.sound_speed * fluid.sound_speed / (2.0 * PI)
            * (self.surface_mass_density() / self.bending_stiffness_real()).sqrt()
    }

    /// Coincidence frequency f_crit / sin²θ, in Hz. Undefined at normal incidence.
    pub fn coincidence_frequency(&self, fluid: &FluidSpec, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta <= PI / 2.0) {
            return Err(Error::Domain(format!(
                "no coincidence at incidence angle {theta} rad (need 0 < theta <= pi/2)"
            )));
        }
        let s = theta.sin();
        Ok(self.critical_frequency(fluid) / (s * s))
    }

    /// Squared natural angular frequency of mode (m, n), complex through the
    /// structural damping carried by D.
    pub fn natural_frequency_squared(&self, m_idx: usize, n_idx: usize) -> Result<Complex64> {
        if m_idx == 0 || n_idx == 0 {
            return Err(Error::validation(
                "mode index",
                format!("({m_idx}, {n_idx}) must both be >= 1"),
            ));
        }
        Ok(self.modal_stiffness_ratio() * self.modal_wavenumber_sq(m_idx, n_idx).powi(2))
    }

    /// Natural angular frequency ω_mn (rad/s), principal square root of ω²_mn.
    pub fn natural_frequency(&self, m_idx: usize, n_idx: usize) -> Result<Complex64> {
        Ok(self.natural_frequency_squared(m_idx, n_idx)?.sqrt())
    }

    /// D/m, complex.
    pub(crate) fn modal_stiffness_ratio(&self) -> Complex64 {
        self.bending_stiffness() / self.surface_mass_density()
    }

    /// (mπ/a)² + (nπ/b)².
    pub(crate) fn modal_wavenumber_sq(&self, m_idx: usize, n_idx: usize) -> f64 {
        let kx = m_idx as f64 * PI / self.width;
        let ky = n_idx as f64 * PI / self.length;
        kx * kx + ky * ky
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("{value} must be finite and > 0"),
        ))
    }
}

/// Ambient fluid on both sides of the plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidSpec {
    #[serde(rename = "rho0")]
    pub density: f64,
    #[serde(rename = "c0")]
    pub sound_speed: f64,
}

impl FluidSpec {
    pub fn new(density: f64, sound_speed: f64) -> Result<Self> {
        positive("rho0", density)?;
        positive("c0", sound_speed)?;
        Ok(FluidSpec {
            density,
            sound_speed,
        })
    }

    /// Air at 20 °C.
    pub fn air() -> Self {
        FluidSpec {
            density: 1.21,
            sound_speed: 343.0,
        }
    }

    /// Characteristic impedance ρ₀c₀.
    pub fn impedance(&self) -> f64 {
        self.density * self.sound_speed
    }

    pub fn wavenumber(&self, omega: f64) -> f64 {
        omega / self.sound_speed
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.density, self.sound_speed).map(|_| ())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let fluid: FluidSpec = serde_json::from_str(&text)?;
        fluid.validate()?;
        Ok(fluid)
    }
}

impl Default for FluidSpec {
    fn default() -> Self {
        Self::air()
    }
}

/// Plane wave hitting the plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveIncidence {
    /// Polar angle from the plate normal, 0 ≤ θ < π/2.
    pub theta: f64,
    /// Azimuth in the plate plane.
    pub phi: f64,
    /// Angular frequency, rad/s.
    pub omega: f64,
}

impl WaveIncidence {
    pub fn new(theta: f64, phi: f64, omega: f64) -> Result<Self> {
        if !(0.0..PI / 2.0).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} outside [0, pi/2)")));
        }
        if !phi.is_finite() {
            return Err(Error::validation("phi", "must be finite"));
        }
        positive("omega", omega)?;
        Ok(WaveIncidence { theta, phi, omega })
    }

    pub fn at_frequency(theta: f64, phi: f64, freq_hz: f64) -> Result<Self> {
        Self::new(theta, phi, 2.0 * PI * freq_hz)
    }

    /// Wavenumber vector (kx, ky, kz).
    pub fn wave_vector(&self, fluid: &FluidSpec) -> [f64; 3] {
        let k = fluid.wavenumber(self.omega);
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [k * st * cp, k * st * sp, k * ct]
    }
}

/// On-disk plate description in design-file units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateFile {
    /// kg/m³
    pub rho: f64,
    /// GPa
    #[serde(rename = "E")]
    pub e_gpa: f64,
    pub nu: f64,
    pub eta_percent: f64,
    pub h_mm: f64,
    /// m
    pub a: f64,
    /// m
    pub b: f64,
}

impl PlateFile {
    pub fn to_plate(&self) -> Result<PlateSpec> {
        PlateSpec::new(
            self.rho,
            self.e_gpa * 1e9,
            self.nu,
            self.eta_percent / 100.0,
            self.h_mm * 1e-3,
            self.a,
            self.b,
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<PlateSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PlateFile = serde_json::from_str(&text)?;
        file.to_plate()
    }
}
