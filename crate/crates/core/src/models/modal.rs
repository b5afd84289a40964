//! Modal summation for the simply supported plate, inter-modal coupling neglected.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{FluidSpec, PlateSpec, WaveIncidence};

/// Which modes enter the sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalTruncation {
    pub max_m: usize,
    pub max_n: usize,
    /// Keep modes with |ω_mn| ≤ freq_factor · ω_max.
    pub freq_factor: f64,
}

impl Default for ModalTruncation {
    fn default() -> Self {
        ModalTruncation {
            max_m: 40,
            max_n: 40,
            freq_factor: 2.0,
        }
    }
}

impl ModalTruncation {
    pub fn validate(&self) -> Result<()> {
        if self.max_m < 1 || self.max_n < 1 {
            return Err(Error::validation("truncation", "max_m and max_n must be >= 1"));
        }
        if !(self.freq_factor >= 1.0 && self.freq_factor.is_finite()) {
            return Err(Error::validation("freq_factor", "must be finite and >= 1"));
        }
        Ok(())
    }

    /// Doubles the frequency factor (and the index caps with it).
    pub fn doubled(&self) -> Self {
        ModalTruncation {
            max_m: 2 * self.max_m,
            max_n: 2 * self.max_n,
            freq_factor: 2.0 * self.freq_factor,
        }
    }

    /// Modes retained when the highest analysed angular frequency is `omega_max`.
    pub fn resolve(&self, plate: &PlateSpec, omega_max: f64) -> Result<ModeSet> {
        self.validate()?;
        let limit = self.freq_factor * omega_max;
        let mut modes = Vec::new();
        for m in 1..=self.max_m {
            for n in 1..=self.max_n {
                let omega_sq = plate.natural_frequency_squared(m, n)?;
                if omega_sq.norm().sqrt() <= limit {
                    modes.push(Mode { m, n, omega_sq });
                }
            }
        }
        let max_m = modes.iter().map(|md| md.m).max().unwrap_or(0);
        let max_n = modes.iter().map(|md| md.n).max().unwrap_or(0);
        Ok(ModeSet { modes, max_m, max_n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub m: usize,
    pub n: usize,
    pub omega_sq: Complex64,
}

/// Retained modes of one plate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
    max_m: usize,
    max_n: usize,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Modal transparency together with the degenerate-excitation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalTau {
    pub tau: f64,
    /// Set when no retained mode is excited; τ is then reported as 0.
    pub degenerate: bool,
}

/// Projection coefficient of a unit incident wave on one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalPressure {
    pub m: usize,
    pub n: usize,
    pub p: Complex64,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// sinc((mπ − kL)/2) − (−1)^m sinc((mπ + kL)/2); the 1-D projection
/// ∫₀^L e^{−ikx} sin(mπx/L) dx equals (L/2i) e^{−ikL/2} i^m times this.
fn projection_core(m: usize, kl: f64) -> f64 {
    let mp = m as f64 * PI;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sinc(0.5 * (mp - kl)) - sign * sinc(0.5 * (mp + kl))
}

fn projection(m: usize, k: f64, len: f64) -> Complex64 {
    let i_pow_m = match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let phase = Complex64::from_polar(1.0, -0.5 * k * len);
    Complex64::new(0.0, -0.5 * len) * phase * i_pow_m * projection_core(m, k * len)
}

/// p_I,mn = (4/ab) ∫∫ e^{−i(k_x x + k_y y)} sin(mπx/a) sin(nπy/b) dx dy for a unit incident wave.
pub fn modal_pressure_coefficients(
    plate: &PlateSpec,
    fluid: &FluidSpec,
    incidence: &WaveIncidence,
    trunc: &ModalTruncation,
) -> Result<Vec<ModalPressure>> {
    let modes = trunc.resolve(plate, incidence.omega)?;
    let [kx, ky, _] = incidence.wave_vector(fluid);
    let (a, b) = (plate.width(), plate.length());
    Ok(modes
        .modes
        .iter()
        .map(|md| ModalPressure {
            m: md.m,
            n: md.n,
            p: 4.0 / (a * b) * projection(md.m, kx, a) * projection(md.n, ky, b),
        })
        .collect())
}

/// Transparency of the modal model for one incidence:
/// τ = Σ|p_T,mn|² / Σ|p_I,mn|², the incident sum taken over the complete basis.
pub fn modal_summation_tau(
    plate: &PlateSpec,
    fluid: &FluidSpec,
    incidence: &WaveIncidence,
    trunc: &ModalTruncation,
) -> Result<ModalTau> {
    if !(incidence.theta < PI / 2.0) {
        return Err(Error::Domain(format!(
            "modal model undefined at grazing incidence (theta = {})",
            incidence.theta
        )));
    }
    let modes = trunc.resolve(plate, incidence.omega)?;
    let (s, c) = incidence.theta.sin_cos();
    Ok(tau_with_modes(plate, fluid, &modes, s, c, incidence.phi, incidence.omega))
}

/// Σ over all modes of |p_I,mn|² for a unit incident wave.
const INCIDENT_POWER: f64 = 4.0;

pub(crate) fn tau_with_modes(
    plate: &PlateSpec,
    fluid: &FluidSpec,
    modes: &ModeSet,
    sin_theta: f64,
    cos_theta: f64,
    phi: f64,
    omega: f64,
) -> ModalTau {
    let k = fluid.wavenumber(omega);
    let (a, b) = (plate.width(), plate.length());
    let kx = k * sin_theta * phi.cos();
    let ky = k * sin_theta * phi.sin();
    let xm: Vec<f64> = (1..=modes.max_m).map(|m| projection_core(m, kx * a).powi(2)).collect();
    let yn: Vec<f64> = (1..=modes.max_n).map(|n| projection_core(n, ky * b).powi(2)).collect();

    let mass = plate.surface_mass_density();
    let kz = k * cos_theta;
    let radiation = 2.0 * omega * fluid.impedance() / (mass * cos_theta);
    // |p_T / p_I|² per mode = gain / |ω²_mn − ω² + i·radiation|²
    let gain = (2.0 * fluid.density * omega * omega / (mass * kz)).powi(2);
    let w2 = omega * omega;

    let (mut transmitted, mut incident) = (0.0, 0.0);
    for md in &modes.modes {
        let weight = xm[md.m - 1] * yn[md.n - 1];
        if weight == 0.0 {
            continue;
        }
        let den = Complex64::new(md.omega_sq.re - w2, md.omega_sq.im + radiation).norm_sqr();
        incident += weight;
        transmitted += weight * gain / den;
    }
    // Σ|p_I,mn|² over the complete sine basis is 4|p_I|² (Parseval); the
    // truncated sum converges far more slowly than the transmitted one.
    if incident > 0.0 {
        ModalTau {
            tau: transmitted / INCIDENT_POWER,
            degenerate: false,
        }
    } else {
        ModalTau {
            tau: 0.0,
            degenerate: true,
        }
    }
}
