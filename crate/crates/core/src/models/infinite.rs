//! Infinite-plate transmission (mass, stiffness and damping of a single leaf).

use num_complex::Complex64;

use crate::physics::{FluidSpec, PlateSpec, WaveIncidence};

/// Structural impedance Z = (1 − ω² D sin⁴θ / (m c₀⁴)) · iωm.
pub fn infinite_plate_impedance(
    plate: &PlateSpec,
    fluid: &FluidSpec,
    incidence: &WaveIncidence,
) -> Complex64 {
    impedance(plate, fluid, incidence.theta.sin(), incidence.omega)
}

pub(crate) fn impedance(plate: &PlateSpec, fluid: &FluidSpec, sin_theta: f64, omega: f64) -> Complex64 {
    let m = plate.surface_mass_density();
    let s2 = sin_theta * sin_theta;
    let c2 = fluid.sound_speed * fluid.sound_speed;
    let stiffness = plate.bending_stiffness() * (omega * omega * s2 * s2 / (m * c2 * c2));
    (Complex64::new(1.0, 0.0) - stiffness) * Complex64::new(0.0, omega * m)
}

/// τ = |1 + Z cos θ / (2ρ₀c₀)|⁻².
pub fn infinite_plate_tau(plate: &PlateSpec, fluid: &FluidSpec, incidence: &WaveIncidence) -> f64 {
    let (s, c) = incidence.theta.sin_cos();
    tau(plate, fluid, s, c, incidence.omega)
}

pub(crate) fn tau(plate: &PlateSpec, fluid: &FluidSpec, sin_theta: f64, cos_theta: f64, omega: f64) -> f64 {
    let z = impedance(plate, fluid, sin_theta, omega);
    let q = Complex64::new(1.0, 0.0) + z * (cos_theta / (2.0 * fluid.impedance()));
    1.0 / q.norm_sqr()
}
