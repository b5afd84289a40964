//! Finite-size correction of the infinite-plate transparency through the
//! radiation efficiency of a baffled rectangular piston driven by a trace wave.
//!
//! With relative coordinates (u, v) the surface integral of the half-space
//! Green's function reduces to
//!
//! σ = 2k/(πS) ∫₀^a ∫₀^b (a−u)(b−v) cos(k_x u) cos(k_y v) sin(kr)/r du dv.
//!
//! In polar coordinates the 1/r cancels and the radial integral is
//! elementary, leaving a smooth one-dimensional integral over the polar angle.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::physics::{FluidSpec, PlateSpec, WaveIncidence};
use crate::quadrature::{integrate_adaptive, AdaptiveTolerance};

use super::infinite;

/// Radiation efficiency σ_R of the finite plate for one incidence.
pub fn finite_radiation_efficiency(
    plate: &PlateSpec,
    fluid: &FluidSpec,
    incidence: &WaveIncidence,
) -> Result<f64> {
    let [kx, ky, _] = incidence.wave_vector(fluid);
    radiation_efficiency(plate.width(), plate.length(), fluid.wavenumber(incidence.omega), kx, ky)
}

/// τ_fin = σ_R cos θ · τ_∞.
pub fn correction_factor_tau(
    plate: &PlateSpec,
    fluid: &FluidSpec,
    incidence: &WaveIncidence,
) -> Result<f64> {
    let sigma = finite_radiation_efficiency(plate, fluid, incidence)?;
    let (s, c) = incidence.theta.sin_cos();
    Ok(sigma * c * infinite::tau(plate, fluid, s, c, incidence.omega))
}

/// σ for a plate a × b, acoustic wavenumber k and trace wavenumbers (k_x, k_y).
pub fn radiation_efficiency(a: f64, b: f64, k: f64, kx: f64, ky: f64) -> Result<f64> {
    radiation_efficiency_tol(a, b, k, kx, ky, SIGMA_TOL)
}

/// Absolute accuracy requested on σ.
const SIGMA_TOL: f64 = 1e-7;

#[doc(hidden)]
pub fn radiation_efficiency_tol(a: f64, b: f64, k: f64, kx: f64, ky: f64, sigma_tol: f64) -> Result<f64> {
    let (kx, ky) = (kx.abs(), ky.abs());
    let scale = 0.25 * 2.0 * k / (PI * a * b);
    let tol = AdaptiveTolerance {
        abs: sigma_tol / scale,
        rel: sigma_tol,
        max_intervals: 4000,
    };
    // The polar angle range splits at the diagonal; the far half is the near
    // half with the roles of the two sides exchanged.
    let lower = half_integral(a, b, k, kx, ky, tol);
    let upper = half_integral(b, a, k, ky, kx, tol);
    let sigma = match (lower, upper) {
        (Ok(l), Ok(u)) => scale * (l + u),
        (Err(Error::Convergence { coarse, refined }), other)
        | (other @ Ok(_), Err(Error::Convergence { coarse, refined })) => {
            let rest = other.unwrap_or(0.0);
            return Err(Error::Convergence {
                coarse: scale * (coarse + rest),
                refined: scale * (refined + rest),
            });
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    // Tiny negative values can only come from cancellation at very low ka.
    Ok(sigma.max(0.0))
}

/// Polar angles below the diagonal, where the ray leaves through the side x = a.
/// Integrated over t = tan α, so R = a√(1+t²), p·R = k_x a and q·R = k_y a t.
fn half_integral(a: f64, b: f64, k: f64, kx: f64, ky: f64, tol: AdaptiveTolerance) -> Result<f64> {
    let (sp, cp) = (kx * a).sin_cos();
    let integrand = |t: f64| {
        let h = (1.0 + t * t).sqrt();
        let c = 1.0 / h;
        let s = t * c;
        let r = a * h;
        let poly = Poly { c0: a * b, c1: a * s + b * c, c2: c * s };
        let p = kx * c;
        let q = ky * s;
        // sin/cos of (k ± (p ± q))·R from two sin_cos calls.
        let (sa, ca) = (k * r).sin_cos();
        let (sq, cq) = (ky * a * t).sin_cos();
        let (s_sum, c_sum) = (sp * cq + cp * sq, cp * cq - sp * sq);
        let (s_dif, c_dif) = (sp * cq - cp * sq, cp * cq + sp * sq);
        let total = poly.eval(k + p + q, r, sa * c_sum + ca * s_sum, ca * c_sum - sa * s_sum)
            + poly.eval(k - p - q, r, sa * c_sum - ca * s_sum, ca * c_sum + sa * s_sum)
            + poly.eval(k + p - q, r, sa * c_dif + ca * s_dif, ca * c_dif - sa * s_dif)
            + poly.eval(k - p + q, r, sa * c_dif - ca * s_dif, ca * c_dif + sa * s_dif);
        // dα = dt / (1 + t²)
        total * c * c
    };
    integrate_adaptive(integrand, 0.0, b / a, tol)
}

/// (c0 − c1 r + c2 r²), integrated against sin(w r) over [0, R].
struct Poly {
    c0: f64,
    c1: f64,
    c2: f64,
}

impl Poly {
    /// `s`, `c` are sin(wR) and cos(wR).
    fn eval(&self, w: f64, r: f64, s: f64, c: f64) -> f64 {
        let [i0, i1, i2] = sine_moments(w, r, s, c);
        self.c0 * i0 - self.c1 * i1 + self.c2 * i2
    }
}

const SERIES_TERMS: usize = 10;

/// (−1)^j / ((2j+1)! (n+2j+2)) for n = 0, 1, 2.
const SERIES: [[f64; SERIES_TERMS]; 3] = {
    let mut table = [[0.0; SERIES_TERMS]; 3];
    let mut n = 0;
    while n < 3 {
        let mut fact = 1.0;
        let mut j = 0;
        while j < SERIES_TERMS {
            if j > 0 {
                fact *= ((2 * j) * (2 * j + 1)) as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            table[n][j] = sign / (fact * (n + 2 * j + 2) as f64);
            j += 1;
        }
        n += 1;
    }
    table
};

/// I_n = ∫₀^R rⁿ sin(w r) dr for n = 0, 1, 2, given sin(wR) and cos(wR).
fn sine_moments(w: f64, r: f64, s: f64, c: f64) -> [f64; 3] {
    let x = w * r;
    if x.abs() < 1.0 {
        // I_n = R^{n+1} Σ_j (−1)^j x^{2j+1} / ((2j+1)! (n+2j+2)), Horner in x².
        let x2 = x * x;
        let mut out = [0.0; 3];
        let mut rn = r;
        for (slot, coeffs) in out.iter_mut().zip(&SERIES) {
            let poly = coeffs.iter().rev().fold(0.0, |acc, c| acc * x2 + c);
            *slot = rn * x * poly;
            rn *= r;
        }
        return out;
    }
    [
        (1.0 - c) / w,
        (s - x * c) / (w * w),
        (2.0 * x * s + (2.0 - x * x) * c - 2.0) / (w * w * w),
    ]
}
