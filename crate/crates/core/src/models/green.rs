//! Reference evaluation of the finite-plate radiation impedance straight from
//! the surface integral with the half-space Green's function
//! G(r) = e^{−ikr} / (2πr).
//!
//! For every outer point the inner surface is cut into four triangles
//! (one per edge, apex at the point) and integrated in polar coordinates
//! centred on it, which removes the 1/r singularity. This is slow and meant
//! for validating [`super::correction::radiation_efficiency`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::quadrature::GaussLegendre;

const NODES_PER_PANEL: usize = 8;

/// Normalised radiation impedance Z_fin / (ρ₀c₀) of an a × b plate whose
/// velocity follows the trace wave e^{−i(k_x x + k_y y)}. Its real part is σ_R.
///
/// `refinement` multiplies every panel count; 1 is enough for about 1e-4.
pub fn green_radiation_impedance(a: f64, b: f64, k: f64, kx: f64, ky: f64, refinement: usize) -> Complex64 {
    let refinement = refinement.max(1);
    let gl = GaussLegendre::new(NODES_PER_PANEL);
    let panels = |len: f64| refinement * (2 + (k * len / 3.0).ceil() as usize);
    let xs = composite(&gl, 0.0, a, panels(a));
    let ys = composite(&gl, 0.0, b, panels(b));

    let mut total = Complex64::new(0.0, 0.0);
    for &(x, wx) in &xs {
        let mut row = Complex64::new(0.0, 0.0);
        for &(y, wy) in &ys {
            row += wy * inner(&gl, a, b, x, y, k, kx, ky, refinement);
        }
        total += wx * row;
    }
    // Z/(ρ₀c₀) = (ik / S) ∫∫ dx ∫∫ dx' e^{ik_t·(x − x')} G(|x − x'|)
    Complex64::new(0.0, k) * total / (2.0 * PI * a * b)
}

fn composite(gl: &GaussLegendre, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .flat_map(|p| gl.on(lo + p as f64 * h, lo + (p + 1) as f64 * h).collect::<Vec<_>>())
        .collect()
}

/// ∫∫ e^{ik_t·(x − x')} e^{−ik|x − x'|} / |x − x'| dx' over the plate for the
/// outer point x = (x, y); the 1/2π of G is applied by the caller.
#[allow(clippy::too_many_arguments)]
fn inner(gl: &GaussLegendre, a: f64, b: f64, x: f64, y: f64, k: f64, kx: f64, ky: f64, refinement: usize) -> Complex64 {
    // Corner directions, walked counter-clockwise starting at (0, 0).
    let c0 = (-y).atan2(-x);
    let c1 = (-y).atan2(a - x);
    let c2 = (b - y).atan2(a - x);
    let c3 = (b - y).atan2(-x);
    // (start angle, end angle, distance to edge, outward normal angle)
    let triangles = [
        (c0, c1, y, -PI / 2.0),
        (c1, c2, a - x, 0.0),
        (c2, c3, b - y, PI / 2.0),
        (c3, c0 + 2.0 * PI, x, PI),
    ];
    let mut sum = Complex64::new(0.0, 0.0);
    for (start, end, d, normal) in triangles {
        if d <= 0.0 || end <= start {
            continue;
        }
        let r_max = [(start - normal), (end - normal)]
            .iter()
            .map(|t| d / t.cos())
            .fold(0.0, f64::max);
        let n = refinement * (1 + (k * r_max * (end - start) / 3.0).ceil() as usize);
        for (psi, w) in composite(gl, start, end, n) {
            let r = d / (psi - normal).cos();
            let beta = k + kx * psi.cos() + ky * psi.sin();
            // ∫₀^R e^{−iβr} dr, β ≥ k(1 − sin θ) > 0 away from grazing.
            let radial = if (beta * r).abs() < 1e-8 {
                Complex64::new(r, 0.0)
            } else {
                (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -beta * r).exp()) / Complex64::new(0.0, beta)
            };
            sum += w * radial;
        }
    }
    sum
}
