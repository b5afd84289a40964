use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::ArrayView1;
use num_complex::Complex64;
use proptest::prelude::*;
use stl_lab::dataset::{design_to_plate, DesignSpace};
use stl_lab::models::{
    correction_factor_tau, infinite_plate_tau, modal_pressure_coefficients, modal_summation_tau, ModalTruncation,
};
use stl_lab::quadrature::GaussLegendre;
use stl_lab::{FluidSpec, PlateSpec, WaveIncidence};

/// Any plate inside the default design space.
fn plate() -> impl Strategy<Value = PlateSpec> {
    let b = DesignSpace::table1().bounds();
    b.map(|[lo, hi]| lo..=hi)
        .prop_map(|row| design_to_plate(ArrayView1::from(&row)).unwrap())
}

fn incidence() -> impl Strategy<Value = WaveIncidence> {
    (0.0..1.5f64, 0.0..2.0 * PI, 50.0..2500.0f64)
        .prop_map(|(t, p, f)| WaveIncidence::at_frequency(t, p, f).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bending_stiffness_is_damped_elastic(p in plate()) {
        let d = p.bending_stiffness();
        prop_assert!(d.re > 0.0);
        prop_assert!((d.im - p.loss_factor() * d.re).abs() <= 1e-12 * d.re);
    }

    #[test]
    fn critical_is_grazing_coincidence(p in plate()) {
        let air = FluidSpec::air();
        let fc = p.critical_frequency(&air);
        let fg = p.coincidence_frequency(&air, FRAC_PI_2).unwrap();
        prop_assert!((fc - fg).abs() <= 4.0 * f64::EPSILON * fc);
    }

    #[test]
    fn natural_frequency_swap(p in plate(), m in 1usize..12, n in 1usize..12) {
        let q = p.with_dimensions(p.length(), p.width()).unwrap();
        let w1 = p.natural_frequency(m, n).unwrap();
        let w2 = q.natural_frequency(n, m).unwrap();
        prop_assert!((w1 - w2).norm() <= 1e-12 * w1.norm());
    }

    #[test]
    fn mass_and_resonance_ignore_damping(p in plate(), eta in 0.001..0.02f64) {
        let q = p.with_loss_factor(eta).unwrap();
        prop_assert_eq!(p.surface_mass_density(), q.surface_mass_density());
        prop_assert_eq!(p.resonance_coefficient(), q.resonance_coefficient());
    }

    #[test]
    fn transparency_is_a_fraction(p in plate(), inc in incidence()) {
        let air = FluidSpec::air();
        let inf = infinite_plate_tau(&p, &air, &inc);
        prop_assert!(inf > 0.0 && inf <= 1.0, "infinite {inf}");
        let cor = correction_factor_tau(&p, &air, &inc).unwrap();
        prop_assert!(cor > 0.0 && cor <= 1.0, "correction {cor}");
        let ms = modal_summation_tau(&p, &air, &inc, &ModalTruncation::default()).unwrap();
        prop_assert!(ms.degenerate || (ms.tau > 0.0 && ms.tau <= 1.0), "modal {ms:?}");
    }

    #[test]
    fn infinite_ignores_azimuth_and_size(p in plate(), inc in incidence(), phi in 0.0..2.0 * PI, a in 0.3..0.6f64) {
        let air = FluidSpec::air();
        let moved = WaveIncidence { phi, ..inc };
        let resized = p.with_dimensions(a, 1.1 * a).unwrap();
        let t = infinite_plate_tau(&p, &air, &inc);
        prop_assert_eq!(t, infinite_plate_tau(&p, &air, &moved));
        prop_assert_eq!(t, infinite_plate_tau(&resized, &air, &inc));
    }

    #[test]
    fn modal_swap_symmetry(p in plate(), theta in 0.0..1.5f64, phi in 0.0..FRAC_PI_2, f in 50.0..2500.0f64) {
        let air = FluidSpec::air();
        let q = p.with_dimensions(p.length(), p.width()).unwrap();
        let trunc = ModalTruncation::default();
        let a = modal_summation_tau(&p, &air, &WaveIncidence::at_frequency(theta, phi, f).unwrap(), &trunc).unwrap();
        let b = modal_summation_tau(&q, &air, &WaveIncidence::at_frequency(theta, FRAC_PI_2 - phi, f).unwrap(), &trunc).unwrap();
        prop_assert!((a.tau - b.tau).abs() <= 1e-9 * a.tau.max(1e-300), "{a:?} vs {b:?}");
    }
}

/// Brute-force (4/ab)∬ e^{−i(k_x x + k_y y)} sin(mπx/a) sin(nπy/b) dx dy.
fn pressure_by_quadrature(p: &PlateSpec, kx: f64, ky: f64, m: usize, n: usize) -> Complex64 {
    let gl = GaussLegendre::new(200);
    let (a, b) = (p.width(), p.length());
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, wx) in gl.on(0.0, a) {
        let sx = (m as f64 * PI * x / a).sin();
        for (y, wy) in gl.on(0.0, b) {
            let sy = (n as f64 * PI * y / b).sin();
            sum += wx * wy * sx * sy * Complex64::from_polar(1.0, -(kx * x + ky * y));
        }
    }
    4.0 / (a * b) * sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pressure_coefficients_match_quadrature(p in plate(), inc in incidence(), pick in 0usize..1000) {
        let air = FluidSpec::air();
        let coeffs = modal_pressure_coefficients(&p, &air, &inc, &ModalTruncation { max_m: 12, max_n: 12, freq_factor: 1e9 })
            .unwrap();
        let c = coeffs[pick % coeffs.len()];
        let [kx, ky, _] = inc.wave_vector(&air);
        let brute = pressure_by_quadrature(&p, kx, ky, c.m, c.n);
        let scale = brute.norm().max(1e-6);
        prop_assert!((c.p - brute).norm() <= 1e-8 * scale, "({}, {}): {} vs {}", c.m, c.n, c.p, brute);
    }
}
