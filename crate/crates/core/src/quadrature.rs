//! Gauss–Legendre rules, adaptive Gauss–Kronrod integration and the
//! diffuse-field angular rule.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{FluidSpec, PlateSpec};

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = ((4 * i + 3) as f64 * PI / (4.0 * nf + 2.0)).cos()
                * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod-15 estimate and Gauss-7 estimate on [a, b].
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = GK15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = half * GK15_NODES[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += GK15_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G7_WEIGHTS[j / 2] * s;
        }
    }
    (kronrod * half, gauss * half)
}

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveTolerance {
    fn default() -> Self {
        AdaptiveTolerance {
            abs: 1e-12,
            rel: 1e-9,
            max_intervals: 2000,
        }
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over [a, b].
///
/// On failure the error carries the Gauss-7 and Kronrod-15 totals.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: AdaptiveTolerance,
) -> Result<f64> {
    struct Piece {
        a: f64,
        b: f64,
        k: f64,
        g: f64,
    }
    let err_of = |p: &Piece| (p.k - p.g).abs();

    let (k, g) = gk15(&f, a, b);
    let mut pieces = vec![Piece { a, b, k, g }];
    loop {
        let total: f64 = pieces.iter().map(|p| p.k).sum();
        let err: f64 = pieces.iter().map(err_of).sum();
        if !total.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if pieces.len() >= tol.max_intervals {
            return Err(Error::Convergence {
                coarse: pieces.iter().map(|p| p.g).sum(),
                refined: total,
            });
        }
        // Bisect the interval with the largest local error; ties go to the leftmost.
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, p)| {
                let e = err_of(p);
                if e > be {
                    (i, e)
                } else {
                    (bi, be)
                }
            });
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        let (k1, g1) = gk15(&f, p.a, m);
        let (k2, g2) = gk15(&f, m, p.b);
        pieces.push(Piece { a: p.a, b: m, k: k1, g: g1 });
        pieces.push(Piece { a: m, b: p.b, k: k2, g: g2 });
        // Keep the summation order independent of the swap_remove shuffle.
        pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    }
}

/// How polar nodes are placed on (0, θ_max).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRule {
    /// Panels in cos θ refined around the coincidence angle and grazing incidence.
    #[default]
    Adapted,
    /// A single Gauss–Legendre rule in θ.
    GaussLegendre,
}

/// Angular quadrature for diffuse-field averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub n_theta: usize,
    /// Azimuth nodes on (0, π/2); the rule is expanded by 4-fold symmetry.
    pub n_phi: usize,
    pub theta_max: f64,
    #[serde(default)]
    pub theta_rule: ThetaRule,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme {
            n_theta: 64,
            n_phi: 16,
            theta_max: FRAC_PI_2,
            theta_rule: ThetaRule::Adapted,
        }
    }
}

/// Lorentzian half-widths covered by a sinh-mapped panel.
const PANEL_REACH: f64 = 40.0;

impl QuadratureScheme {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 2 {
            return Err(Error::validation("n_theta", "must be >= 2"));
        }
        if self.n_phi < 1 {
            return Err(Error::validation("n_phi", "must be >= 1"));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= FRAC_PI_2) {
            return Err(Error::validation("theta_max", "must lie in (0, pi/2]"));
        }
        Ok(())
    }

    /// Doubles both angular orders.
    pub fn refined(&self) -> Self {
        QuadratureScheme {
            n_theta: 2 * self.n_theta,
            n_phi: 2 * self.n_phi,
            ..*self
        }
    }

    /// Azimuth nodes and weights on (0, π/2), weights summing to 2π.
    pub fn phi_rule(&self) -> Vec<(f64, f64)> {
        GaussLegendre::new(self.n_phi)
            .on(0.0, FRAC_PI_2)
            .map(|(p, w)| (p, 4.0 * w))
            .collect()
    }

    /// Polar nodes for one frequency. Each entry is (θ, w) with w already
    /// carrying the cos θ sin θ measure, so Σ w = ∫ cos θ sin θ dθ.
    pub fn theta_rule(
        &self,
        plate: &PlateSpec,
        fluid: &FluidSpec,
        omega: f64,
    ) -> Result<Vec<ThetaNode>> {
        self.validate()?;
        let v_min = self.theta_max.cos().max(0.0);
        let panels = match self.theta_rule {
            ThetaRule::GaussLegendre => Vec::new(),
            ThetaRule::Adapted => adapted_panels(plate, fluid, omega, v_min),
        };
        if panels.is_empty() || panels.len() > self.n_theta {
            return Ok(GaussLegendre::new(self.n_theta)
                .on(0.0, self.theta_max)
                .map(|(theta, w)| {
                    let (s, c) = theta.sin_cos();
                    ThetaNode {
                        theta,
                        cos: c,
                        weight: w * s * c,
                    }
                })
                .collect());
        }
        let q = self.n_theta / panels.len();
        let extra = self.n_theta % panels.len();
        let mut out = Vec::with_capacity(self.n_theta);
        for (i, panel) in panels.iter().enumerate() {
            let gl = GaussLegendre::new(q + usize::from(i < extra));
            out.extend(panel.nodes(&gl).map(|(v, w)| ThetaNode {
                theta: v.acos(),
                cos: v,
                weight: w * v,
            }));
        }
        Ok(out)
    }
}

/// One polar node with its measure-weighted weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaNode {
    pub theta: f64,
    pub cos: f64,
    pub weight: f64,
}

/// A panel of the rule in v = cos θ.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Panel {
    Plain { lo: f64, hi: f64 },
    /// v = center + width·sinh(s), which flattens a Lorentzian of that width.
    Sinh { center: f64, width: f64, lo: f64, hi: f64 },
}

impl Panel {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Panel::Plain { lo, hi } | Panel::Sinh { lo, hi, .. } => (lo, hi),
        }
    }

    fn clipped(self, v_min: f64) -> Option<Self> {
        let (lo, hi) = self.bounds();
        if hi <= v_min {
            return None;
        }
        let lo = lo.max(v_min);
        Some(match self {
            Panel::Plain { hi, .. } => Panel::Plain { lo, hi },
            Panel::Sinh { center, width, hi, .. } => Panel::Sinh { center, width, lo, hi },
        })
    }

    fn nodes<'a>(&self, gl: &'a GaussLegendre) -> Box<dyn Iterator<Item = (f64, f64)> + 'a> {
        match *self {
            Panel::Plain { lo, hi } => Box::new(gl.on(lo, hi)),
            Panel::Sinh { center, width, lo, hi } => {
                let s0 = ((lo - center) / width).asinh();
                let s1 = ((hi - center) / width).asinh();
                Box::new(gl.on(s0, s1).map(move |(s, w)| {
                    (center + width * s.sinh(), w * width * s.cosh())
                }))
            }
        }
    }
}

/// Panels in v = cos θ following the infinite-plate transparency, whose
/// peaks in v are Lorentzians: one at grazing incidence (v = 0) and, above
/// the critical frequency, one at the coincidence angle.
fn adapted_panels(plate: &PlateSpec, fluid: &FluidSpec, omega: f64, v_min: f64) -> Vec<Panel> {
    let f = omega / (2.0 * PI);
    let fc = plate.critical_frequency(fluid);
    let eta = plate.loss_factor();
    let a = omega * plate.surface_mass_density() / (2.0 * fluid.impedance());
    let b = (f / fc).powi(2);
    let g0 = ((1.0 - b).powi(2) + (b * eta).powi(2)).sqrt();
    let wg = 1.0 / (a * g0);
    let k = PANEL_REACH;

    let mut panels = Vec::with_capacity(5);
    if f > fc {
        let vc = (1.0 - fc / f).sqrt();
        let wc = (1.0 + a * eta * vc) / (4.0 * a * b.sqrt() * vc * vc);
        if k * (wg + wc) >= vc {
            let p = vc * wg / (wg + wc);
            panels.push(Panel::Sinh { center: 0.0, width: wg, lo: 0.0, hi: p });
            panels.push(Panel::Sinh { center: vc, width: wc, lo: p, hi: vc });
        } else {
            panels.push(Panel::Sinh { center: 0.0, width: wg, lo: 0.0, hi: k * wg });
            panels.push(Panel::Plain { lo: k * wg, hi: vc - k * wc });
            panels.push(Panel::Sinh { center: vc, width: wc, lo: vc - k * wc, hi: vc });
        }
        let right = (vc + k * wc).min(1.0);
        panels.push(Panel::Sinh { center: vc, width: wc, lo: vc, hi: right });
        if right < 1.0 {
            panels.push(Panel::Plain { lo: right, hi: 1.0 });
        }
    } else {
        let edge = (k * wg).min(1.0);
        panels.push(Panel::Sinh { center: 0.0, width: wg, lo: 0.0, hi: edge });
        if edge < 1.0 {
            panels.push(Panel::Plain { lo: edge, hi: 1.0 });
        }
    }
    if !panels.iter().all(|p| {
        let (lo, hi) = p.bounds();
        lo.is_finite() && hi.is_finite() && lo < hi
    }) {
        return Vec::new();
    }
    panels.into_iter().filter_map(|p| p.clipped(v_min)).collect()
}
