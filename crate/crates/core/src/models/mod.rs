//! The three STL simulators and their diffuse-field evaluation.

mod correction;
pub mod green;
mod infinite;
mod modal;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use correction::{
    correction_factor_tau, finite_radiation_efficiency, radiation_efficiency, radiation_efficiency_tol,
};
pub use infinite::{infinite_plate_impedance, infinite_plate_tau};
pub use modal::{
    modal_pressure_coefficients, modal_summation_tau, ModalPressure, ModalTau, ModalTruncation,
    Mode, ModeSet,
};

use crate::error::{Error, Result};
use crate::physics::{FluidSpec, PlateSpec};
use crate::quadrature::QuadratureScheme;
use crate::spectrum::{band_average, Axis, BandScheme, FrequencyGrid, StlCurve};

/// Transmission model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StlModel {
    Infinite,
    Correction,
    Modal,
}

impl StlModel {
    pub const ALL: [StlModel; 3] = [StlModel::Infinite, StlModel::Correction, StlModel::Modal];

    pub fn name(&self) -> &'static str {
        match self {
            StlModel::Infinite => "infinite",
            StlModel::Correction => "correction",
            StlModel::Modal => "modal",
        }
    }
}

impl fmt::Display for StlModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StlModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infinite" => Ok(StlModel::Infinite),
            "correction" => Ok(StlModel::Correction),
            "modal" | "ms" => Ok(StlModel::Modal),
            other => Err(Error::validation(
                "model",
                format!("unknown model '{other}' (expected infinite, correction or modal)"),
            )),
        }
    }
}

/// Everything besides the plate that a diffuse-field STL evaluation needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Simulator {
    pub model: StlModel,
    pub fluid: FluidSpec,
    pub quadrature: QuadratureScheme,
    pub truncation: ModalTruncation,
}

impl Simulator {
    pub fn new(model: StlModel) -> Self {
        Simulator {
            model,
            fluid: FluidSpec::air(),
            quadrature: QuadratureScheme::default(),
            truncation: ModalTruncation::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fluid.validate()?;
        self.quadrature.validate()?;
        self.truncation.validate()
    }

    /// Diffuse-field transparency at one angular frequency. For the modal
    /// model the truncation is resolved against `omega` itself.
    pub fn diffuse_tau(&self, plate: &PlateSpec, omega: f64) -> Result<f64> {
        let modes = match self.model {
            StlModel::Modal => Some(self.truncation.resolve(plate, omega)?),
            _ => None,
        };
        self.diffuse_tau_with(plate, omega, modes.as_ref())
    }

    fn diffuse_tau_with(&self, plate: &PlateSpec, omega: f64, modes: Option<&ModeSet>) -> Result<f64> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::validation("omega", format!("{omega} must be > 0")));
        }
        let fluid = &self.fluid;
        let thetas = self.quadrature.theta_rule(plate, fluid, omega)?;
        let den_theta: f64 = thetas.iter().map(|t| t.weight).sum();

        if self.model == StlModel::Infinite {
            let num: f64 = thetas
                .iter()
                .map(|t| t.weight * infinite::tau(plate, fluid, t.theta.sin(), t.cos, omega))
                .sum();
            return Ok(num / den_theta);
        }

        let phis = self.quadrature.phi_rule();
        let den_phi: f64 = phis.iter().map(|p| p.1).sum();
        let mut num = 0.0;
        for t in &thetas {
            let sin_t = t.theta.sin();
            let mut row = 0.0;
            for &(phi, wp) in &phis {
                let at_node = |source: Error| Error::AtNode {
                    theta: t.theta,
                    phi,
                    omega,
                    source: Box::new(source),
                };
                let tau = match self.model {
                    StlModel::Correction => {
                        let k = fluid.wavenumber(omega);
                        let sigma = radiation_efficiency(
                            plate.width(),
                            plate.length(),
                            k,
                            k * sin_t * phi.cos(),
                            k * sin_t * phi.sin(),
                        )
                        .map_err(at_node)?;
                        sigma * t.cos * infinite::tau(plate, fluid, sin_t, t.cos, omega)
                    }
                    StlModel::Modal => {
                        let modes = modes.expect("modal evaluation needs a mode set");
                        modal::tau_with_modes(plate, fluid, modes, sin_t, t.cos, phi, omega).tau
                    }
                    StlModel::Infinite => unreachable!(),
                };
                if !tau.is_finite() {
                    return Err(at_node(Error::Numeric(format!("non-finite transparency {tau}"))));
                }
                row += wp * tau;
            }
            num += t.weight * row;
        }
        Ok(num / (den_theta * den_phi))
    }

    /// Narrowband diffuse STL over `grid`. The modal truncation is resolved
    /// once against the highest grid frequency.
    pub fn stl_curve(&self, plate: &PlateSpec, grid: &FrequencyGrid) -> Result<StlCurve> {
        let tau = self.tau_curve(plate, grid)?;
        StlCurve::from_transparency(Axis::Grid(grid.clone()), &tau)
    }

    /// Diffuse transparency at each grid frequency.
    pub fn tau_curve(&self, plate: &PlateSpec, grid: &FrequencyGrid) -> Result<Vec<f64>> {
        self.validate()?;
        let modes = match self.model {
            StlModel::Modal => Some(self.truncation.resolve(plate, 2.0 * std::f64::consts::PI * grid.max())?),
            _ => None,
        };
        let tau: Vec<f64> = grid
            .frequencies()
            .par_iter()
            .map(|&f| self.diffuse_tau_with(plate, 2.0 * std::f64::consts::PI * f, modes.as_ref()))
            .collect::<Result<_>>()?;
        if let Some(i) = tau.iter().position(|&t| !(t > 0.0)) {
            return Err(Error::Numeric(format!(
                "diffuse transparency {} at {} Hz (no excited mode or underflow)",
                tau[i],
                grid.frequencies()[i]
            )));
        }
        Ok(tau)
    }

    /// Narrowband curve, or its band average when `bands` is given.
    pub fn response(&self, plate: &PlateSpec, grid: &FrequencyGrid, bands: Option<&BandScheme>) -> Result<StlCurve> {
        let curve = self.stl_curve(plate, grid)?;
        match bands {
            Some(b) => band_average(&curve, b),
            None => Ok(curve),
        }
    }
}

/// Diffuse-field transparency τ_d of `model` at angular frequency `omega`.
pub fn diffuse_tau(
    model: StlModel,
    plate: &PlateSpec,
    fluid: &FluidSpec,
    omega: f64,
    quad: &QuadratureScheme,
    trunc: &ModalTruncation,
) -> Result<f64> {
    let sim = Simulator {
        model,
        fluid: *fluid,
        quadrature: *quad,
        truncation: *trunc,
    };
    sim.validate()?;
    sim.diffuse_tau(plate, omega)
}

/// Diffuse STL curve of `model` over `grid`.
pub fn stl_curve(
    model: StlModel,
    plate: &PlateSpec,
    fluid: &FluidSpec,
    grid: &FrequencyGrid,
    quad: &QuadratureScheme,
    trunc: &ModalTruncation,
) -> Result<StlCurve> {
    Simulator {
        model,
        fluid: *fluid,
        quadrature: *quad,
        truncation: *trunc,
    }
    .stl_curve(plate, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mid_plate() -> PlateSpec {
        PlateSpec::new(2500.0, 105e9, 0.3, 0.0105, 0.006, 0.45, 0.45).unwrap()
    }

    #[test]
    fn infinite_curve_rises_from_zero() {
        let sim = Simulator::new(StlModel::Infinite);
        let low = sim.diffuse_tau(&mid_plate(), 2.0 * PI * 0.01).unwrap();
        assert!((low - 1.0).abs() < 1e-4);
        let curve = sim.stl_curve(&mid_plate(), &FrequencyGrid::default()).unwrap();
        assert_eq!(curve.values.len(), 128);
        assert!(curve.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn infinite_ignores_plate_size() {
        let sim = Simulator::new(StlModel::Infinite);
        let grid = FrequencyGrid::geometric(100.0, 2000.0, 9).unwrap();
        let a = sim.stl_curve(&mid_plate(), &grid).unwrap();
        let b = sim.stl_curve(&mid_plate().with_dimensions(0.31, 0.58).unwrap(), &grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_names_round_trip() {
        for m in StlModel::ALL {
            assert_eq!(m.name().parse::<StlModel>().unwrap(), m);
        }
        assert!("fem".parse::<StlModel>().is_err());
    }
}
