//! Physics-guided feature augmentation and column scalers.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{design_to_plate, DESIGN_COLUMNS, N_DESIGN};
use crate::error::{Error, Result};

/// Which derived columns are appended to the seven raw design variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRecipe {
    /// Raw variables only.
    Base,
    /// Adds surface mass density m and real bending stiffness D_R.
    Physics,
    /// Adds m, D_R and the resonance coefficient R.
    PhysicsR,
}

impl FeatureRecipe {
    pub const ALL: [FeatureRecipe; 3] = [FeatureRecipe::Base, FeatureRecipe::Physics, FeatureRecipe::PhysicsR];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureRecipe::Base => "base",
            FeatureRecipe::Physics => "physics",
            FeatureRecipe::PhysicsR => "physics_r",
        }
    }

    fn extra(&self) -> &'static [&'static str] {
        match self {
            FeatureRecipe::Base => &[],
            FeatureRecipe::Physics => &["m", "D_R"],
            FeatureRecipe::PhysicsR => &["m", "D_R", "R"],
        }
    }

    pub fn width(&self) -> usize {
        N_DESIGN + self.extra().len()
    }

    /// Output column names: raw variables, then augmentations in order.
    pub fn feature_names(&self) -> Vec<String> {
        DESIGN_COLUMNS
            .iter()
            .chain(self.extra())
            .map(|s| s.to_string())
            .collect()
    }

    /// Appends the recipe's derived features (in SI) to a raw design matrix.
    pub fn augment(&self, x_raw: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x_raw.ncols() != N_DESIGN {
            return Err(Error::validation(
                "X",
                format!("{} columns, expected {N_DESIGN} raw design variables", x_raw.ncols()),
            ));
        }
        let width = self.width();
        let mut out = Array2::zeros((x_raw.nrows(), width));
        for (i, row) in x_raw.outer_iter().enumerate() {
            out.row_mut(i).slice_mut(ndarray::s![..N_DESIGN]).assign(&row);
            if *self == FeatureRecipe::Base {
                continue;
            }
            let plate = design_to_plate(row).map_err(|e| Error::validation(format!("X row {i}"), e.to_string()))?;
            out[[i, N_DESIGN]] = plate.surface_mass_density();
            out[[i, N_DESIGN + 1]] = plate.bending_stiffness_real();
            if *self == FeatureRecipe::PhysicsR {
                out[[i, N_DESIGN + 2]] = plate.resonance_coefficient();
            }
        }
        Ok(out)
    }
}

impl fmt::Display for FeatureRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureRecipe {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureRecipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::validation("recipe", format!("unknown recipe '{s}' (expected base, physics or physics_r)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    /// Zero mean, unit population standard deviation.
    Standardize,
    /// Fit range mapped onto [0, 1].
    MinMax,
}

/// Fitted per-column affine map x' = (x − offset) / scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub kind: ScalerKind,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    /// Learns column statistics. `labels` name the columns in error messages.
    pub fn fit(kind: ScalerKind, x: ArrayView2<f64>, labels: &[String]) -> Result<Scaler> {
        if x.nrows() < 2 {
            return Err(Error::validation("X", "scaler fit needs at least 2 rows"));
        }
        let mut offset = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if !(hi > lo) {
                let name = labels.get(j).cloned().unwrap_or_else(|| format!("column {j}"));
                return Err(Error::validation(name, "constant column cannot be scaled"));
            }
            match kind {
                ScalerKind::Standardize => {
                    let n = col.len() as f64;
                    let mean = col.sum() / n;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    offset.push(mean);
                    scale.push(var.sqrt());
                }
                ScalerKind::MinMax => {
                    offset.push(lo);
                    scale.push(hi - lo);
                }
            }
        }
        Ok(Scaler { kind, offset, scale })
    }

    pub fn width(&self) -> usize {
        self.offset.len()
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.width() {
            return Err(Error::validation(
                "X",
                format!("{} columns, scaler was fitted on {}", x.ncols(), self.width()),
            ));
        }
        Ok(())
    }

    /// Forward map; out-of-range data is not clipped.
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut out = x.to_owned();
        for mut row in out.outer_iter_mut() {
            for ((v, o), s) in row.iter_mut().zip(&self.offset).zip(&self.scale) {
                *v = (*v - o) / s;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut out = x.to_owned();
        for mut row in out.outer_iter_mut() {
            for ((v, o), s) in row.iter_mut().zip(&self.offset).zip(&self.scale) {
                *v = *v * s + o;
            }
        }
        Ok(out)
    }
}
