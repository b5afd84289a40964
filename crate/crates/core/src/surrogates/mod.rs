//! Regressor families behind one train/predict contract, with versioned JSON artifacts.

pub mod forest;
pub mod gpr;
mod lbfgsb;
pub mod nn;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use forest::{derive_seed, BoostedTrees, Forest, GbtConfig, RandomForest, RfConfig};
pub use gpr::{log_marginal_likelihood, GaussianProcess, GprConfig, Kernel};
pub use nn::{train_mlp, Mlp, NnConfig};

use crate::dataset::{DatasetMeta, N_DESIGN};
use crate::error::{Error, Result};
use crate::models::StlModel;
use crate::preprocess::{FeatureRecipe, Scaler, ScalerKind};

/// Artifact layout version written by [`SurrogateModel::save`].
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Nn,
    Gpr,
    Rf,
    Gbt,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Nn, Family::Gpr, Family::Rf, Family::Gbt];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Nn => "nn",
            Family::Gpr => "gpr",
            Family::Rf => "rf",
            Family::Gbt => "gbt",
        }
    }

    /// Default hyperparameters. Networks on modal-summation data train for 2500 epochs.
    pub fn default_config(&self, model: Option<StlModel>) -> FamilyConfig {
        match self {
            Family::Nn => FamilyConfig::Nn(NnConfig {
                epochs: if model == Some(StlModel::Modal) { 2500 } else { 1500 },
                ..Default::default()
            }),
            Family::Gpr => FamilyConfig::Gpr(GprConfig::default()),
            Family::Rf => FamilyConfig::Rf(RfConfig::default()),
            Family::Gbt => FamilyConfig::Gbt(GbtConfig::default()),
        }
    }

    /// Inputs are standardised and outputs min–max scaled for these families.
    fn scales_data(&self) -> bool {
        matches!(self, Family::Nn | Family::Gpr)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::validation("family", format!("unknown family '{s}' (expected nn, gpr, rf or gbt)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "config", rename_all = "lowercase")]
pub enum FamilyConfig {
    Nn(NnConfig),
    Gpr(GprConfig),
    Rf(RfConfig),
    Gbt(GbtConfig),
}

impl FamilyConfig {
    pub fn family(&self) -> Family {
        match self {
            FamilyConfig::Nn(_) => Family::Nn,
            FamilyConfig::Gpr(_) => Family::Gpr,
            FamilyConfig::Rf(_) => Family::Rf,
            FamilyConfig::Gbt(_) => Family::Gbt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FamilyConfig::Nn(c) => c.validate(),
            FamilyConfig::Gpr(c) => c.validate(),
            FamilyConfig::Rf(c) => c.validate(),
            FamilyConfig::Gbt(c) => c.validate(),
        }
    }

    fn config_value(&self) -> Result<Value> {
        Ok(match self {
            FamilyConfig::Nn(c) => serde_json::to_value(c)?,
            FamilyConfig::Gpr(c) => serde_json::to_value(c)?,
            FamilyConfig::Rf(c) => serde_json::to_value(c)?,
            FamilyConfig::Gbt(c) => serde_json::to_value(c)?,
        })
    }

    fn from_value(family: Family, v: Value) -> Result<Self> {
        Ok(match family {
            Family::Nn => FamilyConfig::Nn(serde_json::from_value(v)?),
            Family::Gpr => FamilyConfig::Gpr(serde_json::from_value(v)?),
            Family::Rf => FamilyConfig::Rf(serde_json::from_value(v)?),
            Family::Gbt => FamilyConfig::Gbt(serde_json::from_value(v)?),
        })
    }
}

/// Hyperparameters plus the seed of every random choice made during training.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSpec {
    pub config: FamilyConfig,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(family: Family, model: Option<StlModel>, seed: u64) -> Self {
        RegressorSpec {
            config: family.default_config(model),
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.config.family()
    }
}

/// What the output columns mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub frequencies: Vec<f64>,
    pub banded: bool,
    pub source_model: Option<StlModel>,
}

impl GridMeta {
    pub fn from_dataset(meta: &DatasetMeta) -> Self {
        GridMeta {
            frequencies: meta.output_frequencies(),
            banded: meta.bands.is_some(),
            source_model: Some(meta.simulator.model),
        }
    }

    fn labels(&self) -> Vec<String> {
        self.frequencies.iter().map(|f| format!("STL@{f}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalers {
    pub input: Option<Scaler>,
    pub output: Option<Scaler>,
}

/// Fitted parameters of one family.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedParams {
    Nn(Mlp),
    Gpr(GaussianProcess),
    Rf(RandomForest),
    Gbt(BoostedTrees),
}

impl FittedParams {
    fn to_value(&self) -> Result<Value> {
        Ok(match self {
            FittedParams::Nn(p) => serde_json::to_value(p)?,
            FittedParams::Gpr(p) => serde_json::to_value(p)?,
            FittedParams::Rf(p) => serde_json::to_value(p)?,
            FittedParams::Gbt(p) => serde_json::to_value(p)?,
        })
    }

    fn from_value(family: Family, v: Value) -> Result<Self> {
        Ok(match family {
            Family::Nn => FittedParams::Nn(serde_json::from_value(v)?),
            Family::Gpr => FittedParams::Gpr(serde_json::from_value(v)?),
            Family::Rf => FittedParams::Rf(serde_json::from_value(v)?),
            Family::Gbt => FittedParams::Gbt(serde_json::from_value(v)?),
        })
    }
}

/// A trained surrogate: recipe, scalers, family parameters and output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub spec: RegressorSpec,
    pub recipe: FeatureRecipe,
    pub scalers: Scalers,
    pub params: FittedParams,
    pub grid_meta: GridMeta,
}

#[derive(Serialize, Deserialize)]
struct Artifact {
    format_version: u32,
    family: String,
    seed: u64,
    config: Value,
    recipe: FeatureRecipe,
    scalers: Scalers,
    params: Value,
    grid_meta: GridMeta,
}

/// Fits `spec` on raw designs (N × 7, design-file units) and STL targets.
pub fn train(
    spec: &RegressorSpec,
    recipe: FeatureRecipe,
    x_raw: ArrayView2<f64>,
    y: ArrayView2<f64>,
    grid_meta: GridMeta,
) -> Result<SurrogateModel> {
    spec.config.validate()?;
    if x_raw.nrows() < 2 || x_raw.nrows() != y.nrows() {
        return Err(Error::validation(
            "training data",
            format!("{} designs and {} responses (need equal and >= 2)", x_raw.nrows(), y.nrows()),
        ));
    }
    if y.ncols() != grid_meta.frequencies.len() {
        return Err(Error::validation(
            "Y",
            format!("{} columns for {} grid frequencies", y.ncols(), grid_meta.frequencies.len()),
        ));
    }
    let x = recipe.augment(x_raw)?;
    let family = spec.family();
    let (scalers, xs, ys) = if family.scales_data() {
        let input = Scaler::fit(ScalerKind::Standardize, x.view(), &recipe.feature_names())?;
        let output = Scaler::fit(ScalerKind::MinMax, y, &grid_meta.labels())?;
        let xs = input.apply(x.view())?;
        let ys = output.apply(y)?;
        (
            Scalers {
                input: Some(input),
                output: Some(output),
            },
            xs,
            ys,
        )
    } else {
        (Scalers { input: None, output: None }, x, y.to_owned())
    };

    let params = match &spec.config {
        FamilyConfig::Nn(c) => FittedParams::Nn(train_mlp(xs.view(), ys.view(), c, spec.seed)?.0),
        FamilyConfig::Gpr(c) => FittedParams::Gpr(GaussianProcess::fit(xs.view(), ys.view(), c, spec.seed)?),
        FamilyConfig::Rf(c) => FittedParams::Rf(RandomForest::fit(xs.view(), ys.view(), c, spec.seed)?),
        FamilyConfig::Gbt(c) => FittedParams::Gbt(BoostedTrees::fit(xs.view(), ys.view(), c)?),
    };
    Ok(SurrogateModel {
        spec: spec.clone(),
        recipe,
        scalers,
        params,
        grid_meta,
    })
}

impl SurrogateModel {
    pub fn family(&self) -> Family {
        self.spec.family()
    }

    /// Predicted STL (dB) for raw designs.
    pub fn predict(&self, x_raw: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x_raw.ncols() != N_DESIGN {
            return Err(Error::validation(
                "X",
                format!("{} columns, the model was trained on {N_DESIGN} design variables", x_raw.ncols()),
            ));
        }
        let mut x = self.recipe.augment(x_raw)?;
        if let Some(s) = &self.scalers.input {
            x = s.apply(x.view())?;
        }
        let mut y = match &self.params {
            FittedParams::Nn(p) => p.predict(x.view()),
            FittedParams::Gpr(p) => p.predict(x.view()),
            FittedParams::Rf(p) => p.predict(x.view()),
            FittedParams::Gbt(p) => p.predict(x.view()),
        };
        if let Some(s) = &self.scalers.output {
            y = s.invert(y.view())?;
        }
        if let Some(((r, c), v)) = y.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite prediction {v} at row {r}, output {c}")));
        }
        Ok(y)
    }

    pub fn to_json(&self) -> Result<String> {
        let art = Artifact {
            format_version: FORMAT_VERSION,
            family: self.family().name().to_string(),
            seed: self.spec.seed,
            config: self.spec.config.config_value()?,
            recipe: self.recipe,
            scalers: self.scalers.clone(),
            params: self.params.to_value()?,
            grid_meta: self.grid_meta.clone(),
        };
        Ok(serde_json::to_string(&art)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let found = value.get("format_version").and_then(Value::as_u64).ok_or_else(|| {
            Error::validation("format_version", "missing or not an unsigned integer")
        })?;
        if found != FORMAT_VERSION as u64 {
            return Err(Error::Version {
                found: found.min(u32::MAX as u64) as u32,
                expected: FORMAT_VERSION,
            });
        }
        let art: Artifact = serde_json::from_value(value)?;
        let family: Family = art.family.parse()?;
        Ok(SurrogateModel {
            spec: RegressorSpec {
                config: FamilyConfig::from_value(family, art.config)?,
                seed: art.seed,
            },
            recipe: art.recipe,
            scalers: art.scalers,
            params: FittedParams::from_value(family, art.params)?,
            grid_meta: art.grid_meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                path: path.to_path_buf(),
                line: j.line(),
                reason: j.to_string(),
            },
            other => other,
        })
    }
}
