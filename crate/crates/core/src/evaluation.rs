//! Error metrics, k-fold cross-validation and the benchmark harness.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::StlModel;
use crate::preprocess::FeatureRecipe;
use crate::surrogates::{train, Family, FamilyConfig, GridMeta, RegressorSpec, SurrogateModel};

/// Errors in dB over N designs × F frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// Mean over designs of the largest absolute error across frequencies.
    pub mme: f64,
}

pub fn metrics(y_true: ArrayView2<f64>, y_pred: ArrayView2<f64>) -> Result<Metrics> {
    if y_true.dim() != y_pred.dim() || y_true.is_empty() {
        return Err(Error::validation(
            "predictions",
            format!("shape {:?} against targets {:?}", y_pred.dim(), y_true.dim()),
        ));
    }
    let err = &y_pred - &y_true;
    let count = err.len() as f64;
    let rmse = (err.iter().map(|e| e * e).sum::<f64>() / count).sqrt();
    let mae = err.iter().map(|e| e.abs()).sum::<f64>() / count;
    let mme = err
        .outer_iter()
        .map(|r| r.iter().fold(0.0f64, |m, e| m.max(e.abs())))
        .sum::<f64>()
        / err.nrows() as f64;
    Ok(Metrics { rmse, mae, mme })
}

/// Mean and population standard deviation over folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

/// Something that can be fitted on (X, Y) and then predict.
pub trait Learner {
    type Fitted: Predictor;
    fn fit(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Self::Fitted>;
}

pub trait Predictor {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>>;
}

impl Predictor for SurrogateModel {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        SurrogateModel::predict(self, x)
    }
}

/// Trains surrogates of one spec and recipe.
#[derive(Debug, Clone)]
pub struct SurrogateLearner {
    pub spec: RegressorSpec,
    pub recipe: FeatureRecipe,
    pub grid_meta: GridMeta,
}

impl Learner for SurrogateLearner {
    type Fitted = SurrogateModel;
    fn fit(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<SurrogateModel> {
        train(&self.spec, self.recipe, x, y, self.grid_meta.clone())
    }
}

/// Seeded shuffle cut into `k` disjoint folds; the first `n mod k` folds get one extra row.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::validation("k", format!("{k} folds, need at least 2")));
    }
    if n < k {
        return Err(Error::validation("k", format!("{k} folds for only {n} rows")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Per-fold metrics plus mean training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: Vec<Metrics>,
    pub rmse: Stat,
    pub mae: Stat,
    pub mme: Stat,
    /// Mean wall-clock seconds of the fit calls.
    pub train_s: f64,
}

pub fn cross_validate<L: Learner>(
    learner: &L,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    if x.nrows() != y.nrows() {
        return Err(Error::validation("data", "X and Y row counts differ"));
    }
    let folds = kfold_indices(x.nrows(), k, seed)?;
    let mut results = Vec::with_capacity(k);
    let mut seconds = 0.0;
    for (f, test) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let (xt, yt) = (x.select(Axis(0), &train_idx), y.select(Axis(0), &train_idx));
        let start = Instant::now();
        let fitted = learner.fit(xt.view(), yt.view())?;
        seconds += start.elapsed().as_secs_f64();
        let pred = fitted.predict(x.select(Axis(0), test).view())?;
        results.push(metrics(y.select(Axis(0), test).view(), pred.view())?);
    }
    let pick = |g: fn(&Metrics) -> f64| Stat::of(&results.iter().map(g).collect::<Vec<_>>());
    Ok(CvResult {
        rmse: pick(|m| m.rmse),
        mae: pick(|m| m.mae),
        mme: pick(|m| m.mme),
        train_s: seconds / k as f64,
        folds: results,
    })
}

/// Cross-validation result with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: Option<StlModel>,
    pub family: Family,
    pub recipe: FeatureRecipe,
    pub n_samples: usize,
    pub k: usize,
    pub rmse: Stat,
    pub mae: Stat,
    pub mme: Stat,
    /// Mean training seconds per fold; omitted when timing is disabled.
    pub train_s: Option<f64>,
}

pub fn kfold_cv(dataset: &Dataset, spec: &RegressorSpec, recipe: FeatureRecipe, k: usize, seed: u64) -> Result<MetricsReport> {
    let learner = SurrogateLearner {
        spec: spec.clone(),
        recipe,
        grid_meta: GridMeta::from_dataset(&dataset.meta),
    };
    let cv = cross_validate(&learner, dataset.x.view(), dataset.y.view(), k, seed)?;
    Ok(MetricsReport {
        model: Some(dataset.meta.simulator.model),
        family: spec.family(),
        recipe,
        n_samples: dataset.len(),
        k,
        rmse: cv.rmse,
        mae: cv.mae,
        mme: cv.mme,
        train_s: Some(cv.train_s),
    })
}

/// Single seeded train/test split with `test_fraction` of the rows held out.
pub fn holdout(
    dataset: &Dataset,
    spec: &RegressorSpec,
    recipe: FeatureRecipe,
    test_fraction: f64,
    seed: u64,
) -> Result<MetricsReport> {
    let n = dataset.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    if !(test_fraction > 0.0 && test_fraction < 1.0) || n_test == 0 || n_test + 2 > n {
        return Err(Error::validation("test_fraction", format!("{test_fraction} of {n} rows")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test, tr) = idx.split_at(n_test);
    let train_set = dataset.rows(tr);
    let start = Instant::now();
    let model = train(spec, recipe, train_set.x.view(), train_set.y.view(), GridMeta::from_dataset(&dataset.meta))?;
    let seconds = start.elapsed().as_secs_f64();
    let test_set = dataset.rows(test);
    let m = metrics(test_set.y.view(), model.predict(test_set.x.view())?.view())?;
    let one = |v| Stat { mean: v, std: 0.0 };
    Ok(MetricsReport {
        model: Some(dataset.meta.simulator.model),
        family: spec.family(),
        recipe,
        n_samples: n,
        k: 1,
        rmse: one(m.rmse),
        mae: one(m.mae),
        mme: one(m.mme),
        train_s: Some(seconds),
    })
}

/// How benchmark subsets of size n are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsetting {
    /// First n rows in sampling order.
    Nested,
    /// A fresh n-point sample with the dataset's configuration and seed.
    Resample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub families: Vec<Family>,
    pub recipes: Vec<FeatureRecipe>,
    pub sizes: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    pub subsetting: Subsetting,
    pub timing: bool,
    /// Replaces a family's default hyperparameters.
    pub overrides: Vec<FamilyConfig>,
}

impl BenchmarkPlan {
    fn config(&self, family: Family, model: StlModel) -> FamilyConfig {
        self.overrides
            .iter()
            .find(|c| c.family() == family)
            .cloned()
            .unwrap_or_else(|| family.default_config(Some(model)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok { report: MetricsReport },
    Skipped { reason: String },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub model: StlModel,
    pub family: Family,
    pub recipe: FeatureRecipe,
    pub n: usize,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub plan: BenchmarkPlan,
    pub cells: Vec<BenchmarkCell>,
}

/// Full cross product of datasets × families × recipes × sizes. Each cell
/// uses the plan seed directly, so cells do not depend on one another.
pub fn benchmark(datasets: &[Dataset], plan: &BenchmarkPlan) -> Result<BenchmarkReport> {
    if plan.k < 2 {
        return Err(Error::validation("k", "need at least 2 folds"));
    }
    let mut cells = Vec::new();
    for ds in datasets {
        let model = ds.meta.simulator.model;
        for &n in &plan.sizes {
            let subset = if n > ds.len() && plan.subsetting == Subsetting::Nested {
                Err(format!("size {n} exceeds the {} rows of the dataset", ds.len()))
            } else {
                match plan.subsetting {
                    Subsetting::Nested => ds.head(n).map_err(|e| e.to_string()),
                    Subsetting::Resample => ds.meta.regenerate(n).map_err(|e| e.to_string()),
                }
            };
            for &family in &plan.families {
                for &recipe in &plan.recipes {
                    let outcome = match &subset {
                        Err(reason) => CellOutcome::Skipped { reason: reason.clone() },
                        Ok(data) => {
                            let spec = RegressorSpec {
                                config: plan.config(family, model),
                                seed: plan.seed,
                            };
                            match kfold_cv(data, &spec, recipe, plan.k, plan.seed) {
                                Ok(mut report) => {
                                    if !plan.timing {
                                        report.train_s = None;
                                    }
                                    CellOutcome::Ok { report }
                                }
                                Err(e) => CellOutcome::Failed { error: e.to_string() },
                            }
                        }
                    };
                    cells.push(BenchmarkCell {
                        model,
                        family,
                        recipe,
                        n,
                        outcome,
                    });
                }
            }
        }
    }
    Ok(BenchmarkReport {
        plan: plan.clone(),
        cells,
    })
}

impl BenchmarkReport {
    pub fn find(&self, model: StlModel, family: Family, recipe: FeatureRecipe, n: usize) -> Option<&MetricsReport> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.family == family && c.recipe == recipe && c.n == n)
            .and_then(|c| match &c.outcome {
                CellOutcome::Ok { report } => Some(report),
                _ => None,
            })
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Flat table, one row per cell; metrics are empty for skipped or failed cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "model", "family", "recipe", "n", "rmse_mean", "rmse_std", "mae_mean", "mae_std", "mme_mean", "mme_std",
            "train_s",
        ])
        .map_err(io)?;
        for c in &self.cells {
            let mut rec = vec![c.model.to_string(), c.family.to_string(), c.recipe.to_string(), c.n.to_string()];
            match &c.outcome {
                CellOutcome::Ok { report: r } => {
                    for s in [r.rmse, r.mae, r.mme] {
                        rec.push(s.mean.to_string());
                        rec.push(s.std.to_string());
                    }
                    rec.push(r.train_s.map(|t| t.to_string()).unwrap_or_default());
                }
                _ => rec.extend(std::iter::repeat_n(String::new(), 7)),
            }
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
