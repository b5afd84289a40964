//! Random forests and gradient-boosted trees built on the shared CART engine.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Presorted, Tree};
use crate::error::{Error, Result};

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-task `index` under `master`, independent of scheduling.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfConfig {
    pub n_trees: usize,
    /// `None` grows every tree until its leaves are pure.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    /// One single-output forest per output column instead of one joint forest.
    pub per_output: bool,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 200,
            max_depth: None,
            bootstrap: true,
            per_output: false,
        }
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::validation("n_trees", "must be >= 1"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::validation("max_depth", "must be >= 1"));
        }
        Ok(())
    }
}

/// Bagged trees sharing one output space; the prediction is the tree mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_features: usize,
    pub n_outputs: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub(crate) fn fit(
        data: &Presorted,
        y: &[f64],
        n_outputs: usize,
        cfg: &RfConfig,
        seed: u64,
    ) -> Forest {
        let n = data.n_rows();
        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| {
                let rows: Vec<u32> = if cfg.bootstrap {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                    (0..n).map(|_| rng.random_range(0..n as u32)).collect()
                } else {
                    (0..n as u32).collect()
                };
                grow(data, y, n_outputs, &rows, cfg.max_depth)
            })
            .collect();
        Forest {
            n_features: data.n_features(),
            n_outputs,
            trees,
        }
    }

    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.trees {
            for (o, v) in out.iter_mut().zip(t.predict_row(x)) {
                *o += v;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
    }

    /// Mean decrease in impurity, averaged over trees and normalised to sum 1.
    /// A forest without a single split yields uniform weights and `false`.
    pub fn mdi(&self) -> (Vec<f64>, bool) {
        let mut imp = vec![0.0; self.n_features];
        for t in &self.trees {
            for (a, b) in imp.iter_mut().zip(t.impurity_decrease(self.n_features)) {
                *a += b;
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
            (imp, true)
        } else {
            (vec![1.0 / self.n_features as f64; self.n_features], false)
        }
    }
}

/// Fitted random forest: joint multi-output, or one forest per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomForest {
    Joint(Forest),
    PerOutput(Vec<Forest>),
}

impl RandomForest {
    pub fn fit(x: ArrayView2<f64>, y: ArrayView2<f64>, cfg: &RfConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        check_xy(&x, &y)?;
        let data = Presorted::new(x);
        if cfg.per_output {
            let forests = (0..y.ncols())
                .into_par_iter()
                .map(|j| {
                    let col: Vec<f64> = y.column(j).to_vec();
                    Forest::fit(&data, &col, 1, cfg, seed)
                })
                .collect();
            Ok(RandomForest::PerOutput(forests))
        } else {
            let flat: Vec<f64> = y.iter().copied().collect();
            Ok(RandomForest::Joint(Forest::fit(&data, &flat, y.ncols(), cfg, seed)))
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            RandomForest::Joint(f) => f.n_outputs,
            RandomForest::PerOutput(fs) => fs.len(),
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.n_outputs()));
        let mut buf = vec![0.0; 1];
        for (row, mut o) in x.outer_iter().zip(out.outer_iter_mut()) {
            let row = row.to_vec();
            match self {
                RandomForest::Joint(f) => f.predict_into(&row, o.as_slice_mut().unwrap()),
                RandomForest::PerOutput(fs) => {
                    for (j, f) in fs.iter().enumerate() {
                        f.predict_into(&row, &mut buf);
                        o[j] = buf[0];
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbtConfig {
    pub n_stages: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            n_stages: 125,
            max_depth: Some(10),
            learning_rate: 0.05,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_stages == 0 {
            return Err(Error::validation("n_stages", "must be >= 1"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::validation("max_depth", "must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("learning_rate", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Squared-loss boosting for a single output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Booster {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl Booster {
    fn fit(data: &Presorted, y: &[f64], cfg: &GbtConfig) -> (Booster, Vec<f64>) {
        let n = y.len();
        let init = y.iter().sum::<f64>() / n as f64;
        let mut pred = vec![init; n];
        let rows: Vec<u32> = (0..n as u32).collect();
        let mut trees = Vec::with_capacity(cfg.n_stages);
        let mut mse = Vec::with_capacity(cfg.n_stages);
        let mut resid = vec![0.0; n];
        let mut x_row = vec![0.0; data.n_features()];
        for _ in 0..cfg.n_stages {
            for ((r, t), p) in resid.iter_mut().zip(y).zip(&pred) {
                *r = t - p;
            }
            let tree = grow(data, &resid, 1, &rows, cfg.max_depth);
            for (i, p) in pred.iter_mut().enumerate() {
                data.row_into(i, &mut x_row);
                *p += cfg.learning_rate * tree.predict_row(&x_row)[0];
            }
            mse.push(y.iter().zip(&pred).map(|(t, p)| (t - p).powi(2)).sum::<f64>() / n as f64);
            trees.push(tree);
        }
        (
            Booster {
                init,
                learning_rate: cfg.learning_rate,
                trees,
            },
            mse,
        )
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.init, |acc, t| acc + self.learning_rate * t.predict_row(x)[0])
    }
}

/// One booster per output column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub boosters: Vec<Booster>,
}

impl BoostedTrees {
    pub fn fit(x: ArrayView2<f64>, y: ArrayView2<f64>, cfg: &GbtConfig) -> Result<Self> {
        Ok(Self::fit_with_history(x, y, cfg)?.0)
    }

    /// Also returns each output's training MSE after every stage.
    pub fn fit_with_history(x: ArrayView2<f64>, y: ArrayView2<f64>, cfg: &GbtConfig) -> Result<(Self, Vec<Vec<f64>>)> {
        cfg.validate()?;
        check_xy(&x, &y)?;
        let data = Presorted::new(x);
        let (boosters, hist) = (0..y.ncols())
            .into_par_iter()
            .map(|j| Booster::fit(&data, &y.column(j).to_vec(), cfg))
            .collect::<Vec<_>>()
            .into_iter()
            .unzip();
        Ok((BoostedTrees { boosters }, hist))
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.boosters.len()));
        for (row, mut o) in x.outer_iter().zip(out.outer_iter_mut()) {
            let row = row.to_vec();
            for (v, b) in o.iter_mut().zip(&self.boosters) {
                *v = b.predict_row(&row);
            }
        }
        out
    }
}

fn check_xy(x: &ArrayView2<f64>, y: &ArrayView2<f64>) -> Result<()> {
    if x.nrows() < 2 || x.nrows() != y.nrows() {
        return Err(Error::validation(
            "training data",
            format!("{} input rows and {} target rows (need equal and >= 2)", x.nrows(), y.nrows()),
        ));
    }
    if y.ncols() == 0 || x.ncols() == 0 {
        return Err(Error::validation("training data", "empty inputs or targets"));
    }
    Ok(())
}
