//! Per-frequency mean-decrease-in-impurity importance maps.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::preprocess::FeatureRecipe;
use crate::surrogates::tree::Presorted;
use crate::surrogates::{Forest, RandomForest, RfConfig};

/// MDI of a fitted forest, normalised to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdi {
    pub importances: Vec<f64>,
    /// False when the forest never split; the importances are then uniform.
    pub informative: bool,
}

/// MDI of a random forest. Per-output forests are averaged over outputs.
pub fn mdi_importances(rf: &RandomForest) -> Mdi {
    let forests: Vec<&Forest> = match rf {
        RandomForest::Joint(f) => vec![f],
        RandomForest::PerOutput(fs) => fs.iter().collect(),
    };
    let p = forests[0].n_features;
    let mut acc = vec![0.0; p];
    let mut informative = false;
    for f in &forests {
        let (imp, ok) = f.mdi();
        informative |= ok;
        for (a, v) in acc.iter_mut().zip(imp) {
            *a += v;
        }
    }
    let total: f64 = acc.iter().sum();
    Mdi {
        importances: acc.iter().map(|v| v / total).collect(),
        informative,
    }
}

/// Normalised importance of every feature at every output frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMap {
    pub features: Vec<String>,
    pub frequencies: Vec<f64>,
    /// features × frequencies; each column sums to 1.
    pub values: Array2<f64>,
    /// Columns whose forest never split (constant target); reported uniform.
    pub uninformative: Vec<usize>,
}

impl ImportanceMap {
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    /// Column whose band or grid point contains `freq`, by nearest center on a log axis.
    pub fn column_near(&self, freq: f64) -> usize {
        let d = |f: f64| (f.ln() - freq.ln()).abs();
        (0..self.frequencies.len())
            .min_by(|&i, &j| d(self.frequencies[i]).total_cmp(&d(self.frequencies[j])))
            .unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = std::iter::once("feature".to_string())
            .chain(self.frequencies.iter().map(|f| format!("imp@{f}")))
            .collect();
        w.write_record(&header).map_err(io)?;
        for (name, row) in self.features.iter().zip(self.values.outer_iter()) {
            let rec: Vec<String> = std::iter::once(name.clone()).chain(row.iter().map(|v| v.to_string())).collect();
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

/// One single-output forest per response column, MDI per column.
pub fn importance_map(dataset: &Dataset, recipe: FeatureRecipe, cfg: &RfConfig, seed: u64) -> Result<ImportanceMap> {
    cfg.validate()?;
    if dataset.len() < 2 {
        return Err(Error::validation("dataset", "needs at least 2 rows"));
    }
    let x = recipe.augment(dataset.x.view())?;
    let data = Presorted::new(x.view());
    let columns: Vec<(Vec<f64>, bool)> = (0..dataset.y.ncols())
        .into_par_iter()
        .map(|j| {
            let y: Vec<f64> = dataset.y.column(j).to_vec();
            Forest::fit(&data, &y, 1, cfg, seed).mdi()
        })
        .collect();
    let p = x.ncols();
    let mut values = Array2::zeros((p, columns.len()));
    let mut uninformative = Vec::new();
    for (j, (imp, ok)) in columns.into_iter().enumerate() {
        if !ok {
            uninformative.push(j);
        }
        for (i, v) in imp.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    Ok(ImportanceMap {
        features: recipe.feature_names(),
        frequencies: dataset.output_frequencies(),
        values,
        uninformative,
    })
}
