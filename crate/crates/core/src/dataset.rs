//! Design spaces, Latin hypercube sampling and STL datasets on disk.
//!
//! Design matrices are kept in the units of the design-space file
//! (ρ kg/m³, E GPa, ν, η %, h mm, a m, b m) so that files round-trip
//! bit-exactly; conversion to SI happens in [`design_to_plate`].

use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1, Axis as NdAxis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Simulator;
use crate::physics::PlateSpec;
use crate::spectrum::{band_average, Axis, BandScheme, FrequencyGrid, StlCurve};

/// Column names of the design variables, in canonical order.
pub const DESIGN_COLUMNS: [&str; 7] = ["rho", "E", "nu", "eta", "h", "a", "b"];

/// Number of raw design variables.
pub const N_DESIGN: usize = 7;

/// Per-variable bounds in design-file units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpace {
    pub rho: [f64; 2],
    #[serde(rename = "E_gpa")]
    pub e_gpa: [f64; 2],
    pub nu: [f64; 2],
    pub eta_percent: [f64; 2],
    pub h_mm: [f64; 2],
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl DesignSpace {
    /// The design space of interest: ρ 2000–3000, E 60–150 GPa, ν 0.25–0.35,
    /// η 0.1–2 %, h 5–7 mm, a and b 0.3–0.6 m.
    pub fn table1() -> Self {
        DesignSpace {
            rho: [2000.0, 3000.0],
            e_gpa: [60.0, 150.0],
            nu: [0.25, 0.35],
            eta_percent: [0.1, 2.0],
            h_mm: [5.0, 7.0],
            a: [0.3, 0.6],
            b: [0.3, 0.6],
        }
    }

    /// Bounds in canonical column order.
    pub fn bounds(&self) -> [[f64; 2]; N_DESIGN] {
        [self.rho, self.e_gpa, self.nu, self.eta_percent, self.h_mm, self.a, self.b]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in DESIGN_COLUMNS.iter().zip(self.bounds()) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::validation(
                    *name,
                    format!("bounds [{lo}, {hi}] need lower < upper"),
                ));
            }
        }
        // Both extreme corners must be physical plates; all others lie between.
        let lows = self.bounds().map(|b| b[0]);
        let highs = self.bounds().map(|b| b[1]);
        design_to_plate(ArrayView1::from(&lows))?;
        design_to_plate(ArrayView1::from(&highs))?;
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let space: DesignSpace = serde_json::from_str(&text)?;
        space.validate()?;
        Ok(space)
    }
}

impl Default for DesignSpace {
    fn default() -> Self {
        Self::table1()
    }
}

/// Converts one design row (design-file units) to an SI plate.
pub fn design_to_plate(row: ArrayView1<f64>) -> Result<PlateSpec> {
    if row.len() != N_DESIGN {
        return Err(Error::validation(
            "design row",
            format!("{} values, expected {N_DESIGN}", row.len()),
        ));
    }
    PlateSpec::new(
        row[0],
        row[1] * 1e9,
        row[2],
        row[3] / 100.0,
        row[4] * 1e-3,
        row[5],
        row[6],
    )
}

/// Latin hypercube sample of `n` points: each variable's range is cut into
/// `n` equal strata holding exactly one point, placed uniformly inside it.
pub fn lhs_sample(space: &DesignSpace, n: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::validation("n", "must be >= 1"));
    }
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, N_DESIGN));
    let mut strata: Vec<usize> = (0..n).collect();
    for (d, [lo, hi]) in space.bounds().into_iter().enumerate() {
        strata.shuffle(&mut rng);
        let width = (hi - lo) / n as f64;
        for (i, &s) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            // Clamp guards the last stratum against rounding up to `hi`.
            x[[i, d]] = (lo + width * (s as f64 + u)).min(hi);
        }
    }
    Ok(x)
}

/// Provenance of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator_version: String,
    pub simulator: Simulator,
    pub space: DesignSpace,
    pub seed: u64,
    pub n: usize,
    pub grid: FrequencyGrid,
    /// Present when responses are band averages.
    pub bands: Option<BandScheme>,
}

impl DatasetMeta {
    /// Frequencies of the response columns (grid points or band centers).
    pub fn output_frequencies(&self) -> Vec<f64> {
        match &self.bands {
            Some(b) => b.centers().to_vec(),
            None => self.grid.frequencies().to_vec(),
        }
    }
}

/// Designs paired with STL responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// N × 7 design matrix in design-file units.
    pub x: Array2<f64>,
    /// N × F STL matrix in dB.
    pub y: Array2<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>, meta: DatasetMeta) -> Result<Self> {
        if x.ncols() != N_DESIGN {
            return Err(Error::validation("X", format!("{} columns, expected {N_DESIGN}", x.ncols())));
        }
        if x.nrows() != y.nrows() {
            return Err(Error::validation(
                "Y",
                format!("{} rows for {} designs", y.nrows(), x.nrows()),
            ));
        }
        let freqs = meta.output_frequencies();
        if freqs.len() != y.ncols() {
            return Err(Error::validation(
                "Y",
                format!("{} columns but metadata lists {} frequencies", y.ncols(), freqs.len()),
            ));
        }
        for (name, m) in [("X", &x), ("Y", &y)] {
            if let Some(((r, c), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::validation(
                    name,
                    format!("non-finite value {v} at row {r}, column {c}"),
                ));
            }
        }
        Ok(Dataset { x, y, meta })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// The first `n` rows, in generation order.
    pub fn head(&self, n: usize) -> Result<Dataset> {
        if n == 0 || n > self.len() {
            return Err(Error::validation(
                "n",
                format!("subset of {n} rows from a dataset of {}", self.len()),
            ));
        }
        let idx: Vec<usize> = (0..n).collect();
        Ok(self.rows(&idx))
    }

    pub fn rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(NdAxis(0), idx),
            y: self.y.select(NdAxis(0), idx),
            meta: DatasetMeta {
                n: idx.len(),
                ..self.meta.clone()
            },
        }
    }

    pub fn output_frequencies(&self) -> Vec<f64> {
        self.meta.output_frequencies()
    }

    /// Band averages of a narrowband dataset; equal to generating with `bands`.
    pub fn band_averaged(&self, bands: &BandScheme) -> Result<Dataset> {
        if self.meta.bands.is_some() {
            return Err(Error::Config("dataset is already band-averaged".into()));
        }
        let axis = Axis::Grid(self.meta.grid.clone());
        let mut y = Array2::zeros((self.len(), bands.len()));
        for (row, mut out) in self.y.outer_iter().zip(y.outer_iter_mut()) {
            let curve = StlCurve::new(axis.clone(), row.to_vec())?;
            out.assign(&ArrayView1::from(&band_average(&curve, bands)?.values));
        }
        let meta = DatasetMeta {
            bands: Some(bands.clone()),
            ..self.meta.clone()
        };
        Dataset::new(self.x.clone(), y, meta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        };
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let header: Vec<String> = DESIGN_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.output_frequencies().iter().map(|f| format!("STL@{f}")))
            .collect();
        w.write_record(&header).map_err(csv_err)?;
        for (xr, yr) in self.x.outer_iter().zip(self.y.outer_iter()) {
            let record: Vec<String> = xr.iter().chain(yr.iter()).map(|v| v.to_string()).collect();
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;

        let meta_path = meta_path(path);
        let meta = serde_json::to_string_pretty(&self.meta)?;
        std::fs::write(&meta_path, meta + "\n").map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let meta_path = meta_path(path);
        let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&meta_text)?;

        let parse_err = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(std::io::BufReader::new(file));
        let header = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let freqs = meta.output_frequencies();
        if header.len() != N_DESIGN + freqs.len() {
            return Err(parse_err(
                1,
                format!(
                    "header has {} columns, metadata implies {}",
                    header.len(),
                    N_DESIGN + freqs.len()
                ),
            ));
        }
        for (i, (got, want)) in header.iter().zip(DESIGN_COLUMNS).enumerate() {
            if got != want {
                return Err(parse_err(1, format!("column {i} is '{got}', expected '{want}'")));
            }
        }
        let width = header.len();
        let mut values = Vec::new();
        let mut rows = 0;
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            if rec.len() != width {
                return Err(parse_err(line, format!("{} fields, expected {width}", rec.len())));
            }
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("column '{}': cannot parse '{field}'", &header[c])))?;
                if !v.is_finite() {
                    return Err(Error::validation(
                        header[c].to_string(),
                        format!("non-finite value '{field}' in data row {} (line {line})", i + 1),
                    ));
                }
                values.push(v);
            }
            rows += 1;
        }
        let all = Array2::from_shape_vec((rows, width), values)
            .map_err(|e| parse_err(0, e.to_string()))?;
        let x = all.slice(ndarray::s![.., ..N_DESIGN]).to_owned();
        let y = all.slice(ndarray::s![.., N_DESIGN..]).to_owned();
        Dataset::new(x, y, meta)
    }
}

/// Design matrix from a CSV whose first seven columns are the design
/// variables in canonical order; further columns (e.g. STL values) are ignored.
pub fn load_designs(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(std::io::BufReader::new(file));
    let header = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.len() < N_DESIGN {
        return Err(parse_err(1, format!("{} columns, need at least {N_DESIGN}", header.len())));
    }
    for (i, (got, want)) in header.iter().zip(DESIGN_COLUMNS).enumerate() {
        if got != want {
            return Err(parse_err(1, format!("column {i} is '{got}', expected '{want}'")));
        }
    }
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        for (c, field) in rec.iter().take(N_DESIGN).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("column '{}': cannot parse '{field}'", DESIGN_COLUMNS[c])))?;
            if !v.is_finite() {
                return Err(Error::validation(
                    DESIGN_COLUMNS[c],
                    format!("non-finite value '{field}' in data row {} (line {line})", i + 1),
                ));
            }
            values.push(v);
        }
    }
    let rows = values.len() / N_DESIGN;
    if rows == 0 {
        return Err(parse_err(1, "no design rows".into()));
    }
    let x = Array2::from_shape_vec((rows, N_DESIGN), values).map_err(|e| parse_err(0, e.to_string()))?;
    for (i, row) in x.outer_iter().enumerate() {
        design_to_plate(row).map_err(|e| parse_err(i + 2, e.to_string()))?;
    }
    Ok(x)
}

/// `<dir>/<stem>.meta.json` next to the dataset file.
pub fn meta_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

/// What to simulate for each design.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub simulator: Simulator,
    pub space: DesignSpace,
    pub grid: FrequencyGrid,
    pub bands: Option<BandScheme>,
}

impl GenerationConfig {
    pub fn new(simulator: Simulator) -> Self {
        GenerationConfig {
            simulator,
            space: DesignSpace::table1(),
            grid: FrequencyGrid::default(),
            bands: None,
        }
    }

    pub fn with_bands(mut self, bands: BandScheme) -> Self {
        self.bands = Some(bands);
        self
    }
}

/// Samples `n` designs and simulates each. Rows keep sample order whatever
/// the thread count; the only randomness is in the sampling.
pub fn generate_dataset(config: &GenerationConfig, n: usize, seed: u64) -> Result<Dataset> {
    config.simulator.validate()?;
    let x = lhs_sample(&config.space, n, seed)?;
    let rows: Vec<Vec<f64>> = x
        .outer_iter()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, row)| {
            let wrap = |source: Error| Error::Simulation {
                row: i,
                design: describe(row),
                source: Box::new(source),
            };
            let plate = design_to_plate(row).map_err(wrap)?;
            config
                .simulator
                .response(&plate, &config.grid, config.bands.as_ref())
                .map(|c| c.values)
                .map_err(wrap)
        })
        .collect::<Result<_>>()?;
    let width = rows.first().map_or(0, Vec::len);
    let y = Array2::from_shape_vec((n, width), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let meta = DatasetMeta {
        generator_version: concat!("stl-lab ", env!("CARGO_PKG_VERSION")).to_string(),
        simulator: config.simulator,
        space: config.space,
        seed,
        n,
        grid: config.grid.clone(),
        bands: config.bands.clone(),
    };
    Dataset::new(x, y, meta)
}

impl DatasetMeta {
    /// Regenerates a dataset of size `n` with the same configuration and seed.
    pub fn regenerate(&self, n: usize) -> Result<Dataset> {
        let config = GenerationConfig {
            simulator: self.simulator,
            space: self.space,
            grid: self.grid.clone(),
            bands: self.bands.clone(),
        };
        generate_dataset(&config, n, self.seed)
    }
}

fn describe(row: ArrayView1<f64>) -> String {
    DESIGN_COLUMNS
        .iter()
        .zip(row.iter())
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}
