//! Frequency axes, STL curves and one-third-octave band averaging.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing list of analysis frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid(Vec<f64>);

impl FrequencyGrid {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::validation("frequencies", "grid is empty"));
        }
        if let Some(f) = frequencies.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(Error::validation(
                "frequencies",
                format!("{f} is not a positive finite frequency"),
            ));
        }
        if let Some(w) = frequencies.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                "frequencies",
                format!("not strictly increasing at {} -> {}", w[0], w[1]),
            ));
        }
        Ok(FrequencyGrid(frequencies))
    }

    /// `n` geometrically spaced frequencies from `lo` to `hi` inclusive.
    pub fn geometric(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(vec![lo]);
        }
        let ratio = (hi / lo).ln() / (n - 1) as f64;
        let mut f: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).collect();
        if let Some(last) = f.last_mut() {
            *last = hi;
        }
        Self::new(f)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl Default for FrequencyGrid {
    /// 128 geometrically spaced points between 50 Hz and 2.5 kHz.
    fn default() -> Self {
        Self::geometric(50.0, 2500.0, 128).expect("default grid is valid")
    }
}

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.0
    }
}

/// Base-10 one-third-octave bands, indexed by n with center 10^(n/10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BandRange", into = "BandRange")]
pub struct BandScheme {
    first: i32,
    centers: Vec<f64>,
    edges: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct BandRange {
    first_index: i32,
    last_index: i32,
}

impl BandScheme {
    /// Bands `first..=last` (index 18 is 63 Hz, 33 is 2 kHz).
    pub fn third_octave(first: i32, last: i32) -> Result<Self> {
        if first > last {
            return Err(Error::validation("bands", format!("empty range {first}..={last}")));
        }
        let centers = (first..=last).map(|n| 10f64.powf(n as f64 / 10.0)).collect();
        // Shared edges so neighbouring bands meet bit-exactly.
        let edge = |k: i32| 10f64.powf((2 * k - 1) as f64 / 20.0);
        let edges = (first..=last).map(|n| (edge(n), edge(n + 1))).collect();
        Ok(BandScheme { first, centers, edges })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// (lower, upper) per band; a frequency f belongs to the band if lower ≤ f < upper.
    pub fn edges(&self) -> &[(f64, f64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn first_index(&self) -> i32 {
        self.first
    }
}

impl Default for BandScheme {
    /// 63 Hz to 2 kHz, 16 bands.
    fn default() -> Self {
        Self::third_octave(18, 33).expect("default bands are valid")
    }
}

impl TryFrom<BandRange> for BandScheme {
    type Error = Error;
    fn try_from(r: BandRange) -> Result<Self> {
        Self::third_octave(r.first_index, r.last_index)
    }
}

impl From<BandScheme> for BandRange {
    fn from(b: BandScheme) -> Self {
        BandRange {
            first_index: b.first,
            last_index: b.first + b.centers.len() as i32 - 1,
        }
    }
}

/// Abscissa of an [`StlCurve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Grid(FrequencyGrid),
    Bands(BandScheme),
}

impl Axis {
    /// Grid frequencies or band centers.
    pub fn frequencies(&self) -> &[f64] {
        match self {
            Axis::Grid(g) => g.frequencies(),
            Axis::Bands(b) => b.centers(),
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn column_name(&self) -> &'static str {
        match self {
            Axis::Grid(_) => "freq_hz",
            Axis::Bands(_) => "band_center_hz",
        }
    }
}

/// STL in dB over a frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct StlCurve {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl StlCurve {
    pub fn new(axis: Axis, values: Vec<f64>) -> Result<Self> {
        if axis.len() != values.len() {
            return Err(Error::validation(
                "values",
                format!("{} values for {} frequencies", values.len(), axis.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite STL at {} Hz",
                axis.frequencies()[i]
            )));
        }
        Ok(StlCurve { axis, values })
    }

    /// STL = −10 log₁₀ τ for each transparency.
    pub fn from_transparency(axis: Axis, tau: &[f64]) -> Result<Self> {
        Self::new(axis, tau.iter().map(|&t| tau_to_db(t)).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e));
        w.write_record([self.axis.column_name(), "stl_db"]).map_err(io)?;
        for (f, v) in self.axis.frequencies().iter().zip(&self.values) {
            w.write_record([f.to_string(), v.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub fn tau_to_db(tau: f64) -> f64 {
    -10.0 * tau.log10()
}

pub fn db_to_tau(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Energy average of a narrowband curve into bands: the transparencies of
/// the grid points inside each band are averaged, then converted to dB.
pub fn band_average(curve: &StlCurve, bands: &BandScheme) -> Result<StlCurve> {
    let Axis::Grid(grid) = &curve.axis else {
        return Err(Error::Config("band_average needs a narrowband curve".into()));
    };
    let mut values = Vec::with_capacity(bands.len());
    let mut empty = Vec::new();
    for (&center, &(lo, hi)) in bands.centers().iter().zip(bands.edges()) {
        let (sum, n) = grid
            .frequencies()
            .iter()
            .zip(&curve.values)
            .filter(|(f, _)| lo <= **f && **f < hi)
            .fold((0.0, 0usize), |(s, n), (_, &db)| (s + db_to_tau(db), n + 1));
        if n == 0 {
            empty.push(format!("{center:.1} Hz [{lo:.1}, {hi:.1})"));
        } else {
            values.push(tau_to_db(sum / n as f64));
        }
    }
    if !empty.is_empty() {
        return Err(Error::Config(format!(
            "no grid frequency inside band(s): {}",
            empty.join(", ")
        )));
    }
    StlCurve::new(Axis::Bands(bands.clone()), values)
}
