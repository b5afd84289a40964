//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! `STL_LAB_ACCEPTANCE=1,5,10` restricts the run to the listed criteria.
//! Simulated datasets are cached under `target/acceptance-data` and rebuilt
//! whenever the cached provenance differs from what a criterion asks for.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stl_lab::dataset::{design_to_plate, generate_dataset, lhs_sample, Dataset, DesignSpace, GenerationConfig};
use stl_lab::evaluation::{kfold_cv, MetricsReport};
use stl_lab::models::green::green_radiation_impedance;
use stl_lab::models::{infinite_plate_tau, radiation_efficiency};
use stl_lab::preprocess::{FeatureRecipe, Scaler, ScalerKind};
use stl_lab::sensitivity::{importance_map, ImportanceMap};
use stl_lab::surrogates::{
    log_marginal_likelihood, BoostedTrees, Family, FamilyConfig, GbtConfig, GprConfig, Kernel, Mlp, NnConfig, RandomForest, RegressorSpec,
    RfConfig,
};
use stl_lab::{BandScheme, FluidSpec, FrequencyGrid, PlateSpec, Simulator, StlModel, WaveIncidence};

const DATA_SEED: u64 = 2024;
const N_FULL: usize = 2000;
const CV_SEED: u64 = 11;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

struct Criterion {
    id: u32,
    title: &'static str,
    run: fn(&mut Cache) -> Outcome,
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("STL_LAB_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria = [
        Criterion { id: 1, title: "mass-law oracle", run: mass_law },
        Criterion { id: 2, title: "coincidence dip", run: coincidence_dip },
        Criterion { id: 3, title: "modal resonance", run: modal_resonance },
        Criterion { id: 4, title: "correction-factor limits", run: correction_limits },
        Criterion { id: 5, title: "quadrature convergence", run: convergence },
        Criterion { id: 6, title: "random-forest RMSE reproduction", run: rmse_reproduction },
        Criterion { id: 7, title: "feature-engineering direction", run: feature_direction },
        Criterion { id: 8, title: "neural-network superiority", run: nn_superiority },
        Criterion { id: 9, title: "sensitivity patterns", run: sensitivity_patterns },
        Criterion { id: 10, title: "numerical property suite", run: numerical_properties },
        Criterion { id: 11, title: "CLI determinism", run: cli_determinism },
    ];
    let mut cache = Cache::new();
    let mut failed = 0;
    for c in &criteria {
        if only.as_ref().is_some_and(|ids| !ids.contains(&c.id)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match (c.run)(&mut cache) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {:>2} {} ({:.1} s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

/// Datasets shared between criteria, loaded from disk or simulated once.
struct Cache {
    dir: PathBuf,
    grid: Vec<(StlModel, Dataset)>,
}

impl Cache {
    fn new() -> Self {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance-data");
        Cache { dir, grid: Vec::new() }
    }

    /// The 2000-design narrowband dataset for `model`.
    fn full(&mut self, model: StlModel) -> Result<&Dataset, Box<dyn std::error::Error>> {
        if let Some(i) = self.grid.iter().position(|(m, _)| *m == model) {
            return Ok(&self.grid[i].1);
        }
        let cfg = GenerationConfig::new(Simulator::new(model));
        let path = self.dir.join(format!("{model}_n{N_FULL}_s{DATA_SEED}.csv"));
        let fits = |d: &Dataset| {
            let m = &d.meta;
            m.simulator == cfg.simulator
                && m.space == cfg.space
                && m.grid == cfg.grid
                && m.bands == cfg.bands
                && m.seed == DATA_SEED
                && m.n == N_FULL
        };
        let ds = match Dataset::load(&path) {
            Ok(d) if fits(&d) => d,
            _ => {
                eprintln!("simulating {N_FULL} {model} designs into {}", path.display());
                std::fs::create_dir_all(&self.dir)?;
                let d = generate_dataset(&cfg, N_FULL, DATA_SEED)?;
                d.save(&path)?;
                d
            }
        };
        self.grid.push((model, ds));
        Ok(&self.grid.last().unwrap().1)
    }

    /// Band averages of the narrowband dataset for the modal model.
    fn modal_banded(&mut self) -> Result<Dataset, Box<dyn std::error::Error>> {
        Ok(self.full(StlModel::Modal)?.band_averaged(&BandScheme::default())?)
    }

    /// Infinite, correction and band-averaged modal datasets.
    fn benchmark_sets(&mut self) -> Result<Vec<(&'static str, Dataset)>, Box<dyn std::error::Error>> {
        Ok(vec![
            ("infinite", self.full(StlModel::Infinite)?.clone()),
            ("correction", self.full(StlModel::Correction)?.clone()),
            ("ms-banded", self.modal_banded()?),
        ])
    }
}

fn designs(n: usize, seed: u64) -> Vec<PlateSpec> {
    let x = lhs_sample(&DesignSpace::table1(), n, seed).unwrap();
    x.outer_iter().map(|r| design_to_plate(r).unwrap()).collect()
}

fn cv(ds: &Dataset, family: Family, recipe: FeatureRecipe, per_output_rf: bool) -> stl_lab::Result<MetricsReport> {
    let mut spec = RegressorSpec::new(family, Some(ds.meta.simulator.model), CV_SEED);
    if let FamilyConfig::Rf(c) = &mut spec.config {
        c.per_output = per_output_rf;
    }
    kfold_cv(ds, &spec, recipe, 5, CV_SEED)
}

fn mass_law(_: &mut Cache) -> Outcome {
    let start = Instant::now();
    let grid = FrequencyGrid::default();
    let air = FluidSpec::air();
    let mut worst: f64 = 0.0;
    for plate in designs(10, 1) {
        let m = plate.surface_mass_density();
        for &f in grid.frequencies() {
            let inc = WaveIncidence::at_frequency(0.0, 0.0, f)?;
            let stl = -10.0 * infinite_plate_tau(&plate, &air, &inc).log10();
            let omega = 2.0 * PI * f;
            let law = 10.0 * (1.0 + (omega * m / (2.0 * air.impedance())).powi(2)).log10();
            worst = worst.max((stl - law).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-9 && secs < 1.0, format!("max deviation {worst:.2e} dB in {secs:.3} s")))
}

/// Deepest interior local minimum, or the top end while the curve still falls.
fn dip_frequency(freqs: &[f64], stl: &[f64]) -> f64 {
    let interior = (1..stl.len() - 1)
        .filter(|&i| stl[i] < stl[i - 1] && stl[i] <= stl[i + 1])
        .min_by(|&i, &j| stl[i].total_cmp(&stl[j]));
    match interior {
        Some(i) => freqs[i],
        None => *freqs.last().unwrap(),
    }
}

fn coincidence_dip(_: &mut Cache) -> Outcome {
    let start = Instant::now();
    let grid = FrequencyGrid::default();
    let sim = Simulator::new(StlModel::Infinite);
    let third = 2f64.powf(1.0 / 3.0);
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, plate) in designs(10, 2).iter().enumerate() {
        let curve = sim.stl_curve(plate, &grid)?;
        let fc = plate.critical_frequency(&sim.fluid);
        let fd = dip_frequency(grid.frequencies(), &curve.values);
        // A dip at the grid edge with f_crit beyond it is checked against the edge.
        let target = fc.min(grid.max());
        let ratio = (fd / target).max(target / fd);
        worst = worst.max(ratio.log2() * 3.0);
        if ratio > third * (1.0 + 1e-12) {
            misses.push(format!("design {i}: dip {fd:.0} Hz, f_crit {fc:.0} Hz"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("worst offset {worst:.2} third-octaves in {secs:.1} s {misses:?}");
    Ok((misses.is_empty() && secs < 30.0, detail))
}

fn modal_resonance(_: &mut Cache) -> Outcome {
    let start = Instant::now();
    let sim = Simulator::new(StlModel::Modal);
    let doubled = Simulator { truncation: sim.truncation.doubled(), ..sim };
    let bands = BandScheme::default();
    let grid = FrequencyGrid::default();
    let mut problems = Vec::new();
    let (mut worst_offset, mut worst_change): (f64, f64) = (0.0, 0.0);
    for (i, plate) in designs(10, 3).iter().enumerate() {
        let f11 = plate.natural_frequency(1, 1)?.re / (2.0 * PI);
        let local = FrequencyGrid::geometric(0.8 * f11, 1.25 * f11, 121)?;
        let curve = sim.stl_curve(plate, &local)?;
        let (f, v) = (local.frequencies(), &curve.values);
        let nearest = (1..v.len() - 1)
            .filter(|&j| v[j] < v[j - 1] && v[j] <= v[j + 1])
            .map(|j| (f[j] / f11 - 1.0).abs())
            .fold(f64::INFINITY, f64::min);
        worst_offset = worst_offset.max(nearest);
        if nearest > 0.05 {
            problems.push(format!("design {i}: no minimum within 5% of f11 = {f11:.1} Hz"));
        }
        let base = sim.response(plate, &grid, Some(&bands))?;
        let fine = doubled.response(plate, &grid, Some(&bands))?;
        let change = base.values.iter().zip(&fine.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_change = worst_change.max(change);
        if change >= 0.5 {
            problems.push(format!("design {i}: doubled truncation moves bands by {change:.3} dB"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "minimum within {:.2}% of f11, truncation change {worst_change:.3} dB, {secs:.1} s {problems:?}",
        100.0 * worst_offset
    );
    Ok((problems.is_empty() && secs < 600.0, detail))
}

fn correction_limits(_: &mut Cache) -> Outcome {
    let air = FluidSpec::air();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for plate in designs(20, 4) {
        let theta: f64 = rng.random_range(0.0..1.5);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let f = rng.random_range(50.0..2500.0);
        let k = air.wavenumber(2.0 * PI * f);
        let (kx, ky) = (k * theta.sin() * phi.cos(), k * theta.sin() * phi.sin());
        let fast = radiation_efficiency(plate.width(), plate.length(), k, kx, ky)?;
        let oracle = green_radiation_impedance(plate.width(), plate.length(), k, kx, ky, 1).re;
        worst = worst.max((fast - oracle).abs() / oracle.abs());
    }

    let grid = FrequencyGrid::default();
    let bands = BandScheme::default();
    let mut gap: f64 = 0.0;
    for plate in designs(3, 5) {
        let big = plate.with_dimensions(5.0, 5.0)?;
        let cor = Simulator::new(StlModel::Correction).response(&big, &grid, Some(&bands))?;
        let inf = Simulator::new(StlModel::Infinite).response(&big, &grid, Some(&bands))?;
        for ((fc, a), b) in bands.centers().iter().zip(&cor.values).zip(&inf.values) {
            if *fc > 500.0 {
                gap = gap.max((a - b).abs());
            }
        }
    }
    let pass = worst <= 0.02 && gap <= 2.0;
    Ok((pass, format!("σ_R vs oracle max {:.3}%, 5 m plate gap above 500 Hz {gap:.3} dB", 100.0 * worst)))
}

fn convergence(_: &mut Cache) -> Outcome {
    let grid = FrequencyGrid::default();
    let mut worst: Vec<(StlModel, f64)> = Vec::new();
    for model in StlModel::ALL {
        let sim = Simulator::new(model);
        let refined = Simulator { quadrature: sim.quadrature.refined(), ..sim };
        let mut w: f64 = 0.0;
        for plate in designs(3, 6) {
            let a = sim.stl_curve(&plate, &grid)?;
            let b = refined.stl_curve(&plate, &grid)?;
            w = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(w, f64::max);
        }
        worst.push((model, w));
    }

    let q = Simulator::new(StlModel::Correction).quadrature;
    let phi_sum: f64 = q.phi_rule().iter().map(|p| p.1).sum();
    let mut den_err: f64 = 0.0;
    for plate in designs(10, 7) {
        for &f in grid.frequencies() {
            let theta_sum: f64 = q.theta_rule(&plate, &FluidSpec::air(), 2.0 * PI * f)?.iter().map(|t| t.weight).sum();
            den_err = den_err.max((theta_sum * phi_sum - PI).abs());
        }
    }
    let pass = worst.iter().all(|(_, w)| *w < 0.05) && den_err <= 1e-10;
    let changes: Vec<String> = worst.iter().map(|(m, w)| format!("{m} {w:.1e}")).collect();
    Ok((pass, format!("refinement change {} dB, denominator error {den_err:.1e}", changes.join(", "))))
}

fn rmse_reproduction(cache: &mut Cache) -> Outcome {
    let start = Instant::now();
    let infinite = cache.full(StlModel::Infinite)?.clone();
    let correction = cache.full(StlModel::Correction)?.clone();
    let banded = cache.modal_banded()?;
    let cases = [
        ("infinite physics", &infinite, FeatureRecipe::Physics, 0.25),
        ("infinite base", &infinite, FeatureRecipe::Base, 0.40),
        ("correction physics", &correction, FeatureRecipe::Physics, 0.50),
        ("ms-banded physics_r", &banded, FeatureRecipe::PhysicsR, 2.5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ds, recipe, tol) in cases {
        let r = cv(ds, Family::Rf, recipe, true)?;
        pass &= r.rmse.mean <= tol;
        parts.push(format!("{name} {:.3}±{:.3} (≤ {tol})", r.rmse.mean, r.rmse.std));
    }
    // The simulation time of the cached datasets is not part of this budget.
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 7200.0;
    Ok((pass, format!("{}; {secs:.0} s", parts.join(", "))))
}

fn feature_direction(cache: &mut Cache) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ds) in cache.benchmark_sets()? {
        let ds = ds.head(500)?;
        for family in Family::ALL {
            let base = cv(&ds, family, FeatureRecipe::Base, false)?.rmse.mean;
            let phys = cv(&ds, family, FeatureRecipe::PhysicsR, false)?.rmse.mean;
            pass &= phys < base;
            parts.push(format!("{name}/{family} {phys:.3} vs {base:.3}"));
        }
    }
    Ok((pass, format!("physics_r vs base RMSE: {}", parts.join(", "))))
}

fn nn_superiority(cache: &mut Cache) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ds) in cache.benchmark_sets()? {
        let nn = cv(&ds, Family::Nn, FeatureRecipe::PhysicsR, false)?.rmse.mean;
        if name == "ms-banded" {
            pass &= nn < 3.0;
            parts.push(format!("{name} nn {nn:.3} (< 3)"));
            continue;
        }
        let mut line = format!("{name} nn {nn:.3}");
        for family in [Family::Gpr, Family::Rf, Family::Gbt] {
            let other = cv(&ds, family, FeatureRecipe::PhysicsR, false)?.rmse.mean;
            pass &= nn <= other + 0.1;
            line.push_str(&format!(" {family} {other:.3}"));
        }
        parts.push(line);
    }
    Ok((pass, parts.join(", ")))
}

fn column_sums_ok(map: &ImportanceMap) -> f64 {
    map.values.columns().into_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max)
}

fn sensitivity_patterns(cache: &mut Cache) -> Outcome {
    let rf = RfConfig::default();
    let seed = 13;
    let infinite = cache.full(StlModel::Infinite)?.clone();
    let base = importance_map(&infinite, FeatureRecipe::Base, &rf, seed)?;
    let (rho, h) = (base.feature_index("rho").unwrap(), base.feature_index("h").unwrap());
    let low = base.values[[rho, 0]] + base.values[[h, 0]];

    let phys = importance_map(&infinite, FeatureRecipe::Physics, &rf, seed)?;
    let mut fcrit: Vec<f64> = infinite
        .x
        .outer_iter()
        .map(|r| design_to_plate(r).map(|p| p.critical_frequency(&FluidSpec::air())))
        .collect::<stl_lab::Result<_>>()?;
    fcrit.sort_by(f64::total_cmp);
    let median = 0.5 * (fcrit[fcrit.len() / 2 - 1] + fcrit[fcrit.len() / 2]);
    let col = phys.column_near(median);
    let argmax = (0..phys.features.len()).max_by(|&i, &j| phys.values[[i, col]].total_cmp(&phys.values[[j, col]]));
    let top = &phys.features[argmax.unwrap()];

    let modal = cache.full(StlModel::Modal)?.clone();
    let mut ab_gap: f64 = 0.0;
    let mut sums = column_sums_ok(&base).max(column_sums_ok(&phys));
    for ds in [modal.clone(), modal.band_averaged(&BandScheme::default())?] {
        let map = importance_map(&ds, FeatureRecipe::Base, &rf, seed)?;
        let (a, b) = (map.feature_index("a").unwrap(), map.feature_index("b").unwrap());
        ab_gap = (0..map.frequencies.len()).map(|j| (map.values[[a, j]] - map.values[[b, j]]).abs()).fold(ab_gap, f64::max);
        sums = sums.max(column_sums_ok(&map));
    }
    let pass = low >= 0.8 && top == "D_R" && ab_gap <= 0.1 && sums <= 1e-9;
    let detail = format!(
        "lowest-band rho+h {low:.3}, argmax at {:.0} Hz (median f_crit {median:.0} Hz) is {top}, \
         max |a-b| {ab_gap:.3}, column-sum error {sums:.1e}",
        phys.frequencies[col]
    );
    Ok((pass, detail))
}

fn numerical_properties(_: &mut Cache) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = Array2::from_shape_fn((12, 3), |_| rng.random_range(-1.0..1.0));
    let y = Array2::from_shape_fn((12, 2), |(i, j)| (x[[i, 0]] * (j + 1) as f64).sin() + x[[i, 2]]);

    // Network gradient against central differences.
    let net = Mlp::init(3, &[5, 4], 2, &mut rng);
    let l2 = 1e-3;
    let (_, grads) = net.loss_and_gradient(x.view(), y.view(), l2);
    let mut nn_err: f64 = 0.0;
    let step = 1e-6;
    for (li, layer) in net.layers.iter().enumerate() {
        let params = layer.w.len() + layer.b.len();
        for p in 0..params {
            let shifted = |d: f64| {
                let mut n = net.clone();
                let l = &mut n.layers[li];
                if p < l.w.len() {
                    l.w.as_slice_mut().unwrap()[p] += d;
                } else {
                    l.b[p - l.w.len()] += d;
                }
                n.loss_and_gradient(x.view(), y.view(), l2).0
            };
            let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
            let g = &grads[li];
            let an = if p < g.w.len() { g.w.as_slice().unwrap()[p] } else { g.b[p - g.w.len()] };
            nn_err = nn_err.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-8));
        }
    }

    // Marginal-likelihood gradient in log hyperparameters.
    let kernel = Kernel { amplitude: 1.3, matern_length: 0.7, rbf_length: 1.6, noise: 0.05 };
    let (_, grad) = log_marginal_likelihood(x.view(), y.view(), &kernel)?;
    let mut gp_err: f64 = 0.0;
    let h = 1e-5;
    for (i, g) in grad.iter().enumerate() {
        let at = |d: f64| {
            let mut k = kernel;
            let f = d.exp();
            match i {
                0 => k.amplitude *= f,
                1 => k.matern_length *= f,
                2 => k.rbf_length *= f,
                _ => k.noise *= f,
            }
            log_marginal_likelihood(x.view(), y.view(), &k).map(|r| r.0)
        };
        let fd = (at(h)? - at(-h)?) / (2.0 * h);
        gp_err = gp_err.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-8));
    }

    // A single unbagged, unpruned tree reproduces distinct training rows.
    let tree = RfConfig { n_trees: 1, bootstrap: false, ..Default::default() };
    let fit = RandomForest::fit(x.view(), y.view(), &tree, 1)?.predict(x.view());
    let tree_err = (&fit - &y).iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // Zero learning rate leaves the initial mean.
    let still = BoostedTrees::fit(x.view(), y.view(), &GbtConfig { n_stages: 5, learning_rate: 0.0, ..Default::default() })?
        .predict(x.view());
    let mean = y.mean_axis(ndarray::Axis(0)).unwrap();
    let gbt_err = still.outer_iter().flat_map(|r| (&r - &mean).to_vec()).fold(0.0f64, |m, v| m.max(v.abs()));

    let labels: Vec<String> = (0..3).map(|i| format!("x{i}")).collect();
    let wide = x.mapv(|v| 1e3 * v + 40.0);
    let mut scaler_err: f64 = 0.0;
    for kind in [ScalerKind::Standardize, ScalerKind::MinMax] {
        let s = Scaler::fit(kind, wide.view(), &labels)?;
        let back = s.invert(s.apply(wide.view())?.view())?;
        scaler_err = wide.iter().zip(&back).map(|(a, b)| (a - b).abs() / a.abs().max(1.0)).fold(scaler_err, f64::max);
    }

    let space = DesignSpace::table1();
    let mut lhs_ok = true;
    for n in [1usize, 5, 50] {
        for seed in 0..20 {
            let s = lhs_sample(&space, n, seed)?;
            lhs_ok &= space.bounds().iter().enumerate().all(|(d, &[lo, hi])| stratified(s.column(d), lo, hi));
        }
    }

    let pass = nn_err < 1e-4 && gp_err < 1e-5 && tree_err == 0.0 && gbt_err <= 1e-12 && scaler_err <= 1e-12 && lhs_ok;
    let detail = format!(
        "nn grad {nn_err:.1e}, gpr grad {gp_err:.1e}, tree fit {tree_err:.1e}, gbt lr=0 {gbt_err:.1e}, \
         scaler {scaler_err:.1e}, lhs stratified {lhs_ok}"
    );
    Ok((pass, detail))
}

fn stratified(col: ArrayView1<f64>, lo: f64, hi: f64) -> bool {
    let n = col.len();
    let mut hits = vec![0; n];
    for &v in col {
        if !(lo..=hi).contains(&v) {
            return false;
        }
        hits[((((v - lo) / (hi - lo)) * n as f64) as usize).min(n - 1)] += 1;
    }
    hits.iter().all(|&h| h == 1)
}

fn cli_determinism(_: &mut Cache) -> Outcome {
    let dir = tempfile::tempdir()?;
    let plate = dir.path().join("plate.json");
    std::fs::write(&plate, r#"{"rho": 7800, "E": 200, "nu": 0.3, "eta_percent": 0.5, "h_mm": 4, "a": 0.5, "b": 0.45}"#)?;
    let quick = [
        FamilyConfig::Nn(NnConfig { hidden: vec![8], epochs: 30, ..Default::default() }),
        FamilyConfig::Gpr(GprConfig { restarts: 1, max_iter: 20, ..Default::default() }),
        FamilyConfig::Rf(RfConfig { n_trees: 20, ..Default::default() }),
        FamilyConfig::Gbt(GbtConfig { n_stages: 20, ..Default::default() }),
    ];
    let quick: Vec<&str> = quick
        .iter()
        .map(|c| {
            let name = c.family().name();
            std::fs::write(dir.path().join(format!("{name}.json")), serde_json::to_string(c).unwrap()).map(|_| name)
        })
        .collect::<Result<_, _>>()?;
    let run = |threads: &str, tag: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let d = |name: &str| dir.path().join(format!("{tag}-{name}")).to_string_lossy().into_owned();
        let cfg = |family: &str| dir.path().join(format!("{family}.json")).to_string_lossy().into_owned();
        let plate = plate.to_string_lossy().into_owned();
        let mut commands: Vec<Vec<String>> = vec![
            vec!["simulate".into(), "--model".into(), "modal".into(), "--plate".into(), plate.clone(), "--out".into(), d("sim.csv")],
            vec!["simulate".into(), "--model".into(), "correction".into(), "--plate".into(), plate, "--bands".into(), "--out".into(), d("simb.csv")],
            vec!["sample".into(), "--model".into(), "infinite".into(), "--n".into(), "30".into(), "--seed".into(), "3".into(), "--out".into(), d("ds.csv")],
            vec!["sample".into(), "--model".into(), "modal".into(), "--n".into(), "4".into(), "--bands".into(), "--seed".into(), "3".into(), "--out".into(), d("ms.csv")],
        ];
        for &family in &quick {
            commands.push(vec![
                "train".into(), "--data".into(), d("ds.csv"), "--family".into(), family.into(), "--config".into(), cfg(family),
                "--seed".into(), "5".into(), "--out".into(), d(&format!("{family}-model.json")),
            ]);
            commands.push(vec![
                "predict".into(), "--model".into(), d(&format!("{family}-model.json")), "--designs".into(), d("ds.csv"),
                "--out".into(), d(&format!("{family}-pred.csv")),
            ]);
        }
        commands.push(vec![
            "benchmark".into(), "--data".into(), d("ds.csv"), "--sizes".into(), "15,30".into(), "--cv".into(), "3".into(),
            "--config".into(), quick.iter().map(|f| cfg(f)).collect::<Vec<_>>().join(","), "--no-timing".into(),
            "--report".into(), d("bench.json"), "--csv".into(), d("bench.csv"),
        ]);
        commands.push(vec![
            "sensitivity".into(), "--data".into(), d("ds.csv"), "--trees".into(), "20".into(), "--seed".into(), "2".into(),
            "--out".into(), d("imp.csv"),
        ]);
        for args in &commands {
            let out = Command::new(env!("CARGO_BIN_EXE_stl-lab"))
                .args(args)
                .args(["--threads", threads])
                .env_remove("STL_LAB_THREADS")
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{} failed: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()));
            }
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
            .map_err(|e| e.to_string())?
            .filter_map(|e| {
                let name = e.ok()?.file_name().to_string_lossy().into_owned();
                let rest = name.strip_prefix(&format!("{tag}-"))?.to_string();
                Some((rest, std::fs::read(dir.path().join(&name)).ok()?))
            })
            .collect();
        files.sort();
        Ok(files)
    };
    let one = run("1", "a")?;
    let again = run("1", "b")?;
    let three = run("3", "c")?;
    let differing: Vec<&str> = one
        .iter()
        .zip(again.iter().zip(&three))
        .filter(|(x, (y, z))| x != y || x != z)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let pass = differing.is_empty() && one.len() == again.len() && one.len() == three.len() && one.len() >= 16;
    Ok((pass, format!("{} artifacts compared across 1, 1 and 3 threads, differing {differing:?}", one.len())))
}
