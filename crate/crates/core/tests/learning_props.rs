use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stl_lab::dataset::{generate_dataset, Dataset, GenerationConfig};
use stl_lab::evaluation::{benchmark, kfold_indices, metrics, BenchmarkPlan, CellOutcome, Subsetting};
use stl_lab::preprocess::FeatureRecipe;
use stl_lab::sensitivity::{importance_map, mdi_importances};
use stl_lab::surrogates::{
    train, BoostedTrees, Family, FamilyConfig, GbtConfig, GprConfig, GridMeta, NnConfig, RandomForest, RegressorSpec,
    RfConfig,
};
use stl_lab::{FrequencyGrid, Simulator, StlModel};

fn small_dataset(n: usize, seed: u64) -> Dataset {
    let mut cfg = GenerationConfig::new(Simulator::new(StlModel::Infinite));
    cfg.grid = FrequencyGrid::geometric(100.0, 2000.0, 8).unwrap();
    generate_dataset(&cfg, n, seed).unwrap()
}

fn quick_config(family: Family) -> FamilyConfig {
    match family {
        Family::Nn => FamilyConfig::Nn(NnConfig { hidden: vec![8, 8], epochs: 40, ..Default::default() }),
        Family::Gpr => FamilyConfig::Gpr(GprConfig { restarts: 2, max_iter: 30, ..Default::default() }),
        Family::Rf => FamilyConfig::Rf(RfConfig { n_trees: 15, ..Default::default() }),
        Family::Gbt => FamilyConfig::Gbt(GbtConfig { n_stages: 15, ..Default::default() }),
    }
}

/// Distinct values in every column, so no two rows tie on any feature.
fn tie_free(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, p));
    for mut col in x.columns_mut() {
        let mut v: Vec<f64> = (0..n).map(|i| i as f64 + rng.random_range(0.1..0.9)).collect();
        for i in (1..n).rev() {
            v.swap(i, rng.random_range(0..=i));
        }
        col.assign(&ndarray::Array1::from(v));
    }
    x
}

fn targets(x: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((x.nrows(), 2), |(i, j)| {
        let r = x.row(i);
        if j == 0 { r[0].sin() + 0.3 * r[1] } else { (r[2] * r[0]).sqrt() }
    })
}

/// Strictly increasing per-column maps.
fn rescale(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    out.column_mut(0).mapv_inplace(|v| (0.2 * v).exp());
    out.column_mut(1).mapv_inplace(|v| v.powi(3) - 4.0);
    out.column_mut(2).mapv_inplace(|v| 1e-3 * v + 7.0);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trees_ignore_monotone_rescaling(seed in any::<u64>()) {
        let x = tie_free(40, 3, seed);
        let y = targets(&x);
        let xs = rescale(&x);
        // Every training row is in-sample without bootstrap, so predictions must agree.
        let whole = RfConfig { n_trees: 2, bootstrap: false, ..Default::default() };
        let a = RandomForest::fit(x.view(), y.view(), &whole, seed).unwrap().predict(x.view());
        let b = RandomForest::fit(xs.view(), y.view(), &whole, seed).unwrap().predict(xs.view());
        prop_assert_eq!(a, b, "forest");
        // Bootstrapped trees split the same samples, so the impurity bookkeeping agrees.
        let bagged = RfConfig { n_trees: 10, ..Default::default() };
        let a = mdi_importances(&RandomForest::fit(x.view(), y.view(), &bagged, seed).unwrap());
        let b = mdi_importances(&RandomForest::fit(xs.view(), y.view(), &bagged, seed).unwrap());
        prop_assert_eq!(a, b, "bagged forest");
        let g = GbtConfig { n_stages: 10, max_depth: Some(3), learning_rate: 0.1 };
        let a = BoostedTrees::fit(x.view(), y.view(), &g).unwrap().predict(x.view());
        let b = BoostedTrees::fit(xs.view(), y.view(), &g).unwrap().predict(xs.view());
        prop_assert_eq!(a, b, "boosting");
    }

    #[test]
    fn tree_predictions_stay_in_target_range(seed in any::<u64>()) {
        let x = tie_free(40, 3, seed);
        let y = targets(&x);
        let probe = tie_free(30, 3, seed ^ 1).mapv(|v| 1.5 * v - 10.0);
        let rf = RandomForest::fit(x.view(), y.view(), &RfConfig { n_trees: 10, ..Default::default() }, seed).unwrap();
        let gbt = BoostedTrees::fit(x.view(), y.view(), &GbtConfig { n_stages: 20, ..Default::default() }).unwrap();
        for pred in [rf.predict(probe.view()), gbt.predict(probe.view())] {
            for (j, col) in pred.columns().into_iter().enumerate() {
                let lo = y.column(j).fold(f64::INFINITY, |a, &b| a.min(b));
                let hi = y.column(j).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                prop_assert!(col.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
            }
        }
    }

    #[test]
    fn error_metrics_are_ordered(values in prop::collection::vec(-50.0..50.0f64, 40)) {
        let t = Array2::from_shape_vec((5, 4), values[..20].to_vec()).unwrap();
        let p = Array2::from_shape_vec((5, 4), values[20..].to_vec()).unwrap();
        let m = metrics(t.view(), p.view()).unwrap();
        prop_assert!(m.mae >= 0.0);
        prop_assert!(m.rmse >= m.mae - 1e-12);
        prop_assert!(m.mme >= m.mae - 1e-12);
    }

    #[test]
    fn folds_partition_the_rows(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_indices(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

#[test]
fn recipes_keep_output_shape_and_grid() {
    let ds = small_dataset(30, 5);
    let meta = GridMeta::from_dataset(&ds.meta);
    for family in Family::ALL {
        let spec = RegressorSpec { config: quick_config(family), seed: 3 };
        let base = train(&spec, FeatureRecipe::Base, ds.x.view(), ds.y.view(), meta.clone()).unwrap();
        let phys = train(&spec, FeatureRecipe::PhysicsR, ds.x.view(), ds.y.view(), meta.clone()).unwrap();
        assert_eq!(base.grid_meta, phys.grid_meta, "{family}");
        let (pb, pp) = (base.predict(ds.x.view()).unwrap(), phys.predict(ds.x.view()).unwrap());
        assert_eq!(pb.dim(), ds.y.dim(), "{family}");
        assert_eq!(pp.dim(), ds.y.dim(), "{family}");
    }
}

fn on_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn training_is_thread_count_independent() {
    let ds = small_dataset(30, 6);
    let meta = GridMeta::from_dataset(&ds.meta);
    for family in Family::ALL {
        let spec = RegressorSpec { config: quick_config(family), seed: 9 };
        let fit = || {
            train(&spec, FeatureRecipe::Physics, ds.x.view(), ds.y.view(), meta.clone())
                .unwrap()
                .to_json()
                .unwrap()
        };
        let one = on_threads(1, fit);
        let three = on_threads(3, fit);
        assert_eq!(one, three, "{family}");
    }
    let cfg = RfConfig { n_trees: 10, ..Default::default() };
    let map = |t| on_threads(t, || importance_map(&ds, FeatureRecipe::Physics, &cfg, 4).unwrap());
    assert_eq!(map(1), map(3));
}

#[test]
fn benchmark_cells_are_independent() {
    let ds = small_dataset(40, 8);
    let plan = |families: Vec<Family>| BenchmarkPlan {
        overrides: families.iter().map(|&f| quick_config(f)).collect(),
        families,
        recipes: vec![FeatureRecipe::Base, FeatureRecipe::PhysicsR],
        sizes: vec![20, 40],
        k: 3,
        seed: 2,
        subsetting: Subsetting::Nested,
        timing: false,
    };
    let both = benchmark(std::slice::from_ref(&ds), &plan(vec![Family::Rf, Family::Gbt])).unwrap();
    let alone = benchmark(std::slice::from_ref(&ds), &plan(vec![Family::Gbt])).unwrap();
    let gbt_cells: Vec<_> = both.cells.iter().filter(|c| c.family == Family::Gbt).cloned().collect();
    assert_eq!(gbt_cells, alone.cells);
    assert_eq!(both.cells.len(), 8);
    assert!(both.cells.iter().all(|c| matches!(c.outcome, CellOutcome::Ok { .. })));
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (pos, i) in idx.into_iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn gpr_training_time_grows_with_n() {
    let ds = small_dataset(1000, 10);
    let sizes = [100usize, 250, 500, 1000];
    // A short fixed optimisation budget keeps the cubic solve the dominant cost.
    let spec = RegressorSpec {
        config: FamilyConfig::Gpr(GprConfig { restarts: 0, max_iter: 5, ..Default::default() }),
        seed: 1,
    };
    let meta = GridMeta::from_dataset(&ds.meta);
    let mut times = Vec::new();
    for &n in &sizes {
        let sub = ds.head(n).unwrap();
        let mut total = 0.0;
        for _ in 0..3 {
            let t = std::time::Instant::now();
            train(&spec, FeatureRecipe::Base, sub.x.view(), sub.y.view(), meta.clone()).unwrap();
            total += t.elapsed().as_secs_f64();
        }
        times.push(total / 3.0);
    }
    let ns: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let rho = spearman(&ns, &times);
    assert!(rho > 0.9, "rank correlation {rho}, times {times:?}");
}
