//! `stl-lab`: simulate plates, sample datasets, train and benchmark surrogates.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use stl_lab::dataset::{generate_dataset, load_designs, Dataset, DesignSpace, GenerationConfig, DESIGN_COLUMNS};
use stl_lab::evaluation::{benchmark, BenchmarkPlan, Subsetting};
use stl_lab::preprocess::FeatureRecipe;
use stl_lab::sensitivity::importance_map;
use stl_lab::surrogates::{train, Family, FamilyConfig, GridMeta, RegressorSpec, RfConfig, SurrogateModel};
use stl_lab::{BandScheme, Error, FluidSpec, PlateFile, Result, Simulator, StlModel};

#[derive(Parser, Debug)]
#[command(name = "stl-lab", version, about = "Sound transmission loss of rectangular plates and its surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Master seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "STL_LAB_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diffuse-field STL curve of one plate.
    Simulate(SimulateArgs),
    /// Latin hypercube dataset of simulated STL curves.
    Sample(SampleArgs),
    /// Fit one surrogate on a dataset.
    Train(TrainArgs),
    /// Evaluate a trained surrogate on new designs.
    Predict(PredictArgs),
    /// Cross-validated comparison of families, recipes and dataset sizes.
    Benchmark(BenchmarkArgs),
    /// Per-frequency random-forest importance map.
    Sensitivity(SensitivityArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// infinite, correction or modal.
    #[arg(long)]
    model: StlModel,
    /// Plate JSON: rho, E (GPa), nu, eta_percent, h_mm, a, b.
    #[arg(long)]
    plate: PathBuf,
    /// Fluid JSON: rho0 (kg/m³), c0 (m/s). Defaults to air.
    #[arg(long)]
    fluid: Option<PathBuf>,
    /// Report one-third-octave band averages instead of the narrowband grid.
    #[arg(long)]
    bands: bool,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// infinite, correction or modal.
    #[arg(long)]
    model: StlModel,
    /// Design space JSON; the default ranges (spaces/table1.json) when omitted.
    #[arg(long)]
    space: Option<PathBuf>,
    /// Number of designs.
    #[arg(long)]
    n: usize,
    /// Fluid JSON: rho0 (kg/m³), c0 (m/s). Defaults to air.
    #[arg(long)]
    fluid: Option<PathBuf>,
    /// Store one-third-octave band averages.
    #[arg(long)]
    bands: bool,
    /// Dataset CSV; metadata goes to `<stem>.meta.json` beside it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset CSV written by `sample`.
    #[arg(long)]
    data: PathBuf,
    /// nn, gpr, rf or gbt.
    #[arg(long)]
    family: Family,
    /// base, physics or physics_r.
    #[arg(long, default_value = "physics_r")]
    recipe: FeatureRecipe,
    /// Hyperparameter JSON ({"family": .., "config": {..}}) replacing the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random forest: one forest per output instead of one joint forest.
    #[arg(long)]
    rf_per_output: bool,
    /// Model JSON.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// CSV whose first columns are rho,E,nu,eta,h,a,b (a dataset file works).
    #[arg(long)]
    designs: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Dataset CSVs (comma-separated or repeated).
    #[arg(long, value_delimiter = ',', required = true)]
    data: Vec<PathBuf>,
    /// Surrogate families to compare.
    #[arg(long, value_delimiter = ',', default_value = "nn,gpr,rf,gbt")]
    families: Vec<Family>,
    /// Feature recipes to compare.
    #[arg(long, value_delimiter = ',', default_value = "base,physics,physics_r")]
    recipes: Vec<FeatureRecipe>,
    /// Dataset sizes; each must not exceed the dataset length unless --resample.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    cv: usize,
    /// Draw a fresh sample for every size instead of taking the first n rows.
    #[arg(long)]
    resample: bool,
    /// Leave train_s out of the report, making it reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Hyperparameter JSON files, one per family to override.
    #[arg(long, value_delimiter = ',')]
    config: Vec<PathBuf>,
    /// Random forest: one forest per output instead of one joint forest.
    #[arg(long)]
    rf_per_output: bool,
    /// Report JSON.
    #[arg(long)]
    report: PathBuf,
    /// Flat CSV summary.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    /// Dataset CSV written by `sample`.
    #[arg(long)]
    data: PathBuf,
    /// base, physics or physics_r.
    #[arg(long, default_value = "physics_r")]
    recipe: FeatureRecipe,
    /// Trees per frequency.
    #[arg(long, default_value_t = 200)]
    trees: usize,
    /// Importance CSV (features × frequencies).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                msg.push_str(&format!("\n  caused by: {s}"));
                src = s.source();
            }
            eprintln!("{msg}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    let common = match &command {
        Command::Simulate(a) => &a.common,
        Command::Sample(a) => &a.common,
        Command::Train(a) => &a.common,
        Command::Predict(a) => &a.common,
        Command::Benchmark(a) => &a.common,
        Command::Sensitivity(a) => &a.common,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Sample(a) => sample(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Benchmark(a) => benchmark_cmd(a),
        Command::Sensitivity(a) => sensitivity(a),
    }
}

fn simulator(model: StlModel, fluid: Option<&Path>) -> Result<Simulator> {
    let mut sim = Simulator::new(model);
    if let Some(path) = fluid {
        sim.fluid = FluidSpec::from_json_file(path)?;
    }
    Ok(sim)
}

/// Standard output or a file, buffered.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let plate = PlateFile::read(&a.plate)?;
    let sim = simulator(a.model, a.fluid.as_deref())?;
    let bands = a.bands.then(BandScheme::default);
    let curve = sim.response(&plate, &Default::default(), bands.as_ref())?;
    curve.write_csv(output(a.out.as_deref())?)
}

fn sample(a: SampleArgs) -> Result<()> {
    let space = match &a.space {
        Some(p) => DesignSpace::from_json_file(p)?,
        None => DesignSpace::table1(),
    };
    let mut cfg = GenerationConfig::new(simulator(a.model, a.fluid.as_deref())?);
    cfg.space = space;
    if a.bands {
        cfg = cfg.with_bands(BandScheme::default());
    }
    let ds = generate_dataset(&cfg, a.n, a.common.seed)?;
    ds.save(&a.out)
}

fn read_config(path: &Path) -> Result<FamilyConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let cfg: FamilyConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        reason: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn per_output(cfg: FamilyConfig, on: bool) -> FamilyConfig {
    match cfg {
        FamilyConfig::Rf(rf) if on => FamilyConfig::Rf(RfConfig { per_output: true, ..rf }),
        other => other,
    }
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let override_cfg = a.config.as_deref().map(read_config).transpose()?;
    let ds = Dataset::load(&a.data)?;
    let config = match override_cfg {
        Some(c) if c.family() != a.family => {
            return Err(Error::Config(format!(
                "--config describes family {} but --family is {}",
                c.family(),
                a.family
            )))
        }
        Some(c) => c,
        None => a.family.default_config(Some(ds.meta.simulator.model)),
    };
    let spec = RegressorSpec { config: per_output(config, a.rf_per_output), seed: a.common.seed };
    let model = train(&spec, a.recipe, ds.x.view(), ds.y.view(), GridMeta::from_dataset(&ds.meta))?;
    model.save(&a.out)
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = SurrogateModel::load(&a.model)?;
    let x = load_designs(&a.designs)?;
    let y = model.predict(x.view())?;
    write_predictions(output(a.out.as_deref())?, &x, &y, &model.grid_meta.frequencies)
}

fn write_predictions(out: impl Write, x: &Array2<f64>, y: &Array2<f64>, freqs: &[f64]) -> Result<()> {
    let mut out = out;
    let header: Vec<String> = DESIGN_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(freqs.iter().map(|f| format!("STL@{f}")))
        .collect();
    let stdout_err = |e| io_err(Path::new("<output>"), e);
    writeln!(out, "{}", header.join(",")).map_err(stdout_err)?;
    for (xr, yr) in x.outer_iter().zip(y.outer_iter()) {
        let fields: Vec<String> = xr.iter().chain(yr.iter()).map(|v| v.to_string()).collect();
        writeln!(out, "{}", fields.join(",")).map_err(stdout_err)?;
    }
    out.flush().map_err(stdout_err)
}

fn benchmark_cmd(a: BenchmarkArgs) -> Result<()> {
    let overrides: Vec<FamilyConfig> = a
        .config
        .iter()
        .map(|p| read_config(p).map(|c| per_output(c, a.rf_per_output)))
        .collect::<Result<_>>()?;
    let datasets: Vec<Dataset> = a.data.iter().map(Dataset::load).collect::<Result<_>>()?;
    let mut overrides = overrides;
    if a.rf_per_output && !overrides.iter().any(|c| c.family() == Family::Rf) {
        overrides.push(FamilyConfig::Rf(RfConfig { per_output: true, ..Default::default() }));
    }
    let plan = BenchmarkPlan {
        families: a.families,
        recipes: a.recipes,
        sizes: a.sizes,
        k: a.cv,
        seed: a.common.seed,
        subsetting: if a.resample { Subsetting::Resample } else { Subsetting::Nested },
        timing: !a.no_timing,
        overrides,
    };
    let report = benchmark(&datasets, &plan)?;
    report.save_json(&a.report)?;
    if let Some(csv) = &a.csv {
        report.save_csv(csv)?;
    }
    Ok(())
}

fn sensitivity(a: SensitivityArgs) -> Result<()> {
    let ds = Dataset::load(&a.data)?;
    let cfg = RfConfig { n_trees: a.trees, ..Default::default() };
    importance_map(&ds, a.recipe, &cfg, a.common.seed)?.save_csv(&a.out)
}
