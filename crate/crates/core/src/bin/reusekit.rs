//! Command-line front end. Every subcommand writes its output file plus
//! `<out>.manifest.json`; `replay` re-runs a manifest.
//!
//! Exit codes: 0 success, 1 error, 2 histogram engines disagree,
//! 3 optimization infeasible (unless `--allow-infeasible`).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reusekit::analytic::{self, LevelCoeffs, StepModel};
use reusekit::compare::compare;
use reusekit::estimate::{estimate, HierarchyConfig, Inclusion};
use reusekit::manifest::RunManifest;
use reusekit::optimize::{
    enumerate_grid, scan_search, scan_search_simulated, CostModel, Objective, ObjectiveSpec,
    PowerModel, SimTemplate, SizeGrid,
};
use reusekit::reuse::{histogram_fast, histogram_naive, ReuseHistogram};
use reusekit::simulate::{simulate, Associativity, Replacement};
use reusekit::trace::{
    self, load_trace, to_blocks, write_trace, BlockTrace, MemoryTrace, TraceFormat,
};
use reusekit::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "reusekit",
    version,
    about = "Reuse-distance cache analysis and sizing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate a synthetic address trace.
    Gen(GenArgs),
    /// Reuse-distance histogram of a trace.
    Histogram(HistogramArgs),
    /// Per-level miss counts from a histogram CSV.
    Estimate(EstimateArgs),
    /// Run the reference multi-level simulator.
    Simulate(SimulateArgs),
    /// Estimator against simulator over a size grid.
    Compare(CompareArgs),
    /// Scanning search for the best hierarchy.
    Optimize(OptimizeArgs),
    /// Closed-form step-histogram model.
    Analytic(AnalyticArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay { manifest: PathBuf },
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Generator {
    Cyclic,
    UniformStack,
    Random,
}

#[derive(Args, Debug, Serialize)]
struct TraceInput {
    /// Trace file.
    trace: PathBuf,
    #[arg(long, default_value = "text")]
    format: TraceFormat,
    #[arg(long, default_value_t = 64)]
    line_bytes: u64,
}

impl TraceInput {
    fn load(&self) -> Result<BlockTrace> {
        to_blocks(&load_trace(&self.trace, self.format)?, self.line_bytes)
    }
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(value_enum)]
    generator: Generator,
    /// Working set (cyclic) or stack depth (uniform-stack), in blocks.
    #[arg(long)]
    d: Option<u64>,
    #[arg(long, default_value_t = 1)]
    sweeps: u64,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    universe: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Block ids are scaled by this to form byte addresses.
    #[arg(long, default_value_t = 64)]
    line_bytes: u64,
    #[arg(long, default_value = "text")]
    format: TraceFormat,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Engine {
    Fast,
    Naive,
}

#[derive(Args, Debug, Serialize)]
struct HistogramArgs {
    #[command(flatten)]
    input: TraceInput,
    #[arg(long, value_enum, default_value = "fast")]
    engine: Engine,
    /// Run both engines and fail unless they agree exactly.
    #[arg(long)]
    compare_engines: bool,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    /// Histogram CSV.
    histogram: PathBuf,
    /// Level sizes, L1 first.
    #[arg(long, value_delimiter = ',', required = true)]
    size_bytes: Vec<u64>,
    #[arg(long, default_value = "exclusive")]
    inclusion: Inclusion,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SimFlags {
    #[arg(long, default_value = "exclusive")]
    inclusion: Inclusion,
    /// `full` or a number of ways.
    #[arg(long, default_value = "full")]
    ways: Associativity,
    #[arg(long, default_value = "lru")]
    replacement: Replacement,
    /// Inclusive LRU: an outer copy inherits the recency of its inner copy.
    #[arg(long)]
    lru_inheritance: bool,
}

impl SimFlags {
    fn template(&self) -> SimTemplate {
        SimTemplate {
            associativity: self.ways,
            replacement: self.replacement,
            lru_inheritance: self.lru_inheritance,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    input: TraceInput,
    #[arg(long, value_delimiter = ',', required = true)]
    size_bytes: Vec<u64>,
    #[command(flatten)]
    sim: SimFlags,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    #[command(flatten)]
    input: TraceInput,
    /// Exponent ranges per level, e.g. `10..23,11..24,12..25`.
    #[arg(long)]
    grid: SizeGrid,
    #[command(flatten)]
    sim: SimFlags,
    /// Per-config CSV; a JSON summary goes to `<out>.json`.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
#[allow(clippy::enum_variant_names)]
enum Mode {
    MinCost,
    MinPower,
    MinDelay,
}

/// Defaults: CPI_base 1, penalties 10, 100, 1000.., cost coefficients
/// 1, 0.1, 0.01.. on bytes squared, zero power coefficients.
#[derive(Args, Debug, Serialize)]
struct OptimizeArgs {
    /// Histogram CSV.
    histogram: PathBuf,
    #[arg(long)]
    grid: SizeGrid,
    #[arg(long, value_enum, default_value = "min-cost")]
    mode: Mode,
    /// Delay bound T (min-cost, min-power).
    #[arg(long)]
    max_delay: Option<f64>,
    /// Cost bound C (min-delay).
    #[arg(long)]
    max_cost: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    cpi_base: f64,
    #[arg(long, value_delimiter = ',')]
    miss_penalty: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    cost_coeff: Vec<f64>,
    /// CSV `level,size_bytes,cost` replacing the quadratic cost.
    #[arg(long)]
    cost_table: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    static_power: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    dynamic_energy: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    memory_energy: f64,
    #[arg(long, default_value = "exclusive")]
    inclusion: Inclusion,
    /// Take miss counts from simulating this trace instead of the histogram.
    #[arg(long)]
    simulate_trace: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    trace_format: TraceFormat,
    #[arg(long, default_value = "full")]
    ways: Associativity,
    #[arg(long, default_value = "lru")]
    replacement: Replacement,
    #[arg(long)]
    lru_inheritance: bool,
    /// Exit 0 even when nothing is feasible.
    #[arg(long)]
    allow_infeasible: bool,
    /// Table CSV; the winner goes to `<out>.summary.csv`, JSON to `<out>.json`.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct AnalyticArgs {
    /// Cutoff D in blocks.
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 1.0)]
    cpi_base: f64,
    /// Delay bound T.
    #[arg(long)]
    target: f64,
    /// Unit costs a_1[,a_2].
    #[arg(long, value_delimiter = ',', required = true)]
    a: Vec<f64>,
    /// Miss penalties m_1[,m_2].
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<f64>,
    #[arg(long)]
    step_height: Option<f64>,
    /// Relative perturbation for the sensitivity table.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(short, long)]
    out: PathBuf,
}

enum Outcome {
    Done,
    EngineMismatch,
    Infeasible,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_histogram(path: &Path) -> Result<ReuseHistogram> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    ReuseHistogram::read_csv(file)
}

fn per_level(
    given: &[f64],
    n: usize,
    default: impl Fn(usize) -> f64,
    what: &str,
) -> Result<Vec<f64>> {
    match given.len() {
        0 => Ok((0..n).map(default).collect()),
        len if len == n => Ok(given.to_vec()),
        len => Err(Error::InvalidConfig(format!(
            "{what}: expected {n} values, got {len}"
        ))),
    }
}

fn read_cost_table(path: &Path, n: usize) -> Result<CostModel> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut levels = vec![BTreeMap::new(); n];
    for record in csv::Reader::from_reader(file).deserialize() {
        let (level, size, cost): (usize, u64, f64) = record?;
        let table = level
            .checked_sub(1)
            .and_then(|i| levels.get_mut(i))
            .ok_or_else(|| {
                Error::InvalidModel(format!("cost table level {level} outside 1..={n}"))
            })?;
        table.insert(size, cost);
    }
    Ok(CostModel::Table { levels })
}

fn run(cmd: &Command, manifest: &mut RunManifest) -> Result<Outcome> {
    match cmd {
        Command::Gen(a) => {
            let need = |v: Option<u64>, flag: &str| {
                v.ok_or_else(|| Error::InvalidConfig(format!("{:?} needs --{flag}", a.generator)))
            };
            let blocks = manifest.time("generate", || match a.generator {
                Generator::Cyclic => trace::gen_cyclic(need(a.d, "d")?, a.sweeps),
                Generator::UniformStack => {
                    trace::gen_uniform_stack(need(a.d, "d")?, need(a.n, "n")?, a.seed)
                }
                Generator::Random => {
                    trace::gen_random(need(a.universe, "universe")?, need(a.n, "n")?, a.seed)
                }
            })?;
            let scaled = BlockTrace::new(blocks.blocks().to_vec(), a.line_bytes)?;
            let addresses: MemoryTrace = scaled.to_addresses(format!("{:?}", a.generator));
            manifest.time("write", || write_trace(&addresses, &a.out, a.format))?;
            Ok(Outcome::Done)
        }
        Command::Histogram(a) => {
            let trace = manifest.time("load", || a.input.load())?;
            let hist = manifest.time("histogram", || match a.engine {
                Engine::Fast => histogram_fast(&trace),
                Engine::Naive => histogram_naive(&trace),
            });
            let mut outcome = Outcome::Done;
            if a.compare_engines {
                let other = manifest.time("histogram-check", || match a.engine {
                    Engine::Fast => histogram_naive(&trace),
                    Engine::Naive => histogram_fast(&trace),
                });
                if other != hist {
                    eprintln!(
                        "error: histogram engines disagree on {}",
                        a.input.trace.display()
                    );
                    outcome = Outcome::EngineMismatch;
                }
            }
            hist.write_csv(create(&a.out)?)?;
            Ok(outcome)
        }
        Command::Estimate(a) => {
            let hist = read_histogram(&a.histogram)?;
            let config =
                HierarchyConfig::new(a.size_bytes.clone(), hist.block_size_bytes, a.inclusion)?;
            let est = manifest.time("estimate", || estimate(&hist, &config))?;
            est.write_csv(create(&a.out)?)?;
            Ok(Outcome::Done)
        }
        Command::Simulate(a) => {
            let trace = manifest.time("load", || a.input.load())?;
            let config =
                a.sim
                    .template()
                    .config(&a.size_bytes, a.input.line_bytes, a.sim.inclusion);
            let result = manifest.time("simulate", || simulate(&trace, &config))?;
            result.write_csv(create(&a.out)?)?;
            Ok(Outcome::Done)
        }
        Command::Compare(a) => {
            let trace = manifest.time("load", || a.input.load())?;
            let configs = enumerate_grid(&a.grid)?;
            let report = manifest.time("compare", || {
                compare(&trace, &configs, a.sim.inclusion, &a.sim.template())
            })?;
            report.write_csv(create(&a.out)?)?;
            write_text(&sidecar(&a.out, ".json"), &report.to_json()?)?;
            eprintln!(
                "{} configs, mean relative error {:.6}, max {:.6}",
                report.rows.len(),
                report.overall_mean_error(),
                report.overall_max_error()
            );
            Ok(Outcome::Done)
        }
        Command::Optimize(a) => {
            let n = a.grid.num_levels();
            let bound = |v: Option<f64>, flag: &str| {
                v.ok_or_else(|| Error::InvalidConfig(format!("{:?} needs --{flag}", a.mode)))
            };
            let objective = match a.mode {
                Mode::MinCost => Objective::MinCost {
                    max_delay: bound(a.max_delay, "max-delay")?,
                },
                Mode::MinPower => Objective::MinPower {
                    max_delay: bound(a.max_delay, "max-delay")?,
                },
                Mode::MinDelay => Objective::MinDelay {
                    max_cost: bound(a.max_cost, "max-cost")?,
                },
            };
            let cost = match &a.cost_table {
                Some(path) => read_cost_table(path, n)?,
                None => CostModel::Quadratic {
                    coeffs: per_level(&a.cost_coeff, n, |i| 0.1f64.powi(i as i32), "--cost-coeff")?,
                },
            };
            let spec = ObjectiveSpec {
                objective,
                cpi_base: a.cpi_base,
                miss_penalties: per_level(
                    &a.miss_penalty,
                    n,
                    |i| 10f64.powi(i as i32 + 1),
                    "--miss-penalty",
                )?,
                inclusion: a.inclusion,
                cost,
                power: PowerModel {
                    static_per_byte: per_level(&a.static_power, n, |_| 0.0, "--static-power")?,
                    dynamic_per_access: per_level(
                        &a.dynamic_energy,
                        n,
                        |_| 0.0,
                        "--dynamic-energy",
                    )?,
                    memory_per_access: a.memory_energy,
                },
            };
            let hist = read_histogram(&a.histogram)?;
            let result = match &a.simulate_trace {
                None => manifest.time("scan", || scan_search(&hist, &a.grid, &spec))?,
                Some(path) => {
                    let trace = manifest.time("load", || {
                        to_blocks(&load_trace(path, a.trace_format)?, hist.block_size_bytes)
                    })?;
                    let template = SimTemplate {
                        associativity: a.ways,
                        replacement: a.replacement,
                        lru_inheritance: a.lru_inheritance,
                    };
                    manifest.time("scan-simulated", || {
                        scan_search_simulated(&trace, &a.grid, &spec, &template)
                    })?
                }
            };
            result.write_csv(create(&a.out)?)?;
            result.write_summary_csv(create(&sidecar(&a.out, ".summary.csv"))?)?;
            write_text(&sidecar(&a.out, ".json"), &result.to_json()?)?;
            match result.best_row() {
                Some(best) => {
                    eprintln!(
                        "best {:?} t={} cost={} power={}",
                        best.sizes, best.delay, best.cost, best.power
                    );
                    Ok(Outcome::Done)
                }
                None => {
                    eprintln!("no configuration satisfies the bound");
                    Ok(if a.allow_infeasible {
                        Outcome::Done
                    } else {
                        Outcome::Infeasible
                    })
                }
            }
        }
        Command::Analytic(a) => {
            if a.a.len() != a.m.len() {
                return Err(Error::InvalidModel(
                    "--a and --m need the same number of levels".into(),
                ));
            }
            let model = StepModel {
                cutoff: a.d,
                step_height: a.step_height,
                cpi_base: a.cpi_base,
                target_delay: a.target,
                levels: a
                    .a
                    .iter()
                    .zip(&a.m)
                    .map(|(&unit_cost, &miss_penalty)| LevelCoeffs {
                        unit_cost,
                        miss_penalty,
                    })
                    .collect(),
            };
            let report = manifest.time("solve", || analytic::report(&model, a.delta))?;
            write_text(&a.out, &report.to_json()?)?;
            Ok(Outcome::Done)
        }
        Command::Replay { .. } => unreachable!("replay is resolved before dispatch"),
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Histogram(_) => "histogram",
            Command::Estimate(_) => "estimate",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Optimize(_) => "optimize",
            Command::Analytic(_) => "analytic",
            Command::Replay { .. } => "replay",
        }
    }

    fn out(&self) -> Option<&Path> {
        match self {
            Command::Gen(a) => Some(&a.out),
            Command::Histogram(a) => Some(&a.out),
            Command::Estimate(a) => Some(&a.out),
            Command::Simulate(a) => Some(&a.out),
            Command::Compare(a) => Some(&a.out),
            Command::Optimize(a) => Some(&a.out),
            Command::Analytic(a) => Some(&a.out),
            Command::Replay { .. } => None,
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Gen(a) => Some(a.seed),
            _ => None,
        }
    }
}

fn execute(argv: Vec<String>) -> Result<Outcome> {
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    if let Command::Replay { manifest } = &cli.command {
        let recorded = RunManifest::read(manifest)?;
        if recorded.argv.get(1).map(String::as_str) == Some("replay") {
            return Err(Error::InvalidConfig(
                "a manifest cannot replay another replay".into(),
            ));
        }
        return execute(recorded.argv);
    }
    let params = serde_json::to_value(&cli.command)?;
    let mut manifest = RunManifest::new(cli.command.name(), argv, cli.command.seed(), params);
    let outcome = run(&cli.command, &mut manifest)?;
    if let Some(out) = cli.command.out() {
        manifest.write(sidecar(out, ".manifest.json"))?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    match execute(std::env::args().collect()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::EngineMismatch) => ExitCode::from(2),
        Ok(Outcome::Infeasible) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
