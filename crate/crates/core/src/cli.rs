//! The `passive-bp` command line.
//!
//! Every output carries the fully resolved run configuration as JSON metadata
//! (`#` comment lines in CSV, a `metadata` member in JSON). Passing such a file
//! back through `--config` replays the run exactly.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bcrb::scenario_bounds;
use crate::error::{Error, Result};
use crate::geometry::{perturb_receivers, simulate_measurements, Scenario};
use crate::harness::{reproduce_figure, sweep, trial_seeds, Algorithm, ExperimentSpec, MetricKind, SweepAxis, DEFAULT_TRIALS};
use crate::parametric::ParametricConfig;
use crate::problem::Problem;
use crate::sample::{run_sample_bp_observed, ParticleDump, PsoConfig, SampleConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "passive-bp", version, args_conflicts_with_subcommands = true, about = "Localize passive targets from bistatic TOA ranges with uncertain receivers")]
pub struct Cli {
    /// Replay the run recorded in the metadata of an earlier output file (CSV or JSON).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output file; stdout when omitted. For reproduce-figure: output directory.
    #[arg(long, short, value_name = "PATH", global = true)]
    pub output: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one set of noisy ranges and receiver prior means.
    Simulate(ScenarioArgs),
    /// Simulate one trial and localize every node.
    Estimate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        algo: AlgoArgs,
        /// Per-iteration trace CSV; defaults to `<output>_trace.csv` when --output is set.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Particle dump CSV for the sample algorithm.
        #[arg(long, value_name = "FILE")]
        dump_particles: Option<PathBuf>,
    },
    /// Bayesian Cramér-Rao bound (m^2) of every node at the true positions.
    Bcrb(ScenarioArgs),
    /// Monte Carlo MSE along one scenario parameter, next to the BCRB.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        algo: AlgoArgs,
        /// Swept parameter.
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated grid: variances in m^2, or target counts.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        /// Monte Carlo trials per grid point.
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Comma-separated metrics.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "mse")]
        metrics: Vec<Metric>,
    },
    /// Data and gnuplot script for one figure of the evaluation (4-10) on the default scenario.
    ReproduceFigure {
        #[arg(value_parser = clap::value_parser!(u8).range(4..=10))]
        figure: u8,
        /// Monte Carlo trials per configuration.
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Base seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        algo: AlgoArgs,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON; the bundled default layout when omitted.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Base seed for noise, receiver priors and particles.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AlgoArgs {
    /// Estimator.
    #[arg(long, value_enum, default_value_t = AlgoKind::Parametric)]
    pub algo: AlgoKind,
    /// Particles per node (sample).
    #[arg(long, default_value_t = 100)]
    pub particles: usize,
    /// PSO iterations per BP iteration, 0 disables PSO (sample).
    #[arg(long, default_value_t = 10)]
    pub pso_iters: usize,
    /// BP iterations.
    #[arg(long, default_value_t = 40)]
    pub bp_iters: usize,
    /// PSO cognitive coefficient (sample).
    #[arg(long, default_value_t = 1.5)]
    pub c1: f64,
    /// PSO social coefficient (sample).
    #[arg(long, default_value_t = 1.5)]
    pub c2: f64,
    /// PSO inertia weight (sample).
    #[arg(long, default_value_t = 0.72)]
    pub inertia: f64,
    /// Message damping in [0, 1), 0 disables (parametric).
    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoKind {
    Parametric,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    MeasVar,
    PriorVar,
    Targets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Mse,
    Cdf,
    RmseTrace,
}

/// A fully resolved run, as echoed into output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Simulate { scenario: Value, seed: u64 },
    Estimate { scenario: Value, seed: u64, algorithm: Algorithm },
    Bcrb { scenario: Value },
    Sweep { scenario: Value, seed: u64, algorithm: Algorithm, trials: usize, axis: SweepAxis, metrics: Vec<MetricKind> },
    ReproduceFigure { figure: u8, seed: u64, trials: usize, parametric: ParametricConfig, sample: SampleConfig },
}

impl AlgoArgs {
    fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::InvalidParameter(format!("--{key}: {msg}")));
        if self.bp_iters < 1 {
            return bad("bp-iters", "must be >= 1");
        }
        if self.particles < 2 {
            return bad("particles", "must be >= 2");
        }
        if !(0.0..1.0).contains(&self.damping) {
            return bad("damping", "must be in [0, 1)");
        }
        for (key, v) in [("c1", self.c1), ("c2", self.c2), ("inertia", self.inertia)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, "must be finite and >= 0");
            }
        }
        Ok(())
    }

    fn parametric(&self) -> ParametricConfig {
        ParametricConfig { n_iter: self.bp_iters, damping: self.damping, ..ParametricConfig::default() }
    }

    fn sample(&self, seed: u64) -> SampleConfig {
        SampleConfig {
            n_iter: self.bp_iters,
            n_particles: self.particles,
            pso: PsoConfig { c1: self.c1, c2: self.c2, n_pso: self.pso_iters, inertia: self.inertia },
            seed,
            ..SampleConfig::default()
        }
    }

    fn algorithm(&self, seed: u64) -> Result<Algorithm> {
        self.validate()?;
        Ok(match self.algo {
            AlgoKind::Parametric => Algorithm::Parametric(self.parametric()),
            AlgoKind::Sample => Algorithm::Sample(self.sample(seed)),
        })
    }
}

fn load_scenario(path: &Option<PathBuf>) -> Result<Scenario> {
    match path {
        Some(p) => Scenario::from_path(p),
        None => Ok(Scenario::standard()),
    }
}

fn scenario_from_value(v: &Value) -> Result<Scenario> {
    Scenario::from_json_str(&v.to_string())
}

/// Resolves parsed arguments into a [`RunConfig`] plus side outputs of `estimate`.
fn resolve(command: &Command) -> Result<(RunConfig, Option<PathBuf>, Option<PathBuf>)> {
    Ok(match command {
        Command::Simulate(s) => (RunConfig::Simulate { scenario: load_scenario(&s.scenario)?.to_json_value(), seed: s.seed }, None, None),
        Command::Estimate { scenario, algo, trace, dump_particles } => {
            if dump_particles.is_some() && algo.algo != AlgoKind::Sample {
                return Err(Error::InvalidParameter("--dump-particles: needs --algo sample".into()));
            }
            let cfg = RunConfig::Estimate {
                scenario: load_scenario(&scenario.scenario)?.to_json_value(),
                seed: scenario.seed,
                algorithm: algo.algorithm(scenario.seed)?,
            };
            (cfg, trace.clone(), dump_particles.clone())
        }
        Command::Bcrb(s) => (RunConfig::Bcrb { scenario: load_scenario(&s.scenario)?.to_json_value() }, None, None),
        Command::Sweep { scenario, algo, axis, values, trials, metrics } => {
            let axis = match axis {
                Axis::MeasVar => SweepAxis::MeasVar(values.clone()),
                Axis::PriorVar => SweepAxis::PriorVar(values.clone()),
                Axis::Targets => {
                    if values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
                        return Err(Error::InvalidParameter("--values: target counts must be positive integers".into()));
                    }
                    SweepAxis::TargetCount(values.iter().map(|v| *v as usize).collect())
                }
            };
            let metrics = metrics
                .iter()
                .map(|m| match m {
                    Metric::Mse => MetricKind::Mse,
                    Metric::Cdf => MetricKind::Cdf,
                    Metric::RmseTrace => MetricKind::RmseTrace,
                })
                .collect();
            let cfg = RunConfig::Sweep {
                scenario: load_scenario(&scenario.scenario)?.to_json_value(),
                seed: scenario.seed,
                algorithm: algo.algorithm(scenario.seed)?,
                trials: *trials,
                axis,
                metrics,
            };
            (cfg, None, None)
        }
        Command::ReproduceFigure { figure, trials, seed, algo } => {
            algo.validate()?;
            let cfg = RunConfig::ReproduceFigure { figure: *figure, seed: *seed, trials: *trials, parametric: algo.parametric(), sample: algo.sample(*seed) };
            (cfg, None, None)
        }
    })
}

/// Primary table of a run in both encodings, plus extra files to write.
struct RunOutput {
    csv: String,
    json: Value,
    excluded_trials: Option<usize>,
    extra: Vec<(PathBuf, String)>,
}

fn metadata(cfg: &RunConfig, excluded: Option<usize>) -> Value {
    let mut m = json!({ "tool": "passive-bp", "version": env!("CARGO_PKG_VERSION"), "config": cfg });
    if let Some(e) = excluded {
        m["excluded_trials"] = json!(e);
    }
    m
}

fn render(cfg: &RunConfig, out: &RunOutput, format: Format) -> String {
    let meta = metadata(cfg, out.excluded_trials);
    match format {
        Format::Json => {
            let doc = json!({ "metadata": meta, "data": out.json });
            serde_json::to_string_pretty(&doc).expect("json output serializes") + "\n"
        }
        Format::Csv => {
            let header: String =
                serde_json::to_string_pretty(&meta).expect("metadata serializes").lines().map(|l| format!("# {l}\n")).collect();
            header + &out.csv
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}

fn execute(cfg: &RunConfig, output: Option<&Path>, trace_path: Option<PathBuf>, dump_path: Option<PathBuf>, format: Format) -> Result<RunOutput> {
    match cfg {
        RunConfig::Simulate { scenario, seed } => {
            let s = scenario_from_value(scenario)?;
            let (m, p, _) = trial_seeds(*seed, 0);
            let meas = simulate_measurements(&s, m);
            let priors = perturb_receivers(&s, p);
            let mut csv = String::from("quantity,target_id,receiver_id,value\n");
            for (i, row) in meas.ranges.iter().enumerate() {
                for (k, r) in row.iter().enumerate() {
                    csv += &format!("range,{i},{k},{r}\n");
                }
            }
            for (k, q) in priors.iter().enumerate() {
                csv += &format!("receiver_prior_x,,{k},{}\nreceiver_prior_y,,{k},{}\n", q.x, q.y);
            }
            Ok(RunOutput { csv, json: json!({ "ranges": meas.ranges, "receiver_prior_means": priors }), excluded_trials: None, extra: vec![] })
        }
        RunConfig::Estimate { scenario, seed, algorithm } => {
            let s = scenario_from_value(scenario)?;
            let (m, p, a) = trial_seeds(*seed, 0);
            let problem = Problem::new(&s, perturb_receivers(&s, p), simulate_measurements(&s, m))?;
            let mut extra = Vec::new();
            let out = match (algorithm, &dump_path) {
                (Algorithm::Sample(c), Some(path)) => {
                    let mut dump = ParticleDump::new();
                    let out = run_sample_bp_observed(&problem, &SampleConfig { seed: a, ..*c }, &mut |l, k, n, b| dump.record(l, k, n, b))?;
                    extra.push((path.clone(), dump.into_csv()));
                    out
                }
                _ => algorithm.run(&problem, a)?,
            };
            if let Some(t) = trace_path.or_else(|| output.map(|o| sibling(o, "_trace"))) {
                let body = match format {
                    Format::Csv => out.trace.to_csv(),
                    Format::Json => serde_json::to_string_pretty(&out.trace)? + "\n",
                };
                extra.push((t, body));
            }
            Ok(RunOutput { csv: out.estimates.to_csv(), json: json!({ "estimates": out.estimates, "trace": out.trace }), excluded_trials: None, extra })
        }
        RunConfig::Bcrb { scenario } => {
            let b = scenario_bounds(&scenario_from_value(scenario)?)?;
            let mut csv = String::from("node_kind,node_id,bcrb_m2\n");
            for (i, v) in b.targets.iter().enumerate() {
                csv += &format!("target,{i},{v}\n");
            }
            for (k, v) in b.receivers.iter().enumerate() {
                csv += &format!("receiver,{k},{v}\n");
            }
            Ok(RunOutput { csv, json: json!({ "targets": b.targets, "receivers": b.receivers }), excluded_trials: None, extra: vec![] })
        }
        RunConfig::Sweep { scenario, seed, algorithm, trials, axis, metrics } => {
            let mut spec = ExperimentSpec::new(scenario_from_value(scenario)?, *algorithm);
            spec.seed = *seed;
            spec.trials = *trials;
            spec.axis = axis.clone();
            spec.metrics = metrics.clone();
            let t = sweep(&spec)?;
            Ok(RunOutput { csv: t.to_csv(), json: t.to_json(), excluded_trials: Some(t.excluded_trials), extra: vec![] })
        }
        RunConfig::ReproduceFigure { figure, seed, trials, parametric, sample } => {
            let fig = reproduce_figure(*figure, *trials, *seed, *parametric, *sample)?;
            let dir = output.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("figures"));
            let mut written = fig.write_plot(&dir)?;
            let mut extra = Vec::new();
            for (label, table) in &fig.tables {
                let slug: String = label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
                let ext = if format == Format::Json { "json" } else { "csv" };
                let path = dir.join(format!("fig{figure}_{slug}.{ext}"));
                let body = render(
                    cfg,
                    &RunOutput { csv: table.to_csv(), json: table.to_json(), excluded_trials: Some(table.excluded_trials), extra: vec![] },
                    format,
                );
                extra.push((path.clone(), body));
                written.push(path);
            }
            let listing: String = written.iter().map(|p| format!("{}\n", p.display())).collect();
            Ok(RunOutput { csv: listing, json: json!(written), excluded_trials: Some(fig.excluded_trials()), extra })
        }
    }
}

/// Reads the run configuration from the metadata of an earlier output.
pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let meta: Value = if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(&text)?;
        doc.get("metadata").cloned().ok_or_else(|| Error::InvalidParameter(format!("--config: {} has no metadata member", path.display())))?
    } else {
        let header: String = text.lines().filter_map(|l| l.strip_prefix('#')).map(|l| format!("{}\n", l.trim_start())).collect();
        if header.is_empty() {
            return Err(Error::InvalidParameter(format!("--config: {} has no metadata header", path.display())));
        }
        serde_json::from_str(&header)?
    };
    let cfg = meta.get("config").ok_or_else(|| Error::InvalidParameter("--config: metadata lacks a config key".into()))?;
    Ok(serde_json::from_value(cfg.clone())?)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::InvalidParameter(_) | Error::InvalidScenario(_) | Error::DegenerateGeometry(_) | Error::Json(_) | Error::DimensionMismatch(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_RUNTIME,
    }
}

fn run_cli(cli: Cli) -> Result<()> {
    let (cfg, trace, dump) = match (&cli.config, &cli.command) {
        (Some(path), _) => (read_config(path)?, None, None),
        (None, Some(cmd)) => resolve(cmd)?,
        (None, None) => return Err(Error::InvalidParameter("a subcommand or --config is required".into())),
    };
    let out = execute(&cfg, cli.output.as_deref(), trace, dump, cli.format)?;
    for (path, body) in &out.extra {
        std::fs::write(path, body)?;
    }
    let body = match cfg {
        RunConfig::ReproduceFigure { .. } => out.csv.clone(),
        _ => render(&cfg, &out, cli.format),
    };
    match (&cfg, &cli.output) {
        (RunConfig::ReproduceFigure { .. }, _) | (_, None) => print!("{body}"),
        (_, Some(path)) => std::fs::write(path, body)?,
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_cli(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
