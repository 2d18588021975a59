//! Monte Carlo experiments: seeded trials, error metrics, parameter sweeps
//! joined with the BCRB, runtime scaling fits and figure data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcrb::scenario_bounds;
use crate::error::{Error, Result};
use crate::estimate::{BpOutput, NodeKind, Trace};
use crate::geometry::{perturb_receivers, simulate_measurements, Point2, Scenario};
use crate::parametric::{run_parametric_bp, ParametricConfig};
use crate::problem::Problem;
use crate::rng::{stream_key, StreamTag};
use crate::sample::{run_sample_bp, PsoConfig, SampleConfig};

pub const DEFAULT_TRIALS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    Parametric(ParametricConfig),
    Sample(SampleConfig),
}

impl Algorithm {
    pub fn parametric() -> Self {
        Algorithm::Parametric(ParametricConfig::default())
    }

    /// `L = 100` particles with PSO.
    pub fn sample_pso() -> Self {
        Algorithm::Sample(SampleConfig::default())
    }

    /// `particles` particles, PSO disabled.
    pub fn sample_plain(particles: usize) -> Self {
        Algorithm::Sample(SampleConfig { n_particles: particles, pso: PsoConfig::disabled(), ..SampleConfig::default() })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Parametric(_) => "parametric",
            Algorithm::Sample(c) if c.pso.n_pso > 0 => "sample+pso",
            Algorithm::Sample(_) => "sample-pso",
        }
    }

    pub fn n_iter(&self) -> usize {
        match self {
            Algorithm::Parametric(c) => c.n_iter,
            Algorithm::Sample(c) => c.n_iter,
        }
    }

    /// Runs the estimator; sample BP draws its particles from `seed`.
    pub fn run(&self, problem: &Problem, seed: u64) -> Result<BpOutput> {
        match self {
            Algorithm::Parametric(c) => run_parametric_bp(problem, c),
            Algorithm::Sample(c) => run_sample_bp(problem, &SampleConfig { seed, ..*c }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    MeasVar(Vec<f64>),
    PriorVar(Vec<f64>),
    TargetCount(Vec<usize>),
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepAxis::None => Vec::new(),
            SweepAxis::MeasVar(v) | SweepAxis::PriorVar(v) => v.clone(),
            SweepAxis::TargetCount(v) => v.iter().map(|n| *n as f64).collect(),
        }
    }

    /// The scenario at grid point `value`.
    pub fn apply(&self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        match self {
            SweepAxis::None => Ok(scenario.clone()),
            SweepAxis::MeasVar(_) => scenario.with_meas_var(value),
            SweepAxis::PriorVar(_) => scenario.with_receiver_prior_var(value),
            SweepAxis::TargetCount(_) => scenario.with_first_targets(value as usize),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SweepAxis::None => Ok(()),
            SweepAxis::MeasVar(v) | SweepAxis::PriorVar(v) => {
                if v.is_empty() || v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidParameter("variance sweep grid must be non-empty and strictly positive".into()));
                }
                Ok(())
            }
            SweepAxis::TargetCount(v) => {
                if v.is_empty() || v.contains(&0) {
                    return Err(Error::InvalidParameter("target-count sweep must be non-empty and >= 1".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Cdf,
    RmseTrace,
    Mse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub seed: u64,
    pub axis: SweepAxis,
    pub metrics: Vec<MetricKind>,
    /// Error abscissae for CDF rows, meters.
    pub cdf_grid: Vec<f64>,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, algorithm: Algorithm) -> Self {
        Self {
            scenario,
            algorithm,
            trials: DEFAULT_TRIALS,
            seed: 0,
            axis: SweepAxis::None,
            metrics: vec![MetricKind::Mse],
            cdf_grid: default_cdf_grid(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trial count must be >= 1".into()));
        }
        self.axis.validate()?;
        if self.metrics.contains(&MetricKind::Cdf) && self.cdf_grid.is_empty() {
            return Err(Error::InvalidParameter("CDF grid must not be empty".into()));
        }
        self.scenario.validate()
    }
}

/// 0 to 10 m in 0.1 m steps.
pub fn default_cdf_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 * 0.1).collect()
}

/// Seeds of trial `trial`: (measurement noise, receiver prior means, estimator).
pub fn trial_seeds(seed: u64, trial: usize) -> (u64, u64, u64) {
    let t = trial as u64;
    (stream_key(seed, StreamTag::Trial, t, 0), stream_key(seed, StreamTag::Trial, t, 1), stream_key(seed, StreamTag::Trial, t, 2))
}

/// Squared position errors of one trial against the true positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub target_sq_err: Vec<f64>,
    pub receiver_sq_err: Vec<f64>,
    pub trace: Trace,
    pub runtime_s: f64,
}

pub fn run_trial(scenario: &Scenario, algorithm: &Algorithm, seed: u64, trial: usize) -> Result<TrialOutcome> {
    let (meas_seed, prior_seed, algo_seed) = trial_seeds(seed, trial);
    let problem = Problem::new(scenario, perturb_receivers(scenario, prior_seed), simulate_measurements(scenario, meas_seed))?;
    let start = Instant::now();
    let out = algorithm.run(&problem, algo_seed)?;
    let runtime_s = start.elapsed().as_secs_f64();
    Ok(TrialOutcome {
        target_sq_err: out.estimates.targets.iter().zip(&scenario.targets).map(|(e, t)| e.mean.distance_sq(*t)).collect(),
        receiver_sq_err: out.estimates.receivers.iter().zip(&scenario.receivers).map(|(e, r)| e.mean.distance_sq(*r)).collect(),
        trace: out.trace,
        runtime_s,
    })
}

/// Completed trials in trial order plus the failures that were excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub outcomes: Vec<TrialOutcome>,
    pub excluded: Vec<(usize, String)>,
}

impl TrialSet {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Final position errors (m) of every target over all trials.
    pub fn target_errors(&self) -> Vec<f64> {
        self.outcomes.iter().flat_map(|o| o.target_sq_err.iter().map(|e| e.sqrt())).collect()
    }

    pub fn receiver_errors(&self) -> Vec<f64> {
        self.outcomes.iter().flat_map(|o| o.receiver_sq_err.iter().map(|e| e.sqrt())).collect()
    }

    pub fn traces(&self) -> Vec<Trace> {
        self.outcomes.iter().map(|o| o.trace.clone()).collect()
    }
}

/// Runs `trials` independent trials in parallel. Results do not depend on the
/// number of worker threads.
pub fn simulate_trials(scenario: &Scenario, algorithm: &Algorithm, trials: usize, seed: u64) -> TrialSet {
    let results: Vec<Result<TrialOutcome>> = (0..trials).into_par_iter().map(|t| run_trial(scenario, algorithm, seed, t)).collect();
    let mut outcomes = Vec::with_capacity(trials);
    let mut excluded = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => excluded.push((t, e.to_string())),
        }
    }
    if !excluded.is_empty() {
        log::warn!("{} of {trials} trials excluded, first: trial {} ({})", excluded.len(), excluded[0].0, excluded[0].1);
    }
    TrialSet { outcomes, excluded }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub sweep_value: Option<f64>,
    pub node_kind: NodeKind,
    /// `None` for rows pooled over all nodes of the kind.
    pub node_id: Option<usize>,
    pub metric: String,
    pub value: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricTable {
    pub rows: Vec<MetricRow>,
    /// Trials dropped because the estimator failed, summed over sweep points.
    pub excluded_trials: usize,
}

impl MetricTable {
    /// `sweep_value,node_kind,node_id,metric,value,n_trials`; pooled rows use node id `all`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep_value,node_kind,node_id,metric,value,n_trials\n");
        for r in &self.rows {
            let sweep = r.sweep_value.map(|v| v.to_string()).unwrap_or_default();
            let id = r.node_id.map(|i| i.to_string()).unwrap_or_else(|| "all".into());
            let _ = writeln!(out, "{sweep},{},{id},{},{},{}", r.node_kind.as_str(), r.metric, r.value, r.n_trials);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("metric table serializes")
    }

    pub fn get(&self, sweep: Option<f64>, kind: NodeKind, node: Option<usize>, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == sweep && r.node_kind == kind && r.node_id == node && r.metric == metric)
            .map(|r| r.value)
    }

    fn push(&mut self, sweep_value: Option<f64>, node_kind: NodeKind, node_id: Option<usize>, metric: impl Into<String>, value: f64, n: usize) {
        self.rows.push(MetricRow { sweep_value, node_kind, node_id, metric: metric.into(), value, n_trials: n });
    }

    fn extend(&mut self, other: MetricTable) {
        self.rows.extend(other.rows);
        self.excluded_trials += other.excluded_trials;
    }
}

/// Empirical CDF of `errors` at every grid point.
pub fn compute_cdf(errors: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::InvalidParameter("CDF of an empty error set".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(grid.iter().map(|g| sorted.partition_point(|e| e <= g) as f64 / n).collect())
}

/// Largest absolute difference between two empirical CDFs over `grid`.
pub fn max_cdf_gap(a: &[f64], b: &[f64], grid: &[f64]) -> Result<f64> {
    let ca = compute_cdf(a, grid)?;
    let cb = compute_cdf(b, grid)?;
    Ok(ca.iter().zip(&cb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Target RMSE per iteration, pooled over all targets and trials.
pub fn compute_rmse_trace(traces: &[Trace], truth: &[Point2]) -> Result<Vec<f64>> {
    let len = traces.first().map(Trace::len).ok_or_else(|| Error::InvalidParameter("no traces".into()))?;
    if traces.iter().any(|t| t.len() != len) {
        return Err(Error::DimensionMismatch("traces have different lengths".into()));
    }
    (0..len)
        .map(|l| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for t in traces {
                let est = &t.iterations[l];
                if est.targets.len() != truth.len() {
                    return Err(Error::DimensionMismatch(format!("{} estimates for {} targets", est.targets.len(), truth.len())));
                }
                for (e, p) in est.targets.iter().zip(truth) {
                    sum += e.mean.distance_sq(*p);
                    count += 1;
                }
            }
            Ok((sum / count as f64).sqrt())
        })
        .collect()
}

/// Per-trial target RMSE per iteration.
pub fn trial_rmse_trace(trace: &Trace, truth: &[Point2]) -> Vec<f64> {
    trace
        .iterations
        .iter()
        .map(|e| (e.targets.iter().zip(truth).map(|(n, t)| n.mean.distance_sq(*t)).sum::<f64>() / truth.len() as f64).sqrt())
        .collect()
}

/// First iteration (1-based) from which every later per-iteration change of
/// `series` up to `horizon` stays below `tol`; `None` if there is none.
pub fn settling_iteration(series: &[f64], tol: f64, horizon: usize) -> Option<usize> {
    let end = series.len().min(horizon);
    if end < 2 {
        return None;
    }
    let mut settled = None;
    for l in (1..end).rev() {
        if (series[l] - series[l - 1]).abs() < tol {
            settled = Some(l + 1);
        } else {
            break;
        }
    }
    settled
}

/// Mean and Monte Carlo standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn table_from_trials(set: &TrialSet, spec: &ExperimentSpec, truth: &[Point2], sweep: Option<f64>) -> Result<MetricTable> {
    let n = set.len();
    let mut table = MetricTable { rows: Vec::new(), excluded_trials: set.excluded.len() };
    if n == 0 {
        return Ok(table);
    }
    if spec.metrics.contains(&MetricKind::Mse) {
        let a = set.outcomes[0].target_sq_err.len();
        let m = set.outcomes[0].receiver_sq_err.len();
        for i in 0..a {
            let v: Vec<f64> = set.outcomes.iter().map(|o| o.target_sq_err[i]).collect();
            let (mean, se) = mean_and_se(&v);
            table.push(sweep, NodeKind::Target, Some(i), "mse", mean, n);
            table.push(sweep, NodeKind::Target, Some(i), "mse_se", se, n);
        }
        for k in 0..m {
            let v: Vec<f64> = set.outcomes.iter().map(|o| o.receiver_sq_err[k]).collect();
            let (mean, se) = mean_and_se(&v);
            table.push(sweep, NodeKind::Receiver, Some(k), "mse", mean, n);
            table.push(sweep, NodeKind::Receiver, Some(k), "mse_se", se, n);
        }
    }
    if spec.metrics.contains(&MetricKind::Cdf) {
        for (kind, errors) in [(NodeKind::Target, set.target_errors()), (NodeKind::Receiver, set.receiver_errors())] {
            for (g, c) in spec.cdf_grid.iter().zip(compute_cdf(&errors, &spec.cdf_grid)?) {
                table.push(sweep, kind, None, format!("cdf@{g}"), c, n);
            }
        }
    }
    if spec.metrics.contains(&MetricKind::RmseTrace) {
        for (l, v) in compute_rmse_trace(&set.traces(), truth)?.into_iter().enumerate() {
            table.push(sweep, NodeKind::Target, None, format!("rmse_iter{}", l + 1), v, n);
        }
    }
    Ok(table)
}

/// Runs the trials of `spec` on its scenario (the sweep axis is ignored).
pub fn run_trials(spec: &ExperimentSpec) -> Result<MetricTable> {
    spec.validate()?;
    let set = simulate_trials(&spec.scenario, &spec.algorithm, spec.trials, spec.seed);
    table_from_trials(&set, spec, &spec.scenario.targets, None)
}

/// Runs the trials at every grid point of the axis and adds the BCRB of
/// every node as `bcrb` rows next to the measured metrics.
pub fn sweep(spec: &ExperimentSpec) -> Result<MetricTable> {
    spec.validate()?;
    let values = spec.axis.values();
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs a non-empty axis".into()));
    }
    let mut table = MetricTable::default();
    for v in values {
        let scenario = spec.axis.apply(&spec.scenario, v)?;
        let set = simulate_trials(&scenario, &spec.algorithm, spec.trials, spec.seed);
        table.extend(table_from_trials(&set, spec, &scenario.targets, Some(v))?);
        let bounds = scenario_bounds(&scenario)?;
        for (i, b) in bounds.targets.iter().enumerate() {
            table.push(Some(v), NodeKind::Target, Some(i), "bcrb", *b, 0);
        }
        for (k, b) in bounds.receivers.iter().enumerate() {
            table.push(Some(v), NodeKind::Receiver, Some(k), "bcrb", *b, 0);
        }
    }
    Ok(table)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_intercept: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two (x, y) pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    Ok(ScalingFit { exponent, log_intercept: my - exponent * mx, points: xs.iter().cloned().zip(ys.iter().cloned()).collect() })
}

/// Fastest of `reps` runs, or of as many as fit in `min_total` seconds.
fn time_min(reps: usize, min_total: f64, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut best = f64::INFINITY;
    let start = Instant::now();
    let mut done = 0;
    while done < reps || start.elapsed().as_secs_f64() < min_total {
        let t = Instant::now();
        f()?;
        best = best.min(t.elapsed().as_secs_f64());
        done += 1;
    }
    Ok(best)
}

/// Sample BP without PSO, runtime vs particle count `R` on the standard scenario.
pub fn time_sample_vs_particles(counts: &[usize], n_iter: usize, reps: usize, seed: u64) -> Result<ScalingFit> {
    let scenario = Scenario::standard();
    let (m, p, _) = trial_seeds(seed, 0);
    let problem = Problem::new(&scenario, perturb_receivers(&scenario, p), simulate_measurements(&scenario, m))?;
    let mut ys = Vec::new();
    for &r in counts {
        let cfg = SampleConfig { n_iter, n_particles: r, pso: PsoConfig::disabled(), seed, ..SampleConfig::default() };
        ys.push(time_min(reps, 0.0, || run_sample_bp(&problem, &cfg).map(|_| ()))?);
    }
    fit_loglog(&counts.iter().map(|c| *c as f64).collect::<Vec<_>>(), &ys)
}

/// One target at (40, 55) seen by `n - 1` receivers on a circle, so the number
/// of range factors grows linearly with the node count `n`.
pub fn ring_scenario(nodes: usize) -> Result<Scenario> {
    if nodes < 3 {
        return Err(Error::InvalidParameter("ring scenario needs at least 3 nodes".into()));
    }
    let m = nodes - 1;
    let receivers = (0..m)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64 + 0.1;
            Point2::new(50.0 + 35.0 * a.cos(), 50.0 + 35.0 * a.sin())
        })
        .collect();
    Scenario::new(vec![Point2::new(40.0, 55.0)], receivers, 1.0, 9.0)
}

/// Parametric BP runtime vs node count `M + A`.
pub fn time_parametric_vs_nodes(sizes: &[usize], n_iter: usize, seed: u64) -> Result<ScalingFit> {
    let mut ys = Vec::new();
    for &n in sizes {
        let scenario = ring_scenario(n)?;
        let (m, p, _) = trial_seeds(seed, n);
        let problem = Problem::new(&scenario, perturb_receivers(&scenario, p), simulate_measurements(&scenario, m))?;
        let cfg = ParametricConfig { n_iter, ..ParametricConfig::default() };
        ys.push(time_min(20, 0.2, || run_parametric_bp(&problem, &cfg).map(|_| ()))?);
    }
    fit_loglog(&sizes.iter().map(|s| *s as f64).collect::<Vec<_>>(), &ys)
}

/// Writes `<stem>.dat` (whitespace-separated, `#` header) and a `<stem>.gp`
/// script plotting every column against the first.
pub fn write_gnuplot(dir: &Path, stem: &str, title: &str, xlabel: &str, ylabel: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let dat = dir.join(format!("{stem}.dat"));
    let gp = dir.join(format!("{stem}.gp"));
    let mut body = format!("# {}\n", columns.join(" "));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(body, "{}", cells.join(" "));
    }
    std::fs::write(&dat, body)?;
    let mut script = format!("set title \"{title}\"\nset xlabel \"{xlabel}\"\nset ylabel \"{ylabel}\"\nset key bottom right\nplot ");
    let plots: Vec<String> =
        (1..columns.len()).map(|c| format!("\"{stem}.dat\" using 1:{} with linespoints title \"{}\"", c + 1, columns[c])).collect();
    script.push_str(&plots.join(", \\\n     "));
    script.push('\n');
    std::fs::write(&gp, script)?;
    Ok(vec![dat, gp])
}

/// Metric tables of one figure, one per algorithm, plus gnuplot data.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureData {
    pub figure: u8,
    pub tables: Vec<(String, MetricTable)>,
    pub plot_columns: Vec<String>,
    pub plot_rows: Vec<Vec<f64>>,
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
}

impl FigureData {
    pub fn write_plot(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let cols: Vec<&str> = self.plot_columns.iter().map(String::as_str).collect();
        write_gnuplot(dir, &format!("fig{}", self.figure), &self.title, &self.xlabel, &self.ylabel, &cols, &self.plot_rows)
    }

    pub fn excluded_trials(&self) -> usize {
        self.tables.iter().map(|(_, t)| t.excluded_trials).sum()
    }
}

pub const FIGURES: [u8; 7] = [4, 5, 6, 7, 8, 9, 10];

/// The experiment behind figure `n` with `trials` trials.
/// `sample` and `parametric` configure the estimators where the figure uses them.
pub fn reproduce_figure(n: u8, trials: usize, seed: u64, parametric: ParametricConfig, sample: SampleConfig) -> Result<FigureData> {
    let scenario = Scenario::standard();
    let pso = Algorithm::Sample(sample);
    let plain = Algorithm::Sample(SampleConfig { n_particles: 2000, pso: PsoConfig::disabled(), ..sample });
    let par = Algorithm::Parametric(parametric);
    let spec = |algorithm: Algorithm, metrics: Vec<MetricKind>, axis: SweepAxis| ExperimentSpec {
        scenario: scenario.clone(),
        algorithm,
        trials,
        seed,
        axis,
        metrics,
        cdf_grid: default_cdf_grid(),
    };
    let label = |a: &Algorithm| match a {
        Algorithm::Sample(c) => format!("{} L={}", a.label(), c.n_particles),
        _ => a.label().to_string(),
    };
    let mut tables = Vec::new();
    let (columns, rows, title, xlabel, ylabel) = match n {
        4 | 5 => {
            let kind = if n == 4 { NodeKind::Target } else { NodeKind::Receiver };
            let algos = if n == 4 { vec![pso, plain, par] } else { vec![pso, par] };
            let grid = default_cdf_grid();
            let mut cols = vec!["error_m".to_string()];
            let mut curves = Vec::new();
            for a in algos {
                let t = run_trials(&spec(a, vec![MetricKind::Cdf, MetricKind::Mse], SweepAxis::None))?;
                curves.push(grid.iter().map(|g| t.get(None, kind, None, &format!("cdf@{g}")).unwrap_or(f64::NAN)).collect::<Vec<_>>());
                cols.push(label(&a));
                tables.push((label(&a), t));
            }
            let rows = grid.iter().enumerate().map(|(j, g)| std::iter::once(*g).chain(curves.iter().map(|c| c[j])).collect()).collect();
            let what = if n == 4 { "targets" } else { "receivers" };
            (cols, rows, format!("CDF of {what} localization error"), "error (m)".to_string(), "CDF".to_string())
        }
        6 => {
            let mut cols = vec!["iteration".to_string()];
            let mut curves = Vec::new();
            for a in [pso, par] {
                let t = run_trials(&spec(a, vec![MetricKind::RmseTrace, MetricKind::Mse], SweepAxis::None))?;
                curves.push((1..=a.n_iter()).map(|l| t.get(None, NodeKind::Target, None, &format!("rmse_iter{l}")).unwrap_or(f64::NAN)).collect::<Vec<_>>());
                cols.push(label(&a));
                tables.push((label(&a), t));
            }
            let len = curves.iter().map(Vec::len).max().unwrap_or(0);
            let rows = (0..len)
                .map(|l| std::iter::once((l + 1) as f64).chain(curves.iter().map(|c| c.get(l).copied().unwrap_or(f64::NAN))).collect())
                .collect();
            (cols, rows, "Target RMSE versus iteration".to_string(), "iteration".to_string(), "RMSE (m)".to_string())
        }
        7..=10 => {
            let (axis, kind, node) = match n {
                7 => (SweepAxis::MeasVar(vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]), NodeKind::Target, 0),
                9 => (SweepAxis::MeasVar(vec![0.25, 1.0, 4.0, 16.0, 100.0]), NodeKind::Receiver, 0),
                10 => (SweepAxis::PriorVar(vec![0.01, 1.0, 9.0, 25.0]), NodeKind::Target, 0),
                _ => (SweepAxis::TargetCount(vec![1, 2, 3]), NodeKind::Target, 0),
            };
            let t = sweep(&spec(par, vec![MetricKind::Mse], axis.clone()))?;
            let mut cols = vec![
                match axis {
                    SweepAxis::MeasVar(_) => "meas_var_m2",
                    SweepAxis::PriorVar(_) => "prior_var_m2",
                    _ => "targets",
                }
                .to_string(),
                format!("{} {node} MSE", kind.as_str()),
                format!("{} {node} BCRB", kind.as_str()),
            ];
            let mut rows: Vec<Vec<f64>> = axis
                .values()
                .iter()
                .map(|v| {
                    vec![
                        *v,
                        t.get(Some(*v), kind, Some(node), "mse").unwrap_or(f64::NAN),
                        t.get(Some(*v), kind, Some(node), "bcrb").unwrap_or(f64::NAN),
                    ]
                })
                .collect();
            if n == 10 {
                cols.push("receiver 0 MSE".into());
                cols.push("receiver 0 BCRB".into());
                for (row, v) in rows.iter_mut().zip(axis.values()) {
                    row.push(t.get(Some(v), NodeKind::Receiver, Some(0), "mse").unwrap_or(f64::NAN));
                    row.push(t.get(Some(v), NodeKind::Receiver, Some(0), "bcrb").unwrap_or(f64::NAN));
                }
            }
            if n == 9 {
                cols.push("prior MSE".into());
                for row in rows.iter_mut() {
                    row.push(2.0 * scenario.receiver_prior_var[0]);
                }
            }
            tables.push((label(&par), t));
            let title = match n {
                7 => "Target MSE versus measurement noise variance",
                8 => "Target MSE and BCRB versus number of targets",
                9 => "Receiver MSE versus measurement noise variance",
                _ => "MSE and BCRB versus receiver prior variance",
            };
            (cols, rows, title.to_string(), cols_x(n).to_string(), "MSE (m^2)".to_string())
        }
        other => return Err(Error::InvalidParameter(format!("no figure {other}; available: 4-10"))),
    };
    Ok(FigureData { figure: n, tables, plot_columns: columns, plot_rows: rows, title, xlabel, ylabel })
}

fn cols_x(n: u8) -> &'static str {
    match n {
        8 => "number of targets",
        10 => "receiver prior variance (m^2)",
        _ => "measurement noise variance (m^2)",
    }
}
