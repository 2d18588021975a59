//! Scenario description, the bistatic range model and the measurement simulator.
//!
//! The transmitter sits at the origin and is never stored. A range `R_im` is the
//! length of the path transmitter -> target `i` -> receiver `m` plus zero-mean
//! Gaussian noise with variance `meas_var[i][m]`.

use std::f64::consts::PI;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

/// A point in the plane, in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Self { x: p[0], y: p[1] }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned region the targets are known to lie in. A flat target prior is
/// uniform over this box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub min: Point2,
    pub max: Point2,
}

impl Default for Arena {
    fn default() -> Self {
        Self { min: Point2::new(0.0, 0.0), max: Point2::new(100.0, 100.0) }
    }
}

impl Arena {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Point2) -> Point2 {
        Point2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Prior knowledge about the targets.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetPrior {
    /// No information: uniform over the arena, zero precision.
    Flat,
    /// Independent circular Gaussians with a shared per-coordinate variance.
    Gaussian { means: Vec<Point2>, var: f64 },
}

impl TargetPrior {
    /// Per-coordinate (mean, variance) for target `i`; `None` when flat.
    pub fn for_target(&self, i: usize) -> Option<(Point2, f64)> {
        match self {
            TargetPrior::Flat => None,
            TargetPrior::Gaussian { means, var } => Some((means[i], *var)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub targets: Vec<Point2>,
    pub receivers: Vec<Point2>,
    /// Range noise variance per link, `A x M`, m^2.
    pub meas_var: Vec<Vec<f64>>,
    /// Per-coordinate prior variance of each receiver, m^2.
    pub receiver_prior_var: Vec<f64>,
    pub target_prior: TargetPrior,
    pub arena: Arena,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarOrMatrix {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetPriorFile {
    means: Vec<Point2>,
    var: f64,
}

/// On-disk scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    targets: Vec<Point2>,
    receivers: Vec<Point2>,
    meas_var: ScalarOrMatrix,
    receiver_prior_var: ScalarOrList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_prior: Option<TargetPriorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arena: Option<[Point2; 2]>,
}

const STANDARD_JSON: &str = include_str!("../scenarios/standard.json");

impl Scenario {
    /// Builds a scenario with uniform variances and a flat target prior.
    pub fn new(
        targets: Vec<Point2>,
        receivers: Vec<Point2>,
        meas_var: f64,
        receiver_prior_var: f64,
    ) -> Result<Self> {
        let a = targets.len();
        let m = receivers.len();
        let s = Scenario {
            targets,
            receivers,
            meas_var: vec![vec![meas_var; m]; a],
            receiver_prior_var: vec![receiver_prior_var; m],
            target_prior: TargetPrior::Flat,
            arena: Arena::default(),
        };
        s.validate()?;
        Ok(s)
    }

    /// The bundled five-receiver, three-target layout on a 100 m x 100 m plane.
    pub fn standard() -> Self {
        Self::from_json_str(STANDARD_JSON).expect("bundled scenario is valid")
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn num_receivers(&self) -> usize {
        self.receivers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.targets.len();
        let m = self.receivers.len();
        if a < 1 {
            return Err(Error::InvalidScenario("at least one target is required".into()));
        }
        if m < 2 {
            return Err(Error::InvalidScenario("at least two receivers are required".into()));
        }
        for (i, p) in self.targets.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidScenario(format!("targets[{i}] is not finite")));
            }
        }
        for (k, p) in self.receivers.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidScenario(format!("receivers[{k}] is not finite")));
            }
        }
        if self.meas_var.len() != a || self.meas_var.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidScenario(format!("meas_var must be {a}x{m}")));
        }
        for (i, row) in self.meas_var.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "meas_var[{i}][{k}] must be finite and >= 0, got {v}"
                    )));
                }
            }
        }
        if self.receiver_prior_var.len() != m {
            return Err(Error::InvalidScenario(format!("receiver_prior_var must have length {m}")));
        }
        for (k, v) in self.receiver_prior_var.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "receiver_prior_var[{k}] must be finite and >= 0, got {v}"
                )));
            }
        }
        if let TargetPrior::Gaussian { means, var } = &self.target_prior {
            if means.len() != a {
                return Err(Error::InvalidScenario(format!("target_prior.means must have length {a}")));
            }
            if means.iter().any(|p| !p.is_finite()) {
                return Err(Error::InvalidScenario("target_prior.means must be finite".into()));
            }
            if !(*var > 0.0) || !var.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "target_prior.var must be finite and > 0, got {var}"
                )));
            }
        }
        let ar = &self.arena;
        if !ar.min.is_finite() || !ar.max.is_finite() || ar.max.x <= ar.min.x || ar.max.y <= ar.min.y {
            return Err(Error::InvalidScenario("arena must be a non-empty finite box".into()));
        }
        for (i, t) in self.targets.iter().enumerate() {
            if *t == Point2::ORIGIN && self.receivers.iter().any(|r| r == t) {
                return Err(Error::InvalidScenario(format!(
                    "targets[{i}] coincides with both the transmitter and a receiver"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(s)?;
        let a = file.targets.len();
        let m = file.receivers.len();
        let meas_var = match file.meas_var {
            ScalarOrMatrix::Scalar(v) => vec![vec![v; m]; a],
            ScalarOrMatrix::Matrix(mat) => mat,
        };
        let receiver_prior_var = match file.receiver_prior_var {
            ScalarOrList::Scalar(v) => vec![v; m],
            ScalarOrList::List(l) => l,
        };
        let target_prior = match file.target_prior {
            None => TargetPrior::Flat,
            Some(tp) => TargetPrior::Gaussian { means: tp.means, var: tp.var },
        };
        let arena = match file.arena {
            None => Arena::default(),
            Some([min, max]) => Arena { min, max },
        };
        let s = Scenario {
            targets: file.targets,
            receivers: file.receivers,
            meas_var,
            receiver_prior_var,
            target_prior,
            arena,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Serializes to the same document format accepted by [`Scenario::from_json_str`].
    pub fn to_json_value(&self) -> serde_json::Value {
        let file = ScenarioFile {
            targets: self.targets.clone(),
            receivers: self.receivers.clone(),
            meas_var: ScalarOrMatrix::Matrix(self.meas_var.clone()),
            receiver_prior_var: ScalarOrList::List(self.receiver_prior_var.clone()),
            target_prior: match &self.target_prior {
                TargetPrior::Flat => None,
                TargetPrior::Gaussian { means, var } => {
                    Some(TargetPriorFile { means: means.clone(), var: *var })
                }
            },
            arena: Some([self.arena.min, self.arena.max]),
        };
        serde_json::to_value(file).expect("scenario serializes")
    }

    /// Same geometry with every link variance set to `v`.
    pub fn with_meas_var(&self, v: f64) -> Result<Self> {
        let mut s = self.clone();
        for row in &mut s.meas_var {
            row.iter_mut().for_each(|x| *x = v);
        }
        s.validate()?;
        Ok(s)
    }

    /// Same geometry with every receiver prior variance set to `v`.
    pub fn with_receiver_prior_var(&self, v: f64) -> Result<Self> {
        let mut s = self.clone();
        s.receiver_prior_var.iter_mut().for_each(|x| *x = v);
        s.validate()?;
        Ok(s)
    }

    /// Keeps only the first `n` targets.
    pub fn with_first_targets(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.targets.len() {
            return Err(Error::InvalidParameter(format!(
                "target count {n} outside 1..={}",
                self.targets.len()
            )));
        }
        let mut s = self.clone();
        s.targets.truncate(n);
        s.meas_var.truncate(n);
        if let TargetPrior::Gaussian { means, .. } = &mut s.target_prior {
            means.truncate(n);
        }
        s.validate()?;
        Ok(s)
    }
}

/// Noisy ranges, `ranges[i][m]` for target `i` and receiver `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub ranges: Vec<Vec<f64>>,
    pub seed: u64,
}

impl MeasurementSet {
    pub fn get(&self, target: usize, receiver: usize) -> f64 {
        self.ranges[target][receiver]
    }

    pub fn num_targets(&self) -> usize {
        self.ranges.len()
    }

    pub fn num_receivers(&self) -> usize {
        self.ranges.first().map_or(0, Vec::len)
    }

    /// Exact ranges with no noise.
    pub fn noiseless(scenario: &Scenario) -> Self {
        let ranges = scenario
            .targets
            .iter()
            .map(|t| scenario.receivers.iter().map(|r| true_range(*t, *r)).collect())
            .collect();
        Self { ranges, seed: 0 }
    }

    pub fn check_dims(&self, a: usize, m: usize) -> Result<()> {
        if self.ranges.len() != a || self.ranges.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "measurements are {}x{}, expected {a}x{m}",
                self.num_targets(),
                self.num_receivers()
            )));
        }
        if self.ranges.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("measurements must be finite".into()));
        }
        Ok(())
    }
}

/// Noise-free bistatic range: transmitter (origin) -> target -> receiver.
#[inline]
pub fn true_range(target: Point2, receiver: Point2) -> f64 {
    target.norm() + target.distance(receiver)
}

/// Gaussian log-likelihood of a single range.
pub fn log_likelihood(range: f64, target: Point2, receiver: Point2, var: f64) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::InvalidParameter(format!("measurement variance must be > 0, got {var}")));
    }
    Ok(log_likelihood_unchecked(range, target, receiver, var))
}

#[inline]
pub(crate) fn log_likelihood_unchecked(range: f64, target: Point2, receiver: Point2, var: f64) -> f64 {
    let r = range - true_range(target, receiver);
    -0.5 * (2.0 * PI * var).ln() - r * r / (2.0 * var)
}

/// Log-density of the circular 2-D Gaussian `N(mean, var * I)`.
pub fn circular_gaussian_log_density(p: Point2, mean: Point2, var: f64) -> f64 {
    -(2.0 * PI * var).ln() - p.distance_sq(mean) / (2.0 * var)
}

/// Draws `R_im = true_range + n_im`, one independent stream per link.
pub fn simulate_measurements(scenario: &Scenario, seed: u64) -> MeasurementSet {
    let ranges = scenario
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            scenario
                .receivers
                .iter()
                .enumerate()
                .map(|(m, r)| {
                    let mut rng = stream(seed, StreamTag::Measurement, i as u64, m as u64);
                    let n: f64 = StandardNormal.sample(&mut rng);
                    true_range(*t, *r) + scenario.meas_var[i][m].sqrt() * n
                })
                .collect()
        })
        .collect();
    MeasurementSet { ranges, seed }
}

/// Draws the receivers' prior means: each true coordinate offset by `N(0, var_m)`.
pub fn perturb_receivers(scenario: &Scenario, seed: u64) -> Vec<Point2> {
    scenario
        .receivers
        .iter()
        .zip(&scenario.receiver_prior_var)
        .enumerate()
        .map(|(m, (r, var))| {
            let mut rng = stream(seed, StreamTag::ReceiverPerturbation, m as u64, 0);
            let sd = var.sqrt();
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            Point2::new(r.x + sd * dx, r.y + sd * dy)
        })
        .collect()
}

/// Coarse `n x n` grid search over the arena for each target, maximizing the
/// summed log-likelihood of its links with receivers held at `receivers`.
pub fn grid_initial_targets(
    measurements: &MeasurementSet,
    receivers: &[Point2],
    meas_var: &[Vec<f64>],
    arena: &Arena,
    n: usize,
) -> Vec<Point2> {
    let n = n.max(2);
    let step_x = arena.width() / (n - 1) as f64;
    let step_y = arena.height() / (n - 1) as f64;
    (0..measurements.num_targets())
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, arena.min);
            for gx in 0..n {
                for gy in 0..n {
                    let p = Point2::new(arena.min.x + gx as f64 * step_x, arena.min.y + gy as f64 * step_y);
                    let score: f64 = receivers
                        .iter()
                        .enumerate()
                        .map(|(m, r)| {
                            let res = measurements.get(i, m) - true_range(p, *r);
                            -res * res / meas_var[i][m].max(f64::MIN_POSITIVE)
                        })
                        .sum();
                    if score > best.0 {
                        best = (score, p);
                    }
                }
            }
            best.1
        })
        .collect()
}
