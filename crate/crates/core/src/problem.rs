//! What an estimator is allowed to see: measurements, noise model and priors.
//! True positions never enter a [`Problem`].

use crate::error::{Error, Result};
use crate::geometry::{Arena, MeasurementSet, Point2, Scenario, TargetPrior};

/// Zero variances in the model (exact ranges, perfectly known receivers) are
/// raised to this floor so every likelihood and prior stays a proper density.
pub const MIN_MODEL_VARIANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub measurements: MeasurementSet,
    pub meas_var: Vec<Vec<f64>>,
    pub receiver_prior_means: Vec<Point2>,
    pub receiver_prior_var: Vec<f64>,
    pub target_prior: TargetPrior,
    pub arena: Arena,
}

impl Problem {
    pub fn new(scenario: &Scenario, receiver_prior_means: Vec<Point2>, measurements: MeasurementSet) -> Result<Self> {
        let a = scenario.num_targets();
        let m = scenario.num_receivers();
        measurements.check_dims(a, m)?;
        if receiver_prior_means.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} receiver prior means for {m} receivers",
                receiver_prior_means.len()
            )));
        }
        if receiver_prior_means.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("receiver prior means must be finite".into()));
        }
        Ok(Self {
            measurements,
            meas_var: scenario.meas_var.clone(),
            receiver_prior_means,
            receiver_prior_var: scenario.receiver_prior_var.clone(),
            target_prior: scenario.target_prior.clone(),
            arena: scenario.arena,
        })
    }

    pub fn num_targets(&self) -> usize {
        self.measurements.num_targets()
    }

    pub fn num_receivers(&self) -> usize {
        self.measurements.num_receivers()
    }

    pub fn range(&self, target: usize, receiver: usize) -> f64 {
        self.measurements.get(target, receiver)
    }

    pub fn link_var(&self, target: usize, receiver: usize) -> f64 {
        self.meas_var[target][receiver].max(MIN_MODEL_VARIANCE)
    }

    pub fn receiver_var(&self, receiver: usize) -> f64 {
        self.receiver_prior_var[receiver].max(MIN_MODEL_VARIANCE)
    }

    /// Model variances with the floor applied, `A x M`.
    pub fn link_vars(&self) -> Vec<Vec<f64>> {
        (0..self.num_targets())
            .map(|i| (0..self.num_receivers()).map(|m| self.link_var(i, m)).collect())
            .collect()
    }
}
