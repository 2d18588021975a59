//! Belief-propagation localization of passive targets from bistatic TOA ranges
//! when the receivers' own positions are only known up to a Gaussian prior.
//!
//! * [`geometry`]: scenario, range model, measurement simulation
//! * [`parametric`]: linearized Gaussian message passing
//! * [`sample`]: particle message passing with particle-swarm refinement
//! * [`bcrb`]: Fisher information and the Bayesian Cramér–Rao bound
//! * [`harness`]: Monte Carlo trials, sweeps and metrics
//! * [`cli`]: the `passive-bp` command line

pub mod bcrb;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod gaussian;
pub mod geometry;
pub mod harness;
pub mod parametric;
pub mod problem;
pub mod rng;
pub mod sample;

pub use error::{Error, Result};
pub use estimate::{BpOutput, Estimates, NodeEstimate, NodeKind, Trace};
pub use geometry::{MeasurementSet, Point2, Scenario};
pub use problem::Problem;
