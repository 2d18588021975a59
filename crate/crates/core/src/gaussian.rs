//! Scalar Gaussian messages and the two operations belief propagation needs on
//! them: multiplying densities together and dividing one out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N(mean, variance)` over a single coordinate. An infinite variance encodes a
/// vacuous (flat) message whose mean carries no meaning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMessage {
    pub mean: f64,
    pub variance: f64,
}

/// Division results whose precision falls below this fraction of the belief's
/// precision are treated as numerically zero.
const RELATIVE_PRECISION_FLOOR: f64 = 1e-12;

impl GaussianMessage {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if variance.is_nan() || variance <= 0.0 {
            return Err(Error::InvalidParameter(format!("message variance must be > 0, got {variance}")));
        }
        if variance.is_finite() && !mean.is_finite() {
            return Err(Error::InvalidParameter(format!("message mean must be finite, got {mean}")));
        }
        Ok(Self { mean: if variance.is_finite() { mean } else { 0.0 }, variance })
    }

    pub const fn vacuous() -> Self {
        Self { mean: 0.0, variance: f64::INFINITY }
    }

    pub fn is_vacuous(&self) -> bool {
        self.variance.is_infinite()
    }

    pub fn precision(&self) -> f64 {
        if self.is_vacuous() {
            0.0
        } else {
            1.0 / self.variance
        }
    }

    /// Precision times mean.
    pub fn information(&self) -> f64 {
        if self.is_vacuous() {
            0.0
        } else {
            self.mean / self.variance
        }
    }

    fn from_natural(precision: f64, information: f64) -> Self {
        if precision == 0.0 {
            Self::vacuous()
        } else {
            Self { mean: information / precision, variance: 1.0 / precision }
        }
    }
}

/// Product of the prior with all incoming messages, renormalized.
pub fn fuse_beliefs(prior: GaussianMessage, incoming: &[GaussianMessage]) -> Result<GaussianMessage> {
    let (precision, information) = incoming
        .iter()
        .fold((prior.precision(), prior.information()), |(p, h), msg| {
            (p + msg.precision(), h + msg.information())
        });
    if precision <= 0.0 {
        return Err(Error::NoInformation);
    }
    Ok(GaussianMessage::from_natural(precision, information))
}

/// Divides `incoming` out of `belief`, giving the message the variable sends back
/// along the edge `incoming` arrived on.
pub fn variable_to_factor(belief: GaussianMessage, incoming: GaussianMessage) -> Result<GaussianMessage> {
    if incoming.is_vacuous() {
        return Ok(belief);
    }
    let precision = belief.precision() - incoming.precision();
    if precision <= RELATIVE_PRECISION_FLOOR * belief.precision() {
        return Err(Error::DegenerateDivision { precision });
    }
    Ok(GaussianMessage::from_natural(precision, belief.information() - incoming.information()))
}

/// Blends `new` towards `old` in natural parameters; `factor = 0` returns `new`.
pub fn damp(new: GaussianMessage, old: GaussianMessage, factor: f64) -> GaussianMessage {
    if factor == 0.0 || old.is_vacuous() {
        return new;
    }
    let p = (1.0 - factor) * new.precision() + factor * old.precision();
    let h = (1.0 - factor) * new.information() + factor * old.information();
    GaussianMessage::from_natural(p, h)
}
