//! Fisher information of the joint target/receiver problem and the Bayesian
//! Cramér–Rao bound on position error.
//!
//! Parameters are ordered `[x_1, y_1, .., x_A, y_A, a_1, b_1, .., a_M, b_M]`.
//! The information matrix splits into a target block `F11`, a receiver block
//! `F22` (both block diagonal with 2x2 blocks) and the cross block `F12`.
//! Equivalent information matrices for either group are Schur complements.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Scenario};

/// Matrices with condition number above this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Derivatives of the bistatic range w.r.t. target (`a`, `b`) and receiver
/// (`c`, `d`) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialDerivs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub fn partial_derivatives(target: Point2, receiver: Point2) -> Result<PartialDerivs> {
    let di = target.norm();
    let dim = target.distance(receiver);
    if di == 0.0 || dim == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "target {target:?} coincides with the transmitter or receiver {receiver:?}"
        )));
    }
    Ok(PartialDerivs {
        a: target.x / di + (target.x - receiver.x) / dim,
        b: target.y / di + (target.y - receiver.y) / dim,
        c: (receiver.x - target.x) / dim,
        d: (receiver.y - target.y) / dim,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FimBlocks {
    /// `2A x 2A`
    pub f11: DMatrix<f64>,
    /// `2A x 2M`
    pub f12: DMatrix<f64>,
    /// `2M x 2M`
    pub f22: DMatrix<f64>,
}

impl FimBlocks {
    pub fn num_targets(&self) -> usize {
        self.f11.nrows() / 2
    }

    pub fn num_receivers(&self) -> usize {
        self.f22.nrows() / 2
    }

    /// The full `2(A+M)` square information matrix.
    pub fn assembled(&self) -> DMatrix<f64> {
        let na = self.f11.nrows();
        let nm = self.f22.nrows();
        let mut f = DMatrix::zeros(na + nm, na + nm);
        f.view_mut((0, 0), (na, na)).copy_from(&self.f11);
        f.view_mut((0, na), (na, nm)).copy_from(&self.f12);
        f.view_mut((na, 0), (nm, na)).copy_from(&self.f12.transpose());
        f.view_mut((na, na), (nm, nm)).copy_from(&self.f22);
        f
    }
}

/// Information from the range observations alone (no prior terms).
pub fn observation_fim(scenario: &Scenario) -> Result<FimBlocks> {
    let a = scenario.num_targets();
    let m = scenario.num_receivers();
    let mut f11 = DMatrix::zeros(2 * a, 2 * a);
    let mut f12 = DMatrix::zeros(2 * a, 2 * m);
    let mut f22 = DMatrix::zeros(2 * m, 2 * m);
    for (i, t) in scenario.targets.iter().enumerate() {
        for (k, r) in scenario.receivers.iter().enumerate() {
            let var = scenario.meas_var[i][k];
            if !(var > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "meas_var[{i}][{k}] must be > 0 for the information matrix"
                )));
            }
            let p = partial_derivatives(*t, *r)?;
            let w = 1.0 / var;
            let (ti, rk) = (2 * i, 2 * k);
            f11[(ti, ti)] += w * p.a * p.a;
            f11[(ti, ti + 1)] += w * p.a * p.b;
            f11[(ti + 1, ti)] += w * p.a * p.b;
            f11[(ti + 1, ti + 1)] += w * p.b * p.b;

            f22[(rk, rk)] += w * p.c * p.c;
            f22[(rk, rk + 1)] += w * p.c * p.d;
            f22[(rk + 1, rk)] += w * p.c * p.d;
            f22[(rk + 1, rk + 1)] += w * p.d * p.d;

            f12[(ti, rk)] = w * p.a * p.c;
            f12[(ti, rk + 1)] = w * p.a * p.d;
            f12[(ti + 1, rk)] = w * p.b * p.c;
            f12[(ti + 1, rk + 1)] = w * p.b * p.d;
        }
    }
    Ok(FimBlocks { f11, f12, f22 })
}

/// Observation plus prior information, evaluated at the true positions.
pub fn assemble_fim(scenario: &Scenario) -> Result<FimBlocks> {
    let mut fim = observation_fim(scenario)?;
    for (k, var) in scenario.receiver_prior_var.iter().enumerate() {
        if !(*var > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "receiver_prior_var[{k}] must be > 0 for the information matrix"
            )));
        }
        fim.f22[(2 * k, 2 * k)] += 1.0 / var;
        fim.f22[(2 * k + 1, 2 * k + 1)] += 1.0 / var;
    }
    for i in 0..scenario.num_targets() {
        if let Some((_, var)) = scenario.target_prior.for_target(i) {
            fim.f11[(2 * i, 2 * i)] += 1.0 / var;
            fim.f11[(2 * i + 1, 2 * i + 1)] += 1.0 / var;
        }
    }
    Ok(fim)
}

/// Inverse of a symmetric matrix through its eigendecomposition; `None` when
/// not positive definite or worse conditioned than [`CONDITION_LIMIT`].
pub fn symmetric_inverse(mat: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if mat.nrows() != mat.ncols() || mat.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let eig = SymmetricEigen::new(mat.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || max / min > CONDITION_LIMIT {
        return None;
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    Some((&inv + inv.transpose()) * 0.5)
}

/// Inverts a block-diagonal matrix of 2x2 blocks block by block, naming the
/// first singular block.
fn block_diag_inverse(mat: &DMatrix<f64>, label: &str) -> Result<DMatrix<f64>> {
    let n = mat.nrows() / 2;
    let mut inv = DMatrix::zeros(mat.nrows(), mat.ncols());
    for k in 0..n {
        let block = mat.view((2 * k, 2 * k), (2, 2)).into_owned();
        let bi = symmetric_inverse(&block).ok_or_else(|| Error::RankDeficient(format!("{label} {k}")))?;
        inv.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&bi);
    }
    Ok(inv)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Equivalent information of the targets: `F11 - F12 F22^-1 F21`.
pub fn efim_target(fim: &FimBlocks) -> Result<DMatrix<f64>> {
    let f22_inv = block_diag_inverse(&fim.f22, "receiver")?;
    Ok(symmetrize(&fim.f11 - &fim.f12 * f22_inv * fim.f12.transpose()))
}

/// Equivalent information of the receivers: `F22 - F21 F11^-1 F12`.
pub fn efim_receiver(fim: &FimBlocks) -> Result<DMatrix<f64>> {
    let f11_inv = block_diag_inverse(&fim.f11, "target")?;
    Ok(symmetrize(&fim.f22 - fim.f12.transpose() * f11_inv * &fim.f12))
}

/// Lower bound on the position MSE (both coordinates) of node `node` of the
/// group described by `efim`: trace of its 2x2 block of `efim^-1`.
pub fn bcrb_position(efim: &DMatrix<f64>, node: usize) -> Result<f64> {
    if 2 * node + 1 >= efim.nrows() {
        return Err(Error::InvalidParameter(format!("node {node} outside a {}-node EFIM", efim.nrows() / 2)));
    }
    let inv = symmetric_inverse(efim).ok_or_else(|| Error::RankDeficient("equivalent information matrix".into()))?;
    Ok(inv[(2 * node, 2 * node)] + inv[(2 * node + 1, 2 * node + 1)])
}

/// Position bounds for every target and receiver of a scenario, m^2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub targets: Vec<f64>,
    pub receivers: Vec<f64>,
}

pub fn scenario_bounds(scenario: &Scenario) -> Result<BoundReport> {
    let fim = assemble_fim(scenario)?;
    let et = efim_target(&fim)?;
    let er = efim_receiver(&fim)?;
    let targets = (0..scenario.num_targets()).map(|i| bcrb_position(&et, i)).collect::<Result<_>>()?;
    let receivers = (0..scenario.num_receivers()).map(|k| bcrb_position(&er, k)).collect::<Result<_>>()?;
    Ok(BoundReport { targets, receivers })
}
