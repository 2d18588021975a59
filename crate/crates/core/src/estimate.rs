//! Estimator outputs shared by both belief-propagation variants.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Target,
    Receiver,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Target => "target",
            NodeKind::Receiver => "receiver",
        }
    }
}

/// Posterior mean of one node with the per-coordinate variances of its belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeEstimate {
    pub mean: Point2,
    pub var: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub targets: Vec<NodeEstimate>,
    pub receivers: Vec<NodeEstimate>,
}

impl Estimates {
    pub fn target_means(&self) -> Vec<Point2> {
        self.targets.iter().map(|n| n.mean).collect()
    }

    pub fn receiver_means(&self) -> Vec<Point2> {
        self.receivers.iter().map(|n| n.mean).collect()
    }

    /// Largest displacement of any target or receiver mean between two snapshots.
    pub fn max_shift(&self, other: &Estimates) -> f64 {
        self.targets
            .iter()
            .zip(&other.targets)
            .chain(self.receivers.iter().zip(&other.receivers))
            .map(|(a, b)| a.mean.distance(b.mean))
            .fold(0.0, f64::max)
    }

    fn nodes(&self) -> impl Iterator<Item = (NodeKind, usize, &NodeEstimate)> {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeKind::Target, i, n))
            .chain(self.receivers.iter().enumerate().map(|(m, n)| (NodeKind::Receiver, m, n)))
    }

    /// `node_kind,node_id,x,y,var_x,var_y`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_kind,node_id,x,y,var_x,var_y\n");
        for (kind, id, n) in self.nodes() {
            let _ = writeln!(out, "{},{},{},{},{},{}", kind.as_str(), id, n.mean.x, n.mean.y, n.var[0], n.var[1]);
        }
        out
    }
}

/// Estimates after every iteration; `iterations[0]` is the state after iteration 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub iterations: Vec<Estimates>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Per-iteration max node displacement; entry `l` is the shift going into
    /// iteration `l + 2`.
    pub fn shifts(&self) -> Vec<f64> {
        self.iterations.windows(2).map(|w| w[1].max_shift(&w[0])).collect()
    }

    /// Target-only displacement per iteration, same indexing as [`Trace::shifts`].
    pub fn target_shifts(&self) -> Vec<f64> {
        self.iterations
            .windows(2)
            .map(|w| {
                w[1].targets
                    .iter()
                    .zip(&w[0].targets)
                    .map(|(a, b)| a.mean.distance(b.mean))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// `iter,node_kind,node_id,coord,mean,variance`, iterations numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,node_kind,node_id,coord,mean,variance\n");
        for (l, est) in self.iterations.iter().enumerate() {
            for (kind, id, n) in est.nodes() {
                let _ = writeln!(out, "{},{},{},x,{},{}", l + 1, kind.as_str(), id, n.mean.x, n.var[0]);
                let _ = writeln!(out, "{},{},{},y,{},{}", l + 1, kind.as_str(), id, n.mean.y, n.var[1]);
            }
        }
        out
    }
}

/// Final estimates together with the per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpOutput {
    pub estimates: Estimates,
    pub trace: Trace,
}
