use crate::tree::{ClusterNode, TargetBatch};

use super::EvalConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacFailure {
    /// `(r_B + r_C) / R >= theta`, including overlapping centers.
    Geometry,
    /// The cluster has no more particles than interpolation points, or is
    /// flagged ineligible (degenerate box).
    Size,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacDecision {
    Accept,
    Reject(MacFailure),
}

impl MacDecision {
    pub fn accepted(self) -> bool {
        self == MacDecision::Accept
    }
}

/// Batch-cluster acceptance test. Geometry is checked first and, when both
/// conditions fail, is the reported reason.
///
/// The geometric condition is evaluated as `r_B + r_C < theta * R`, which is
/// well defined when the centers coincide.
pub fn mac_accept<C: ClusterNode + ?Sized>(batch: &TargetBatch, cluster: &C, config: &EvalConfig) -> MacDecision {
    let c = cluster.center();
    let dx = batch.center[0] - c[0];
    let dy = batch.center[1] - c[1];
    let dz = batch.center[2] - c[2];
    let dist = (dx * dx + dy * dy + dz * dz).sqrt();
    if !(batch.radius + cluster.radius() < config.theta * dist) {
        return MacDecision::Reject(MacFailure::Geometry);
    }
    if !(config.num_interp_points() < cluster.num_particles() && cluster.eligible()) {
        return MacDecision::Reject(MacFailure::Size);
    }
    MacDecision::Accept
}
