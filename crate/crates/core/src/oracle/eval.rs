use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::articulation::{ArticulationTrace, JointKind, JointModel};
use crate::error::{Error, Result};

/// Estimator outputs to score; absent parts are skipped.
#[derive(Debug, Clone, Default)]
pub struct Estimate {
    pub joint: Option<JointModel>,
    pub trace: Option<ArticulationTrace>,
    pub keyframes: Option<(usize, usize)>,
    pub replay_success: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub direction_err_deg: Option<f64>,
    pub center_axis_dist_m: Option<f64>,
    /// Radians (revolute) or meters (prismatic).
    pub theta_rmse: Option<f64>,
    pub keyframe_offsets: Option<(usize, usize)>,
    pub replay_success: Option<bool>,
}

pub fn direction_error_deg(a: &JointModel, b: &JointModel) -> f64 {
    let c = a.direction.normalize().dot(&b.direction.normalize()).abs().min(1.0);
    c.acos().to_degrees()
}

/// Trace error against the truth re-based at the trace's first frame, with
/// the estimate's sign aligned to the true axis direction.
pub fn theta_rmse(trace: &ArticulationTrace, est: &JointModel, truth: &GroundTruth) -> Result<f64> {
    let n_truth = truth.theta_true.len();
    if trace.start_frame >= n_truth {
        return Err(Error::FrameMismatch(format!(
            "trace starts at frame {} but the scene has {n_truth} frames",
            trace.start_frame
        )));
    }
    let sign = if est.direction.dot(&truth.joint.direction) < 0.0 { -1.0 } else { 1.0 };
    let base = truth.theta_true[trace.start_frame];
    let pairs: Vec<(f64, f64)> = trace
        .theta
        .iter()
        .enumerate()
        .take_while(|(k, _)| trace.start_frame + k < n_truth)
        .map(|(k, th)| (sign * th, truth.theta_true[trace.start_frame + k] - base))
        .collect();
    let mse = pairs.iter().map(|(a, b)| (a - b).powi(2)).sum::<f64>() / pairs.len() as f64;
    Ok(mse.sqrt())
}

pub fn evaluate(est: &Estimate, truth: &GroundTruth) -> Result<EvalReport> {
    let direction_err_deg = est.joint.as_ref().map(|j| direction_error_deg(j, &truth.joint));
    let center_axis_dist_m = est.joint.as_ref().map(|j| match truth.joint.kind {
        JointKind::Revolute => truth.joint.axis_distance(&j.center),
        JointKind::Prismatic => 0.0,
    });
    let theta_rmse = match (&est.trace, &est.joint) {
        (Some(tr), Some(j)) => Some(theta_rmse(tr, j, truth)?),
        (Some(tr), None) => Some(theta_rmse(tr, &truth.joint, truth)?),
        _ => None,
    };
    let keyframe_offsets = est
        .keyframes
        .map(|(s, e)| (s.abs_diff(truth.start_true), e.abs_diff(truth.end_true)));
    Ok(EvalReport {
        direction_err_deg,
        center_axis_dist_m,
        theta_rmse,
        keyframe_offsets,
        replay_success: est.replay_success,
    })
}
