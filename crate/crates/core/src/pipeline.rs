//! End-to-end estimation over one demonstration: masks to keyframes, the
//! start-frame cloud to contact and joint, and the end-effector trajectory
//! to the articulation trace.

use serde::{Deserialize, Serialize};

use crate::articulation::{
    estimate_joint, recover_motion, ArticulationTrace, ContactTrajectory, EdgeSelectionConfig,
    JointEstimate, JointKind, RecoverConfig,
};
use crate::contact::{detect_contact, nocs_map, ContactPair, DEFAULT_CONTACT_RADIUS};
use crate::error::{Error, Result};
use crate::geometry::{LabeledPointCloud, RigidTransform, Vec3};
use crate::keyframes::{KeyframeConfig, MaskSequence, MotionScoreSeries};
use crate::replacement::{
    fit_stage1, fit_stage2, replay_check, FitConfig, FitResult, ReplacementAsset, ReplayResult, DEFAULT_REPLAY_TOL,
};
use crate::retarget::EeTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub keyframes: KeyframeConfig,
    #[serde(default)]
    pub edges: EdgeSelectionConfig,
    #[serde(default = "default_radius")]
    pub contact_radius: f64,
    #[serde(default)]
    pub recover: RecoverConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default = "default_tol")]
    pub replay_tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_REPLAY_TOL
}

fn default_radius() -> f64 {
    DEFAULT_CONTACT_RADIUS
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            keyframes: KeyframeConfig::default(),
            edges: EdgeSelectionConfig::default(),
            contact_radius: DEFAULT_CONTACT_RADIUS,
            recover: RecoverConfig::default(),
            fit: FitConfig::default(),
            replay_tol: DEFAULT_REPLAY_TOL,
        }
    }
}

/// Tool z axis of the end-effector at `frame`.
pub fn approach_direction(ee: &EeTrajectory, frame: usize) -> Vec3 {
    ee.poses[frame].rotation * Vec3::z()
}

/// `PC_{r,t} = T_t T_start^-1 PC_r` for `t` in `[start, end]`.
pub fn contact_trajectory(ee: &EeTrajectory, pc_r: &Vec3, start: usize, end: usize) -> Result<ContactTrajectory> {
    if end >= ee.len() || start >= end {
        return Err(Error::FrameMismatch(format!(
            "window [{start}, {end}] does not fit a {}-frame trajectory",
            ee.len()
        )));
    }
    let local = ee.poses[start].transform().inverse().apply(pc_r);
    ContactTrajectory::new(
        start,
        ee.poses[start..=end].iter().map(|p| p.transform().apply(&local)).collect(),
    )
}

/// Frame span covered by the motion, clamped to the sequence.
pub fn motion_window(series: &MotionScoreSeries, n_frames: usize) -> (usize, usize) {
    (series.start_frame, series.end_frame.min(n_frames - 1))
}

#[derive(Debug, Clone)]
pub struct Estimation {
    pub series: MotionScoreSeries,
    pub window: (usize, usize),
    pub contact: ContactPair,
    pub joint: JointEstimate,
    pub traj: ContactTrajectory,
    pub trace: ArticulationTrace,
}

pub fn detect_start_contact(
    cloud: &LabeledPointCloud,
    ee: &EeTrajectory,
    frame: usize,
    radius: f64,
) -> Result<ContactPair> {
    detect_contact(&cloud.robot(), &cloud.movable(), approach_direction(ee, frame), frame, radius)
}

pub fn estimate(
    clouds: &[LabeledPointCloud],
    masks: &MaskSequence,
    ee: &EeTrajectory,
    kind: JointKind,
    cfg: &PipelineConfig,
) -> Result<Estimation> {
    if clouds.len() != masks.len() || ee.len() != masks.len() {
        return Err(Error::FrameMismatch(format!(
            "{} clouds, {} mask frames and {} trajectory poses",
            clouds.len(),
            masks.len(),
            ee.len()
        )));
    }
    let series = MotionScoreSeries::from_masks(masks, &cfg.keyframes)?;
    let window = motion_window(&series, masks.len());
    estimate_from_window(clouds, ee, kind, window, series, cfg)
}

pub fn estimate_from_window(
    clouds: &[LabeledPointCloud],
    ee: &EeTrajectory,
    kind: JointKind,
    window: (usize, usize),
    series: MotionScoreSeries,
    cfg: &PipelineConfig,
) -> Result<Estimation> {
    let (start, end) = window;
    let cloud = &clouds[start];
    let contact = detect_start_contact(cloud, ee, start, cfg.contact_radius)?;
    let part_move = cloud.movable();
    let joint = estimate_joint(&part_move, &cloud.static_part(), &contact, kind, &cfg.edges)?;
    let traj = contact_trajectory(ee, &contact.pc_robot, start, end)?;
    let trace = recover_motion(&part_move, &joint.joint, &contact, &traj, &cfg.recover)?;
    Ok(Estimation {
        series,
        window,
        contact,
        joint,
        traj,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct Adaptation {
    /// Contact mapped onto the replacement's movable part, asset frame.
    pub pc_map: Vec3,
    pub stage1: FitResult,
    pub stage2: FitResult,
    pub replay: ReplayResult,
}

/// Contact on the replacement's movable part. The start-frame movable cloud
/// is brought into the object frame so both parts are normalised in frames
/// with the same orientation.
pub fn map_contact(
    est: &Estimation,
    start_cloud: &LabeledPointCloud,
    object_pose: &RigidTransform,
    asset: &ReplacementAsset,
) -> Result<Vec3> {
    let to_object = object_pose.inverse();
    let source = start_cloud.movable().transformed(&to_object);
    nocs_map(&source, &asset.part_move, &to_object.apply(&est.contact.pc_move))
}

/// Fits the replacement to the demonstration (stage 1, then stage 2 shaped
/// by the recovered trace unless `stage1_only`) and replays it.
pub fn adapt(
    est: &Estimation,
    clouds: &[LabeledPointCloud],
    object_pose: &RigidTransform,
    asset: &ReplacementAsset,
    stage1_only: bool,
    cfg: &PipelineConfig,
) -> Result<Adaptation> {
    let kind = est.joint.joint.kind;
    let pc_map = map_contact(est, &clouds[est.window.0], object_pose, asset)?;
    let stage1 = fit_stage1(&pc_map, asset, &est.traj, est.window, kind, &cfg.fit)?;
    let stage2 = if stage1_only {
        stage1
    } else {
        let profile: Vec<f64> = (0..est.traj.len()).map(|k| est.trace.profile(k)).collect();
        fit_stage2(asset, &est.traj, &stage1.params, kind, &pc_map, Some(&profile), &cfg.fit)?
    };
    let replay = replay_check(asset, &stage2.params, &est.traj, &est.trace, cfg.replay_tol, cfg.fit.face_radius)?;
    Ok(Adaptation {
        pc_map,
        stage1,
        stage2,
        replay,
    })
}
