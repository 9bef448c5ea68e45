//! Adapting a replacement articulated asset to a recorded demonstration.
//!
//! The parameters `g = (s, r_init, offset_x, offset_y)` place an asset so the
//! demonstration's contact trajectory interacts with it: the asset is scaled
//! by `s` about its origin, articulated about its (scaled) joint, shifted by
//! the offset in its own frame, and mapped to the scene by `base_pose`.
//! `r_init` is the motion executed over the fitted window.

use serde::{Deserialize, Serialize};

use crate::articulation::{contact_face, ContactTrajectory, JointKind, JointModel, Polyline};
use crate::error::{Error, Result};
use crate::geometry::{LabeledPointCloud, NearestIndex, Plane, RigidTransform, Vec3};
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone)]
pub struct ReplacementAsset {
    pub part_move: LabeledPointCloud,
    pub part_static: LabeledPointCloud,
    /// In the asset frame.
    pub joint: JointModel,
    /// Asset frame to scene frame.
    pub base_pose: RigidTransform,
}

impl ReplacementAsset {
    pub fn new(
        part_move: LabeledPointCloud,
        part_static: LabeledPointCloud,
        joint: JointModel,
        base_pose: RigidTransform,
    ) -> Result<Self> {
        if part_move.is_empty() || part_static.is_empty() {
            return Err(Error::DegeneratePart("replacement asset has an empty part".into()));
        }
        if (joint.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Input("asset joint direction is not unit length".into()));
        }
        Ok(Self {
            part_move,
            part_static,
            joint,
            base_pose,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplacementParams {
    pub s: f64,
    pub r_init: f64,
    pub offset: [f64; 2],
}

pub const SCALE_RANGE: (f64, f64) = (0.1, 10.0);

impl ReplacementParams {
    pub fn new(s: f64, r_init: f64, offset_x: f64, offset_y: f64) -> Self {
        Self {
            s,
            r_init,
            offset: [offset_x, offset_y],
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.s, self.r_init, self.offset[0], self.offset[1]]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.s < SCALE_RANGE.0 || self.s > SCALE_RANGE.1 {
            return Err(Error::Input(format!(
                "replacement scale must lie in [{}, {}], got {}",
                SCALE_RANGE.0, SCALE_RANGE.1, self.s
            )));
        }
        Ok(())
    }

    fn to_vec(self) -> [f64; 4] {
        [self.s, self.r_init, self.offset[0], self.offset[1]]
    }

    fn from_slice(x: &[f64]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    fn offset_vec(&self) -> Vec3 {
        Vec3::new(self.offset[0], self.offset[1], 0.0)
    }
}

/// Maps asset-frame points of a placed, articulated asset to the scene.
struct Placement {
    s: f64,
    articulation: RigidTransform,
    outer: RigidTransform,
}

impl Placement {
    fn new(asset: &ReplacementAsset, g: &ReplacementParams, value: f64) -> Self {
        let scaled = JointModel {
            center: g.s * asset.joint.center,
            ..asset.joint
        };
        Self {
            s: g.s,
            articulation: scaled.transform_at(value),
            outer: asset
                .base_pose
                .compose(&RigidTransform::from_translation(g.offset_vec())),
        }
    }

    fn local(&self, p: &Vec3) -> Vec3 {
        self.articulation.apply(&(self.s * p))
    }

    fn point(&self, p: &Vec3) -> Vec3 {
        self.outer.apply(&self.local(p))
    }

    fn plane(&self, plane: &Plane) -> Plane {
        let rigid = self.outer.compose(&self.articulation);
        Plane::new(
            self.point(&plane.point),
            rigid.apply_vector(&plane.normal),
        )
    }
}

/// The asset with `g` baked in: scaled, the movable part articulated by
/// `r_init`, and shifted by the offset. `base_pose` is unchanged.
pub fn apply_params(asset: &ReplacementAsset, g: &ReplacementParams) -> ReplacementAsset {
    let shift = RigidTransform::from_translation(g.offset_vec());
    let moved = Placement {
        outer: shift,
        ..Placement::new(asset, g, g.r_init)
    };
    let still = Placement {
        outer: shift,
        ..Placement::new(asset, g, 0.0)
    };
    let map = |cloud: &LabeledPointCloud, pl: &Placement| LabeledPointCloud {
        points: cloud.points.iter().map(|p| pl.point(p)).collect(),
        labels: cloud.labels.clone(),
    };
    ReplacementAsset {
        part_move: map(&asset.part_move, &moved),
        part_static: map(&asset.part_static, &still),
        joint: JointModel {
            center: g.s * asset.joint.center + g.offset_vec(),
            ..asset.joint
        },
        base_pose: asset.base_pose,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub nelder_mead: NelderMeadConfig,
    /// Radius around the mapped contact used to fit the contacted face.
    pub face_radius: f64,
    /// Weight of the pull toward the stage-1 estimate in stage 2, which
    /// keeps directions the face crossings cannot see (motion within the
    /// face plane) where stage 1 put them.
    pub proximal_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadConfig {
    pub xtol: f64,
    pub max_evals: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            nelder_mead: NelderMeadConfig {
                xtol: 1e-6,
                max_evals: 4000,
            },
            face_radius: 0.03,
            proximal_weight: 1e-3,
        }
    }
}

impl FitConfig {
    fn options(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            xtol: self.nelder_mead.xtol,
            max_evals: self.nelder_mead.max_evals,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ReplacementParams,
    /// Objective of the stage that produced `params`.
    pub objective: f64,
}

fn check_kind(asset: &ReplacementAsset, kind: JointKind) -> Result<()> {
    if asset.joint.kind != kind {
        return Err(Error::Input(format!(
            "asset joint is {:?} but the demonstration is {:?}",
            asset.joint.kind, kind
        )));
    }
    Ok(())
}

/// Penalty for leaving the admissible scale range; keeps the simplex inside.
fn out_of_range(x: &[f64]) -> Option<f64> {
    let s = x[0];
    if !(SCALE_RANGE.0..=SCALE_RANGE.1).contains(&s) || x.iter().any(|v| !v.is_finite()) {
        Some(1e6 * (1.0 + (s - s.clamp(SCALE_RANGE.0, SCALE_RANGE.1)).abs()))
    } else {
        None
    }
}

/// `sum_t |PC_{r,t} - R_t(pc_map | g)|` with the joint advancing at constant
/// speed from 0 to `r_init` over the trajectory.
pub fn stage1_objective(
    pc_map: &Vec3,
    asset: &ReplacementAsset,
    traj: &ContactTrajectory,
    g: &ReplacementParams,
) -> f64 {
    if let Some(p) = out_of_range(&g.to_vec()) {
        return p;
    }
    let steps = (traj.len() - 1) as f64;
    traj.points
        .iter()
        .enumerate()
        .map(|(k, pc)| {
            let value = g.r_init * k as f64 / steps;
            (pc - Placement::new(asset, g, value).point(pc_map)).norm()
        })
        .sum()
}

/// Constant-speed motion guess for scale `s`: the trajectory's chord turned
/// into an angle on the contact's radius, or taken as the slide length.
fn motion_guess(pc_map: &Vec3, asset: &ReplacementAsset, traj: &ContactTrajectory, s: f64) -> f64 {
    let chord = (traj.points[traj.len() - 1] - traj.points[0]).norm();
    match asset.joint.kind {
        JointKind::Prismatic => chord,
        JointKind::Revolute => {
            let radius = s * asset.joint.axis_distance(pc_map);
            if radius < 1e-9 {
                return 0.0;
            }
            2.0 * (chord / (2.0 * radius)).min(1.0).asin()
        }
    }
}

pub const START_SCALES: [f64; 4] = [0.6, 0.85, 1.15, 1.4];

/// The multi-start lattice: every start scale with both motion signs, and
/// the offset that puts the mapped contact on the first trajectory point.
pub fn stage1_starts(pc_map: &Vec3, asset: &ReplacementAsset, traj: &ContactTrajectory) -> Vec<ReplacementParams> {
    let first = asset.base_pose.inverse().apply(&traj.points[0]);
    START_SCALES
        .iter()
        .flat_map(|&s| {
            let r = motion_guess(pc_map, asset, traj, s);
            let o = first - s * pc_map;
            [r, -r].map(|r| ReplacementParams::new(s, r, o.x, o.y))
        })
        .collect()
}

fn step_sizes(kind: JointKind) -> [f64; 4] {
    match kind {
        JointKind::Revolute => [0.05, 0.1, 0.01, 0.01],
        JointKind::Prismatic => [0.05, 0.02, 0.01, 0.01],
    }
}

fn diverged(objective: f64, traj: &ContactTrajectory) -> Result<()> {
    let limit = 10.0 * traj.arc_length();
    if !(objective <= limit) || limit <= 0.0 {
        return Err(Error::OptimizationDiverged { objective, limit });
    }
    Ok(())
}

/// Rough fit under the constant-speed assumption, best of the start lattice.
pub fn fit_stage1(
    pc_map: &Vec3,
    asset: &ReplacementAsset,
    traj: &ContactTrajectory,
    frames: (usize, usize),
    kind: JointKind,
    cfg: &FitConfig,
) -> Result<FitResult> {
    check_kind(asset, kind)?;
    let (start, end) = frames;
    if end == start {
        return Err(Error::OptimizationDiverged {
            objective: f64::INFINITY,
            limit: 0.0,
        });
    }
    if end < start || end - start + 1 != traj.len() || start != traj.start_frame {
        return Err(Error::FrameMismatch(format!(
            "window [{start}, {end}] does not match a trajectory of {} points from frame {}",
            traj.len(),
            traj.start_frame
        )));
    }
    let starts = stage1_starts(pc_map, asset, traj);
    let steps = step_sizes(kind);
    let opts = cfg.options();
    let run = |g0: &ReplacementParams| {
        let m = nelder_mead(
            |x| stage1_objective(pc_map, asset, traj, &ReplacementParams::from_slice(x)),
            &g0.to_vec(),
            &steps,
            &opts,
        );
        (ReplacementParams::from_slice(&m.x), m.f)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(ReplacementParams, f64)> = {
        use rayon::prelude::*;
        starts.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(ReplacementParams, f64)> = starts.iter().map(run).collect();

    // Lowest objective; ties keep the earliest start.
    let (params, objective) = results
        .into_iter()
        .reduce(|best, r| if r.1 < best.1 { r } else { best })
        .expect("nonempty lattice");
    diverged(objective, traj)?;
    Ok(FitResult { params, objective })
}

/// Face of the asset's movable part around `pc_map`, in the asset frame.
pub fn asset_face(asset: &ReplacementAsset, pc_map: &Vec3, face_radius: f64) -> Result<Plane> {
    contact_face(&asset.part_move, pc_map, face_radius)
}

fn linear_profile(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

/// `sum_t |PC_{r,t} - IP_t|`: distance from each trajectory point to the
/// crossing of the placed, articulated face with the trajectory nearest to
/// it. The joint follows `r_init * profile[t]`.
pub fn stage2_objective(
    face: &Plane,
    asset: &ReplacementAsset,
    traj: &ContactTrajectory,
    profile: &[f64],
    g: &ReplacementParams,
) -> f64 {
    if let Some(p) = out_of_range(&g.to_vec()) {
        return p;
    }
    let poly = Polyline::new(&traj.points);
    (0..traj.len())
        .map(|k| {
            let placed = Placement::new(asset, g, g.r_init * profile[k]).plane(face);
            poly.residual(&placed, k).0
        })
        .sum()
}

/// Refinement on face crossings, tolerant of slip along the face and of a
/// non-uniform motion profile. Never returns a point with a larger stage-2
/// objective than `g0`.
pub fn fit_stage2(
    asset: &ReplacementAsset,
    traj: &ContactTrajectory,
    g0: &ReplacementParams,
    kind: JointKind,
    pc_map: &Vec3,
    profile: Option<&[f64]>,
    cfg: &FitConfig,
) -> Result<FitResult> {
    check_kind(asset, kind)?;
    g0.validate()?;
    let profile = match profile {
        Some(p) if p.len() == traj.len() => p.to_vec(),
        Some(p) => {
            return Err(Error::FrameMismatch(format!(
                "motion profile has {} entries for {} trajectory points",
                p.len(),
                traj.len()
            )))
        }
        None => linear_profile(traj.len()),
    };
    let face = asset_face(asset, pc_map, cfg.face_radius)?;
    let f2 = |g: &ReplacementParams| stage2_objective(&face, asset, traj, &profile, g);
    let steps = step_sizes(kind);
    let x0 = g0.to_vec();
    let w = cfg.proximal_weight;
    let m = nelder_mead(
        |x| {
            let pull: f64 = x
                .iter()
                .zip(&x0)
                .zip(&steps)
                .map(|((a, b), h)| ((a - b) / h).powi(2))
                .sum();
            f2(&ReplacementParams::from_slice(x)) + w * pull
        },
        &x0,
        &steps.map(|h| 0.2 * h),
        &cfg.options(),
    );
    let refined = ReplacementParams::from_slice(&m.x);
    let (f_refined, f_start) = (f2(&refined), f2(g0));
    let (params, objective) = if f_refined <= f_start {
        (refined, f_refined)
    } else {
        (*g0, f_start)
    };
    diverged(objective, traj)?;
    Ok(FitResult { params, objective })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub success: bool,
    pub max_error: f64,
}

pub const DEFAULT_REPLAY_TOL: f64 = 0.01;

/// Replays the trajectory against the placed asset, its joint following
/// `r_init` shaped by the trace. The contacted face is the face of the
/// movable part nearest the first trajectory point; every point must stay
/// within `tol` of it.
pub fn replay_check(
    asset: &ReplacementAsset,
    g: &ReplacementParams,
    traj: &ContactTrajectory,
    trace: &crate::articulation::ArticulationTrace,
    tol: f64,
    face_radius: f64,
) -> Result<ReplayResult> {
    if trace.start_frame != traj.start_frame || trace.theta.len() != traj.len() {
        return Err(Error::FrameMismatch(format!(
            "trace covers {} frames from {}, trajectory {} from {}",
            trace.theta.len(),
            trace.start_frame,
            traj.len(),
            traj.start_frame
        )));
    }
    let rest = Placement::new(asset, g, 0.0);
    let query = rest.outer.inverse().apply(&traj.points[0]);
    // Nearest movable point in the asset frame: undo the articulation (zero
    // here) and the scale.
    let local = query / g.s;
    let (i, _) = NearestIndex::new(&asset.part_move.points)
        .nearest(&local)
        .ok_or_else(|| Error::DegeneratePart("replacement movable part is empty".into()))?;
    let anchor = asset.part_move.points[i];
    let face = asset_face(asset, &anchor, face_radius / g.s)?;
    let max_error = (0..traj.len())
        .map(|k| {
            let placed = Placement::new(asset, g, g.r_init * trace.profile(k)).plane(&face);
            placed.signed_distance(&traj.points[k]).abs()
        })
        .fold(0.0, f64::max);
    Ok(ReplayResult {
        success: max_error <= tol,
        max_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignEntry {
    pub seed: u64,
    pub success: bool,
    /// Absent when the pipeline failed before the replay.
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub scenes: Vec<CampaignEntry>,
    pub success_rate: f64,
}

impl CampaignReport {
    pub fn from_entries(scenes: Vec<CampaignEntry>) -> Self {
        let n = scenes.len().max(1) as f64;
        let success_rate = scenes.iter().filter(|e| e.success).count() as f64 / n;
        Self { scenes, success_rate }
    }
}
