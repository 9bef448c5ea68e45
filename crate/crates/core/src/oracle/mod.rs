//! Synthetic articulated scenes with exact ground truth.
//!
//! An object is a static cuboid plus a movable cuboid (a lid hinged on one
//! base edge, or a drawer front sliding out of a cabinet). Both are sampled
//! on their exposed faces only; faces hidden by the other part are skipped
//! the way a real scan would miss them. A spherical fingertip attached to the
//! end-effector sits exactly on a sampled point of the movable part and
//! follows it, optionally slipping along the face.

pub mod bundle;
pub mod campaign;
pub mod eval;
pub mod render;
pub mod replace;

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::articulation::{ContactTrajectory, JointKind, JointModel};
use crate::error::{Error, Result};
use crate::geometry::{yaw, Label, LabeledPointCloud, RigidTransform, UnitQuat, Vec3};
use crate::keyframes::{MaskFrame, MaskSequence};
use crate::retarget::{reinterpolate_segment, EePose, EeTrajectory, KinematicChain};

pub use eval::{evaluate, EvalReport, Estimate};
pub use render::{render_mask, Camera, JitterModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionProfile {
    Uniform,
    /// Smoothstep `3x^2 - 2x^3`.
    EaseInOut,
    /// Half the motion, a pause, then the rest.
    Piecewise,
}

impl MotionProfile {
    /// Fraction of the total motion completed at normalised time `x`.
    pub fn eval(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            MotionProfile::Uniform => x,
            MotionProfile::EaseInOut => x * x * (3.0 - 2.0 * x),
            MotionProfile::Piecewise => {
                if x < 0.4 {
                    0.5 * x / 0.4
                } else if x <= 0.6 {
                    0.5
                } else {
                    0.5 + 0.5 * (x - 0.6) / 0.4
                }
            }
        }
    }
}

/// Base edge carrying the lid hinge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HingeEdge {
    Back,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Viewing direction in the object frame.
    pub view: [f64; 3],
    /// Pixels per meter.
    pub scale: f64,
}

impl CameraConfig {
    /// Looks mostly along a back hinge, tilted within the plane bisecting the
    /// closed and fully open lid. The two resting silhouettes are then mirror
    /// images, so mask noise has the same level before and after the motion.
    pub fn lid_view(total: f64) -> Self {
        let h = total / 2.0;
        Self {
            view: [1.0, 0.3 * h.cos(), -0.3 * h.sin()],
            scale: 400.0,
        }
    }

    pub fn drawer_view() -> Self {
        Self {
            view: [1.0, 0.35, -0.45],
            scale: 400.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub mask_jitter_px: usize,
    #[serde(default)]
    pub jitter_model: JitterModel,
    pub slip_m: f64,
    pub point_noise_m: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mask_jitter_px: 2,
            jitter_model: JitterModel::Boundary,
            slip_m: 0.005,
            point_noise_m: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            mask_jitter_px: 0,
            jitter_model: JitterModel::Boundary,
            slip_m: 0.0,
            point_noise_m: 0.0,
        }
    }
}

fn default_points() -> usize {
    4000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub kind: JointKind,
    #[serde(with = "crate::serde_vec3")]
    pub base_size: Vec3,
    /// Lid (revolute) or drawer front panel (prismatic).
    #[serde(with = "crate::serde_vec3")]
    pub lid_size: Vec3,
    pub hinge: HingeEdge,
    pub profile: MotionProfile,
    /// Radians (revolute) or meters (prismatic).
    pub total: f64,
    pub frames: usize,
    pub resolution: [usize; 2],
    pub camera: CameraConfig,
    pub noise: NoiseConfig,
    pub seed: u64,
    #[serde(default = "default_points")]
    pub points_per_part: usize,
    /// Object frame to world; drawn from the seed when absent.
    #[serde(default)]
    pub object_pose: Option<RigidTransform>,
    /// Contact position on the contacted face as fractions of its extent;
    /// drawn from the seed when absent.
    #[serde(default)]
    pub contact_uv: Option<[f64; 2]>,
    /// Motion start and end frames; derived from `frames` when absent.
    #[serde(default)]
    pub motion_window: Option<[usize; 2]>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            kind: JointKind::Revolute,
            base_size: Vec3::new(0.32, 0.28, 0.16),
            lid_size: Vec3::new(0.32, 0.28, 0.025),
            hinge: HingeEdge::Back,
            profile: MotionProfile::Uniform,
            total: FRAC_PI_2,
            frames: 50,
            resolution: [400, 300],
            camera: CameraConfig::lid_view(FRAC_PI_2),
            noise: NoiseConfig::default(),
            seed: 0,
            points_per_part: default_points(),
            object_pose: None,
            contact_uv: None,
            motion_window: None,
        }
    }
}

impl SceneConfig {
    pub fn prismatic() -> Self {
        Self {
            kind: JointKind::Prismatic,
            base_size: Vec3::new(0.36, 0.3, 0.24),
            lid_size: Vec3::new(0.26, 0.025, 0.12),
            total: 0.2,
            camera: CameraConfig::drawer_view(),
            ..Self::default()
        }
    }

    pub fn for_kind(kind: JointKind) -> Self {
        match kind {
            JointKind::Revolute => Self::default(),
            JointKind::Prismatic => Self::prismatic(),
        }
    }

    /// Randomised object dimensions and motion magnitude for `seed`, with
    /// the default camera, frame count and noise.
    pub fn random(kind: JointKind, seed: u64) -> Self {
        let mut rng = stream(seed, 7);
        let mut u = |lo: f64, hi: f64| rng.random_range(lo..=hi);
        let mut cfg = Self::for_kind(kind);
        cfg.seed = seed;
        match kind {
            JointKind::Revolute => {
                let (bx, by, bz) = (u(0.26, 0.34), u(0.25, 0.32), u(0.12, 0.2));
                cfg.base_size = Vec3::new(bx, by, bz);
                cfg.lid_size = Vec3::new(bx, by, u(0.02, 0.03));
                cfg.total = u(60.0, 90.0).to_radians();
                if cfg.hinge == HingeEdge::Back {
                    cfg.camera = CameraConfig::lid_view(cfg.total);
                }
            }
            JointKind::Prismatic => {
                let (bx, by, bz) = (u(0.3, 0.42), u(0.25, 0.35), u(0.2, 0.3));
                cfg.base_size = Vec3::new(bx, by, bz);
                cfg.lid_size = Vec3::new(u(0.6, 0.8) * bx, u(0.02, 0.03), u(0.1, 0.13));
                cfg.total = u(0.15, 0.22);
            }
        }
        cfg
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(m.into()));
        if self.frames < 10 {
            return bad("frames must be at least 10");
        }
        let sizes = [self.base_size, self.lid_size];
        if sizes.iter().any(|s| s.iter().any(|v| !(*v > 0.0))) {
            return bad("sizes must be positive");
        }
        if !(self.total > 0.0) {
            return bad("total motion must be positive");
        }
        match self.kind {
            JointKind::Revolute => {
                if self.lid_size.x > self.base_size.x + 1e-12 || self.lid_size.y > self.base_size.y + 1e-12 {
                    return bad("lid must fit on the base footprint");
                }
                if self.total > PI {
                    return bad("lid opening cannot exceed 180 degrees");
                }
            }
            JointKind::Prismatic => {
                if self.lid_size.x >= self.base_size.x || self.lid_size.z >= self.base_size.z {
                    return bad("drawer front must be smaller than the cabinet front");
                }
            }
        }
        if self.resolution.contains(&0) || !(self.camera.scale > 0.0) {
            return bad("camera resolution and scale must be positive");
        }
        if Vec3::from(self.camera.view).norm() < 1e-9 {
            return bad("camera view direction is zero");
        }
        if self.points_per_part < 2000 {
            return bad("points_per_part must be at least 2000");
        }
        if self.noise.slip_m < 0.0 || self.noise.point_noise_m < 0.0 {
            return bad("noise magnitudes must be nonnegative");
        }
        if let Some([s, e]) = self.motion_window {
            if s < 2 || e <= s || e + 2 > self.frames {
                return bad("motion_window needs 2 <= start < end <= frames - 2");
            }
        }
        if let Some(uv) = self.contact_uv {
            if uv.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad("contact_uv must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// (arrival of the fingertip, motion start, motion end). Without an
    /// explicit window a sixth of the clip is idle at each end.
    pub fn schedule(&self) -> (usize, usize, usize) {
        let (s, e) = match self.motion_window {
            Some([s, e]) => (s, e),
            None => (self.frames / 6, self.frames - 1 - self.frames / 6),
        };
        (s / 2, s, e)
    }
}

/// Deterministic RNG stream `k` of a scene seed.
pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub joint: JointModel,
    pub theta_true: Vec<f64>,
    #[serde(with = "crate::serde_vec3")]
    pub contact_true: Vec3,
    pub start_true: usize,
    pub end_true: usize,
    pub object_pose: RigidTransform,
}

/// The object in its own frame, closed.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub part_static: LabeledPointCloud,
    pub part_move: LabeledPointCloud,
    pub joint: JointModel,
    pub contact: Vec3,
    /// Outward normal of the contacted face.
    pub normal: Vec3,
    pub tangent: Vec3,
    pub center: Vec3,
    /// Corners of the movable cuboid at zero articulation.
    pub move_corners: [Vec3; 8],
}

impl ObjectModel {
    pub fn diagonal(&self) -> f64 {
        let mut all = self.part_static.clone();
        all.extend(&self.part_move);
        let (lo, hi) = all.bounds().expect("object has points");
        (hi - lo).norm()
    }

    pub fn combined(&self) -> LabeledPointCloud {
        let mut all = self.part_static.clone();
        all.extend(&self.part_move);
        all
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub config: SceneConfig,
    pub object: ObjectModel,
    pub clouds: Vec<LabeledPointCloud>,
    pub masks: MaskSequence,
    pub ee: EeTrajectory,
    pub contact_traj: ContactTrajectory,
    pub truth: GroundTruth,
}

type Aabb = (Vec3, Vec3);

fn inside(p: &Vec3, b: &Aabb) -> bool {
    const EPS: f64 = 1e-9;
    (0..3).all(|i| p[i] >= b.0[i] - EPS && p[i] <= b.1[i] + EPS)
}

/// Stratified samples on the faces of `bx` not covered by `hidden` boxes.
pub fn sample_box_surface(bx: &Aabb, n: usize, hidden: &[Aabb], rng: &mut impl Rng) -> Vec<Vec3> {
    let (lo, hi) = *bx;
    let mut faces = Vec::new();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for side in [lo[a], hi[a]] {
            let mut corners = Vec::new();
            for (vb, vc) in [(lo[b], lo[c]), (hi[b], lo[c]), (lo[b], hi[c]), (hi[b], hi[c])] {
                let mut p = Vec3::zeros();
                p[a] = side;
                p[b] = vb;
                p[c] = vc;
                corners.push(p);
            }
            if hidden.iter().any(|h| corners.iter().all(|p| inside(p, h))) {
                continue;
            }
            faces.push((a, b, c, side, (hi[b] - lo[b]) * (hi[c] - lo[c])));
        }
    }
    let area: f64 = faces.iter().map(|f| f.4).sum();
    let mut out = Vec::with_capacity(n + 64);
    for (a, b, c, side, fa) in faces {
        let nf = (n as f64 * fa / area).round().max(1.0);
        let (lb, lc) = (hi[b] - lo[b], hi[c] - lo[c]);
        let nu = (nf * lb / lc).sqrt().round().max(1.0) as usize;
        let nv = (nf / nu as f64).round().max(1.0) as usize;
        for i in 0..nu {
            for j in 0..nv {
                let mut p = Vec3::zeros();
                p[a] = side;
                p[b] = lo[b] + (i as f64 + rng.random::<f64>()) / nu as f64 * lb;
                p[c] = lo[c] + (j as f64 + rng.random::<f64>()) / nv as f64 * lc;
                if !hidden.iter().any(|h| inside(&p, h)) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn build_object(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> ObjectModel {
    let (b, l) = (cfg.base_size, cfg.lid_size);
    let base: Aabb = (Vec3::zeros(), b);
    let uv = cfg
        .contact_uv
        .unwrap_or_else(|| [rng.random_range(0.4..=0.6), rng.random_range(0.0..=1.0)]);
    let (mov, joint, contact, normal) = match cfg.kind {
        JointKind::Revolute => {
            let x0 = (b.x - l.x) / 2.0;
            let lid: Aabb = (Vec3::new(x0, b.y - l.y, b.z), Vec3::new(x0 + l.x, b.y, b.z + l.z));
            let joint = JointModel::new(JointKind::Revolute, -Vec3::x(), Vec3::new(b.x / 2.0, b.y, b.z));
            // Near the front edge, far from the hinge, clear of the face border.
            let from_front = 0.04 + 0.015 * uv[1];
            let contact = Vec3::new(x0 + uv[0] * l.x, lid.0.y + from_front, b.z + l.z);
            (lid, joint, contact, Vec3::z())
        }
        JointKind::Prismatic => {
            let x0 = (b.x - l.x) / 2.0;
            let z0 = (b.z - l.z) / 2.0;
            let front: Aabb = (Vec3::new(x0, -l.y, z0), Vec3::new(x0 + l.x, 0.0, z0 + l.z));
            let contact = Vec3::new(x0 + uv[0] * l.x, -l.y, z0 + (0.4 + 0.2 * uv[1]) * l.z);
            let joint = JointModel::new(JointKind::Prismatic, -Vec3::y(), Vec3::new(b.x / 2.0, -l.y, b.z / 2.0));
            (front, joint, contact, -Vec3::y())
        }
    };
    let n = cfg.points_per_part;
    let static_pts = sample_box_surface(&base, n, &[mov], rng);
    let mut move_pts = sample_box_surface(&mov, n, &[base], rng);
    move_pts.push(contact);

    let center = Vec3::new(b.x / 2.0, b.y / 2.0, 0.0);
    let placement = match (cfg.kind, cfg.hinge) {
        (JointKind::Revolute, HingeEdge::Left) => FRAC_PI_2,
        (JointKind::Revolute, HingeEdge::Right) => -FRAC_PI_2,
        _ => 0.0,
    };
    let rot = RigidTransform::from_translation(center)
        .compose(&RigidTransform::from_rotation(yaw(placement)))
        .compose(&RigidTransform::from_translation(-center));
    ObjectModel {
        part_static: LabeledPointCloud::uniform(static_pts, Label::Static).transformed(&rot),
        part_move: LabeledPointCloud::uniform(move_pts, Label::Movable).transformed(&rot),
        joint: joint.transformed(&rot),
        contact: rot.apply(&contact),
        normal: rot.apply_vector(&normal),
        tangent: rot.apply_vector(&Vec3::x()),
        center: rot.apply(&(center + Vec3::new(0.0, 0.0, b.z / 2.0))),
        move_corners: std::array::from_fn(|i| {
            let pick = |k: usize, a: f64, b: f64| if i >> k & 1 == 0 { a } else { b };
            rot.apply(&Vec3::new(
                pick(0, mov.0.x, mov.1.x),
                pick(1, mov.0.y, mov.1.y),
                pick(2, mov.0.z, mov.1.z),
            ))
        }),
    }
}

/// Object placed in front of a robot at the world origin, facing it.
fn default_pose(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> RigidTransform {
    let b = cfg.base_size;
    let psi = -FRAC_PI_2 + rng.random_range(-15.0f64..=15.0).to_radians();
    let front = rng.random_range(0.25..=0.32);
    let lateral = rng.random_range(-0.05..=0.05);
    let c_obj = Vec3::new(b.x / 2.0, b.y / 2.0, 0.0);
    let c_world = Vec3::new(front + b.y / 2.0, lateral, 0.0);
    RigidTransform::from_translation(c_world)
        .compose(&RigidTransform::from_rotation(yaw(psi)))
        .compose(&RigidTransform::from_translation(-c_obj))
}

/// Arm used to execute demonstrations of `kind`: a UR10e-class chain. Lids
/// are worked from the origin; drawers are pulled toward the arm, so its
/// base sits 0.6 m further back to keep the retreat clear of the base.
pub fn robot_arm(kind: JointKind) -> KinematicChain {
    let mut chain = KinematicChain::ur10e();
    if kind == JointKind::Prismatic {
        chain.base = RigidTransform::from_translation(Vec3::new(-0.6, 0.0, 0.0));
    }
    chain
}

pub const FINGERTIP_RADIUS: f64 = 0.015;
const LINK_LENGTH: f64 = 0.15;
const LINK_RADIUS: f64 = 0.01;
const STANDOFF: f64 = 0.1;

/// Fingertip sphere and a short link in the end-effector frame, whose origin
/// is the tangent point and whose z axis points into the contacted face.
pub fn robot_geometry() -> LabeledPointCloud {
    let mut cloud = LabeledPointCloud::uniform(vec![Vec3::zeros()], Label::RobotLink(6));
    let c = Vec3::new(0.0, 0.0, -FINGERTIP_RADIUS);
    let n = 400;
    let golden = PI * (3.0 - 5f64.sqrt());
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        cloud.push(c + FINGERTIP_RADIUS * Vec3::new(r * phi.cos(), r * phi.sin(), z), Label::RobotLink(6));
    }
    for i in 0..100 {
        let z = -FINGERTIP_RADIUS - LINK_LENGTH * (i as f64 + 1.0) / 100.0;
        cloud.push(Vec3::new(0.0, 0.0, z), Label::RobotLink(5));
    }
    cloud
}

fn tool_rotation(normal: &Vec3, tangent: &Vec3) -> UnitQuat {
    let z = -normal;
    let x = *tangent;
    let y = z.cross(&x);
    let m = nalgebra::Matrix3::from_columns(&[x, y, z]);
    UnitQuat::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(m))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Joint value of every frame.
pub fn theta_schedule(cfg: &SceneConfig) -> Vec<f64> {
    let (_, s, e) = cfg.schedule();
    (0..cfg.frames)
        .map(|t| {
            if t <= s {
                0.0
            } else if t >= e {
                cfg.total
            } else {
                cfg.total * cfg.profile.eval((t - s) as f64 / (e - s) as f64)
            }
        })
        .collect()
}

pub fn gen_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, 0);
    let object = build_object(cfg, &mut rng);
    let t_obj = match cfg.object_pose {
        Some(p) => p,
        None => default_pose(cfg, &mut rng),
    };
    let (arrive, s, e) = cfg.schedule();
    let theta = theta_schedule(cfg);

    let phi = rng.random_range(0.0..2.0 * PI);
    let bitangent = object.normal.cross(&object.tangent);
    let slip_dir = phi.cos() * object.tangent + phi.sin() * bitangent;
    let tool = tool_rotation(&object.normal, &object.tangent);

    // End-effector poses in the object frame.
    let contact_pose = |t: usize| -> RigidTransform {
        let ramp = if t <= s {
            0.0
        } else {
            ((t - s) as f64 / (e - s) as f64).min(1.0)
        };
        let local = RigidTransform::new(tool, object.contact + cfg.noise.slip_m * ramp * slip_dir);
        object.joint.transform_at(theta[t]).compose(&local)
    };
    let standoff = RigidTransform::from_translation(Vec3::new(0.0, 0.0, -STANDOFF));
    let mut ee_local: Vec<RigidTransform> = Vec::with_capacity(cfg.frames);
    let first = contact_pose(0);
    let approach = reinterpolate_segment(
        &EePose::from_transform(&first.compose(&standoff)),
        &EePose::from_transform(&first),
        arrive + 1,
    )?;
    ee_local.extend(approach.poses.iter().map(EePose::transform));
    for t in arrive + 1..=e {
        ee_local.push(contact_pose(t));
    }
    let last = contact_pose(e);
    let retreat = reinterpolate_segment(
        &EePose::from_transform(&last),
        &EePose::from_transform(&last.compose(&standoff)),
        cfg.frames - e,
    )?;
    ee_local.extend(retreat.poses[1..].iter().map(EePose::transform));
    debug_assert_eq!(ee_local.len(), cfg.frames);

    let ee_world: Vec<RigidTransform> = ee_local.iter().map(|p| t_obj.compose(p)).collect();
    let ee = EeTrajectory::new(ee_world.iter().map(EePose::from_transform).collect())?;
    let contact_traj = ContactTrajectory::new(s, ee_world[s..=e].iter().map(|p| p.translation).collect())?;

    let robot = robot_geometry();
    let static_world = object.part_static.transformed(&t_obj);
    let camera = Camera {
        center: t_obj.apply(&object.center),
        view: t_obj.apply_vector(&Vec3::from(cfg.camera.view)),
        scale: cfg.camera.scale,
        width: cfg.resolution[0],
        height: cfg.resolution[1],
    };

    let frame = |t: usize| -> (LabeledPointCloud, (MaskFrame, MaskFrame)) {
        let mut frng = stream(cfg.seed, 1000 + t as u64);
        let pose = t_obj.compose(&object.joint.transform_at(theta[t]));
        let mut cloud = static_world.clone();
        cloud.extend(&object.part_move.transformed(&pose));
        cloud.extend(&robot.transformed(&ee_world[t]));
        if cfg.noise.point_noise_m > 0.0 {
            for p in cloud.points.iter_mut() {
                for i in 0..3 {
                    p[i] += cfg.noise.point_noise_m * gaussian(&mut frng);
                }
            }
        }
        let corners: Vec<Vec3> = object.move_corners.iter().map(|c| pose.apply(c)).collect();
        let tip = ee_world[t].apply(&Vec3::new(0.0, 0.0, -FINGERTIP_RADIUS));
        let link_end = ee_world[t].apply(&Vec3::new(0.0, 0.0, -FINGERTIP_RADIUS - LINK_LENGTH));
        let mut robot_solid = MaskFrame::empty(camera.width, camera.height);
        render::render_capsule(&mut robot_solid, &tip, &tip, FINGERTIP_RADIUS, &camera);
        render::render_capsule(&mut robot_solid, &tip, &link_end, LINK_RADIUS, &camera);
        // Each silhouette is perturbed on its own, then the robot, which is
        // in front, claims every pixel it covers so no pixel carries both labels.
        let j = cfg.noise.mask_jitter_px;
        let model = cfg.noise.jitter_model;
        let robot_mask = render::jitter_mask(&robot_solid, j, model, &mut frng);
        let move_mask = render::jitter_mask(&render::render_convex(&corners, &camera), j, model, &mut frng)
            .minus(&robot_mask)
            .expect("same camera");
        (cloud, (move_mask, robot_mask))
    };

    #[cfg(feature = "parallel")]
    let frames: Vec<_> = {
        use rayon::prelude::*;
        (0..cfg.frames).into_par_iter().map(frame).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let frames: Vec<_> = (0..cfg.frames).map(frame).collect();

    let (clouds, mask_pairs): (Vec<_>, Vec<_>) = frames.into_iter().unzip();
    let truth = GroundTruth {
        joint: object.joint.transformed(&t_obj),
        theta_true: theta,
        contact_true: t_obj.apply(&object.contact),
        start_true: s,
        end_true: e,
        object_pose: t_obj,
    };
    Ok(Scene {
        config: cfg.clone(),
        object,
        clouds,
        masks: MaskSequence::new(mask_pairs)?,
        ee,
        contact_traj,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(kind: JointKind) -> SceneConfig {
        SceneConfig::for_kind(kind).with_noise(NoiseConfig::none())
    }

    #[test]
    fn uniform_profile_is_linear() {
        let cfg = quiet(JointKind::Revolute);
        let (_, s, e) = cfg.schedule();
        let th = theta_schedule(&cfg);
        for k in 0..=(e - s) {
            let want = FRAC_PI_2 * k as f64 / (e - s) as f64;
            assert!((th[s + k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ease_in_out_endpoints() {
        let mut cfg = quiet(JointKind::Prismatic);
        cfg.profile = MotionProfile::EaseInOut;
        let th = theta_schedule(&cfg);
        let (_, s, e) = cfg.schedule();
        assert_eq!(th[s], 0.0);
        assert!((th[e] - 0.2).abs() < 1e-12);
        let mid = (s + e) / 2;
        let x = (mid - s) as f64 / (e - s) as f64;
        assert!((th[mid] - 0.2 * (3.0 * x * x - 2.0 * x * x * x)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SceneConfig::random(JointKind::Revolute, 11);
        let a = gen_scene(&cfg).unwrap();
        let b = gen_scene(&cfg).unwrap();
        assert_eq!(a.clouds, b.clouds);
        assert_eq!(a.masks, b.masks);
        assert_eq!(a.ee, b.ee);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn parts_are_dense_and_contact_is_shared() {
        for kind in [JointKind::Revolute, JointKind::Prismatic] {
            let s = gen_scene(&quiet(kind)).unwrap();
            assert!(s.object.part_move.len() >= 2000);
            assert!(s.object.part_static.len() >= 2000);
            let start = &s.clouds[s.truth.start_true];
            let robot = start.robot();
            let mv = start.movable();
            let (_, _, d) = crate::contact::closest_pair(&robot.points, &mv.points).unwrap();
            assert!(d < 1e-12);
            assert!((s.contact_traj.points[0] - s.truth.contact_true).norm() < 1e-12);
        }
    }

    #[test]
    fn bad_configs() {
        let cfg = SceneConfig {
            frames: 5,
            ..SceneConfig::default()
        };
        assert!(matches!(gen_scene(&cfg), Err(Error::BadConfig(_))));
        let mut cfg = SceneConfig::default();
        cfg.lid_size.x = 1.0;
        assert!(matches!(gen_scene(&cfg), Err(Error::BadConfig(_))));
    }

    #[test]
    fn hidden_faces_are_not_sampled() {
        let s = gen_scene(&quiet(JointKind::Revolute)).unwrap();
        let bz = s.config.base_size.z;
        let on_seam = s
            .object
            .part_move
            .points
            .iter()
            .filter(|p| (p.z - bz).abs() < 1e-9)
            .count();
        assert_eq!(on_seam, 0);
    }
}
