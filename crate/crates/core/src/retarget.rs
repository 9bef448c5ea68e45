//! End-effector trajectory retargeting for a perturbed object pose, and the
//! serial-chain kinematics used to turn retargeted poses into joint angles.

use nalgebra::{DMatrix, DVector, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonical_quat, quat_from_wxyz, yaw, RigidTransform, UnitQuat, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EePose {
    pub translation: Vec3,
    pub rotation: UnitQuat,
    pub grip: Option<f64>,
}

impl EePose {
    pub fn new(translation: Vec3, rotation: UnitQuat) -> Self {
        Self {
            translation,
            rotation: canonical_quat(rotation),
            grip: None,
        }
    }

    pub fn from_transform(t: &RigidTransform) -> Self {
        Self::new(t.translation, t.rotation)
    }

    pub fn transform(&self) -> RigidTransform {
        RigidTransform::new(self.rotation, self.translation)
    }

    pub fn to_row(&self) -> Vec<f64> {
        let t = self.translation;
        let q = self.rotation;
        let mut row = vec![t.x, t.y, t.z, q.w, q.i, q.j, q.k];
        if let Some(g) = self.grip {
            row.push(g);
        }
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if !(row.len() == 7 || row.len() == 8) || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "trajectory rows need 7 or 8 finite numbers, got {}",
                row.len()
            )));
        }
        let norm = row[3..7].iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-3 {
            return Err(Error::Input(format!("quaternion norm {norm:.6} is not 1")));
        }
        let mut pose = EePose::new(
            Vec3::new(row[0], row[1], row[2]),
            quat_from_wxyz(row[3], row[4], row[5], row[6]),
        );
        pose.grip = row.get(7).copied();
        Ok(pose)
    }

    /// Position error (m) and rotation error (rad) to `other`.
    pub fn error_to(&self, other: &EePose) -> (f64, f64) {
        (
            (self.translation - other.translation).norm(),
            self.rotation.angle_to(&other.rotation),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EeTrajectory {
    pub poses: Vec<EePose>,
}

impl EeTrajectory {
    pub fn new(poses: Vec<EePose>) -> Result<Self> {
        if poses.len() < 2 {
            return Err(Error::Input(format!(
                "trajectory needs at least 2 poses, got {}",
                poses.len()
            )));
        }
        Ok(Self { poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn first(&self) -> &EePose {
        &self.poses[0]
    }

    pub fn last(&self) -> &EePose {
        &self.poses[self.poses.len() - 1]
    }
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRepr {
    frames: Vec<Vec<f64>>,
}

impl Serialize for EeTrajectory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrajectoryRepr {
            frames: self.poses.iter().map(EePose::to_row).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EeTrajectory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TrajectoryRepr::deserialize(d)?;
        let poses = repr
            .frames
            .iter()
            .map(|r| EePose::from_row(r))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        EeTrajectory::new(poses).map_err(serde::de::Error::custom)
    }
}

/// Approach `[0, start]`, interaction `[start, end]` and retreat
/// `[end, T-1]`, sharing their boundary frames.
pub fn split_trajectory(
    tau: &EeTrajectory,
    start: usize,
    end: usize,
) -> Result<(EeTrajectory, EeTrajectory, EeTrajectory)> {
    let len = tau.len();
    if !(0 < start && start < end && end + 1 < len) {
        return Err(Error::BadSplit { start, end, len });
    }
    let seg = |a: usize, b: usize| EeTrajectory {
        poses: tau.poses[a..=b].to_vec(),
    };
    Ok((seg(0, start), seg(start, end), seg(end, len - 1)))
}

pub fn transform_segment(seg: &EeTrajectory, t_ao: &RigidTransform) -> EeTrajectory {
    EeTrajectory {
        poses: seg
            .poses
            .iter()
            .map(|p| {
                let mut q = EePose::from_transform(&t_ao.compose(&p.transform()));
                q.grip = p.grip;
                q
            })
            .collect(),
    }
}

/// Spherical interpolation along the shorter arc.
pub fn slerp(q0: &UnitQuat, q1: &UnitQuat, t: f64) -> UnitQuat {
    let a = q0.into_inner();
    let mut b = q1.into_inner();
    let mut dot = a.dot(&b);
    if dot < 0.0 {
        b = -b;
        dot = -dot;
    }
    if dot > 1.0 - 1e-12 {
        return canonical_quat(UnitQuaternion::new_normalize(a.lerp(&b, t)));
    }
    let omega = dot.clamp(-1.0, 1.0).acos();
    let so = omega.sin();
    let q = a * (((1.0 - t) * omega).sin() / so) + b * ((t * omega).sin() / so);
    canonical_quat(UnitQuaternion::new_normalize(q))
}

pub fn reinterpolate_segment(p_start: &EePose, p_end: &EePose, n_frames: usize) -> Result<EeTrajectory> {
    if n_frames < 2 {
        return Err(Error::Input("reinterpolation needs at least 2 frames".into()));
    }
    let last = n_frames - 1;
    let poses = (0..n_frames)
        .map(|k| {
            if k == 0 {
                return *p_start;
            }
            if k == last {
                return *p_end;
            }
            let t = k as f64 / last as f64;
            EePose::new(
                p_start.translation.lerp(&p_end.translation, t),
                slerp(&p_start.rotation, &p_end.rotation, t),
            )
        })
        .collect();
    Ok(EeTrajectory { poses })
}

/// Keep the start pose, move the interaction segment by `t_ao` and blend
/// the approach and retreat into it. Gripper values follow the source frame.
/// An identity `t_ao` moves nothing and returns the demonstration as is.
pub fn retarget(tau: &EeTrajectory, start: usize, end: usize, t_ao: &RigidTransform) -> Result<EeTrajectory> {
    let (tau1, tau2, tau3) = split_trajectory(tau, start, end)?;
    if t_ao.approx_eq(&RigidTransform::identity(), 1e-12, 1e-12) {
        return Ok(tau.clone());
    }
    let tau2p = transform_segment(&tau2, t_ao);
    let tau1p = reinterpolate_segment(tau1.first(), tau2p.first(), tau1.len())?;
    let tau3p = reinterpolate_segment(tau2p.last(), tau3.last(), tau3.len())?;
    let mut poses = Vec::with_capacity(tau.len());
    poses.extend_from_slice(&tau1p.poses[..tau1p.len() - 1]);
    poses.extend_from_slice(&tau2p.poses);
    poses.extend_from_slice(&tau3p.poses[1..]);
    for (p, src) in poses.iter_mut().zip(&tau.poses) {
        p.grip = src.grip;
    }
    Ok(EeTrajectory { poses })
}

/// A perturbation expressed about the object's own centre: rotate the object
/// in place by `pert`'s yaw, then shift it by `pert`'s translation.
pub fn object_centric(pert: &RigidTransform, center: &Vec3) -> RigidTransform {
    RigidTransform::from_translation(center + pert.translation)
        .compose(&RigidTransform::from_rotation(pert.rotation))
        .compose(&RigidTransform::from_translation(-center))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRanges {
    pub tx_range: [f64; 2],
    pub ty_range: [f64; 2],
    /// Radians.
    pub yaw_range: [f64; 2],
}

impl Default for PoseRanges {
    fn default() -> Self {
        let q = std::f64::consts::FRAC_PI_4;
        Self {
            tx_range: [-0.05, 0.3],
            ty_range: [-0.05, 0.05],
            yaw_range: [-q, q],
        }
    }
}

impl PoseRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("tx", self.tx_range), ("ty", self.ty_range), ("yaw", self.yaw_range)] {
            if !(r[0] <= r[1]) {
                return Err(Error::BadConfig(format!("{name} range has lo > hi")));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

pub fn sample_pose_perturbation(ranges: &PoseRanges, seed: u64) -> Result<RigidTransform> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tx = uniform(&mut rng, ranges.tx_range);
    let ty = uniform(&mut rng, ranges.ty_range);
    let angle = uniform(&mut rng, ranges.yaw_range);
    Ok(RigidTransform::new(yaw(angle), Vec3::new(tx, ty, 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhJoint {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
    pub limits: [f64; 2],
}

impl DhJoint {
    /// `Rz(theta) Tz(d) Tx(a) Rx(alpha)`.
    pub fn transform(&self, q: f64) -> RigidTransform {
        let theta = q + self.theta_offset;
        let rz = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), theta);
        let rx = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), self.alpha);
        let t = Vec3::new(self.a * theta.cos(), self.a * theta.sin(), self.d);
        RigidTransform::new(rz * rx, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub joints: Vec<DhJoint>,
    #[serde(default)]
    pub base: RigidTransform,
    #[serde(default)]
    pub tool: RigidTransform,
}

impl KinematicChain {
    pub fn new(joints: Vec<DhJoint>) -> Result<Self> {
        let chain = Self {
            joints,
            base: RigidTransform::identity(),
            tool: RigidTransform::identity(),
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::BadConfig("chain has no joints".into()));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if !(j.limits[0] < j.limits[1]) {
                return Err(Error::BadConfig(format!("joint {i} limits lo >= hi")));
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Six-axis arm with the published UR5e DH parameters and a 0.16 m tool.
    pub fn ur5e() -> Self {
        use std::f64::consts::{FRAC_PI_2, PI};
        let lim = [-2.0 * PI, 2.0 * PI];
        let row = |a, alpha, d| DhJoint {
            a,
            alpha,
            d,
            theta_offset: 0.0,
            limits: lim,
        };
        Self {
            joints: vec![
                row(0.0, FRAC_PI_2, 0.1625),
                row(-0.425, 0.0, 0.0),
                row(-0.3922, 0.0, 0.0),
                row(0.0, FRAC_PI_2, 0.1333),
                row(0.0, -FRAC_PI_2, 0.0997),
                row(0.0, 0.0, 0.0996),
            ],
            base: RigidTransform::identity(),
            tool: RigidTransform::from_translation(Vec3::new(0.0, 0.0, 0.16)),
        }
    }

    /// Six-axis arm with the published UR10e DH parameters and a 0.16 m tool.
    pub fn ur10e() -> Self {
        use std::f64::consts::{FRAC_PI_2, PI};
        let lim = [-2.0 * PI, 2.0 * PI];
        let row = |a, alpha, d| DhJoint {
            a,
            alpha,
            d,
            theta_offset: 0.0,
            limits: lim,
        };
        Self {
            joints: vec![
                row(0.0, FRAC_PI_2, 0.1807),
                row(-0.6127, 0.0, 0.0),
                row(-0.57155, 0.0, 0.0),
                row(0.0, FRAC_PI_2, 0.17415),
                row(0.0, -FRAC_PI_2, 0.11985),
                row(0.0, 0.0, 0.11655),
            ],
            base: RigidTransform::identity(),
            tool: RigidTransform::from_translation(Vec3::new(0.0, 0.0, 0.16)),
        }
    }

    pub fn mid_range(&self) -> Vec<f64> {
        self.joints
            .iter()
            .map(|j| 0.5 * (j.limits[0] + j.limits[1]))
            .collect()
    }

    fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::Input(format!(
                "expected {} joint values, got {}",
                self.dof(),
                q.len()
            )));
        }
        for (i, (v, j)) in q.iter().zip(&self.joints).enumerate() {
            if !(*v >= j.limits[0] && *v <= j.limits[1]) {
                return Err(Error::JointLimit {
                    joint: i,
                    value: *v,
                    lo: j.limits[0],
                    hi: j.limits[1],
                });
            }
        }
        Ok(())
    }

    fn fk_unchecked(&self, q: &[f64]) -> RigidTransform {
        let mut t = self.base;
        for (j, v) in self.joints.iter().zip(q) {
            t = t.compose(&j.transform(*v));
        }
        t.compose(&self.tool)
    }

    fn clamp(&self, q: &mut [f64]) {
        for (v, j) in q.iter_mut().zip(&self.joints) {
            *v = v.clamp(j.limits[0], j.limits[1]);
        }
    }
}

pub fn fk(chain: &KinematicChain, joints: &[f64]) -> Result<EePose> {
    chain.check(joints)?;
    Ok(EePose::from_transform(&chain.fk_unchecked(joints)))
}

pub const IK_POSITION_TOL: f64 = 1e-4;
pub const IK_ORIENTATION_TOL: f64 = 0.1 * std::f64::consts::PI / 180.0;
pub const IK_DAMPING: f64 = 0.05;
const JACOBIAN_STEP: f64 = 1e-6;
const MAX_STEP: f64 = 0.5;
/// Additional deterministic starts tried after the caller's seed fails.
pub const IK_RESTARTS: usize = 24;

/// World-frame 6-vector `[dp, dr]` taking `from` to `to`.
fn pose_error(from: &RigidTransform, to: &RigidTransform) -> [f64; 6] {
    let dp = to.translation - from.translation;
    let dr = (to.rotation * from.rotation.inverse()).scaled_axis();
    [dp.x, dp.y, dp.z, dr.x, dr.y, dr.z]
}

fn dls_solve(
    chain: &KinematicChain,
    target: &RigidTransform,
    seed: &[f64],
    max_iters: usize,
) -> (Vec<f64>, f64, f64) {
    let n = chain.dof();
    let mut q = seed.to_vec();
    let errs = |q: &[f64]| {
        let e = pose_error(&chain.fk_unchecked(q), target);
        (
            (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt(),
            (e[3] * e[3] + e[4] * e[4] + e[5] * e[5]).sqrt(),
            e,
        )
    };
    let (mut pe, mut oe, mut e) = errs(&q);
    let mut best = (q.clone(), pe, oe);
    let score = |p: f64, o: f64| p / IK_POSITION_TOL + o / IK_ORIENTATION_TOL;
    let lambda2 = IK_DAMPING * IK_DAMPING;
    for _ in 0..max_iters {
        if pe < IK_POSITION_TOL && oe < IK_ORIENTATION_TOL {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(6, n);
        for i in 0..n {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += JACOBIAN_STEP;
            qm[i] -= JACOBIAN_STEP;
            let d = pose_error(&chain.fk_unchecked(&qm), &chain.fk_unchecked(&qp));
            for r in 0..6 {
                jac[(r, i)] = d[r] / (2.0 * JACOBIAN_STEP);
            }
        }
        let ev = DVector::from_row_slice(&e);
        let jjt = &jac * jac.transpose() + DMatrix::identity(6, 6) * lambda2;
        let Some(y) = jjt.lu().solve(&ev) else { break };
        let mut dq = jac.transpose() * y;
        let norm = dq.norm();
        if norm > MAX_STEP {
            dq *= MAX_STEP / norm;
        }
        for (v, d) in q.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        chain.clamp(&mut q);
        (pe, oe, e) = errs(&q);
        if score(pe, oe) < score(best.1, best.2) {
            best = (q.clone(), pe, oe);
        }
    }
    best
}

/// Damped least squares on the 6-D pose error. When the given seed does not
/// converge, a fixed sequence of further starts is tried.
pub fn ik(chain: &KinematicChain, target: &EePose, seed: &[f64], max_iters: usize) -> Result<Vec<f64>> {
    chain.check(seed)?;
    let goal = target.transform();
    let mut best = dls_solve(chain, &goal, seed, max_iters);
    let converged = |b: &(Vec<f64>, f64, f64)| b.1 < IK_POSITION_TOL && b.2 < IK_ORIENTATION_TOL;
    if !converged(&best) {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1c0ffee);
        for _ in 0..IK_RESTARTS {
            let start: Vec<f64> = seed
                .iter()
                .zip(&chain.joints)
                .map(|(s, j)| {
                    let span = (j.limits[1] - j.limits[0]).min(2.0 * std::f64::consts::PI);
                    (s + rng.random_range(-0.5..=0.5) * span).clamp(j.limits[0], j.limits[1])
                })
                .collect();
            let cand = dls_solve(chain, &goal, &start, max_iters);
            let better = cand.1 / IK_POSITION_TOL + cand.2 / IK_ORIENTATION_TOL
                < best.1 / IK_POSITION_TOL + best.2 / IK_ORIENTATION_TOL;
            if better {
                best = cand;
            }
            if converged(&best) {
                break;
            }
        }
    }
    if converged(&best) {
        Ok(best.0)
    } else {
        Err(Error::IkNoConvergence {
            best: best.0,
            position_err: best.1,
            orientation_err: best.2,
        })
    }
}


/// Seed of sample `index` in a campaign seeded by `master`.
pub fn sample_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.random()
}

#[derive(Debug, Clone, Serialize)]
pub struct RetargetSample {
    pub index: usize,
    pub seed: u64,
    pub t_ao: RigidTransform,
    pub trajectory: EeTrajectory,
    /// Joint angles per frame; absent when some frame is unreachable.
    pub joints: Option<Vec<Vec<f64>>>,
    pub failure: Option<String>,
}

/// One perturbation sample about the object centre `center`: the retargeted
/// trajectory and, when reachable, its joint-space solution.
#[allow(clippy::too_many_arguments)]
pub fn retarget_sample(
    tau: &EeTrajectory,
    start: usize,
    end: usize,
    center: &Vec3,
    ranges: &PoseRanges,
    chain: &KinematicChain,
    master: u64,
    index: usize,
) -> Result<RetargetSample> {
    let seed = sample_seed(master, index);
    let t_ao = object_centric(&sample_pose_perturbation(ranges, seed)?, center);
    let trajectory = retarget(tau, start, end, &t_ao)?;
    let (joints, failure) = match solve_trajectory(chain, &trajectory, &chain.mid_range()) {
        Ok(q) => (Some(q), None),
        Err(e @ Error::IkNoConvergence { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(RetargetSample {
        index,
        seed,
        t_ao,
        trajectory,
        joints,
        failure,
    })
}

pub const DEFAULT_IK_ITERS: usize = 300;

/// Joint angles for every pose, warm-starting each frame from the previous one.
pub fn solve_trajectory(chain: &KinematicChain, traj: &EeTrajectory, seed: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(traj.len());
    let mut warm = seed.to_vec();
    for pose in &traj.poses {
        let q = ik(chain, pose, &warm, DEFAULT_IK_ITERS)?;
        warm = q.clone();
        out.push(q);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn planar() -> KinematicChain {
        let j = DhJoint {
            a: 1.0,
            alpha: 0.0,
            d: 0.0,
            theta_offset: 0.0,
            limits: [-PI, PI],
        };
        KinematicChain::new(vec![j, j]).unwrap()
    }

    fn pose(x: f64, y: f64, z: f64) -> EePose {
        EePose::new(Vec3::new(x, y, z), UnitQuat::identity())
    }

    fn line(n: usize) -> EeTrajectory {
        EeTrajectory::new((0..n).map(|k| pose(k as f64, 0.0, 0.0)).collect()).unwrap()
    }

    #[test]
    fn split_lengths_and_round_trip() {
        let tau = line(10);
        let (a, b, c) = split_trajectory(&tau, 3, 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (4, 5, 3));
        let mut joined = a.poses.clone();
        joined.extend_from_slice(&b.poses[1..]);
        joined.extend_from_slice(&c.poses[1..]);
        assert_eq!(joined, tau.poses);
        assert!(matches!(split_trajectory(&tau, 0, 7), Err(Error::BadSplit { .. })));
        assert!(matches!(split_trajectory(&tau, 3, 9), Err(Error::BadSplit { .. })));
    }

    #[test]
    fn transform_cases() {
        let seg = line(3);
        assert_eq!(transform_segment(&seg, &RigidTransform::identity()), seg);
        let shifted = transform_segment(&seg, &RigidTransform::from_translation(Vec3::new(0.1, 0.0, 0.0)));
        assert!((shifted.poses[2].translation - Vec3::new(2.1, 0.0, 0.0)).norm() < 1e-15);
        let one = EeTrajectory {
            poses: vec![pose(1.0, 0.0, 0.0)],
        };
        let r = transform_segment(&one, &RigidTransform::from_rotation(yaw(FRAC_PI_2)));
        assert!((r.poses[0].translation - Vec3::y()).norm() < 1e-12);
        assert!(r.poses[0].rotation.angle_to(&yaw(FRAC_PI_2)) < 1e-12);
    }

    #[test]
    fn reinterpolation_endpoints_and_midpoint() {
        let a = pose(0.0, 0.0, 0.0);
        let b = EePose::new(Vec3::new(2.0, 4.0, 0.0), yaw(FRAC_PI_2));
        let seg = reinterpolate_segment(&a, &b, 3).unwrap();
        assert_eq!(seg.poses[0], a);
        assert_eq!(seg.poses[2], b);
        assert!((seg.poses[1].translation - Vec3::new(1.0, 2.0, 0.0)).norm() < 1e-15);
        assert!(seg.poses[1].rotation.angle_to(&yaw(FRAC_PI_4)) < 1e-12);
    }

    #[test]
    fn slerp_takes_shorter_arc() {
        let q0 = UnitQuat::identity();
        let q1 = UnitQuaternion::new_unchecked(-yaw(FRAC_PI_2).into_inner());
        let mid = slerp(&q0, &q1, 0.5);
        assert!(mid.angle_to(&yaw(FRAC_PI_4)) < 1e-12);
    }

    #[test]
    fn retarget_identity_and_translation() {
        let tau = line(10);
        let same = retarget(&tau, 3, 7, &RigidTransform::identity()).unwrap();
        for (p, q) in same.poses.iter().zip(&tau.poses) {
            assert!(p.error_to(q).0 < 1e-12);
        }
        let mut curved = tau.clone();
        curved.poses[1].translation.z = 0.3;
        assert_eq!(retarget(&curved, 3, 7, &RigidTransform::identity()).unwrap(), curved);
        let nudged = retarget(&curved, 3, 7, &RigidTransform::from_translation(Vec3::new(0.0, 1e-6, 0.0))).unwrap();
        assert!(nudged.poses[1].translation.z.abs() < 1e-12);
        let t = RigidTransform::from_translation(Vec3::new(0.0, 0.5, 0.0));
        let moved = retarget(&tau, 3, 7, &t).unwrap();
        assert_eq!(moved.poses[0], tau.poses[0]);
        assert_eq!(moved.len(), tau.len());
        assert!((moved.poses[5].translation - Vec3::new(5.0, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn planar_fk() {
        let c = planar();
        assert!((fk(&c, &[0.0, 0.0]).unwrap().translation - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((fk(&c, &[FRAC_PI_2, 0.0]).unwrap().translation - Vec3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
        assert!(matches!(fk(&c, &[4.0, 0.0]), Err(Error::JointLimit { joint: 0, .. })));
    }

    #[test]
    fn planar_ik() {
        let c = planar();
        let seed = [0.3, -0.2];
        assert_eq!(ik(&c, &fk(&c, &seed).unwrap(), &seed, 100).unwrap(), seed.to_vec());
        let target = fk(&c, &[FRAC_PI_4, 0.0]).unwrap();
        let q = ik(&c, &target, &[0.0, 0.1], 200).unwrap();
        let (pe, oe) = fk(&c, &q).unwrap().error_to(&target);
        assert!(pe < 1e-4 && oe < IK_ORIENTATION_TOL);
        assert!(matches!(
            ik(&c, &pose(3.0, 0.0, 0.0), &[0.0, 0.1], 100),
            Err(Error::IkNoConvergence { .. })
        ));
    }

    #[test]
    fn ur5e_round_trip() {
        let c = KinematicChain::ur5e();
        let q = [0.3, -1.2, 1.4, -1.7, -1.57, 0.4];
        let target = fk(&c, &q).unwrap();
        let sol = ik(&c, &target, &c.mid_range(), DEFAULT_IK_ITERS).unwrap();
        let (pe, oe) = fk(&c, &sol).unwrap().error_to(&target);
        assert!(pe < 1e-4 && oe < IK_ORIENTATION_TOL);
    }

    #[test]
    fn perturbation_sampling() {
        let zero = PoseRanges {
            tx_range: [0.0, 0.0],
            ty_range: [0.0, 0.0],
            yaw_range: [0.0, 0.0],
        };
        assert_eq!(sample_pose_perturbation(&zero, 9).unwrap(), RigidTransform::identity());
        let r = PoseRanges::default();
        let a = sample_pose_perturbation(&r, 4).unwrap();
        assert_eq!(a, sample_pose_perturbation(&r, 4).unwrap());
        assert!(a.translation.x >= -0.05 && a.translation.x <= 0.3);
        assert!(a.rotation.angle() <= FRAC_PI_4 + 1e-12);
    }

    #[test]
    fn trajectory_json() {
        let mut p = pose(0.1, 0.2, 0.3);
        p.grip = Some(1.0);
        let t = EeTrajectory::new(vec![p, pose(0.0, 0.0, 0.0)]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with("{\"frames\":[[0.1,0.2,0.3,1.0,0.0,0.0,0.0,1.0]"));
        let back: EeTrajectory = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
