//! Joint estimation from the two segmented parts and per-frame recovery of
//! the joint parameter from the contact trajectory.
//!
//! The joint is read off the oriented boxes of the parts: every static/movable
//! edge pair is scored for parallelism and proximity, biased by the
//! end-effector approach direction and by where the contact sits on the
//! movable part. The chosen movable edge gives the axis; the closest point
//! pairs near the chosen edges give the revolute centre.
//!
//! Motion recovery fits a plane to the contacted face and, for every frame,
//! searches the joint parameter that makes the moved plane cross the contact
//! trajectory at that frame's contact point. Crossing the polyline rather than
//! matching a material point makes the objective insensitive to the contact
//! sliding along the face.

use serde::{Deserialize, Serialize};

use crate::contact::ContactPair;
use crate::error::{Error, Result};
use crate::geometry::{
    aabb, obb_fit, Edge, LabeledPointCloud, NearestIndex, OrientedBoundingBox, Plane,
    RigidTransform, Vec3,
};
use crate::optim::scan_then_golden;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

impl std::str::FromStr for JointKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "revolute" => Ok(JointKind::Revolute),
            "prismatic" => Ok(JointKind::Prismatic),
            other => Err(Error::Input(format!("unknown joint kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointModel {
    pub kind: JointKind,
    #[serde(with = "crate::serde_vec3")]
    pub direction: Vec3,
    #[serde(with = "crate::serde_vec3")]
    pub center: Vec3,
}

impl JointModel {
    pub fn new(kind: JointKind, direction: Vec3, center: Vec3) -> Self {
        Self {
            kind,
            direction: direction.normalize(),
            center,
        }
    }

    /// Rigid motion of the movable part at joint value `value`.
    pub fn transform_at(&self, value: f64) -> RigidTransform {
        match self.kind {
            JointKind::Revolute => RigidTransform::about_axis(&self.direction, &self.center, value),
            JointKind::Prismatic => RigidTransform::from_translation(value * self.direction),
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> JointModel {
        JointModel {
            kind: self.kind,
            direction: t.apply_vector(&self.direction),
            center: t.apply(&self.center),
        }
    }

    /// Distance from `p` to the joint axis line.
    pub fn axis_distance(&self, p: &Vec3) -> f64 {
        let d = p - self.center;
        (d - d.dot(&self.direction) * self.direction).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSelectionConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Number of closest point pairs averaged for the centre.
    pub k: usize,
    /// Edge proximity in meters; `None` uses `epsilon_frac` of the movable box diagonal.
    pub epsilon: Option<f64>,
    pub epsilon_frac: f64,
}

impl Default for EdgeSelectionConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 0.3,
            lambda3: 0.3,
            k: 50,
            epsilon: None,
            epsilon_frac: 0.05,
        }
    }
}

impl EdgeSelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0) || self.lambda2 < 0.0 || self.lambda3 < 0.0 {
            return Err(Error::BadConfig(
                "edge weights need lambda1 > 0 and lambda2, lambda3 >= 0".into(),
            ));
        }
        if self.k == 0 {
            return Err(Error::BadConfig("K must be at least 1".into()));
        }
        if self.epsilon.is_some_and(|e| !(e > 0.0)) || !(self.epsilon_frac > 0.0) {
            return Err(Error::BadConfig("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn epsilon_for(&self, b_move: &OrientedBoundingBox) -> f64 {
        self.epsilon
            .unwrap_or(self.epsilon_frac * b_move.diagonal())
    }
}

/// Points sampled per edge when measuring edge-to-edge distance.
pub const EDGE_SAMPLES: usize = 16;

/// Mean distance between corresponding samples of two edges, with the
/// second edge's sampling order flipped when the edges point in opposite
/// directions so the measure ignores edge orientation.
pub fn edge_distance(e1: &Edge, e2: &Edge) -> f64 {
    let e2 = if e1.vector().dot(&e2.vector()) < 0.0 {
        e2.reversed()
    } else {
        *e2
    };
    (0..EDGE_SAMPLES)
        .map(|k| {
            let s = k as f64 / (EDGE_SAMPLES - 1) as f64;
            (e1.point_at(s) - e2.point_at(s)).norm()
        })
        .sum::<f64>()
        / EDGE_SAMPLES as f64
}

pub fn edge_score(e_static: &Edge, e_move: &Edge, norm_scale: f64) -> f64 {
    let parallelism = e_static.direction().dot(&e_move.direction()).abs();
    (1.0 - parallelism) * 0.8 + edge_distance(e_static, e_move) / norm_scale * 0.2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePair {
    pub static_index: usize,
    pub move_index: usize,
    pub e_static: Edge,
    pub e_move: Edge,
    pub cost: f64,
}

/// Signs of the approach and contact-distance terms per joint kind.
///
/// Revolute: the axis is perpendicular to the approach and far from the
/// contact, so `|e . v|` is penalised and contact distance rewarded.
/// Prismatic: the slide runs along the approach, so the signs flip.
fn term_signs(kind: JointKind) -> (f64, f64) {
    match kind {
        JointKind::Revolute => (1.0, -1.0),
        JointKind::Prismatic => (-1.0, 1.0),
    }
}

pub fn pair_cost(
    e_static: &Edge,
    e_move: &Edge,
    ee_dir: &Vec3,
    pc_move: &Vec3,
    kind: JointKind,
    cfg: &EdgeSelectionConfig,
    static_diag: f64,
    move_diag: f64,
) -> f64 {
    let (s2, s3) = term_signs(kind);
    cfg.lambda1 * edge_score(e_static, e_move, static_diag)
        + s2 * cfg.lambda2 * e_move.direction().dot(&ee_dir.normalize()).abs()
        + s3 * cfg.lambda3 * e_move.distance_to_point(pc_move) / move_diag
}

/// Lowest-cost pair over all 12 x 12 edge combinations; ties go to the
/// lowest (static, movable) index.
pub fn select_edge_pair(
    b_static: &OrientedBoundingBox,
    b_move: &OrientedBoundingBox,
    ee_dir: &Vec3,
    pc_move: &Vec3,
    kind: JointKind,
    cfg: &EdgeSelectionConfig,
) -> EdgePair {
    let (static_diag, move_diag) = (b_static.diagonal(), b_move.diagonal());
    let es = b_static.edges();
    let em = b_move.edges();
    let mut best: Option<EdgePair> = None;
    for (i, e_s) in es.iter().enumerate() {
        for (j, e_m) in em.iter().enumerate() {
            let cost = pair_cost(e_s, e_m, ee_dir, pc_move, kind, cfg, static_diag, move_diag);
            if best.is_none_or(|b| cost < b.cost) {
                best = Some(EdgePair {
                    static_index: i,
                    move_index: j,
                    e_static: *e_s,
                    e_move: *e_m,
                    cost,
                });
            }
        }
    }
    best.expect("boxes have edges")
}

/// Unit edge direction with its largest-magnitude component made positive.
pub fn joint_direction(e_move: &Edge) -> Vec3 {
    canonical_direction(&e_move.direction())
}

pub fn canonical_direction(d: &Vec3) -> Vec3 {
    let d = d.normalize();
    let i = d.iamax();
    if d[i] < 0.0 {
        -d
    } else {
        d
    }
}

/// Mean midpoint of the `k` closest (movable, static) point pairs, where
/// both points lie within `epsilon` of their part's selected edge.
pub fn joint_center(
    part_move: &LabeledPointCloud,
    part_static: &LabeledPointCloud,
    e_move: &Edge,
    e_static: &Edge,
    k: usize,
    epsilon: f64,
) -> Result<Vec3> {
    let near_move: Vec<Vec3> = part_move
        .points
        .iter()
        .filter(|p| e_move.distance_to_point(p) < epsilon)
        .copied()
        .collect();
    let near_static: Vec<Vec3> = part_static
        .points
        .iter()
        .filter(|p| e_static.distance_to_point(p) < epsilon)
        .copied()
        .collect();
    if near_static.is_empty() || near_move.len() < k {
        return Err(Error::InsufficientPairs {
            found: if near_static.is_empty() { 0 } else { near_move.len() },
            needed: k,
        });
    }
    let index = NearestIndex::new(&near_static);
    let mut pairs: Vec<(f64, Vec3)> = near_move
        .iter()
        .map(|p1| {
            let (j, d) = index.nearest(p1).expect("nonempty");
            (d, 0.5 * (p1 + near_static[j]))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs[..k].iter().map(|(_, m)| m).sum::<Vec3>() / k as f64)
}

/// Joint estimate together with the intermediate boxes and chosen edges.
#[derive(Debug, Clone)]
pub struct JointEstimate {
    pub joint: JointModel,
    pub b_static: OrientedBoundingBox,
    pub b_move: OrientedBoundingBox,
    pub edges: EdgePair,
}

pub fn estimate_joint(
    part_move: &LabeledPointCloud,
    part_static: &LabeledPointCloud,
    contact: &ContactPair,
    kind: JointKind,
    cfg: &EdgeSelectionConfig,
) -> Result<JointEstimate> {
    cfg.validate()?;
    let b_static = obb_fit(&part_static.points)?;
    let b_move = obb_fit(&part_move.points)?;
    let edges = select_edge_pair(&b_static, &b_move, &contact.ee_dir, &contact.pc_move, kind, cfg);
    let direction = joint_direction(&edges.e_move);
    let center = match kind {
        JointKind::Revolute => joint_center(
            part_move,
            part_static,
            &edges.e_move,
            &edges.e_static,
            cfg.k,
            cfg.epsilon_for(&b_move),
        )?,
        JointKind::Prismatic => edges.e_move.midpoint(),
    };
    Ok(JointEstimate {
        joint: JointModel::new(kind, direction, center),
        b_static,
        b_move,
        edges,
    })
}

/// Contact points `PC_{r,t}` for consecutive frames starting at `start_frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactTrajectory {
    pub start_frame: usize,
    pub points: Vec<Vec3>,
}

impl ContactTrajectory {
    pub fn new(start_frame: usize, points: Vec<Vec3>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Input(format!(
                "contact trajectory needs 2 points, got {}",
                points.len()
            )));
        }
        Ok(Self {
            start_frame,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn end_frame(&self) -> usize {
        self.start_frame + self.points.len() - 1
    }

    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn polyline(&self) -> Polyline<'_> {
        Polyline::new(&self.points)
    }
}

/// Contact trajectory with cumulative arc length, for plane crossings.
pub struct Polyline<'a> {
    points: &'a [Vec3],
    arc: Vec<f64>,
}

impl<'a> Polyline<'a> {
    pub fn new(points: &'a [Vec3]) -> Self {
        let mut arc = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        arc.push(0.0);
        for w in points.windows(2) {
            acc += (w[1] - w[0]).norm();
            arc.push(acc);
        }
        Self { points, arc }
    }

    /// Crossing of `plane` with the polyline closest in arc length to vertex `k`.
    pub fn crossing_near(&self, plane: &Plane, k: usize) -> Option<Vec3> {
        let target = self.arc[k];
        let mut best: Option<(f64, Vec3)> = None;
        let mut consider = |s: f64, p: Vec3| {
            let gap = (s - target).abs();
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, p));
            }
        };
        if self.points.len() == 1
            && plane.signed_distance(&self.points[0]) == 0.0 {
                consider(0.0, self.points[0]);
            }
        for i in 0..self.points.len().saturating_sub(1) {
            let (a, b) = (self.points[i], self.points[i + 1]);
            if let Some(u) = plane.intersect_segment(&a, &b) {
                let s = self.arc[i] + u * (self.arc[i + 1] - self.arc[i]);
                consider(s, a + u * (b - a));
            }
        }
        best.map(|(_, p)| p)
    }

    /// `|PC_k - IP_k(plane)|`, falling back to the point-to-plane distance
    /// when the plane misses the polyline. The flag reports a real crossing.
    pub fn residual(&self, plane: &Plane, k: usize) -> (f64, bool) {
        match self.crossing_near(plane, k) {
            Some(ip) => ((self.points[k] - ip).norm(), true),
            None => (plane.signed_distance(&self.points[k]).abs(), false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoverConfig {
    /// Radius around the contact used to fit the contacted face.
    pub face_radius: f64,
    /// Search each frame near the previous solution before the full range.
    pub warm_start: bool,
    /// Half-width of the warm-start bracket (radians or meters).
    pub warm_bracket: f64,
    /// Final bracket width of the golden-section refinement.
    pub tol: f64,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self {
            face_radius: 0.03,
            warm_start: true,
            warm_bracket: 0.3,
            tol: 1e-5,
        }
    }
}

/// Contacted face: least-squares plane of the part points near the contact.
pub fn contact_face(part: &LabeledPointCloud, contact: &Vec3, face_radius: f64) -> Result<Plane> {
    let near: Vec<Vec3> = part
        .points
        .iter()
        .filter(|p| (*p - contact).norm() <= face_radius)
        .copied()
        .collect();
    Plane::fit(&near)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub frame: usize,
    pub theta: f64,
    pub residual: f64,
}

/// Joint value per frame relative to the start frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticulationTrace {
    pub start_frame: usize,
    pub theta: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ArticulationTrace {
    pub fn entries(&self) -> Vec<TraceEntry> {
        self.theta
            .iter()
            .zip(&self.residuals)
            .enumerate()
            .map(|(k, (&theta, &residual))| TraceEntry {
                frame: self.start_frame + k,
                theta,
                residual,
            })
            .collect()
    }

    pub fn from_entries(entries: &[TraceEntry]) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::Input("empty articulation trace".into()))?;
        for (k, e) in entries.iter().enumerate() {
            if e.frame != first.frame + k {
                return Err(Error::FrameMismatch(format!(
                    "trace frames are not consecutive at entry {k}"
                )));
            }
        }
        Ok(Self {
            start_frame: first.frame,
            theta: entries.iter().map(|e| e.theta).collect(),
            residuals: entries.iter().map(|e| e.residual).collect(),
        })
    }

    pub fn total(&self) -> f64 {
        *self.theta.last().unwrap_or(&0.0)
    }

    /// Motion completed at step `k` as a fraction of the total, or the
    /// constant-speed fraction when the trace ends where it started.
    pub fn profile(&self, k: usize) -> f64 {
        let total = self.total();
        let n = self.theta.len();
        if total.abs() < 1e-9 || n < 2 {
            if n < 2 {
                return 0.0;
            }
            return k as f64 / (n - 1) as f64;
        }
        self.theta[k] / total
    }
}

impl Serialize for ArticulationTrace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ArticulationTrace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<TraceEntry>::deserialize(d)?;
        ArticulationTrace::from_entries(&entries).map_err(serde::de::Error::custom)
    }
}

/// Full search range of the joint value for `part`.
pub fn search_range(kind: JointKind, part: &LabeledPointCloud) -> (f64, f64) {
    match kind {
        JointKind::Revolute => (-std::f64::consts::PI, std::f64::consts::PI),
        JointKind::Prismatic => {
            let (lo, hi) = aabb(&part.points).unwrap_or((Vec3::zeros(), Vec3::zeros()));
            let l = 2.0 * (hi - lo).norm();
            (-l, l)
        }
    }
}

/// Acceptable residual for a warm-started frame before falling back to the
/// full-range search.
const WARM_ACCEPT: f64 = 2e-3;

/// Minimise the plane-crossing residual for frame `k` of the polyline.
pub fn solve_frame(
    face: &Plane,
    joint: &JointModel,
    poly: &Polyline<'_>,
    k: usize,
    range: (f64, f64),
    warm: Option<f64>,
    cfg: &RecoverConfig,
) -> (f64, f64) {
    let objective = |theta: f64| poly.residual(&face.transformed(&joint.transform_at(theta)), k).0;
    let mut best = (f64::NAN, f64::INFINITY);
    if let Some(prev) = warm {
        let lo = (prev - cfg.warm_bracket).max(range.0);
        let hi = (prev + cfg.warm_bracket).min(range.1);
        best = scan_then_golden(objective, lo, hi, 60, cfg.tol);
        if best.1 <= WARM_ACCEPT {
            return best;
        }
    }
    let samples = match joint.kind {
        JointKind::Revolute => 720,
        JointKind::Prismatic => 800,
    };
    let global = scan_then_golden(objective, range.0, range.1, samples, cfg.tol);
    if global.1 < best.1 {
        global
    } else {
        best
    }
}

/// Per-frame joint value that carries the contacted face through each
/// trajectory point. `part_move` is the movable part at the first trajectory
/// frame, which defines `theta = 0`.
pub fn recover_motion(
    part_move: &LabeledPointCloud,
    joint: &JointModel,
    contact: &ContactPair,
    traj: &ContactTrajectory,
    cfg: &RecoverConfig,
) -> Result<ArticulationTrace> {
    let (_, on_part) = NearestIndex::new(&part_move.points)
        .nearest(&contact.pc_move)
        .ok_or_else(|| Error::Input("movable part is empty".into()))?;
    if on_part > 1e-3 {
        return Err(Error::Input(format!(
            "contact point is {on_part:.4} m away from the movable part"
        )));
    }
    let face = contact_face(part_move, &contact.pc_move, cfg.face_radius)?;
    let poly = traj.polyline();
    let range = search_range(joint.kind, part_move);
    let n = traj.len();

    let solve = |k: usize, warm: Option<f64>| solve_frame(&face, joint, &poly, k, range, warm, cfg);

    let mut theta = vec![0.0; n];
    let mut residuals = vec![0.0; n];
    residuals[0] = poly.residual(&face, 0).0;
    if cfg.warm_start {
        for k in 1..n {
            let (t, r) = solve(k, Some(theta[k - 1]));
            theta[k] = t;
            residuals[k] = r;
        }
    } else {
        #[cfg(feature = "parallel")]
        let solved: Vec<(f64, f64)> = {
            use rayon::prelude::*;
            (1..n).into_par_iter().map(|k| solve(k, None)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let solved: Vec<(f64, f64)> = (1..n).map(|k| solve(k, None)).collect();
        for (k, (t, r)) in solved.into_iter().enumerate() {
            theta[k + 1] = t;
            residuals[k + 1] = r;
        }
    }

    let moving = traj.arc_length() > 1e-9;
    let crossed = (1..n).any(|k| {
        poly.residual(&face.transformed(&joint.transform_at(theta[k])), k).1
    });
    if moving && !crossed {
        return Err(Error::NoIntersection);
    }
    Ok(ArticulationTrace {
        start_frame: traj.start_frame,
        theta,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Label;
    use std::f64::consts::FRAC_PI_2;

    fn seg(a: [f64; 3], b: [f64; 3]) -> Edge {
        Edge::new(Vec3::from(a), Vec3::from(b))
    }

    #[test]
    fn coincident_edges_score_zero() {
        let e = seg([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(edge_score(&e, &e, 1.0).abs() < 1e-15);
        assert!(edge_score(&e, &e.reversed(), 1.0).abs() < 1e-15);
    }

    #[test]
    fn parallel_edges_at_unit_distance() {
        let a = seg([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = seg([0.0, 0.5, 0.0], [1.0, 0.5, 0.0]);
        assert!((edge_score(&a, &b, 0.5) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_edges_through_shared_midpoint() {
        let a = seg([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        let b = seg([0.0, -1.0, 0.0], [0.0, 1.0, 0.0]);
        // Corresponding samples (-1+2s, 0) and (0, -1+2s) are sqrt(2)|1-2s| apart.
        let mean: f64 = (0..16)
            .map(|k| {
                let s = k as f64 / 15.0;
                2f64.sqrt() * (1.0 - 2.0 * s).abs()
            })
            .sum::<f64>()
            / 16.0;
        assert!((edge_score(&a, &b, 2.0) - (0.8 + 0.2 * mean / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn direction_canonicalised() {
        assert_eq!(joint_direction(&seg([0.0, 0.0, 0.0], [0.0, 0.0, 2.0])), Vec3::z());
        assert_eq!(joint_direction(&seg([0.0, 0.0, 2.0], [0.0, 0.0, 0.0])), Vec3::z());
        let d = joint_direction(&seg([0.0, 0.0, 0.0], [-0.6, -0.8, 0.0]));
        assert!((d - Vec3::new(0.6, 0.8, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_approach_and_contact_weights_reduce_to_edge_score() {
        let b_static = OrientedBoundingBox {
            center: Vec3::new(0.0, 0.0, -0.1),
            half_extents: Vec3::new(0.2, 0.15, 0.1),
            rotation: Default::default(),
        };
        let b_move = OrientedBoundingBox {
            center: Vec3::new(0.01, 0.0, 0.02),
            half_extents: Vec3::new(0.2, 0.15, 0.02),
            rotation: crate::geometry::yaw(0.05),
        };
        let cfg = EdgeSelectionConfig {
            lambda2: 0.0,
            lambda3: 0.0,
            ..Default::default()
        };
        let pair = select_edge_pair(&b_static, &b_move, &Vec3::z(), &Vec3::zeros(), JointKind::Revolute, &cfg);
        let mut best = (f64::INFINITY, 0, 0);
        for (i, es) in b_static.edges().iter().enumerate() {
            for (j, em) in b_move.edges().iter().enumerate() {
                let s = edge_score(es, em, b_static.diagonal());
                if s < best.0 {
                    best = (s, i, j);
                }
            }
        }
        assert_eq!((pair.static_index, pair.move_index), (best.1, best.2));
    }

    fn grid_face(z: f64, x_range: (f64, f64), y_range: (f64, f64), step: f64) -> Vec<Vec3> {
        let mut out = Vec::new();
        let mut x = x_range.0;
        while x <= x_range.1 + 1e-12 {
            let mut y = y_range.0;
            while y <= y_range.1 + 1e-12 {
                out.push(Vec3::new(x, y, z));
                y += step;
            }
            x += step;
        }
        out
    }

    #[test]
    fn seam_center() {
        // Two slabs meeting along the line y = 0, z = 0 (parallel to x).
        let mut mv = grid_face(0.0, (0.0, 0.5), (0.0, 0.1), 0.01);
        mv.extend(grid_face(0.02, (0.0, 0.5), (0.0, 0.1), 0.01));
        let mut st: Vec<Vec3> = grid_face(0.0, (0.0, 0.5), (-0.1, 0.0), 0.01);
        st.extend(grid_face(-0.02, (0.0, 0.5), (-0.1, 0.0), 0.01));
        let mv = LabeledPointCloud::uniform(mv, Label::Movable);
        let st = LabeledPointCloud::uniform(st, Label::Static);
        let e = seg([0.0, 0.0, 0.0], [0.5, 0.0, 0.0]);
        let c = joint_center(&mv, &st, &e, &e, 10, 0.005).unwrap();
        // Only the shared seam row y = 0 pairs at distance 0.
        assert!(c.y.abs() < 1e-3 && c.z.abs() < 1e-3, "{c:?}");
        assert!(matches!(
            joint_center(&mv, &st, &e, &e, 10_000, 0.005),
            Err(Error::InsufficientPairs { .. })
        ));
    }

    fn lid_part() -> LabeledPointCloud {
        LabeledPointCloud::uniform(grid_face(0.0, (0.0, 0.4), (0.0, 0.3), 0.01), Label::Movable)
    }

    fn contact_at(p: Vec3) -> ContactPair {
        ContactPair {
            pc_robot: p,
            pc_move: p,
            frame: 0,
            ee_dir: -Vec3::z(),
        }
    }

    #[test]
    fn static_trajectory_gives_zero_trace() {
        let part = lid_part();
        let p = Vec3::new(0.2, 0.25, 0.0);
        let joint = JointModel::new(JointKind::Revolute, Vec3::x(), Vec3::zeros());
        let traj = ContactTrajectory::new(0, vec![p; 6]).unwrap();
        let trace = recover_motion(&part, &joint, &contact_at(p), &traj, &RecoverConfig::default())
            .unwrap();
        for t in &trace.theta {
            assert!(t.abs() < 1e-4, "{t}");
        }
    }

    #[test]
    fn exact_arc_is_recovered() {
        let part = lid_part();
        let p = Vec3::new(0.2, 0.25, 0.0);
        let joint = JointModel::new(JointKind::Revolute, Vec3::x(), Vec3::zeros());
        let truth: Vec<f64> = (0..50).map(|k| FRAC_PI_2 * k as f64 / 49.0).collect();
        let pts = truth.iter().map(|&t| joint.transform_at(t).apply(&p)).collect();
        let traj = ContactTrajectory::new(10, pts).unwrap();
        let trace = recover_motion(&part, &joint, &contact_at(p), &traj, &RecoverConfig::default())
            .unwrap();
        for (got, want) in trace.theta.iter().zip(&truth) {
            assert!((got - want).abs() < 0.5f64.to_radians(), "{got} vs {want}");
        }
        assert!(trace.residuals.iter().all(|r| *r <= 1e-3));
        assert_eq!(trace.entries()[3].frame, 13);
    }

    #[test]
    fn prismatic_slide_is_recovered() {
        // Drawer front face x-z plane at y = 0, sliding along -y.
        let face: Vec<Vec3> = grid_face(0.0, (0.0, 0.3), (0.0, 0.2), 0.01)
            .into_iter()
            .map(|p| Vec3::new(p.x, 0.0, p.y))
            .collect();
        let part = LabeledPointCloud::uniform(face, Label::Movable);
        let p = Vec3::new(0.15, 0.0, 0.1);
        let joint = JointModel::new(JointKind::Prismatic, -Vec3::y(), Vec3::zeros());
        let truth: Vec<f64> = (0..30).map(|k| 0.2 * (k as f64 / 29.0).powi(2)).collect();
        let pts = truth.iter().map(|&t| joint.transform_at(t).apply(&p)).collect();
        let traj = ContactTrajectory::new(0, pts).unwrap();
        let trace = recover_motion(&part, &joint, &contact_at(p), &traj, &RecoverConfig::default())
            .unwrap();
        for (got, want) in trace.theta.iter().zip(&truth) {
            assert!((got - want).abs() < 1e-4);
        }
    }

    #[test]
    fn trace_json_shape() {
        let trace = ArticulationTrace {
            start_frame: 5,
            theta: vec![0.0, 0.1],
            residuals: vec![0.0, 1e-4],
        };
        let v = serde_json::to_value(&trace).unwrap();
        assert_eq!(v[1]["frame"], 6);
        let back: ArticulationTrace = serde_json::from_value(v).unwrap();
        assert_eq!(back, trace);
    }
}
