use nalgebra::{Matrix3, Rotation3, SymmetricEigen, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::transform::{canonical_quat, UnitQuat, Vec3};
use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a cloud counts as planar or linear.
const FLATNESS_TOL: f64 = 1e-10;

/// Line segment between two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: Vec3,
    pub b: Vec3,
}

impl Edge {
    pub fn new(a: Vec3, b: Vec3) -> Self {
        debug_assert!((b - a).norm() > 1e-9, "zero-length edge");
        Self { a, b }
    }

    pub fn vector(&self) -> Vec3 {
        self.b - self.a
    }

    pub fn length(&self) -> f64 {
        self.vector().norm()
    }

    pub fn direction(&self) -> Vec3 {
        self.vector().normalize()
    }

    pub fn midpoint(&self) -> Vec3 {
        0.5 * (self.a + self.b)
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        self.a + s * self.vector()
    }

    /// Distance from `p` to the closed segment.
    pub fn distance_to_point(&self, p: &Vec3) -> f64 {
        let v = self.vector();
        let s = ((p - self.a).dot(&v) / v.norm_squared()).clamp(0.0, 1.0);
        (p - self.point_at(s)).norm()
    }

    pub fn reversed(&self) -> Edge {
        Edge::new(self.b, self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBoundingBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub rotation: UnitQuat,
}

impl OrientedBoundingBox {
    pub fn axes(&self) -> [Vec3; 3] {
        let m = self.rotation.to_rotation_matrix();
        [
            m.matrix().column(0).into(),
            m.matrix().column(1).into(),
            m.matrix().column(2).into(),
        ]
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.product()
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.half_extents.norm()
    }

    pub fn corner(&self, signs: [f64; 3]) -> Vec3 {
        let local = Vec3::new(
            signs[0] * self.half_extents.x,
            signs[1] * self.half_extents.y,
            signs[2] * self.half_extents.z,
        );
        self.center + self.rotation * local
    }

    pub fn contains(&self, p: &Vec3, inflate: f64) -> bool {
        let local = self.rotation.inverse() * (p - self.center);
        (0..3).all(|i| local[i].abs() <= self.half_extents[i] + inflate)
    }

    /// The 12 cuboid edges: four along each local axis, ordered by axis and
    /// then by the sign pattern of the other two coordinates.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(12);
        for axis in 0..3 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for su in [-1.0, 1.0] {
                for sv in [-1.0, 1.0] {
                    let mut lo = [0.0; 3];
                    lo[axis] = -1.0;
                    lo[u] = su;
                    lo[v] = sv;
                    let mut hi = lo;
                    hi[axis] = 1.0;
                    out.push(Edge::new(self.corner(lo), self.corner(hi)));
                }
            }
        }
        out
    }
}

pub fn obb_edges(b: &OrientedBoundingBox) -> Vec<Edge> {
    b.edges()
}

fn covariance(points: &[Vec3]) -> (Vec3, Matrix3<f64>) {
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    (mean, cov / n)
}

/// Fails if the points do not span three dimensions.
pub fn check_volumetric(points: &[Vec3]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::DegenerateCloud(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    let (_, cov) = covariance(points);
    let eig = SymmetricEigen::new(cov);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 || min <= FLATNESS_TOL * max {
        return Err(Error::DegenerateCloud(
            "points are coplanar or collinear".into(),
        ));
    }
    Ok(())
}

fn box_for_axes(points: &[Vec3], axes: &Matrix3<f64>) -> OrientedBoundingBox {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        let local = axes.transpose() * p;
        lo = lo.inf(&local);
        hi = hi.sup(&local);
    }
    let center_local = 0.5 * (lo + hi);
    let rot = Rotation3::from_matrix_unchecked(*axes);
    OrientedBoundingBox {
        center: axes * center_local,
        half_extents: 0.5 * (hi - lo),
        rotation: canonical_quat(UnitQuaternion::from_rotation_matrix(&rot)),
    }
}

fn right_handed(mut axes: Matrix3<f64>) -> Matrix3<f64> {
    if axes.determinant() < 0.0 {
        let c = -axes.column(2).clone_owned();
        axes.set_column(2, &c);
    }
    axes
}

/// Oriented box from covariance principal axes, then refined by replacing
/// each pair of axes with the minimum-area rectangle of the points projected
/// along the third. The refinement settles the axes when principal values
/// repeat (cubes, square prisms), where the eigenvectors are arbitrary.
pub fn obb_fit(points: &[Vec3]) -> Result<OrientedBoundingBox> {
    check_volumetric(points)?;
    let (_, cov) = covariance(points);
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut axes = Matrix3::zeros();
    for (k, &i) in order.iter().enumerate() {
        axes.set_column(k, &eig.eigenvectors.column(i));
    }
    let mut axes = right_handed(axes);
    let mut best = box_for_axes(points, &axes);

    for _sweep in 0..2 {
        let mut improved = false;
        for keep in 0..3 {
            let n: Vec3 = axes.column(keep).into();
            let u0: Vec3 = axes.column((keep + 1) % 3).into();
            let v0 = n.cross(&u0);
            let planar: Vec<[f64; 2]> = points.iter().map(|p| [p.dot(&u0), p.dot(&v0)]).collect();
            let angle = min_area_rect_angle(&planar);
            let (s, c) = angle.sin_cos();
            let u = c * u0 + s * v0;
            let v = n.cross(&u);
            let mut cand = Matrix3::zeros();
            cand.set_column(keep, &n);
            cand.set_column((keep + 1) % 3, &u);
            cand.set_column((keep + 2) % 3, &v);
            let cand = right_handed(cand);
            let b = box_for_axes(points, &cand);
            if b.volume() < best.volume() * (1.0 - 1e-12) {
                best = b;
                axes = cand;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

/// Andrew's monotone chain; returns the hull counter-clockwise.
pub(crate) fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Angle of the first side of the minimum-area enclosing rectangle; one
/// side of that rectangle is always collinear with a hull edge.
fn min_area_rect_angle(points: &[[f64; 2]]) -> f64 {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0.0;
    }
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = (dx * dx + dy * dy).sqrt();
        if len < 1e-15 {
            continue;
        }
        let (ux, uy) = (dx / len, dy / len);
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let pu = p[0] * ux + p[1] * uy;
            let pv = -p[0] * uy + p[1] * ux;
            lo_u = lo_u.min(pu);
            hi_u = hi_u.max(pu);
            lo_v = lo_v.min(pv);
            hi_v = hi_v.max(pv);
        }
        let area = (hi_u - lo_u) * (hi_v - lo_v);
        if area < best.0 - 1e-15 {
            best = (area, uy.atan2(ux));
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::transform::{yaw, RigidTransform};

    fn cube_corners() -> Vec<Vec3> {
        let mut v = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    v.push(Vec3::new(x, y, z));
                }
            }
        }
        v
    }

    #[test]
    fn unit_cube() {
        let b = obb_fit(&cube_corners()).unwrap();
        assert!((b.center - Vec3::repeat(0.5)).norm() < 1e-9);
        assert!((b.half_extents - Vec3::repeat(0.5)).norm() < 1e-9);
    }

    #[test]
    fn rotated_cube_recovers_extents_and_yaw() {
        let t = RigidTransform::from_rotation(yaw(30f64.to_radians()));
        let pts: Vec<Vec3> = cube_corners().iter().map(|p| t.apply(p)).collect();
        let b = obb_fit(&pts).unwrap();
        assert!((b.half_extents - Vec3::repeat(0.5)).norm() < 1e-6, "{:?}", b.half_extents);
        assert!((b.volume() - 1.0).abs() < 1e-6);
        for p in &pts {
            assert!(b.contains(p, 1e-6));
        }
        // Every box axis is parallel to some rotated coordinate axis.
        let rotated = [t.apply_vector(&Vec3::x()), t.apply_vector(&Vec3::y()), Vec3::z()];
        for ax in b.axes() {
            assert!(rotated.iter().any(|r| (ax.dot(r).abs() - 1.0).abs() < 1e-6));
        }
    }

    #[test]
    fn planar_points_rejected() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.5, 0.3, 0.0),
        ];
        assert!(matches!(obb_fit(&pts), Err(Error::DegenerateCloud(_))));
    }

    #[test]
    fn twelve_edges() {
        let b = obb_fit(&cube_corners()).unwrap();
        let edges = b.edges();
        assert_eq!(edges.len(), 12);
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            let n = edges.iter().filter(|e| e.direction().dot(&axis).abs() > 1.0 - 1e-9).count();
            assert_eq!(n, 4);
        }
        let boxed = OrientedBoundingBox {
            center: Vec3::zeros(),
            half_extents: Vec3::new(0.1, 0.2, 0.3),
            rotation: yaw(0.4),
        };
        let total: f64 = boxed.edges().iter().map(Edge::length).sum();
        assert!((total - 8.0 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn rotated_box_edges_follow_rotation() {
        let r = yaw(0.7);
        let b = OrientedBoundingBox {
            center: Vec3::new(1.0, 2.0, 3.0),
            half_extents: Vec3::new(0.1, 0.2, 0.3),
            rotation: r,
        };
        let e = b.edges();
        let axes = [r * Vec3::x(), r * Vec3::y(), r * Vec3::z()];
        for (k, ax) in axes.iter().enumerate() {
            for edge in &e[4 * k..4 * k + 4] {
                assert!((edge.direction() - ax).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn segment_distance() {
        let e = Edge::new(Vec3::zeros(), Vec3::x());
        assert!((e.distance_to_point(&Vec3::new(0.5, 1.0, 0.0)) - 1.0).abs() < 1e-12);
        assert!((e.distance_to_point(&Vec3::new(2.0, 0.0, 0.0)) - 1.0).abs() < 1e-12);
    }
}
