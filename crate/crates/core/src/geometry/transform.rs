use nalgebra::{Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type UnitQuat = UnitQuaternion<f64>;

/// Flip a quaternion onto the `w >= 0` hemisphere so that equal rotations
/// compare equal component-wise.
pub fn canonical_quat(q: UnitQuat) -> UnitQuat {
    if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

/// Rotation about the world z axis.
pub fn yaw(angle: f64) -> UnitQuat {
    canonical_quat(UnitQuaternion::from_axis_angle(&Vec3::z_axis(), angle))
}

pub fn quat_from_wxyz(w: f64, x: f64, y: f64, z: f64) -> UnitQuat {
    canonical_quat(UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)))
}

pub fn quat_to_wxyz(q: &UnitQuat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Rigid motion `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: UnitQuat,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: UnitQuat, translation: Vec3) -> Self {
        Self {
            rotation: canonical_quat(rotation),
            translation,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(UnitQuaternion::identity(), t)
    }

    pub fn from_rotation(r: UnitQuat) -> Self {
        Self::new(r, Vec3::zeros())
    }

    /// Rotation by `angle` about the line through `point` with direction `axis`.
    pub fn about_axis(axis: &Vec3, point: &Vec3, angle: f64) -> Self {
        let r = UnitQuaternion::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Self::new(r, point - r * point)
    }

    pub fn from_matrix(rotation: &Rotation3<f64>, translation: Vec3) -> Self {
        Self::new(UnitQuaternion::from_rotation_matrix(rotation), translation)
    }

    /// `self * other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform::new(inv, -(inv * self.translation))
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn rotation_matrix(&self) -> Rotation3<f64> {
        self.rotation.to_rotation_matrix()
    }

    /// Geodesic rotation angle and translation distance between two transforms.
    pub fn distance_to(&self, other: &RigidTransform) -> (f64, f64) {
        (
            self.rotation.angle_to(&other.rotation),
            (self.translation - other.translation).norm(),
        )
    }

    pub fn approx_eq(&self, other: &RigidTransform, angle_tol: f64, dist_tol: f64) -> bool {
        let (da, dt) = self.distance_to(other);
        da <= angle_tol && dt <= dist_tol
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

pub fn compose(t1: &RigidTransform, t2: &RigidTransform) -> RigidTransform {
    t1.compose(t2)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TransformRepr {
            rotation: quat_to_wxyz(&self.rotation),
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = TransformRepr::deserialize(d)?;
        let [w, x, y, z] = r.rotation;
        if !(w * w + x * x + y * y + z * z).is_normal() {
            return Err(serde::de::Error::custom("zero quaternion"));
        }
        Ok(RigidTransform::new(
            quat_from_wxyz(w, x, y, z),
            Vec3::from(r.translation),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn compose_with_identity() {
        let t = RigidTransform::new(yaw(0.3), Vec3::new(1.0, -2.0, 0.5));
        assert!(compose(&RigidTransform::identity(), &t).approx_eq(&t, 1e-12, 1e-12));
        assert!(compose(&t, &invert(&t)).approx_eq(&RigidTransform::identity(), 1e-9, 1e-9));
    }

    #[test]
    fn quarter_turns_compose_to_half_turn() {
        let rz90 = RigidTransform::from_rotation(yaw(FRAC_PI_2));
        let r = compose(&rz90, &rz90);
        // Rz(180) = (w=0, z=1) by hand.
        let expected = quat_from_wxyz(0.0, 0.0, 0.0, 1.0);
        assert!(r.rotation.angle_to(&expected) < 1e-12);
    }

    #[test]
    fn rz90_maps_x_to_y() {
        let t = RigidTransform::from_rotation(yaw(FRAC_PI_2));
        let p = t.apply(&Vec3::x());
        assert!((p - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn canonical_w_nonnegative() {
        let q = quat_from_wxyz(-0.5, 0.5, 0.5, 0.5);
        assert!(q.w >= 0.0);
        let t = RigidTransform::new(q, Vec3::zeros());
        assert!(t.rotation.w >= 0.0);
    }

    #[test]
    fn about_axis_fixes_axis_points() {
        let axis = Vec3::new(0.6, 0.8, 0.0);
        let point = Vec3::new(1.0, 2.0, 3.0);
        let t = RigidTransform::about_axis(&axis, &point, 1.1);
        let on_axis = point + 0.7 * axis;
        assert!((t.apply(&on_axis) - on_axis).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let t = RigidTransform::new(yaw(0.7), Vec3::new(0.1, 0.2, 0.3));
        let s = serde_json::to_string(&t).unwrap();
        let back: RigidTransform = serde_json::from_str(&s).unwrap();
        assert!(back.approx_eq(&t, 1e-15, 1e-15));
    }
}
