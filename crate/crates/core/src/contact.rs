//! Robot/part contact at motion onset and its transfer onto a replacement part.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{aabb, LabeledPointCloud, NearestIndex, Vec3};

pub const DEFAULT_CONTACT_RADIUS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPair {
    #[serde(with = "crate::serde_vec3")]
    pub pc_robot: Vec3,
    #[serde(with = "crate::serde_vec3")]
    pub pc_move: Vec3,
    pub frame: usize,
    #[serde(with = "crate::serde_vec3")]
    pub ee_dir: Vec3,
}

impl ContactPair {
    pub fn distance(&self) -> f64 {
        (self.pc_robot - self.pc_move).norm()
    }
}

/// Closest pair between two point sets: `(index in a, index in b, distance)`.
/// Ties resolve to the lowest index in `a`.
pub fn closest_pair(a: &[Vec3], b: &[Vec3]) -> Option<(usize, usize, f64)> {
    let index = NearestIndex::new(b);
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, p) in a.iter().enumerate() {
        let (j, d) = index.nearest(p)?;
        if best.is_none_or(|(_, _, bd)| d < bd) {
            best = Some((i, j, d));
        }
    }
    best
}

/// Robot point closest to the movable part, and the movable point it touches.
pub fn detect_contact(
    robot_points: &LabeledPointCloud,
    movable: &LabeledPointCloud,
    ee_dir: Vec3,
    frame: usize,
    radius: f64,
) -> Result<ContactPair> {
    if robot_points.is_empty() || movable.is_empty() {
        return Err(Error::Input("contact detection needs two nonempty clouds".into()));
    }
    let norm = ee_dir.norm();
    if !(norm > 1e-12) {
        return Err(Error::Input("end-effector direction is zero".into()));
    }
    let (i, j, d) = closest_pair(&robot_points.points, &movable.points).expect("nonempty");
    if d > radius {
        return Err(Error::NoContact {
            distance: d,
            radius,
        });
    }
    Ok(ContactPair {
        pc_robot: robot_points.points[i],
        pc_move: movable.points[j],
        frame,
        ee_dir: ee_dir / norm,
    })
}

struct UnitCube {
    lo: Vec3,
    extent: Vec3,
}

impl UnitCube {
    fn of(part: &LabeledPointCloud, what: &str) -> Result<Self> {
        let (lo, hi) = aabb(&part.points)
            .ok_or_else(|| Error::DegeneratePart(format!("{what} part is empty")))?;
        let extent = hi - lo;
        if extent.min() < 1e-6 {
            return Err(Error::DegeneratePart(format!(
                "{what} part is flat: extents {:.3e} {:.3e} {:.3e}",
                extent.x, extent.y, extent.z
            )));
        }
        Ok(Self { lo, extent })
    }

    fn normalize(&self, p: &Vec3) -> Vec3 {
        (p - self.lo).component_div(&self.extent)
    }
}

/// Carries a contact point between two instances of a part through their
/// per-axis unit-cube normalisations, landing on the nearest point of `part_dst`.
pub fn nocs_map(
    part_src: &LabeledPointCloud,
    part_dst: &LabeledPointCloud,
    pc_src: &Vec3,
) -> Result<Vec3> {
    let src = UnitCube::of(part_src, "source")?;
    let dst = UnitCube::of(part_dst, "destination")?;
    let u = src.normalize(pc_src);
    if u.iter().any(|&c| !(-0.1..=1.1).contains(&c)) {
        return Err(Error::Input(format!(
            "contact point lies outside the source part bounds (normalised {:.3} {:.3} {:.3})",
            u.x, u.y, u.z
        )));
    }
    let normalized: Vec<Vec3> = part_dst.points.iter().map(|p| dst.normalize(p)).collect();
    let (j, _) = NearestIndex::new(&normalized).nearest(&u).expect("nonempty");
    Ok(part_dst.points[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Label;

    fn cloud(pts: &[[f64; 3]]) -> LabeledPointCloud {
        LabeledPointCloud::uniform(pts.iter().map(|p| Vec3::from(*p)).collect(), Label::Movable)
    }

    #[test]
    fn coincident_point_is_contact() {
        let robot = cloud(&[[1.0, 0.0, 0.0], [0.1, 0.2, 0.3]]);
        let part = cloud(&[[0.1, 0.2, 0.3], [5.0, 5.0, 5.0]]);
        let c = detect_contact(&robot, &part, Vec3::z(), 4, 0.01).unwrap();
        assert_eq!(c.pc_robot, c.pc_move);
        assert_eq!(c.distance(), 0.0);
        assert_eq!(c.frame, 4);
    }

    #[test]
    fn single_pair_within_radius() {
        let robot = cloud(&[[0.0, 0.0, 0.005]]);
        let part = cloud(&[[0.0, 0.0, 0.0]]);
        let c = detect_contact(&robot, &part, Vec3::new(0.0, 0.0, -2.0), 0, 0.01).unwrap();
        assert_eq!(c.pc_robot, Vec3::new(0.0, 0.0, 0.005));
        assert_eq!(c.pc_move, Vec3::zeros());
        assert!((c.ee_dir - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn far_robot_is_no_contact() {
        let robot = cloud(&[[0.0, 0.0, 0.05]]);
        let part = cloud(&[[0.0, 0.0, 0.0]]);
        assert!(matches!(
            detect_contact(&robot, &part, Vec3::z(), 0, 0.01),
            Err(Error::NoContact { .. })
        ));
    }

    fn block() -> LabeledPointCloud {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..4 {
                for k in 0..3 {
                    pts.push([i as f64 * 0.1, j as f64 * 0.05, k as f64 * 0.02 + 1.0]);
                }
            }
        }
        cloud(&pts)
    }

    #[test]
    fn nocs_identity() {
        let part = block();
        let p = part.points[17];
        assert!((nocs_map(&part, &part, &p).unwrap() - p).norm() < 1e-9);
    }

    #[test]
    fn nocs_scaling_about_min_corner() {
        let part = block();
        let lo = part.bounds().unwrap().0;
        let scaled = LabeledPointCloud::uniform(
            part.points.iter().map(|p| lo + 2.0 * (p - lo)).collect(),
            Label::Movable,
        );
        let p = part.points[29];
        let got = nocs_map(&part, &scaled, &p).unwrap();
        assert!((got - (lo + 2.0 * (p - lo))).norm() < 1e-9);
    }

    #[test]
    fn nocs_flat_part() {
        let flat = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert!(matches!(
            nocs_map(&flat, &block(), &Vec3::zeros()),
            Err(Error::DegeneratePart(_))
        ));
    }
}
