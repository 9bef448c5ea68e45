//! Replacement assets with known adaptation parameters.
//!
//! The oracle object is shrunk or grown and shifted so that placing the
//! result with `g_true` reproduces the object the demonstration acted on.

use rand::Rng;

use super::{stream, ObjectModel};
use crate::articulation::JointModel;
use crate::error::Result;
use crate::geometry::{LabeledPointCloud, RigidTransform, Vec3};
use crate::replacement::{ReplacementAsset, ReplacementParams};

/// Inverse placement of the closed object: `x_a = (x - o) / s`, posed by
/// the object's world pose.
pub fn perturbed_asset(
    object: &ObjectModel,
    object_pose: &RigidTransform,
    g_true: &ReplacementParams,
) -> Result<ReplacementAsset> {
    g_true.validate()?;
    let o = Vec3::new(g_true.offset[0], g_true.offset[1], 0.0);
    let undo = |p: &Vec3| (p - o) / g_true.s;
    let map = |c: &LabeledPointCloud| LabeledPointCloud {
        points: c.points.iter().map(undo).collect(),
        labels: c.labels.clone(),
    };
    ReplacementAsset::new(
        map(&object.part_move),
        map(&object.part_static),
        JointModel {
            center: undo(&object.joint.center),
            ..object.joint
        },
        *object_pose,
    )
}

/// Scale in [0.6, 1.4], offsets within 5 cm, and the demonstrated total motion.
pub fn random_params(total: f64, seed: u64) -> ReplacementParams {
    let mut rng = stream(seed, 11);
    let s = rng.random_range(0.6..=1.4);
    let ox = rng.random_range(-0.05..=0.05);
    let oy = rng.random_range(-0.05..=0.05);
    ReplacementParams::new(s, total, ox, oy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{gen_scene, NoiseConfig, SceneConfig};
    use crate::replacement::apply_params;

    #[test]
    fn placing_with_truth_restores_the_object() {
        let scene = gen_scene(&SceneConfig::default().with_noise(NoiseConfig::none())).unwrap();
        let g = ReplacementParams::new(0.7, 0.0, 0.03, -0.02);
        let asset = perturbed_asset(&scene.object, &scene.truth.object_pose, &g).unwrap();
        let placed = apply_params(&asset, &g);
        for (p, q) in placed.part_move.points.iter().zip(&scene.object.part_move.points) {
            assert!((p - q).norm() < 1e-12);
        }
        assert!((placed.joint.center - scene.object.joint.center).norm() < 1e-12);
    }
}
