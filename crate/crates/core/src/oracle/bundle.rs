//! On-disk scene bundle:
//!
//! ```text
//! scene.json            generator config
//! ground_truth.json     joint, per-frame theta, contact, keyframes, object pose
//! object_pose.json      object frame to world
//! object.ply            closed object in its own frame (labels 0/1)
//! trajectory.json       end-effector poses
//! clouds/frame_NNNNN.ply
//! masks/movable_NNNNN.pgm, masks/robot_NNNNN.pgm
//! asset/                optional replacement asset, with g_true.json
//! ```

use std::fs;
use std::path::Path;

use super::replace::perturbed_asset;
use super::{GroundTruth, Scene};
use crate::error::Result;
use crate::geometry::{LabeledPointCloud, RigidTransform};
use crate::io::{cloud_path, read_clouds, read_json, read_masks, write_asset, write_json, write_masks, write_ply};
use crate::keyframes::MaskSequence;
use crate::replacement::ReplacementParams;
use crate::retarget::EeTrajectory;

pub fn write_bundle(scene: &Scene, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("clouds"))?;
    write_json(&dir.join("scene.json"), &scene.config)?;
    write_json(&dir.join("ground_truth.json"), &scene.truth)?;
    write_json(&dir.join("object_pose.json"), &scene.truth.object_pose)?;
    write_json(&dir.join("trajectory.json"), &scene.ee)?;
    write_ply(&dir.join("object.ply"), &scene.object.combined())?;
    for (t, c) in scene.clouds.iter().enumerate() {
        write_ply(&cloud_path(&dir.join("clouds"), t), c)?;
    }
    write_masks(&dir.join("masks"), &scene.masks)
}

/// Writes the replacement asset that `g_true` places onto the scene's object.
pub fn write_replacement(scene: &Scene, g_true: &ReplacementParams, dir: &Path) -> Result<()> {
    let asset = perturbed_asset(&scene.object, &scene.truth.object_pose, g_true)?;
    write_asset(dir, &asset)?;
    write_json(&dir.join("g_true.json"), g_true)
}

/// A bundle as read back; ground truth and object pose are optional so that
/// recorded (non-synthetic) data laid out the same way also loads.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub clouds: Vec<LabeledPointCloud>,
    pub masks: MaskSequence,
    pub ee: EeTrajectory,
    pub object_pose: Option<RigidTransform>,
    pub truth: Option<GroundTruth>,
}

fn optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if path.exists() {
        read_json(path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    Ok(Bundle {
        clouds: read_clouds(&dir.join("clouds"))?,
        masks: read_masks(&dir.join("masks"))?,
        ee: read_json(&dir.join("trajectory.json"))?,
        object_pose: optional(&dir.join("object_pose.json"))?,
        truth: optional(&dir.join("ground_truth.json"))?,
    })
}

/// Masks only, for keyframe extraction.
pub fn read_bundle_masks(dir: &Path) -> Result<MaskSequence> {
    read_masks(&dir.join("masks"))
}
