//! Browser bindings: each call generates a seeded oracle scene and returns
//! JSON for the demo page to draw.

use serde_json::json;
use wasm_bindgen::prelude::*;

use artigen::articulation::JointKind;
use artigen::contact::nocs_map;
use artigen::geometry::{yaw, RigidTransform, Vec3};
use artigen::keyframes::{KeyframeConfig, MotionScoreSeries};
use artigen::oracle::replace::perturbed_asset;
use artigen::oracle::{gen_scene, NoiseConfig, Scene, SceneConfig};
use artigen::replacement::{fit_stage1, fit_stage2, FitConfig, ReplacementParams};
use artigen::retarget::{object_centric, retarget};

fn kind_of(name: &str) -> Result<JointKind, JsError> {
    match name {
        "revolute" => Ok(JointKind::Revolute),
        "prismatic" => Ok(JointKind::Prismatic),
        other => Err(JsError::new(&format!("unknown joint kind {other:?}"))),
    }
}

fn scene(kind: &str, seed: u32, jitter_px: u32) -> Result<Scene, JsError> {
    let mut cfg = SceneConfig::random(kind_of(kind)?, seed as u64);
    cfg.noise = NoiseConfig {
        mask_jitter_px: jitter_px as usize,
        ..NoiseConfig::default()
    };
    gen_scene(&cfg).map_err(|e| JsError::new(&e.to_string()))
}

fn err(e: artigen::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Raw and smoothed motion scores, the threshold and both keyframe pairs.
#[wasm_bindgen]
pub fn keyframe_scores(kind: &str, seed: u32, jitter_px: u32) -> Result<String, JsError> {
    let sc = scene(kind, seed, jitter_px)?;
    let s = MotionScoreSeries::from_masks(&sc.masks, &KeyframeConfig::default()).map_err(err)?;
    Ok(json!({
        "raw": s.raw,
        "smoothed": s.smoothed,
        "threshold": s.threshold,
        "baseline": s.baseline,
        "detected": [s.start_frame, s.end_frame],
        "truth": [sc.truth.start_true, sc.truth.end_true],
    })
    .to_string())
}

/// Fits a rescaled, shifted copy of the scene object back onto the
/// demonstration and reports both stages against the truth.
#[wasm_bindgen]
pub fn fit_replacement(kind: &str, seed: u32, scale: f64, offset_x: f64, offset_y: f64) -> Result<String, JsError> {
    let sc = scene(kind, seed, 0)?;
    let k = sc.config.kind;
    let g_true = ReplacementParams::new(scale, sc.config.total, offset_x, offset_y);
    let asset = perturbed_asset(&sc.object, &sc.truth.object_pose, &g_true).map_err(err)?;
    let pc_map = nocs_map(&sc.object.part_move, &asset.part_move, &sc.object.contact).map_err(err)?;
    let window = (sc.truth.start_true, sc.truth.end_true);
    let cfg = FitConfig::default();
    let s1 = fit_stage1(&pc_map, &asset, &sc.contact_traj, window, k, &cfg).map_err(err)?;
    let s2 = fit_stage2(&asset, &sc.contact_traj, &s1.params, k, &pc_map, None, &cfg).map_err(err)?;
    Ok(json!({"truth": g_true, "stage1": s1, "stage2": s2}).to_string())
}

/// Top-down paths of the original and retargeted end-effector for an object
/// shifted by `(tx, ty)` and turned by `yaw_deg` about its centre.
#[wasm_bindgen]
pub fn retarget_preview(kind: &str, seed: u32, tx: f64, ty: f64, yaw_deg: f64) -> Result<String, JsError> {
    let sc = scene(kind, seed, 0)?;
    let center = sc.truth.object_pose.apply(&sc.object.center);
    let pert = RigidTransform::new(yaw(yaw_deg.to_radians()), Vec3::new(tx, ty, 0.0));
    let t_ao = object_centric(&pert, &center);
    let (s, e) = (sc.truth.start_true, sc.truth.end_true);
    let out = retarget(&sc.ee, s, e, &t_ao).map_err(err)?;
    let xy = |poses: &[artigen::retarget::EePose]| -> Vec<[f64; 2]> {
        poses.iter().map(|p| [p.translation.x, p.translation.y]).collect()
    };
    let outline = |t: &RigidTransform| -> Vec<[f64; 2]> {
        let (lo, hi) = sc.object.part_static.bounds().expect("object has points");
        [(lo.x, lo.y), (hi.x, lo.y), (hi.x, hi.y), (lo.x, hi.y)]
            .iter()
            .map(|&(x, y)| {
                let p = t.apply(&sc.truth.object_pose.apply(&Vec3::new(x, y, 0.0)));
                [p.x, p.y]
            })
            .collect()
    };
    Ok(json!({
        "original": xy(&sc.ee.poses),
        "retargeted": xy(&out.poses),
        "window": [s, e],
        "object": outline(&RigidTransform::identity()),
        "moved_object": outline(&t_ao),
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outputs_parse_as_json() {
        let v: serde_json::Value = serde_json::from_str(&keyframe_scores("revolute", 1, 2).unwrap()).unwrap();
        assert_eq!(v["raw"].as_array().unwrap().len(), 49);
        let v: serde_json::Value = serde_json::from_str(&fit_replacement("prismatic", 2, 0.8, 0.01, 0.0).unwrap()).unwrap();
        assert!((v["stage2"]["params"]["s"].as_f64().unwrap() - 0.8).abs() < 0.016);
        let v: serde_json::Value = serde_json::from_str(&retarget_preview("revolute", 1, 0.0, 0.0, 0.0).unwrap()).unwrap();
        let flat = |k: &str| -> Vec<f64> {
            v[k].as_array().unwrap().iter().flat_map(|p| [p[0].as_f64().unwrap(), p[1].as_f64().unwrap()]).collect()
        };
        let (a, b) = (flat("original"), flat("retargeted"));
        assert_eq!(a.len(), b.len());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }
}
