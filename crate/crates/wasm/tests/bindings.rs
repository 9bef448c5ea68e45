use serde_json::Value;

use artigen_wasm::{fit_replacement, keyframe_scores, retarget_preview};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn keyframes_land_near_truth() {
    for kind in ["revolute", "prismatic"] {
        let v = parse(keyframe_scores(kind, 4, 2).unwrap());
        let det = v["detected"].as_array().unwrap();
        let truth = v["truth"].as_array().unwrap();
        for (d, t) in det.iter().zip(truth) {
            assert!(d.as_i64().unwrap().abs_diff(t.as_i64().unwrap()) <= 3);
        }
        assert_eq!(v["raw"].as_array().unwrap().len(), v["smoothed"].as_array().unwrap().len());
    }
}

#[test]
fn fit_recovers_scale_and_offset() {
    let v = parse(fit_replacement("revolute", 5, 1.2, -0.02, 0.03).unwrap());
    let g = &v["stage2"]["params"];
    assert!((g["s"].as_f64().unwrap() - 1.2).abs() < 0.024);
    // Demo scenes carry 5 mm contact slip, and shifting along the hinge
    // leaves the lid face in place, so offsets are held to the slip.
    assert!((g["offset"][0].as_f64().unwrap() + 0.02).abs() < 0.005);
    assert!((g["offset"][1].as_f64().unwrap() - 0.03).abs() < 0.005);
}

#[test]
fn retarget_keeps_the_start() {
    let v = parse(retarget_preview("prismatic", 2, 0.1, 0.02, 15.0).unwrap());
    assert_eq!(v["original"][0], v["retargeted"][0]);
    assert_ne!(v["original"], v["retargeted"]);
    assert_eq!(v["object"].as_array().unwrap().len(), 4);
}
