//! Acceptance criteria over seeded oracle campaigns. Each test prints one
//! `PASS`/`FAIL` line with its measurements and wall time, then asserts.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use artigen::articulation::JointKind;
use artigen::contact::nocs_map;
use artigen::geometry::{icp_align, quat_from_wxyz, Label, LabeledPointCloud, RigidTransform, UnitQuat, Vec3};
use artigen::keyframes::{motion_score, savgol_smooth, KeyframeConfig, MaskFrame, MotionScoreSeries};
use artigen::oracle::campaign::{run_campaign, run_scene, CampaignConfig};
use artigen::oracle::eval::{direction_error_deg, theta_rmse};
use artigen::oracle::replace::{perturbed_asset, random_params};
use artigen::oracle::{gen_scene, robot_arm, MotionProfile, NoiseConfig, SceneConfig};
use artigen::pipeline::{estimate, PipelineConfig};
use artigen::replacement::{asset_face, fit_stage1, fit_stage2, stage2_objective, FitConfig};
use artigen::retarget::{fk, retarget_sample, slerp, split_trajectory, transform_segment, PoseRanges};

const SEEDS: u64 = 50;
const KINDS: [JointKind; 2] = [JointKind::Revolute, JointKind::Prismatic];

fn report(id: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) -> bool {
    let ok = pass && elapsed <= budget;
    println!(
        "{} criterion {id}: {detail} [{:.1} s, budget {} s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn noiseless(kind: JointKind, seed: u64) -> SceneConfig {
    SceneConfig::random(kind, seed).with_noise(NoiseConfig::none())
}

fn rate(hits: usize, n: usize) -> f64 {
    hits as f64 / n as f64
}

#[test]
fn criterion_1_replay_success() {
    let t0 = Instant::now();
    let cfg = PipelineConfig::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in KINDS {
        let cc = CampaignConfig {
            kind,
            scenes: SEEDS as usize,
            first_seed: 0,
            noiseless: false,
        };
        let s = run_campaign(&cc, &cfg).unwrap();
        pass &= s.replay.success_rate >= 0.95;
        detail.push(format!("{kind:?} success {:.2} (failures {})", s.replay.success_rate, s.failures));
    }
    let ok = report("1", pass, t0.elapsed(), Duration::from_secs(120), &detail.join(", "));
    assert!(ok);
}

#[test]
fn criterion_2_joint_estimation() {
    let t0 = Instant::now();
    let cfg = PipelineConfig::default();
    let (mut worst_dir, mut worst_center, mut passed) = (0.0f64, 0.0f64, 0);
    for kind in KINDS {
        for seed in 0..SEEDS {
            let sc = gen_scene(&noiseless(kind, seed)).unwrap();
            let Ok(est) = estimate(&sc.clouds, &sc.masks, &sc.ee, kind, &cfg) else {
                continue;
            };
            let dir = direction_error_deg(&est.joint.joint, &sc.truth.joint);
            let center = match kind {
                JointKind::Revolute => sc.truth.joint.axis_distance(&est.joint.joint.center) / sc.object.diagonal(),
                JointKind::Prismatic => 0.0,
            };
            worst_dir = worst_dir.max(dir);
            worst_center = worst_center.max(center);
            if dir <= 2.0 && center <= 0.01 {
                passed += 1;
            }
        }
    }
    let n = 2 * SEEDS as usize;
    let detail = format!(
        "{passed}/{n} scenes, max direction error {worst_dir:.3} deg, max centre-axis distance {:.3}% of diagonal",
        100.0 * worst_center
    );
    let ok = report("2", passed == n, t0.elapsed(), Duration::from_secs(30), &detail);
    assert!(ok);
}

fn rmse_in_units(kind: JointKind, v: f64) -> f64 {
    match kind {
        JointKind::Revolute => v.to_degrees(),
        JointKind::Prismatic => 1000.0 * v,
    }
}

#[test]
fn criterion_3_motion_recovery() {
    let t0 = Instant::now();
    let cfg = PipelineConfig::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in KINDS {
        // Noiseless, uniform and ease-in-out: every seed within 0.5 deg / 0.5 mm.
        for profile in [MotionProfile::Uniform, MotionProfile::EaseInOut] {
            let mut worst = 0.0f64;
            let mut all = true;
            for seed in 0..SEEDS {
                let mut sc_cfg = noiseless(kind, seed);
                sc_cfg.profile = profile;
                let sc = gen_scene(&sc_cfg).unwrap();
                match estimate(&sc.clouds, &sc.masks, &sc.ee, kind, &cfg) {
                    Ok(est) => {
                        let e = rmse_in_units(kind, theta_rmse(&est.trace, &est.joint.joint, &sc.truth).unwrap());
                        worst = worst.max(e);
                        all &= e <= 0.5;
                    }
                    Err(_) => all = false,
                }
            }
            pass &= all;
            detail.push(format!("{kind:?} {profile:?} max {worst:.3}"));
        }
        // 5 mm slip along the face: 95% of seeds within 2 deg / 2 mm.
        let mut hits = 0;
        for seed in 0..SEEDS {
            let sc_cfg = noiseless(kind, seed).with_noise(NoiseConfig {
                slip_m: 0.005,
                ..NoiseConfig::none()
            });
            let sc = gen_scene(&sc_cfg).unwrap();
            if let Ok(est) = estimate(&sc.clouds, &sc.masks, &sc.ee, kind, &cfg) {
                let e = rmse_in_units(kind, theta_rmse(&est.trace, &est.joint.joint, &sc.truth).unwrap());
                hits += usize::from(e <= 2.0);
            }
        }
        let r = rate(hits, SEEDS as usize);
        pass &= r >= 0.95;
        detail.push(format!("{kind:?} slip {r:.2}"));
    }
    let ok = report("3", pass, t0.elapsed(), Duration::from_secs(30), &detail.join(", "));
    assert!(ok);
}

#[test]
fn criterion_4_keyframes() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in KINDS {
        let mut hits = 0;
        for seed in 0..SEEDS {
            let sc = gen_scene(&SceneConfig::random(kind, seed)).unwrap();
            assert_eq!(sc.config.noise.mask_jitter_px, 2);
            if let Ok(s) = MotionScoreSeries::from_masks(&sc.masks, &KeyframeConfig::default()) {
                let ok = s.start_frame.abs_diff(sc.truth.start_true) <= 3 && s.end_frame.abs_diff(sc.truth.end_true) <= 3;
                hits += usize::from(ok);
            }
        }
        let r = rate(hits, SEEDS as usize);
        pass &= r >= 0.95;
        detail.push(format!("{kind:?} {hits}/{SEEDS} within 3 frames"));
    }
    let ok = report("4", pass, t0.elapsed(), Duration::from_secs(10), &detail.join(", "));
    assert!(ok);
}

#[test]
fn criterion_5_replacement_fitting() {
    let t0 = Instant::now();
    let fc = FitConfig::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in KINDS {
        let (mut hits, mut invariant_ok) = (0, true);
        for seed in 0..SEEDS {
            for slip in [0.0, 0.01] {
                let sc_cfg = noiseless(kind, seed).with_noise(NoiseConfig {
                    slip_m: slip,
                    ..NoiseConfig::none()
                });
                let sc = gen_scene(&sc_cfg).unwrap();
                let g = random_params(sc.config.total, seed);
                assert!((0.6..=1.4).contains(&g.s));
                let asset = perturbed_asset(&sc.object, &sc.truth.object_pose, &g).unwrap();
                let pc = nocs_map(&sc.object.part_move, &asset.part_move, &sc.object.contact).unwrap();
                let traj = &sc.contact_traj;
                let window = (sc.truth.start_true, sc.truth.end_true);
                let (s1, s2) = match fit_stage1(&pc, &asset, traj, window, kind, &fc)
                    .and_then(|s1| fit_stage2(&asset, traj, &s1.params, kind, &pc, None, &fc).map(|s2| (s1, s2)))
                {
                    Ok(v) => v,
                    Err(_) => {
                        invariant_ok &= slip > 0.0;
                        continue;
                    }
                };
                let face = asset_face(&asset, &pc, fc.face_radius).unwrap();
                let linear: Vec<f64> = (0..traj.points.len()).map(|k| k as f64 / (traj.points.len() - 1) as f64).collect();
                let f2_stage1 = stage2_objective(&face, &asset, traj, &linear, &s1.params);
                invariant_ok &= s2.objective <= f2_stage1;
                if slip == 0.0 {
                    let p = s2.params;
                    let r_tol = match kind {
                        JointKind::Revolute => 2f64.to_radians(),
                        JointKind::Prismatic => 0.002,
                    };
                    let ok = ((p.s - g.s) / g.s).abs() <= 0.02
                        && (p.r_init - g.r_init).abs() <= r_tol
                        && (p.offset[0] - g.offset[0]).abs() <= 0.002
                        && (p.offset[1] - g.offset[1]).abs() <= 0.002;
                    hits += usize::from(ok);
                }
            }
        }
        let r = rate(hits, SEEDS as usize);
        pass &= r >= 0.95 && invariant_ok;
        detail.push(format!("{kind:?} {hits}/{SEEDS} recovered, stage-2 never worse: {invariant_ok}"));
    }
    let ok = report("5", pass, t0.elapsed(), Duration::from_secs(60), &detail.join(", "));
    assert!(ok);
}

#[test]
fn criterion_6_retargeting() {
    let t0 = Instant::now();
    let ranges = PoseRanges::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for kind in KINDS {
        let chain = robot_arm(kind);
        let (mut good, mut worst_p, mut worst_o) = (0, 0.0f64, 0.0f64);
        for i in 0..SEEDS as usize {
            let sc = gen_scene(&SceneConfig::random(kind, i as u64)).unwrap();
            let (s, e) = (sc.truth.start_true, sc.truth.end_true);
            let center = sc.truth.object_pose.apply(&sc.object.center);
            let out = retarget_sample(&sc.ee, s, e, &center, &ranges, &chain, 2024, i).unwrap();
            let traj = &out.trajectory;
            let start_kept = traj.poses[0] == sc.ee.poses[0];
            let (_, tau2, _) = split_trajectory(&sc.ee, s, e).unwrap();
            let mapped = transform_segment(&tau2, &out.t_ao);
            let tau2_exact = traj.poses[s..=e] == mapped.poses[..];
            let mut ik_ok = traj.len() == sc.ee.len();
            match &out.joints {
                Some(q) => {
                    for (q, pose) in q.iter().zip(&traj.poses) {
                        let (dp, dr) = fk(&chain, q).unwrap().error_to(pose);
                        worst_p = worst_p.max(dp);
                        worst_o = worst_o.max(dr.to_degrees());
                        ik_ok &= dp <= 1e-3 && dr.to_degrees() <= 0.5;
                    }
                }
                None => ik_ok = false,
            }
            good += usize::from(start_kept && tau2_exact && ik_ok);
        }
        pass &= good == SEEDS as usize;
        detail.push(format!(
            "{kind:?} {good}/{SEEDS} (worst fk-ik {:.2e} m, {worst_o:.3} deg)",
            worst_p
        ));
    }
    let ok = report("6", pass, t0.elapsed(), Duration::from_secs(30), &detail.join(", "));
    assert!(ok);
}

fn random_quat(rng: &mut ChaCha8Rng) -> UnitQuat {
    quat_from_wxyz(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
}

#[test]
fn criterion_7_property_suites() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checks = Vec::new();

    // Quadratics pass through the smoother unchanged away from the edges.
    let mut sg = true;
    for _ in 0..100 {
        let (a, b, c) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..40).map(|t| a + b * t as f64 + c * (t * t) as f64 / 40.0).collect();
        let s = savgol_smooth(&y, 5, 2).unwrap();
        sg &= (2..38).all(|t| (s[t] - y[t]).abs() <= 1e-9 * (1.0 + y[t].abs()));
    }
    checks.push(("savgol reproduction", sg));

    // Known rigid motions of a scattered cloud, rotations up to 30 deg.
    let mut icp_ok = true;
    for _ in 0..20 {
        let pts: Vec<Vec3> = (0..300)
            .map(|_| Vec3::new(rng.random_range(0.0..0.3), rng.random_range(0.0..0.2), rng.random_range(0.0..0.1)))
            .collect();
        let src = LabeledPointCloud::uniform(pts, Label::Other);
        let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let angle = rng.random_range(0.0..30f64.to_radians());
        let t = RigidTransform::new(
            UnitQuat::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle),
            Vec3::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)),
        );
        let dst = src.transformed(&t);
        let got = icp_align(&src, &dst, 100, 1e-12).unwrap();
        icp_ok &= got.approx_eq(&t, 1e-3, 1e-4);
    }
    checks.push(("icp recovery", icp_ok));

    // Slerp endpoints and constant angular speed.
    let mut sl = true;
    for _ in 0..100 {
        let (q0, q1) = (random_quat(&mut rng), random_quat(&mut rng));
        sl &= slerp(&q0, &q1, 0.0).angle_to(&q0) < 1e-9 && slerp(&q0, &q1, 1.0).angle_to(&q1) < 1e-9;
        let steps: Vec<f64> = (0..20)
            .map(|k| slerp(&q0, &q1, k as f64 / 20.0).angle_to(&slerp(&q0, &q1, (k + 1) as f64 / 20.0)))
            .collect();
        sl &= steps.iter().all(|d| (d - steps[0]).abs() < 1e-9);
    }
    checks.push(("slerp", sl));

    // Motion score: identical masks score 0, disjoint masks 1, always in [0, 1].
    let mut ms = true;
    for _ in 0..100 {
        let bits: Vec<bool> = (0..400).map(|_| rng.random_bool(0.3)).collect();
        let other: Vec<bool> = (0..400).map(|_| rng.random_bool(0.3)).collect();
        let a = MaskFrame::new(20, 20, bits.clone()).unwrap();
        let b = MaskFrame::new(20, 20, other).unwrap();
        let inv = MaskFrame::new(20, 20, bits.iter().map(|v| !v).collect()).unwrap();
        let s = motion_score(&a, &b).unwrap();
        ms &= (0.0..=1.0).contains(&s);
        ms &= motion_score(&a, &a).unwrap() == 0.0 && motion_score(&a, &inv).unwrap() == 1.0;
    }
    checks.push(("motion score", ms));

    // Bit-identical reports per seed.
    let cfg = PipelineConfig::default();
    let once = serde_json::to_string(&run_scene(JointKind::Revolute, 11, false, &cfg).unwrap()).unwrap();
    let twice = serde_json::to_string(&run_scene(JointKind::Revolute, 11, false, &cfg).unwrap()).unwrap();
    checks.push(("determinism", once == twice));

    let pass = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks.iter().map(|(n, ok)| format!("{n} {}", if *ok { "ok" } else { "broken" })).collect();
    let ok = report("7", pass, t0.elapsed(), Duration::from_secs(10), &detail.join(", "));
    assert!(ok);
}

#[test]
fn criterion_8_not_reproducible() {
    println!(
        "N/A criterion 8: policy fine-tuning success rates, splat rendering fidelity and real-robot trials \
         need trained models and hardware; the property suites above stand in"
    );
}
