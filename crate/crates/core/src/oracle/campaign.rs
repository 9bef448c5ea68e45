//! Seeded campaigns: generate oracle scenes, run the full pipeline with a
//! replacement fit and replay on each, and aggregate the scores.

use serde::{Deserialize, Serialize};

use super::replace::{perturbed_asset, random_params};
use super::{evaluate, gen_scene, Estimate, EvalReport, NoiseConfig, SceneConfig};
use crate::articulation::JointKind;
use crate::error::{Error, Result};
use crate::pipeline::{adapt, estimate, PipelineConfig};
use crate::replacement::{CampaignEntry, CampaignReport, ReplacementParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub kind: JointKind,
    pub scenes: usize,
    pub first_seed: u64,
    pub noiseless: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneOutcome {
    pub seed: u64,
    pub diagonal: f64,
    pub report: Option<EvalReport>,
    pub g_true: ReplacementParams,
    pub g_fit: Option<ReplacementParams>,
    pub replay_max_error: Option<f64>,
    /// Pipeline failure, if any stage errored.
    pub failure: Option<String>,
}

impl SceneOutcome {
    pub fn replay_success(&self) -> bool {
        self.report.as_ref().and_then(|r| r.replay_success).unwrap_or(false)
    }
}

pub fn scene_config(kind: JointKind, seed: u64, noiseless: bool) -> SceneConfig {
    let cfg = SceneConfig::random(kind, seed);
    if noiseless {
        cfg.with_noise(NoiseConfig::none())
    } else {
        cfg
    }
}

/// One scene end to end. Pipeline errors are recorded, not propagated;
/// only an invalid scene configuration is an error.
pub fn run_scene(kind: JointKind, seed: u64, noiseless: bool, cfg: &PipelineConfig) -> Result<SceneOutcome> {
    let scene = gen_scene(&scene_config(kind, seed, noiseless))?;
    let g_true = random_params(scene.config.total, seed);
    let mut out = SceneOutcome {
        seed,
        diagonal: scene.object.diagonal(),
        report: None,
        g_true,
        g_fit: None,
        replay_max_error: None,
        failure: None,
    };
    let asset = perturbed_asset(&scene.object, &scene.truth.object_pose, &g_true)?;
    let attempt = estimate(&scene.clouds, &scene.masks, &scene.ee, kind, cfg).map(|est| {
        let fit = adapt(&est, &scene.clouds, &scene.truth.object_pose, &asset, false, cfg);
        (est, fit)
    });
    let (est, fit) = match attempt {
        Ok(v) => v,
        Err(e) => {
            out.failure = Some(e.to_string());
            return Ok(out);
        }
    };
    let mut estimate = Estimate {
        joint: Some(est.joint.joint),
        trace: Some(est.trace.clone()),
        keyframes: Some(est.window),
        replay_success: Some(false),
    };
    match fit {
        Ok(a) => {
            estimate.replay_success = Some(a.replay.success);
            out.g_fit = Some(a.stage2.params);
            out.replay_max_error = Some(a.replay.max_error);
        }
        Err(e) => out.failure = Some(e.to_string()),
    }
    out.report = Some(evaluate(&estimate, &scene.truth)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub kind: JointKind,
    pub scenes: usize,
    pub max_direction_err_deg: f64,
    /// Largest centre-to-axis distance as a fraction of the object diagonal.
    pub max_center_frac_diag: f64,
    pub max_theta_rmse: f64,
    pub max_keyframe_offset: usize,
    pub failures: usize,
    pub replay: CampaignReport,
    pub outcomes: Vec<SceneOutcome>,
}

pub fn run_campaign(cc: &CampaignConfig, cfg: &PipelineConfig) -> Result<CampaignSummary> {
    if cc.scenes == 0 {
        return Err(Error::Input("a campaign needs at least one scene".into()));
    }
    let seeds: Vec<u64> = (0..cc.scenes as u64).map(|i| cc.first_seed + i).collect();
    let run = |&seed: &u64| run_scene(cc.kind, seed, cc.noiseless, cfg);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<SceneOutcome> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<SceneOutcome> = seeds.iter().map(run).collect::<Result<_>>()?;
    Ok(summarize(cc.kind, outcomes))
}

pub fn summarize(kind: JointKind, outcomes: Vec<SceneOutcome>) -> CampaignSummary {
    let reports = || outcomes.iter().filter_map(|o| o.report.as_ref().map(|r| (o, r)));
    let fmax = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let entries = outcomes
        .iter()
        .map(|o| CampaignEntry {
            seed: o.seed,
            success: o.replay_success(),
            max_error: o.replay_max_error,
        })
        .collect();
    CampaignSummary {
        kind,
        scenes: outcomes.len(),
        max_direction_err_deg: fmax(reports().filter_map(|(_, r)| r.direction_err_deg).collect()),
        max_center_frac_diag: fmax(
            reports()
                .filter_map(|(o, r)| r.center_axis_dist_m.map(|d| d / o.diagonal))
                .collect(),
        ),
        max_theta_rmse: fmax(reports().filter_map(|(_, r)| r.theta_rmse).collect()),
        max_keyframe_offset: reports()
            .filter_map(|(_, r)| r.keyframe_offsets.map(|(a, b)| a.max(b)))
            .max()
            .unwrap_or(0),
        failures: outcomes.iter().filter(|o| o.failure.is_some()).count(),
        replay: CampaignReport::from_entries(entries),
        outcomes,
    }
}
