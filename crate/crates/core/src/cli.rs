//! Command-line surface over scene bundles and the JSON/PLY/PGM formats.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use artigen::articulation::{estimate_joint, recover_motion, JointKind, JointModel};
use artigen::error::{Error, Result};
use artigen::geometry::{aabb, RigidTransform, Vec3};
use artigen::io::{read_asset, read_json, read_ply, write_json};
use artigen::keyframes::MotionScoreSeries;
use artigen::oracle::bundle::{read_bundle, read_bundle_masks, write_bundle, write_replacement, Bundle};
use artigen::oracle::campaign::{run_campaign, CampaignConfig};
use artigen::oracle::replace::random_params;
use artigen::oracle::{gen_scene, robot_arm, NoiseConfig, SceneConfig};
use artigen::pipeline::{adapt, contact_trajectory, detect_start_contact, estimate, motion_window, PipelineConfig};
use artigen::replacement::ReplacementParams;
use artigen::retarget::{retarget_sample, EeTrajectory, KinematicChain, PoseRanges};

#[derive(Parser, Debug)]
#[command(name = "artigen", version, about = "Articulated-object demonstration recovery and augmentation")]
pub struct Cli {
    /// JSON config: a scene config for `gen`, pose ranges for `retarget`,
    /// a pipeline config otherwise. Flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing; defaults to the current one).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic scene bundle with ground truth.
    Gen(GenArgs),
    /// Motion scores and start/end keyframes from a bundle's masks.
    Keyframes(KeyframesArgs),
    /// Contact and joint model at the start keyframe.
    Joint(JointArgs),
    /// Per-frame joint values from a joint model and the trajectory.
    Recover(RecoverArgs),
    /// Fit a replacement asset to the demonstration.
    Fit(FitArgs),
    /// Retarget the trajectory to sampled object poses and solve IK.
    Retarget(RetargetArgs),
    /// Seeded oracle campaign through the full pipeline.
    Eval(EvalArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindArg {
    Revolute,
    Prismatic,
}

impl From<KindArg> for JointKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Revolute => JointKind::Revolute,
            KindArg::Prismatic => JointKind::Prismatic,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalKind {
    Revolute,
    Prismatic,
    Both,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Randomised object dimensions and motion for the seed.
    #[arg(long)]
    pub random: bool,
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Also write `asset/`: a rescaled, shifted copy of the object with its
    /// placement parameters in `asset/g_true.json`.
    #[arg(long)]
    pub asset: bool,
    /// Like `--asset` but with unit scale and no offset.
    #[arg(long, conflicts_with = "asset")]
    pub identity_asset: bool,
}

#[derive(Args, Debug)]
pub struct KeyframesArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Also write `scores.csv` (frame, raw, smoothed, threshold, motion).
    #[arg(long)]
    pub csv: bool,
    /// Savitzky-Golay window length (odd).
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Args, Debug)]
pub struct JointArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Start frame; detected from the masks when absent.
    #[arg(long)]
    pub frame: Option<usize>,
    /// Closest point pairs averaged for the revolute centre.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub contact_radius: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub joint: PathBuf,
    /// `start,end`; detected from the masks when absent.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(usize, usize)>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Asset directory; defaults to the bundle's `asset/`.
    #[arg(long)]
    pub asset: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub stage1_only: bool,
}

#[derive(Args, Debug)]
pub struct RetargetArgs {
    /// Bundle providing the trajectory, keyframes and object centre.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Trajectory JSON, instead of a bundle.
    #[arg(long, conflicts_with = "bundle")]
    pub trajectory: Option<PathBuf>,
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(usize, usize)>,
    /// Object centre `x,y,z` the perturbation turns about.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub center: Option<Vec3>,
    /// Selects the default arm placement.
    #[arg(long, value_enum, default_value = "revolute")]
    pub kind: KindArg,
    /// Kinematic chain JSON replacing the default arm.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub num_samples: usize,
    /// Meters, `lo,hi`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub tx_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub ty_range: Option<[f64; 2]>,
    /// Degrees, `lo,hi`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub yaw_range: Option<[f64; 2]>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub kind: EvalKind,
    #[arg(long, default_value_t = 50)]
    pub num_scenes: usize,
    #[arg(long)]
    pub noiseless: bool,
}

fn parse_numbers(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_range(s: &str) -> std::result::Result<[f64; 2], String> {
    let v = parse_numbers(s, 2)?;
    Ok([v[0], v[1]])
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let v = parse_numbers(s, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?,
            b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?,
        )),
        _ => Err("expected start,end".into()),
    }
}

struct Ctx {
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: PathBuf,
}

impl Ctx {
    fn pipeline(&self) -> Result<PipelineConfig> {
        match &self.config {
            Some(p) => read_json(p),
            None => Ok(PipelineConfig::default()),
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out)?;
        Ok(&self.out)
    }
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Input("--jobs must be at least 1".into()));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Input(e.to_string()))?;
    }
    let ctx = Ctx {
        config: cli.config,
        seed: cli.seed,
        out: cli.out.unwrap_or_else(|| PathBuf::from(".")),
    };
    match cli.command {
        Command::Gen(a) => cmd_gen(&ctx, &a),
        Command::Keyframes(a) => cmd_keyframes(&ctx, &a),
        Command::Joint(a) => cmd_joint(&ctx, &a),
        Command::Recover(a) => cmd_recover(&ctx, &a),
        Command::Fit(a) => cmd_fit(&ctx, &a),
        Command::Retarget(a) => cmd_retarget(&ctx, &a),
        Command::Eval(a) => cmd_eval(&ctx, &a),
    }
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> Result<()> {
    let seed = ctx.seed.unwrap_or(0);
    let kind = a.kind.map(JointKind::from);
    let mut cfg = match &ctx.config {
        Some(p) => read_json::<SceneConfig>(p)?,
        None if a.random => SceneConfig::random(kind.unwrap_or(JointKind::Revolute), seed),
        None => SceneConfig::for_kind(kind.unwrap_or(JointKind::Revolute)),
    };
    if ctx.seed.is_some() {
        cfg.seed = seed;
    }
    if let Some(k) = kind {
        cfg.kind = k;
    }
    if let Some(f) = a.frames {
        cfg.frames = f;
    }
    if a.noiseless {
        cfg.noise = NoiseConfig::none();
    }
    let scene = gen_scene(&cfg)?;
    let dir = ctx.out_dir()?;
    write_bundle(&scene, dir)?;
    let g = if a.identity_asset {
        Some(ReplacementParams::new(1.0, cfg.total, 0.0, 0.0))
    } else if a.asset {
        Some(random_params(cfg.total, cfg.seed))
    } else {
        None
    };
    if let Some(g) = &g {
        write_replacement(&scene, g, &dir.join("asset"))?;
    }
    print(&json!({
        "out": dir,
        "frames": scene.masks.len(),
        "start_true": scene.truth.start_true,
        "end_true": scene.truth.end_true,
        "g_true": g,
    }))
}

fn keyframes_of(bundle_masks: &artigen::keyframes::MaskSequence, cfg: &PipelineConfig) -> Result<MotionScoreSeries> {
    MotionScoreSeries::from_masks(bundle_masks, &cfg.keyframes)
}

fn cmd_keyframes(ctx: &Ctx, a: &KeyframesArgs) -> Result<()> {
    let mut cfg = ctx.pipeline()?;
    if let Some(w) = a.window {
        cfg.keyframes.window = w;
    }
    if let Some(o) = a.order {
        cfg.keyframes.order = o;
    }
    let masks = read_bundle_masks(&a.bundle)?;
    let series = keyframes_of(&masks, &cfg)?;
    let dir = ctx.out_dir()?;
    write_json(&dir.join("keyframes.json"), &series)?;
    if a.csv {
        fs::write(dir.join("scores.csv"), series.to_csv())?;
    }
    print(&json!({"start_frame": series.start_frame, "end_frame": series.end_frame}))
}

fn check_lengths(b: &Bundle) -> Result<()> {
    if b.clouds.len() != b.masks.len() || b.ee.len() != b.masks.len() {
        return Err(Error::FrameMismatch(format!(
            "{} clouds, {} mask frames and {} trajectory poses",
            b.clouds.len(),
            b.masks.len(),
            b.ee.len()
        )));
    }
    Ok(())
}

fn detected_window(b: &Bundle, cfg: &PipelineConfig) -> Result<(usize, usize)> {
    Ok(motion_window(&keyframes_of(&b.masks, cfg)?, b.masks.len()))
}

fn cmd_joint(ctx: &Ctx, a: &JointArgs) -> Result<()> {
    let mut cfg = ctx.pipeline()?;
    let e = &mut cfg.edges;
    e.k = a.k.unwrap_or(e.k);
    e.lambda1 = a.lambda1.unwrap_or(e.lambda1);
    e.lambda2 = a.lambda2.unwrap_or(e.lambda2);
    e.lambda3 = a.lambda3.unwrap_or(e.lambda3);
    cfg.contact_radius = a.contact_radius.unwrap_or(cfg.contact_radius);
    let b = read_bundle(&a.bundle)?;
    check_lengths(&b)?;
    let frame = match a.frame {
        Some(f) if f < b.clouds.len() => f,
        Some(f) => return Err(Error::Input(format!("frame {f} is past the last frame {}", b.clouds.len() - 1))),
        None => detected_window(&b, &cfg)?.0,
    };
    let cloud = &b.clouds[frame];
    let contact = detect_start_contact(cloud, &b.ee, frame, cfg.contact_radius)?;
    let est = estimate_joint(&cloud.movable(), &cloud.static_part(), &contact, a.kind.into(), &cfg.edges)?;
    let dir = ctx.out_dir()?;
    write_json(&dir.join("joint.json"), &est.joint)?;
    write_json(&dir.join("contact.json"), &contact)?;
    print(&json!({"frame": frame, "joint": est.joint}))
}

fn cmd_recover(ctx: &Ctx, a: &RecoverArgs) -> Result<()> {
    let cfg = ctx.pipeline()?;
    let b = read_bundle(&a.bundle)?;
    check_lengths(&b)?;
    let joint: JointModel = read_json(&a.joint)?;
    let (start, end) = match a.window {
        Some(w) => w,
        None => detected_window(&b, &cfg)?,
    };
    if start >= b.clouds.len() {
        return Err(Error::FrameMismatch(format!("start frame {start} is past the sequence")));
    }
    let cloud = &b.clouds[start];
    let contact = detect_start_contact(cloud, &b.ee, start, cfg.contact_radius)?;
    let traj = contact_trajectory(&b.ee, &contact.pc_robot, start, end)?;
    let trace = recover_motion(&cloud.movable(), &joint, &contact, &traj, &cfg.recover)?;
    let dir = ctx.out_dir()?;
    write_json(&dir.join("trace.json"), &trace.entries())?;
    print(&json!({"start_frame": start, "end_frame": end, "total": trace.total()}))
}

fn cmd_fit(ctx: &Ctx, a: &FitArgs) -> Result<()> {
    let cfg = ctx.pipeline()?;
    let b = read_bundle(&a.bundle)?;
    let pose = b.object_pose.ok_or_else(|| {
        Error::Input(format!("{} has no object_pose.json", a.bundle.display()))
    })?;
    let asset_dir = a.asset.clone().unwrap_or_else(|| a.bundle.join("asset"));
    let asset = read_asset(&asset_dir, Some(pose))?;
    let kind = JointKind::from(a.kind);
    let est = estimate(&b.clouds, &b.masks, &b.ee, kind, &cfg)?;
    let fit = adapt(&est, &b.clouds, &pose, &asset, a.stage1_only, &cfg)?;
    let dir = ctx.out_dir()?;
    write_json(&dir.join("params.json"), &fit.stage2.params)?;
    let report = json!({
        "window": est.window,
        "pc_map": [fit.pc_map.x, fit.pc_map.y, fit.pc_map.z],
        "stage1": fit.stage1,
        "stage2": if a.stage1_only { None } else { Some(fit.stage2) },
        "replay": fit.replay,
    });
    write_json(&dir.join("fit_report.json"), &report)?;
    print(&fit.stage2.params)
}

fn object_center(bundle_dir: &Path, b: &Bundle) -> Result<Option<Vec3>> {
    let path = bundle_dir.join("object.ply");
    match (path.exists(), b.object_pose) {
        (true, Some(pose)) => {
            let obj = read_ply(&path)?;
            let (lo, hi) = aabb(&obj.points).ok_or_else(|| Error::DegenerateCloud("object.ply is empty".into()))?;
            Ok(Some(pose.apply(&(0.5 * (lo + hi)))))
        }
        _ => Ok(None),
    }
}

#[derive(Serialize)]
struct SampleReport {
    index: usize,
    seed: u64,
    t_ao: RigidTransform,
    reachable: bool,
    failure: Option<String>,
}

fn cmd_retarget(ctx: &Ctx, a: &RetargetArgs) -> Result<()> {
    let mut ranges: PoseRanges = match &ctx.config {
        Some(p) => read_json(p)?,
        None => PoseRanges::default(),
    };
    ranges.tx_range = a.tx_range.unwrap_or(ranges.tx_range);
    ranges.ty_range = a.ty_range.unwrap_or(ranges.ty_range);
    if let Some(y) = a.yaw_range {
        ranges.yaw_range = [y[0].to_radians(), y[1].to_radians()];
    }
    ranges.validate()?;
    let (tau, window, center): (EeTrajectory, Option<(usize, usize)>, Option<Vec3>) = match (&a.bundle, &a.trajectory) {
        (Some(dir), _) => {
            let b = read_bundle(dir)?;
            let w = match a.window {
                Some(w) => w,
                None => detected_window(&b, &PipelineConfig::default())?,
            };
            let c = object_center(dir, &b)?;
            (b.ee, Some(w), c)
        }
        (None, Some(p)) => (read_json(p)?, a.window, None),
        (None, None) => return Err(Error::Input("retarget needs --bundle or --trajectory".into())),
    };
    let (start, end) = window.ok_or_else(|| Error::Input("--window start,end is required with --trajectory".into()))?;
    let center = a
        .center
        .or(center)
        .ok_or_else(|| Error::Input("--center x,y,z is required without a bundle object".into()))?;
    let chain: KinematicChain = match &a.chain {
        Some(p) => {
            let c: KinematicChain = read_json(p)?;
            c.validate()?;
            c
        }
        None => robot_arm(a.kind.into()),
    };
    let master = ctx.seed.unwrap_or(0);
    let run = |i: usize| retarget_sample(&tau, start, end, &center, &ranges, &chain, master, i);
    #[cfg(feature = "parallel")]
    let samples = {
        use rayon::prelude::*;
        (0..a.num_samples).into_par_iter().map(run).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let samples = (0..a.num_samples).map(run).collect::<Result<Vec<_>>>()?;
    let dir = ctx.out_dir()?;
    let mut reports = Vec::with_capacity(samples.len());
    for s in &samples {
        write_json(&dir.join(format!("traj_{:05}.json", s.index)), &s.trajectory)?;
        if let Some(q) = &s.joints {
            write_json(&dir.join(format!("joints_{:05}.json", s.index)), q)?;
        }
        reports.push(SampleReport {
            index: s.index,
            seed: s.seed,
            t_ao: s.t_ao,
            reachable: s.joints.is_some(),
            failure: s.failure.clone(),
        });
    }
    let reachable = reports.iter().filter(|r| r.reachable).count();
    write_json(
        &dir.join("retarget_report.json"),
        &json!({"window": [start, end], "ranges": ranges, "samples": reports}),
    )?;
    print(&json!({"samples": samples.len(), "reachable": reachable}))
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    let cfg = ctx.pipeline()?;
    let kinds = match a.kind {
        EvalKind::Revolute => vec![JointKind::Revolute],
        EvalKind::Prismatic => vec![JointKind::Prismatic],
        EvalKind::Both => vec![JointKind::Revolute, JointKind::Prismatic],
    };
    let mut summaries = Vec::new();
    for kind in kinds {
        let cc = CampaignConfig {
            kind,
            scenes: a.num_scenes,
            first_seed: ctx.seed.unwrap_or(0),
            noiseless: a.noiseless,
        };
        summaries.push(run_campaign(&cc, &cfg)?);
    }
    let dir = ctx.out_dir()?;
    write_json(&dir.join("eval_report.json"), &summaries)?;
    let brief: Vec<_> = summaries
        .iter()
        .map(|s| json!({"kind": s.kind, "scenes": s.scenes, "success_rate": s.replay.success_rate, "failures": s.failures}))
        .collect();
    print(&brief)
}
