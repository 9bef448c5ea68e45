//! File formats: ASCII PLY point clouds with a per-point label, PGM masks,
//! and JSON helpers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::articulation::JointModel;
use crate::error::{Error, Result};
use crate::geometry::{Label, LabeledPointCloud, RigidTransform, Vec3};
use crate::keyframes::{MaskFrame, MaskSequence};
use crate::replacement::ReplacementAsset;

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData => parse_err(path, "file is not valid UTF-8"),
        _ => Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))),
    })
}

pub fn ply_string(cloud: &LabeledPointCloud) -> String {
    let mut s = String::with_capacity(64 + cloud.len() * 40);
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property double x\nproperty double y\nproperty double z\nproperty int label\nend_header\n");
    for (p, l) in cloud.points.iter().zip(&cloud.labels) {
        let _ = writeln!(s, "{} {} {} {}", p.x, p.y, p.z, l.code());
    }
    s
}

pub fn write_ply(path: &Path, cloud: &LabeledPointCloud) -> Result<()> {
    fs::write(path, ply_string(cloud))?;
    Ok(())
}

pub fn parse_ply(text: &str, path: &Path) -> Result<LabeledPointCloud> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(parse_err(path, "missing 'ply' magic"));
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    let mut ascii = false;
    loop {
        let line = lines
            .next()
            .ok_or_else(|| parse_err(path, "header has no end_header"))?
            .trim();
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", fmt, _] => ascii = *fmt == "ascii",
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, n] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    count = Some(n.parse().map_err(|_| parse_err(path, "bad vertex count"))?);
                }
            }
            ["property", "list", ..] => {}
            ["property", _ty, name] if in_vertex => props.push((*name).to_string()),
            ["property", ..] => {}
            _ => return Err(parse_err(path, format!("unexpected header line {line:?}"))),
        }
    }
    if !ascii {
        return Err(parse_err(path, "only ASCII PLY is supported"));
    }
    let count = count.ok_or_else(|| parse_err(path, "no vertex element"))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(parse_err(path, "vertex needs x, y and z properties")),
    };
    let il = col("label");
    let mut points = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let line = lines
            .next()
            .ok_or_else(|| parse_err(path, format!("expected {count} vertices, found {i}")))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(path, format!("bad number on vertex {i}")))?;
        if vals.len() < props.len() {
            return Err(parse_err(path, format!("vertex {i} has too few values")));
        }
        points.push(Vec3::new(vals[ix], vals[iy], vals[iz]));
        labels.push(il.map_or(Label::Other, |k| Label::from_code(vals[k] as i64)));
    }
    LabeledPointCloud::new(points, labels).map_err(|e| parse_err(path, e.to_string()))
}

pub fn read_ply(path: &Path) -> Result<LabeledPointCloud> {
    parse_ply(&read_text(path)?, path)
}

/// Binary PGM with 255 for set pixels.
pub fn pgm_bytes(mask: &MaskFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    out.extend(mask.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

pub fn write_pgm(path: &Path, mask: &MaskFrame) -> Result<()> {
    fs::write(path, pgm_bytes(mask))?;
    Ok(())
}

/// Header tokens of a PNM file, skipping `#` comments. Returns the tokens and
/// the offset just past the single whitespace byte that ends the header.
fn pnm_header(bytes: &[u8], wanted: usize) -> Option<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < wanted {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return None;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    Some((tokens, i + 1))
}

pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<MaskFrame> {
    let (tok, offset) = pnm_header(bytes, 4).ok_or_else(|| parse_err(path, "truncated PGM header"))?;
    let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, format!("bad header value {s:?}")));
    let (w, h, maxval) = (num(&tok[1])?, num(&tok[2])?, num(&tok[3])?);
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(parse_err(path, "bad PGM dimensions or maxval"));
    }
    let bits: Vec<bool> = match tok[0].as_str() {
        "P5" => {
            let bpp = if maxval < 256 { 1 } else { 2 };
            let data = bytes
                .get(offset..offset + w * h * bpp)
                .ok_or_else(|| parse_err(path, "PGM pixel data truncated"))?;
            data.chunks(bpp).map(|c| c.iter().any(|&b| b != 0)).collect()
        }
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[offset.min(bytes.len())..]);
            let vals: Vec<usize> = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(path, "bad ASCII pixel value"))?;
            if vals.len() < w * h {
                return Err(parse_err(path, "PGM pixel data truncated"));
            }
            vals[..w * h].iter().map(|&v| v != 0).collect()
        }
        other => return Err(parse_err(path, format!("unsupported magic {other:?}"))),
    };
    MaskFrame::new(w, h, bits)
}

pub fn read_pgm(path: &Path) -> Result<MaskFrame> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_pgm(&bytes, path)
}

pub fn movable_mask_path(dir: &Path, frame: usize) -> PathBuf {
    dir.join(format!("movable_{frame:05}.pgm"))
}

pub fn robot_mask_path(dir: &Path, frame: usize) -> PathBuf {
    dir.join(format!("robot_{frame:05}.pgm"))
}

pub fn cloud_path(dir: &Path, frame: usize) -> PathBuf {
    dir.join(format!("frame_{frame:05}.ply"))
}

/// Frame indices of files named `{prefix}NNNNN.{ext}` in `dir`, sorted, and
/// required to run 0, 1, 2, ... without gaps.
pub fn frame_indices(dir: &Path, prefix: &str, ext: &str) -> Result<Vec<usize>> {
    let mut idx = Vec::new();
    for entry in fs::read_dir(dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?
    {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(rest) = name.strip_prefix(prefix).and_then(|r| r.strip_suffix(ext)) {
            if let Ok(i) = rest.parse::<usize>() {
                idx.push(i);
            }
        }
    }
    idx.sort_unstable();
    if idx.is_empty() {
        return Err(Error::Input(format!(
            "no {prefix}*{ext} files in {}",
            dir.display()
        )));
    }
    if idx.iter().enumerate().any(|(k, &i)| k != i) {
        return Err(Error::FrameMismatch(format!(
            "{prefix}*{ext} frames in {} are not numbered 0..{}",
            dir.display(),
            idx.len()
        )));
    }
    Ok(idx)
}

pub fn write_masks(dir: &Path, seq: &MaskSequence) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (t, (m, r)) in seq.frames.iter().enumerate() {
        write_pgm(&movable_mask_path(dir, t), m)?;
        write_pgm(&robot_mask_path(dir, t), r)?;
    }
    Ok(())
}

pub fn read_masks(dir: &Path) -> Result<MaskSequence> {
    let idx = frame_indices(dir, "movable_", ".pgm")?;
    let frames = idx
        .iter()
        .map(|&t| Ok((read_pgm(&movable_mask_path(dir, t))?, read_pgm(&robot_mask_path(dir, t))?)))
        .collect::<Result<Vec<_>>>()?;
    MaskSequence::new(frames)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_clouds(dir: &Path) -> Result<Vec<LabeledPointCloud>> {
    frame_indices(dir, "frame_", ".ply")?
        .iter()
        .map(|&t| read_ply(&cloud_path(dir, t)))
        .collect()
}

/// Replacement asset directory: `parts.ply` (labels 0/1, asset frame),
/// `joint.json` (asset frame) and `base_pose.json` (asset to scene).
pub fn write_asset(dir: &Path, asset: &ReplacementAsset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut parts = asset.part_static.clone();
    parts.extend(&asset.part_move);
    write_ply(&dir.join("parts.ply"), &parts)?;
    write_json(&dir.join("joint.json"), &asset.joint)?;
    write_json(&dir.join("base_pose.json"), &asset.base_pose)
}

/// Reads an asset directory; a missing `base_pose.json` falls back to `base_pose`.
pub fn read_asset(dir: &Path, base_pose: Option<RigidTransform>) -> Result<ReplacementAsset> {
    let parts = read_ply(&dir.join("parts.ply"))?;
    let joint: JointModel = read_json(&dir.join("joint.json"))?;
    let pose_path = dir.join("base_pose.json");
    let base = match (pose_path.exists(), base_pose) {
        (true, _) => read_json(&pose_path)?,
        (false, Some(p)) => p,
        (false, None) => {
            return Err(Error::Input(format!(
                "{} has no base_pose.json and no object pose was given",
                dir.display()
            )))
        }
    };
    ReplacementAsset::new(parts.movable(), parts.static_part(), joint, base)
}
