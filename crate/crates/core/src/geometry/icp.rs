use nalgebra::{Matrix3, Rotation3};

use super::cloud::{centroid, LabeledPointCloud};
use super::grid::NearestIndex;
use super::obb::check_volumetric;
use super::transform::{RigidTransform, Vec3};
use crate::error::{Error, Result};

/// Outcome of one ICP run.
#[derive(Debug, Clone, Copy)]
pub struct IcpResult {
    pub transform: RigidTransform,
    pub rms: f64,
    pub mean_distance: f64,
    pub iterations: usize,
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]` (Kabsch).
pub fn best_fit_transform(src: &[Vec3], dst: &[Vec3]) -> RigidTransform {
    let cs = centroid(src).unwrap_or_else(Vec3::zeros);
    let cd = centroid(dst).unwrap_or_else(Vec3::zeros);
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = v_t.transpose() * u.transpose();
    if r.determinant() < 0.0 {
        let mut v = v_t.transpose();
        let c = -v.column(2).clone_owned();
        v.set_column(2, &c);
        r = v * u.transpose();
    }
    let rot = Rotation3::from_matrix_unchecked(r);
    RigidTransform::from_matrix(&rot, cd - rot * cs)
}

fn run(
    src: &[Vec3],
    index: &NearestIndex,
    target: &[Vec3],
    init: RigidTransform,
    max_iters: usize,
    tol: f64,
) -> IcpResult {
    let mut t = init;
    let mut prev_rms = f64::INFINITY;
    let mut moved: Vec<Vec3> = src.iter().map(|p| t.apply(p)).collect();
    let mut iterations = 0;
    let mut matched = Vec::with_capacity(src.len());
    for it in 0..max_iters {
        iterations = it + 1;
        matched.clear();
        let mut sq = 0.0;
        for p in &moved {
            let (j, d) = index.nearest(p).expect("target is nonempty");
            matched.push(target[j]);
            sq += d * d;
        }
        let rms = (sq / moved.len() as f64).sqrt();
        let step = best_fit_transform(&moved, &matched);
        t = step.compose(&t);
        moved.iter_mut().zip(src).for_each(|(m, s)| *m = t.apply(s));
        if prev_rms - rms < tol {
            break;
        }
        prev_rms = rms;
    }
    let (mut sq, mut sum) = (0.0, 0.0);
    for p in &moved {
        let d = index.nearest(p).expect("target is nonempty").1;
        sq += d * d;
        sum += d;
    }
    let n = moved.len() as f64;
    IcpResult {
        transform: t,
        rms: (sq / n).sqrt(),
        mean_distance: sum / n,
        iterations,
    }
}

/// Point-to-point ICP. Runs from the identity and again from the
/// centroid-aligning translation, keeping whichever ends closer.
pub fn icp(
    source: &LabeledPointCloud,
    target: &LabeledPointCloud,
    max_iters: usize,
    tol: f64,
) -> Result<IcpResult> {
    check_volumetric(&source.points)?;
    check_volumetric(&target.points)?;
    if max_iters == 0 {
        return Err(Error::Input("icp max_iters must be positive".into()));
    }
    let index = NearestIndex::new(&target.points);
    let a = run(&source.points, &index, &target.points, RigidTransform::identity(), max_iters, tol);
    let shift = target.centroid().unwrap() - source.centroid().unwrap();
    let b = run(
        &source.points,
        &index,
        &target.points,
        RigidTransform::from_translation(shift),
        max_iters,
        tol,
    );
    Ok(if b.mean_distance < a.mean_distance { b } else { a })
}

pub fn icp_align(
    source: &LabeledPointCloud,
    target: &LabeledPointCloud,
    max_iters: usize,
    tol: f64,
) -> Result<RigidTransform> {
    icp(source, target, max_iters, tol).map(|r| r.transform)
}
