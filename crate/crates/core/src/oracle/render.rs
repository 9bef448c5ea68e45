use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::obb::convex_hull;
use crate::geometry::{RigidTransform, Vec3};
use crate::keyframes::MaskFrame;

/// Orthographic camera looking along `view`, with image up following world z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub center: Vec3,
    pub view: Vec3,
    /// Pixels per meter.
    pub scale: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    fn basis(&self) -> (Vec3, Vec3) {
        let v = self.view.normalize();
        let mut up = Vec3::z() - Vec3::z().dot(&v) * v;
        if up.norm() < 1e-6 {
            up = Vec3::y() - Vec3::y().dot(&v) * v;
        }
        let up = up.normalize();
        (v.cross(&up).normalize(), up)
    }

    /// Continuous pixel coordinates of `p`, with the centre of the image at
    /// `(width / 2, height / 2)`.
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        let (right, up) = self.basis();
        let d = p - self.center;
        (
            d.dot(&right) * self.scale + self.width as f64 / 2.0,
            -d.dot(&up) * self.scale + self.height as f64 / 2.0,
        )
    }

    pub fn transformed(&self, t: &RigidTransform) -> Camera {
        Camera {
            center: t.apply(&self.center),
            view: t.apply_vector(&self.view),
            ..*self
        }
    }
}

/// Pixels hit by at least one point, dilated by one pixel.
pub fn render_mask(points: &[Vec3], camera: &Camera) -> MaskFrame {
    let mut hits = MaskFrame::empty(camera.width, camera.height);
    for p in points {
        let (u, v) = camera.project(p);
        let (x, y) = (u.floor(), v.floor());
        if x >= 0.0 && y >= 0.0 && (x as usize) < camera.width && (y as usize) < camera.height {
            hits.set(x as usize, y as usize, true);
        }
    }
    dilate(&hits, 1)
}

/// Pixels whose centres lie inside the projected convex hull of `points`;
/// for a convex solid this is its silhouette.
pub fn render_convex(points: &[Vec3], camera: &Camera) -> MaskFrame {
    let mut mask = MaskFrame::empty(camera.width, camera.height);
    let proj: Vec<[f64; 2]> = points.iter().map(|p| camera.project(p).into()).collect();
    let hull = convex_hull(&proj);
    if hull.len() < 3 {
        return mask;
    }
    let inside = |q: [f64; 2]| {
        (0..hull.len()).all(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= 0.0
        })
    };
    fill_where(&mut mask, &hull, 0.0, inside);
    mask
}

/// Adds the pixels within `radius` meters of the projected segment `a`-`b`,
/// the outline of a cylinder with hemispherical caps.
pub fn render_capsule(mask: &mut MaskFrame, a: &Vec3, b: &Vec3, radius: f64, camera: &Camera) {
    let pa: [f64; 2] = camera.project(a).into();
    let pb: [f64; 2] = camera.project(b).into();
    let r = radius * camera.scale;
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let near = |q: [f64; 2]| {
        let s = if len2 > 0.0 {
            (((q[0] - pa[0]) * d[0] + (q[1] - pa[1]) * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (dx, dy) = (q[0] - pa[0] - s * d[0], q[1] - pa[1] - s * d[1]);
        dx * dx + dy * dy <= r * r
    };
    fill_where(mask, &[pa, pb], r, near);
}

fn fill_where(mask: &mut MaskFrame, extent: &[[f64; 2]], pad: f64, test: impl Fn([f64; 2]) -> bool) {
    let lo = |i: usize| extent.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min) - pad;
    let hi = |i: usize| extent.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max) + pad;
    let x0 = lo(0).floor().max(0.0) as usize;
    let y0 = lo(1).floor().max(0.0) as usize;
    let x1 = (hi(0).ceil().max(0.0) as usize).min(mask.width);
    let y1 = (hi(1).ceil().max(0.0) as usize).min(mask.height);
    for y in y0..y1 {
        for x in x0..x1 {
            if test([x as f64 + 0.5, y as f64 + 0.5]) {
                mask.set(x, y, true);
            }
        }
    }
}

fn window_filter(mask: &MaskFrame, r: usize, target: bool) -> MaskFrame {
    if r == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width, mask.height);
    let pass = |src: &[bool], horizontal: bool| -> Vec<bool> {
        let mut out = vec![!target; w * h];
        for y in 0..h {
            for x in 0..w {
                let hit = if horizontal {
                    let lo = x.saturating_sub(r);
                    let hi = (x + r).min(w - 1);
                    (lo..=hi).any(|xx| src[y * w + xx] == target)
                } else {
                    let lo = y.saturating_sub(r);
                    let hi = (y + r).min(h - 1);
                    (lo..=hi).any(|yy| src[yy * w + x] == target)
                };
                if hit {
                    out[y * w + x] = target;
                }
            }
        }
        out
    };
    let bits = pass(&pass(&mask.bits, true), false);
    MaskFrame {
        width: w,
        height: h,
        bits,
    }
}

/// Square-window dilation of radius `r`.
pub fn dilate(mask: &MaskFrame, r: usize) -> MaskFrame {
    window_filter(mask, r, true)
}

/// Square-window erosion of radius `r`; pixels beyond the border count as unset.
pub fn erode(mask: &MaskFrame, r: usize) -> MaskFrame {
    let mut padded = window_filter(mask, r, false);
    let (w, h) = (mask.width, mask.height);
    for y in 0..h {
        for x in 0..w {
            if x < r || y < r || x + r >= w || y + r >= h {
                padded.bits[y * w + x] = false;
            }
        }
    }
    padded
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JitterModel {
    /// Every pixel within `jitter_px` (Euclidean) of the boundary is redrawn at random.
    #[default]
    Boundary,
    /// The whole mask is eroded or dilated by a random radius up to `jitter_px`.
    Morphological,
}

/// Inclusive pixel bounds of the set pixels.
fn set_bounds(mask: &MaskFrame) -> Option<((usize, usize), (usize, usize))> {
    let w = mask.width;
    let mut bounds: Option<((usize, usize), (usize, usize))> = None;
    for (i, _) in mask.bits.iter().enumerate().filter(|(_, b)| **b) {
        let (x, y) = (i % w, i / w);
        bounds = Some(match bounds {
            None => ((x, y), (x, y)),
            Some((lo, hi)) => ((lo.0.min(x), lo.1.min(y)), (hi.0.max(x), hi.1.max(y))),
        });
    }
    bounds
}

/// Pixels with a pixel of the opposite value within Euclidean distance `r`,
/// i.e. whose disk holds some but not all set pixels. A round window keeps
/// the band width independent of edge orientation.
fn boundary_band(mask: &MaskFrame, r: usize) -> Vec<bool> {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let ri = r as i64;
    let mut band = vec![false; mask.bits.len()];
    let Some((lo, hi)) = set_bounds(mask) else {
        return band;
    };
    let half: Vec<i64> = (-ri..=ri).map(|dy| ((ri * ri - dy * dy) as f64).sqrt().floor() as i64).collect();
    let disk: i64 = half.iter().map(|hw| 2 * hw + 1).sum();
    let (x0, x1) = ((lo.0 as i64 - ri).max(0), (hi.0 as i64 + ri).min(w - 1));
    let (y0, y1) = ((lo.1 as i64 - ri).max(0), (hi.1 as i64 + ri).min(h - 1));
    // Row prefix counts over [x0, x1]; every set pixel lies inside that span.
    let span = (x1 - x0 + 1) as usize;
    let prefix: Vec<Vec<i64>> = (y0..=y1)
        .map(|y| {
            let mut row = vec![0; span + 1];
            for i in 0..span {
                row[i + 1] = row[i] + i64::from(mask.bits[(y * w + x0) as usize + i]);
            }
            row
        })
        .collect();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let mut count = 0;
            for (k, hw) in half.iter().enumerate() {
                let yy = y + k as i64 - ri;
                if yy < y0 || yy > y1 {
                    continue;
                }
                let row = &prefix[(yy - y0) as usize];
                let a = (x - hw - x0).clamp(0, span as i64) as usize;
                let b = (x + hw + 1 - x0).clamp(0, span as i64) as usize;
                count += row[b] - row[a];
            }
            band[(y * w + x) as usize] = count > 0 && count < disk;
        }
    }
    band
}

pub fn jitter_mask(mask: &MaskFrame, jitter_px: usize, model: JitterModel, rng: &mut impl Rng) -> MaskFrame {
    if jitter_px == 0 {
        return mask.clone();
    }
    match model {
        JitterModel::Boundary => {
            let band = boundary_band(mask, jitter_px);
            let mut out = mask.clone();
            for (bit, &edge) in out.bits.iter_mut().zip(&band) {
                if edge {
                    *bit = rng.random_bool(0.5);
                }
            }
            out
        }
        JitterModel::Morphological => {
            let r = rng.random_range(-(jitter_px as i64)..=jitter_px as i64);
            match r {
                0 => mask.clone(),
                r if r > 0 => dilate(mask, r as usize),
                r => erode(mask, (-r) as usize),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn cam(w: usize, h: usize, scale: f64) -> Camera {
        Camera {
            center: Vec3::zeros(),
            view: -Vec3::z(),
            scale,
            width: w,
            height: h,
        }
    }

    #[test]
    fn single_point_at_centre() {
        let m = render_mask(&[Vec3::new(1e-4, -1e-4, 0.0)], &cam(21, 21, 100.0));
        assert_eq!(m.count(), 9);
        assert!(m.get(10, 10) && m.get(9, 9) && m.get(11, 11));
        assert!(!m.get(0, 0));
    }

    #[test]
    fn unit_square_face() {
        let mut pts = Vec::new();
        for i in 0..=200 {
            for j in 0..=200 {
                pts.push(Vec3::new(-0.5 + i as f64 / 200.0, -0.5 + j as f64 / 200.0, 0.0));
            }
        }
        let m = render_mask(&pts, &cam(200, 200, 100.0));
        let cols: Vec<usize> = (0..200).filter(|&x| (0..200).any(|y| m.get(x, y))).collect();
        let rows: Vec<usize> = (0..200).filter(|&y| (0..200).any(|x| m.get(x, y))).collect();
        assert!((cols.len() as i64 - 100).abs() <= 4);
        assert!((rows.len() as i64 - 100).abs() <= 4);
        assert!((*cols.first().unwrap() as i64 - 50).abs() <= 2);
    }

    #[test]
    fn erode_dilate_square() {
        let mut m = MaskFrame::empty(10, 10);
        for y in 3..7 {
            for x in 3..7 {
                m.set(x, y, true);
            }
        }
        assert_eq!(dilate(&m, 1).count(), 36);
        assert_eq!(erode(&m, 1).count(), 4);
    }

    #[test]
    fn boundary_jitter_keeps_interior() {
        let mut m = MaskFrame::empty(30, 30);
        for y in 5..25 {
            for x in 5..25 {
                m.set(x, y, true);
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let j = jitter_mask(&m, 2, JitterModel::Boundary, &mut rng);
        assert!(j.get(15, 15) && !j.get(0, 0));
        assert_ne!(j, m);
    }
}
