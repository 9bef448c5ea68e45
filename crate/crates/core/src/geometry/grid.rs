use std::collections::HashMap;

use super::transform::Vec3;

/// Above this many points nearest-neighbour queries go through a uniform grid.
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

/// Nearest-neighbour index over a fixed point set.
#[derive(Debug, Clone)]
pub enum NearestIndex {
    Brute(Vec<Vec3>),
    Grid(UniformGrid),
}

impl NearestIndex {
    pub fn new(points: &[Vec3]) -> Self {
        if points.len() <= BRUTE_FORCE_LIMIT {
            NearestIndex::Brute(points.to_vec())
        } else {
            NearestIndex::Grid(UniformGrid::new(points))
        }
    }

    /// Index and distance of the closest point, `None` for an empty set.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        match self {
            NearestIndex::Brute(pts) => brute_nearest(pts, q),
            NearestIndex::Grid(g) => g.nearest(q),
        }
    }
}

pub fn brute_nearest(points: &[Vec3], q: &Vec3) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d2 = (p - q).norm_squared();
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, d2)| (i, d2.sqrt()))
}

#[derive(Debug, Clone)]
pub struct UniformGrid {
    points: Vec<Vec3>,
    origin: Vec3,
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
    max_ring: i64,
}

impl UniformGrid {
    pub fn new(points: &[Vec3]) -> Self {
        let (lo, hi) = super::cloud::aabb(points).unwrap_or((Vec3::zeros(), Vec3::zeros()));
        let ext = hi - lo;
        let volume = ext.iter().map(|e| e.max(1e-6)).product::<f64>();
        // Aim for a handful of points per occupied cell.
        let cell = (volume / (points.len().max(1) as f64 / 4.0)).cbrt().max(1e-6);
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, &lo, cell)).or_default().push(i);
        }
        let max_ring = (ext.max() / cell).ceil() as i64 + 1;
        Self {
            points: points.to_vec(),
            origin: lo,
            cell,
            cells,
            max_ring,
        }
    }

    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let c = key(q, &self.origin, self.cell);
        // Distance from q to the box of occupied cells bounds how far out to start.
        let mut best: Option<(usize, f64)> = None;
        let outside = self.outside_rings(c);
        for ring in 0..=(self.max_ring + outside) {
            for k in ring_keys(c, ring) {
                if let Some(ids) = self.cells.get(&k) {
                    for &i in ids {
                        let d2 = (self.points[i] - q).norm_squared();
                        if best.is_none_or(|(_, b)| d2 < b) {
                            best = Some((i, d2));
                        }
                    }
                }
            }
            if let Some((_, b)) = best {
                let reach = ring as f64 * self.cell;
                if b <= reach * reach {
                    break;
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    fn outside_rings(&self, c: (i64, i64, i64)) -> i64 {
        let span = self.max_ring;
        [c.0, c.1, c.2]
            .iter()
            .map(|&v| if v < 0 { -v } else if v > span { v - span } else { 0 })
            .max()
            .unwrap_or(0)
    }
}

fn key(p: &Vec3, origin: &Vec3, cell: f64) -> (i64, i64, i64) {
    let r = (p - origin) / cell;
    (r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64)
}

fn ring_keys(c: (i64, i64, i64), ring: i64) -> Vec<(i64, i64, i64)> {
    if ring == 0 {
        return vec![c];
    }
    let mut out = Vec::new();
    for dx in -ring..=ring {
        for dy in -ring..=ring {
            for dz in -ring..=ring {
                if dx.abs().max(dy.abs()).max(dz.abs()) == ring {
                    out.push((c.0 + dx, c.1 + dy, c.2 + dz));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec3> = (0..12_000)
            .map(|_| Vec3::new(rng.random(), rng.random::<f64>() * 0.5, rng.random::<f64>() * 0.01))
            .collect();
        let grid = UniformGrid::new(&pts);
        for _ in 0..200 {
            let q = Vec3::new(
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.0),
                rng.random_range(-0.2..0.2),
            );
            let (_, dg) = grid.nearest(&q).unwrap();
            let (_, db) = brute_nearest(&pts, &q).unwrap();
            assert!((dg - db).abs() < 1e-12, "{dg} vs {db}");
        }
    }
}
