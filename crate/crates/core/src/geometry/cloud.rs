use serde::{Deserialize, Serialize};

use super::transform::{RigidTransform, Vec3};
use crate::error::{Error, Result};

/// Per-point segmentation label. Encoded on disk as 0 static, 1 movable,
/// `100 + l` robot link `l`, anything else other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Static,
    Movable,
    RobotLink(u32),
    Other,
}

impl Label {
    pub fn code(self) -> i64 {
        match self {
            Label::Static => 0,
            Label::Movable => 1,
            Label::RobotLink(l) => 100 + l as i64,
            Label::Other => -1,
        }
    }

    pub fn from_code(code: i64) -> Label {
        match code {
            0 => Label::Static,
            1 => Label::Movable,
            c if c >= 100 && c - 100 <= u32::MAX as i64 => Label::RobotLink((c - 100) as u32),
            _ => Label::Other,
        }
    }

    pub fn is_robot(self) -> bool {
        matches!(self, Label::RobotLink(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledPointCloud {
    pub points: Vec<Vec3>,
    pub labels: Vec<Label>,
}

impl LabeledPointCloud {
    pub fn new(points: Vec<Vec3>, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Input(format!("non-finite point {p:?}")));
        }
        Ok(Self { points, labels })
    }

    pub fn uniform(points: Vec<Vec3>, label: Label) -> Self {
        let labels = vec![label; points.len()];
        Self { points, labels }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: Vec3, label: Label) {
        self.points.push(p);
        self.labels.push(label);
    }

    pub fn extend(&mut self, other: &LabeledPointCloud) {
        self.points.extend_from_slice(&other.points);
        self.labels.extend_from_slice(&other.labels);
    }

    pub fn filter(&self, mut keep: impl FnMut(Label) -> bool) -> LabeledPointCloud {
        let mut out = LabeledPointCloud::default();
        for (p, &l) in self.points.iter().zip(&self.labels) {
            if keep(l) {
                out.push(*p, l);
            }
        }
        out
    }

    pub fn movable(&self) -> LabeledPointCloud {
        self.filter(|l| l == Label::Movable)
    }

    pub fn static_part(&self) -> LabeledPointCloud {
        self.filter(|l| l == Label::Static)
    }

    pub fn robot(&self) -> LabeledPointCloud {
        self.filter(Label::is_robot)
    }

    pub fn transformed(&self, t: &RigidTransform) -> LabeledPointCloud {
        LabeledPointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn centroid(&self) -> Option<Vec3> {
        centroid(&self.points)
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        aabb(&self.points)
    }
}

pub fn transform_cloud(t: &RigidTransform, pc: &LabeledPointCloud) -> LabeledPointCloud {
    pc.transformed(t)
}

pub fn centroid(points: &[Vec3]) -> Option<Vec3> {
    if points.is_empty() {
        return None;
    }
    Some(points.iter().sum::<Vec3>() / points.len() as f64)
}

pub fn aabb(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| {
        (lo.inf(p), hi.sup(p))
    }))
}
