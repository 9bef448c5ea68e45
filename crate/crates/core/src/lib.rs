//! Articulated-object demonstration processing: keyframe detection from
//! masks, contact extraction, joint estimation, motion recovery, asset
//! replacement fitting and trajectory retargeting, plus a synthetic scene
//! generator with known ground truth.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod articulation;
pub mod contact;
pub mod error;
pub mod geometry;
pub mod io;
pub mod keyframes;
pub mod optim;
pub mod pipeline;
pub mod replacement;
pub mod oracle;
pub mod retarget;

pub use error::{Error, Result};

/// Serialise a `Vec3` as `[x, y, z]`.
pub mod serde_vec3 {
    use crate::geometry::Vec3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec3, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec3, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        if a.iter().any(|x| !x.is_finite()) {
            return Err(serde::de::Error::custom("non-finite coordinate"));
        }
        Ok(Vec3::from(a))
    }
}
