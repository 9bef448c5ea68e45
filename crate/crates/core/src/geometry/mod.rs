//! Rigid transforms, labelled point clouds, oriented boxes, planes and ICP.

pub mod cloud;
pub mod grid;
pub mod icp;
pub mod obb;
pub mod plane;
pub mod transform;

pub use cloud::{aabb, centroid, transform_cloud, Label, LabeledPointCloud};
pub use grid::{brute_nearest, NearestIndex};
pub use icp::{icp, icp_align, IcpResult};
pub use obb::{obb_edges, obb_fit, Edge, OrientedBoundingBox};
pub use plane::Plane;
pub use transform::{canonical_quat, compose, invert, quat_from_wxyz, yaw, RigidTransform, UnitQuat, Vec3};
