//! Volumetric primitives, placement frames, triangulation and volumes.

pub mod appearance;
pub mod frame;
pub mod mesh;
pub mod primitive;
pub mod shape;
pub mod tessellate;

use thiserror::Error;

pub use appearance::{Appearance, AppearanceKey, AppearanceValue};
pub use frame::Frame;
pub use mesh::{mesh_volume, TriMesh};
pub use primitive::{
    is_namespace_name, namespace_names, Axis, CoordSystem, Interval, PrimitiveDescriptor, PrimitiveKind,
};
pub use shape::{make_primitive, repeat_count, repeat_shape, split_shape, Geometry, Shape};
pub use tessellate::{default_segments, set_default_segments, tessellate, DEFAULT_SEGMENTS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("unknown primitive kind `{0}`")]
    UnknownKind(String),
    #[error("`{kind}` takes {expected} parameters, got {got}")]
    ArityMismatch { kind: String, expected: usize, got: usize },
    #[error("`{kind}` parameter {param} must be positive, got {value}")]
    NonPositiveDimension { kind: String, param: String, value: f64 },
    #[error("invalid parameters for {0}")]
    InvalidParameter(String),
    #[error("axis `{axis}` is not an axis of the {} coordinate system", .system.name())]
    AxisNotInSystem { axis: Axis, system: CoordSystem },
    #[error("split sizes along `{axis}` sum to {got}, but the extent is {expected}")]
    SizeSumMismatch { axis: Axis, expected: f64, got: f64 },
    #[error("split and repeat sizes must be positive, got {0}")]
    NonPositiveSize(f64),
    #[error("split and repeat need at least one size")]
    EmptySizes,
    #[error("repeat offset {offset} must lie in [0, {period})")]
    InvalidOffset { offset: f64, period: f64 },
    #[error("repeat would produce more than {0} pieces")]
    RepeatLimit(usize),
    #[error("scale factors must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("Boolean result shapes cannot be split or repeated")]
    MeshNotSplittable,
    #[error("mesh is not watertight")]
    NotWatertight,
}
