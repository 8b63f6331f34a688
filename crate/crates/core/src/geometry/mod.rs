//! Points, the two-view camera model, and the parametric curves shared by
//! the reconstruction stages.

mod bspline;
mod camera;
mod frame;
mod hermite;

pub use bspline::{chord_length_params, CubicBSpline};
pub use camera::{epipolar_ok, Camera, CameraPair, Projection};
pub use frame::{parallel_transport_frames, transport_frame, Frame};
pub use hermite::HermiteCurve;

use nalgebra::SVector;
use thiserror::Error;

pub type Point2 = nalgebra::Point2<f64>;
pub type Point3 = nalgebra::Point3<f64>;
pub type Vector2 = nalgebra::Vector2<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Matrix3 = nalgebra::Matrix3<f64>;

/// Tolerance used for the orthonormality checks on camera rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point lies on the camera plane (depth {depth:e})")]
    DegenerateDepth { depth: f64 },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid camera pair: {0}")]
    InvalidCameraPair(String),
    #[error("epipolar violation: |{y_front} - {y_side}| exceeds {tolerance}")]
    EpipolarViolation {
        y_front: f64,
        y_side: f64,
        tolerance: f64,
    },
    #[error("curve parameter {0} outside [0, 1]")]
    ParameterOutOfDomain(f64),
    #[error("curve needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("singular interpolation system: parameters must be strictly increasing")]
    SingularSystem,
}

pub(crate) fn all_finite<const D: usize>(v: &SVector<f64, D>) -> bool {
    v.iter().all(|c| c.is_finite())
}
