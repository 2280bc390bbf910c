//! Extrinsic calibration between a LiDAR and a spherical panoramic camera.
//!
//! The pipeline: a circular target is scanned into chord segments
//! ([`synthdata`]), each chord endpoint is paired with its panorama pixel
//! ratio, and the six pose parameters (zxz Euler angles plus translation) are
//! regressed by fixed-step gradient descent on an arctangent-branch
//! reprojection loss with analytic gradients ([`calibrator`]). [`geometry`]
//! holds the projection model, [`dataset`] the on-disk formats, and
//! [`evaluate`] pixel-space quality metrics.

pub mod calibrator;
pub mod dataset;
pub mod evaluate;
pub mod geometry;
pub mod synthdata;

pub use calibrator::{
    batch_loss, gradient_check, loss_gradient, point_loss, train, train_multistart,
    CalibrationResult, Correspondence, GradCheckConfig, GradCheckReport, LossAggregation,
    TrainError, TrainStatus, TraceRecord, TrainingConfig, TrainingTrace,
};
pub use geometry::{
    project, unproject, EulerZXZ, ExtrinsicPose, GeomError, PanoPixelRatio, Point3, Variant,
};
