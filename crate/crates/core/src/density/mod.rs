//! Posterior-probability density comparison: the semi-supervised detector.

mod detector;
mod kde;
mod posterior;

pub use detector::{
    classify, error_rate, scaling_factor, DensityDriftDetector, DetectorConfig, DriftVerdict,
    VerdictKind,
};
pub use kde::{silverman_bandwidth, KernelDensity};
pub use posterior::{PosteriorModel, PosteriorSample, SkipReason};
