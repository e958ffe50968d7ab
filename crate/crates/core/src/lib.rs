//! Streaming concept-drift detection for partially labeled data.
//!
//! The centerpiece is [`density::DensityDriftDetector`], a semi-supervised
//! real-drift detector. Per window it compares the posterior-probability
//! distribution implied by freshly acquired reliable labels against the one
//! implied by a long-lived incremental classifier. The comparison uses a
//! Gaussian kernel density estimate. Around it sit:
//!
//! * [`stream`]: instances, windows, stream sources and the label oracle;
//! * [`generators`]: seeded SEA and HyperPlane streams with abrupt drift;
//! * [`hoeffding`]: the Hoeffding tree used as incremental and static estimator;
//! * [`knowledge`]: active learning and PU learning under a label budget;
//! * [`baselines`]: DDM, EDDM, ADWIN and Page-Hinkley;
//! * [`eval`]: the prequential harness, metrics and benchmark grid;
//! * [`config`]: the `key = value` experiment file format used by the CLI.

pub mod baselines;
pub mod config;
pub mod density;
pub mod error;
pub mod eval;
pub mod generators;
pub mod hoeffding;
pub mod knowledge;
pub mod learner;
pub mod seeds;
pub mod stream;

mod state;

pub use error::{Error, Result};
pub use learner::Classifier;
pub use state::DriftState;
pub use stream::{ClassId, Instance, Window};
