//! Performance prediction for black-box optimisers from landscape features,
//! with random-forest regression calibrated by similar training problems.

pub mod config;
pub mod de;
pub mod ela;
pub mod error;
pub mod forest;
pub mod io;
pub mod key;
pub mod lopo;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod similarity;
pub mod stats;
pub mod suite;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use key::InstanceKey;

/// Tool name and version stamped on every output file.
pub fn generator() -> String {
    format!("rfclust {}", env!("CARGO_PKG_VERSION"))
}
