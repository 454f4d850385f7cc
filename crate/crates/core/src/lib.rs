//! Allocation-only core of a single-trial oddball speller simulator.
//!
//! The crate covers the whole analytic pipeline of a high-speed P300 speller:
//! frequency-biased illumination orders ([`alphabet`]), synthetic EEG trials
//! ([`signal`]), classwise-PCA plus discriminant feature extraction
//! ([`features`]), the linear Bayesian decision rule ([`classifier`]),
//! information-transfer-rate calculus ([`channel`]), the two-stage selection
//! state machine ([`speller`]) and the experiment protocol that ties them
//! together ([`harness`]).
//!
//! Nothing here touches the filesystem or a clock; all randomness comes from
//! explicitly passed [`rng::Seed`]s. File formats and the command line live in
//! the `speller` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod alphabet;
pub mod channel;
pub mod classifier;
pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub(crate) mod math;
pub mod rng;
pub mod signal;
pub mod speller;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
