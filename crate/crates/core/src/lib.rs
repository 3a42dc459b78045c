//! Detectability of minority communities in sparse block-model networks.
//!
//! The crate covers the full pipeline: closed-form spectral theory
//! ([`theory`]), graph generation ([`graphgen`]), spectral clustering with
//! the Bethe Hessian ([`spectral`]), belief-propagation inference ([`bp`]),
//! description-length and free-energy order selection ([`mdl`], [`bp`]),
//! partition-comparison metrics ([`metrics`]), and phase-diagram sweeps
//! ([`sweep`]).

pub mod bp;
pub mod detect;
pub mod error;
pub mod graphgen;
pub mod mdl;
pub mod metrics;
pub mod partition;
pub mod rng;
pub mod spectral;
pub mod sweep;
pub mod theory;

pub use error::{Error, Result};
pub use partition::Partition;
