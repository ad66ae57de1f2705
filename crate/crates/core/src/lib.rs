//! Parametric maximum-likelihood channel estimation for RIS-assisted wideband links.
//!
//! The crate is organised bottom-up:
//!
//! * [`array`]: planar array geometry, steering vectors, the isotropic spatial
//!   correlation kernel and the reduced-subspace bases derived from it.
//! * [`channel`]: ground-truth generation of the BS–RIS, RIS–UE and BS–UE
//!   wideband channels plus pilot observations under one RIS configuration.
//! * [`estimator`]: the wideband MLE (AoA, phase, gain and NLOS subspace
//!   coefficients), the narrowband and NLOS-unaware baselines, and the NMSE metric.
//! * [`harness`]: scenario configuration, seeded Monte-Carlo sweeps and result
//!   emission used by the `ris-mle` binary.

pub mod array;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;

pub use error::{Error, Result};
pub use linalg::C64;
