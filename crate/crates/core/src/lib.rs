//! Parameter-free online learning against dynamic comparators by sparse
//! coding on temporal dictionaries.
//!
//! The building blocks, bottom up:
//!
//! - [`olo::FreeGrad`]: a static unconstrained learner for linear losses.
//! - [`dictionaries`]: feature streams (Haar wavelets, Fourier, identity,
//!   explicit matrices).
//! - [`learner::SparseCoder`]: one static learner per feature, combined by
//!   the feature values; [`learner::haar_olr`] and
//!   [`learner::AnytimeHaar`] are the wavelet instances.
//! - [`harness`]: environments, the game loop and regret accounting.
//! - [`transform`], [`stats`], [`analysis`]: comparator-side tooling.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dictionaries;
pub mod error;
pub mod harness;
pub mod learner;
pub mod olo;
pub mod signal;
pub mod stats;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use learner::{haar_olr, AnytimeHaar, OnlineLearner, SparseCoder};
pub use olo::FreeGrad;
pub use signal::Signal;
