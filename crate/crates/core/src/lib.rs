// SPDX-License-Identifier: Apache-2.0

//! Qubit channels induced by random-matrix environments.
//!
//! A qubit coupled to an environment evolves under `U^t = W diag(e^{-iEt}) W†`
//! where `W` is a Haar-random eigenvector matrix. Averaged over `W` the
//! reduced qubit dynamics is a depolarizing channel with radius `α(t)`. This
//! crate provides:
//!
//! - [`ensembles`]: seeded GUE, Haar and flat uncorrelated spectra, `f(t)`.
//! - [`channel`]: exact channel matrices by simulation and their Haar averages.
//! - [`analytics`]: closed-form ensemble averages of `α(t)` and the GUE
//!   spectral correlators they are built from.
//! - [`fluctuations`]: variances of the channel matrix elements.
//! - [`measures`]: non-Markovianity measures of an `α(t)` curve.
//!
//! Time is in natural units (`ħ = 1`, GUE spectral span 4, Heisenberg time
//! `2N`).

// `!(x > y)` comparisons deliberately reject NaN; matrix loops index several arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytics;
pub mod channel;
pub mod ensembles;
pub mod error;
pub mod fluctuations;
pub mod measures;
pub mod parallel;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
