//! Slot-level simulator for a multiuser MIMO downlink with imperfect channel
//! state information.
//!
//! The pipeline per slot is: true channel ([`chanmodel`]) → transmitter CSI
//! (a corruption model or the RLS [`predictor`]) → signaling decision
//! ([`scheduler`], built on the kernels in [`phy`]) → rates realized against
//! the true channel → virtual-queue / averaged-rate update. [`sim`] drives the
//! loop and aggregates metrics; [`analysis`] evaluates the drift constants and
//! queue bounds used as run-time correctness checks.

pub mod analysis;
pub mod chanmodel;
pub mod error;
pub mod phy;
pub mod predictor;
pub mod rng;
pub mod scheduler;
pub mod sim;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;
