//! seakit: decision-driven self-assessment for classifiers.
//!
//! Post-hoc uncertainty quantification (temperature scaling, histogram
//! binning, conformal sets, decision calibration, MSP OOD flagging) fitted
//! on calibration logits, fed to modeled downstream decision policies, and
//! tuned to minimize expected decision cost on notional scenarios.

pub mod decision;
pub mod domain;
pub mod error;
pub mod io;
pub mod metrics;
pub mod scenarios;
pub mod sea;

pub use error::{Error, Result};
