// SPDX-License-Identifier: Apache-2.0
//! Gate-level simulation of overscaled adders and the identifiability of the
//! chips that run them.
//!
//! The pipeline is: build an adder [`netlist`], sample a chip population
//! under process [`variation`], simulate clock-edge capture at an overscaled
//! period with the event-driven [`timedsim`] engine, pick periods that hit a
//! target error rate with [`calibration`], and score how well the erroneous
//! outputs identify individual chips with [`analysis`]. The [`experiment`]
//! module wires everything together behind a config file.

pub mod analysis;
pub mod calibration;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod netlist;
pub mod seed;
pub mod timedsim;
pub mod variation;

pub use error::{Error, Result};
pub use exec::Exec;
