//! Behavioral model of a resistive crossbar whose sense periphery evaluates
//! two-input Boolean functions of a column pair in a single cycle.
//!
//! Two word lines are asserted at once; the sense-line current of every
//! column then lands in one of three bands (`00`, `01`/`10`, `11`). A sense
//! amplifier built from two current comparators with distinct references,
//! an inverter and a two-input gate turns that band into XOR, XNOR, AND,
//! NAND, OR or NOR.
//!
//! Module map:
//! - [`device`]: cell conduction, leakage and access-resistance calibration
//! - [`array`]: crossbar state, bias scheme, write/read/compute access
//! - [`sense`]: comparators, reference placement and logic composition
//! - [`analysis`]: array-size limits, sense margins, Monte Carlo variation
//! - [`bnn`]: XNOR-popcount convolution on the array and the speedup model
//! - [`cli`]: scenario files and the `cimxor` command-line front end

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod array;
pub mod bnn;
pub mod cli;
pub mod device;
mod error;
pub mod report;
pub mod sense;

pub use error::{Error, Result};

pub use array::{ArrayState, BiasMode, BiasVector};
pub use device::{CellRecord, DeviceParams};
pub use sense::{Composition, CurrentLevels, Gate, LogicOp, SenseConfig, TruthTable};
