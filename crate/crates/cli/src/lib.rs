//! Scenario-driven command-line front end for the `prodcredit` library.
//!
//! Every subcommand reads a strict TOML scenario, writes versioned CSV and
//! JSON into the output directory, and prints short summary lines. Output
//! bytes depend only on the scenario and the seed.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
