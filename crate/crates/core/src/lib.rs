//! Simulation and pricing kernel for productivity-indexed credit.
//!
//! * [`stochastics`] generates seeded diffusion / jump-diffusion paths and
//!   Monte Carlo estimates.
//! * [`credit`] computes loan schedules, settlements and default resolution.
//! * [`sovereign`] prices tax-share government bonds and the lenders-demand
//!   measure.
//! * [`hjm`] evolves jump-diffusion forward surfaces and checks the
//!   no-arbitrage drift condition.
//! * [`banksim`] keeps provenance-tagged bank ledgers and checks
//!   interbank-lending compliance.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banksim;
pub mod credit;
pub mod hjm;
pub mod quadrature;
pub mod sovereign;
pub mod stochastics;
