//! Discrete-event simulation of distributed ledgers reached over LoRaWAN.

// Negated float comparisons are how validation rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dlt;
pub mod kernel;
pub mod lorawan;
pub mod sync;
pub mod consensus;
pub mod experiments;
