//! Uplink spectral efficiency of RIS-aided cell-free massive MIMO under
//! electromagnetic interference: channel statistics, closed-form SINR with
//! large-scale fading decoding, a Monte-Carlo oracle, power control and an
//! experiment runner.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
pub mod channel;
pub mod config;
pub mod correlation;
pub mod emi;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod linalg;
pub mod oracle;
pub mod power;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod simplex;
pub mod sinr;
pub mod system;
pub use error::{Error, Result};
