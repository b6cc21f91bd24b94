//! Minimum transmit SNR for two-user downlink NOMA under joint
//! reliability and latency targets.
//!
//! The overall packet-loss target is split into a transmission-error budget
//! (handled by the finite-blocklength rate model in [`fbl`]) and a
//! queueing-delay violation budget (handled by the effective-bandwidth model
//! in [`traffic`]). [`planner`] combines the two into a required SINR per
//! decoded message, and [`noma`] turns the three per-message SINRs into a
//! single transmit SNR. [`sim`] checks the queueing approximation by
//! simulation.
//!
//! ```
//! use urllc_noma::{fbl::{DispersionMode, SystemConfig}, numerics::Probability};
//! use urllc_noma::planner::required_sinr;
//! use urllc_noma::traffic::{QosExponent, TrafficModel};
//!
//! let cfg = SystemConfig::table1();
//! let traffic = TrafficModel::new(0.01, cfg.frame_duration_s)?;
//! let gamma = required_sinr(
//!     &cfg,
//!     &traffic,
//!     QosExponent::new(0.1)?,
//!     Probability::new(1e-5)?,
//!     DispersionMode::PaperLiteral,
//! )?;
//! // about -1.6 dB at the 30-symbol blocklength
//! assert!(gamma.db() > -2.0 && gamma.db() < -1.0);
//! # Ok::<(), urllc_noma::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fbl;
pub mod noma;
pub mod numerics;
pub mod planner;
pub mod sim;
pub mod traffic;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/q-function.md")]
    mod q_function {}
    #[doc = include_str!("../../../book/src/effective-bandwidth.md")]
    mod effective_bandwidth {}
    #[doc = include_str!("../../../book/src/finite-blocklength.md")]
    mod finite_blocklength {}
    #[doc = include_str!("../../../book/src/noma.md")]
    mod noma {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
