//! Secrecy-rate formulas, protocol simulators and verification oracles for
//! secret transmission by echoing encrypted probes.
//!
//! Alice probes Bob with random symbols (or bits). Bob echoes what he received,
//! masked additively (or by XOR) with his own secret sequence, over a
//! high-quality return channel. Alice strips her known probes from the echo and
//! is left with a channel for the secret that is provably better than the one
//! Eve sees, as long as Eve never observes the probes exactly.
//!
//! Module map:
//!
//! - [`params`]: model parameters, channel realizations, rate reports, config files
//! - [`channel`]: channel sampling and the analog probe/echo simulator
//! - [`rates`]: closed-form secret-key bounds and secrecy rates
//! - [`mmse`]: optimal estimators of the secret at Alice and Eve
//! - [`digital`]: the bit-level protocol, reconciliation and privacy amplification
//! - [`verify`]: independent oracles (log-det mutual information, PMF enumeration, empirical SNR)
//! - [`harness`]: single-point reports, sweeps and plot data

pub mod channel;
pub mod digital;
pub mod error;
pub mod harness;
pub mod mmse;
pub mod params;
pub mod rates;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use params::{ChannelRealization, RateReport, SystemParams};
