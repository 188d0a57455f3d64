//! The bit-level protocol.
//!
//! Alice sends random probe bits `b_A` over a BSC; Bob XORs what he received
//! with his secret bits and echoes the result. Alice cancels her probes
//! exactly, Eve only up to her own probe errors. The remaining pieces turn the
//! resulting advantage into a shared key: syndrome reconciliation, a
//! verification tag and Toeplitz privacy amplification.

pub mod bits;
pub mod bsc;
pub mod code;
pub mod episode;
pub mod reconcile;
pub mod toeplitz;
pub mod transcript;

pub use bits::Bits;
pub use bsc::{
    binary_entropy, convolve, effective_error_rates, mac_bounds_digital, xi_digital, xi_digital_with, BscParams,
    EffectiveRates, RateModel, BSC_KEYS,
};
pub use code::{HammingProductCode, LdpcCode, SyndromeCode};
pub use episode::{permutation, reorder_bits, run_digital_episode, DigitalEpisode};
pub use reconcile::{
    default_syndrome_fraction, plan_leak, reconcile_and_amplify, CodeChoice, LeakPlan, ReconcileConfig,
    ReconcileOutcome,
};
pub use toeplitz::ToeplitzHash;
