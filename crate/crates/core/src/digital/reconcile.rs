//! Reconciliation of Bob's secret bits at Alice and privacy amplification.
//!
//! Bob discloses a syndrome of `b_s`, Alice decodes her copy `bbar_AB` to the
//! nearest word with that syndrome, and both compare a 64-bit hash tag.
//! Both then compress with a public-seed Toeplitz hash.
//!
//! Leak accounting: Eve's uncertainty about `b_s` before reconciliation is
//! m_A f(P_E|B) and Alice's is m_A f(P_A|B), so m_A xi already pays for the
//! first m_A f(P_A|B) disclosed bits. Only disclosure beyond that (the code's
//! inefficiency, plus the tag) is charged as `leak_bits`.

use serde::{Deserialize, Serialize};

use super::bits::Bits;
use super::bsc::{effective_error_rates, h2, xi_digital, BscParams, RateModel};
use super::code::{HammingProductCode, LdpcCode, SyndromeCode};
use super::episode::DigitalEpisode;
use super::toeplitz::ToeplitzHash;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CodeChoice {
    /// Column-weight-3 LDPC code over the whole block. `syndrome_fraction`
    /// (checks per bit) defaults to a calibrated function of P_A|B.
    Ldpc { syndrome_fraction: Option<f64> },
    /// Blockwise product of two extended Hamming codes of length 2^r. Only
    /// useful at low error rates.
    HammingProduct { r: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconcileConfig {
    pub code: CodeChoice,
    /// Fraction held back from the secrecy budget (0.2 = 20%).
    pub safety_margin: f64,
    pub tag_bits: usize,
}

impl Default for ReconcileConfig {
    fn default() -> Self {
        ReconcileConfig {
            code: CodeChoice::Ldpc { syndrome_fraction: None },
            safety_margin: 0.2,
            tag_bits: 64,
        }
    }
}

/// Checks per bit for the LDPC code at effective crossover `p`. Chosen from
/// decoding experiments at block lengths around 10^4 so that failures stay
/// well under 1%.
pub fn default_syndrome_fraction(p: f64) -> f64 {
    (1.25 * h2(p) + 0.07).min(1.0)
}

/// Disclosure and key-length budget, computable before any bits exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakPlan {
    pub xi: f64,
    pub p_a_given_b: f64,
    pub disclosed_bits: usize,
    pub tag_bits: usize,
    pub leak_bits: f64,
    /// floor((1 - margin)(m_A xi - leak)), zero if negative.
    pub max_key_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconcileOutcome {
    pub key_a: Bits,
    pub key_b: Bits,
    pub leak_bits: f64,
    pub plan: LeakPlan,
}

impl ReconcileOutcome {
    pub fn keys_agree(&self) -> bool {
        self.key_a == self.key_b
    }
}

fn build_code(bsc: &BscParams, config: &ReconcileConfig, p: f64, seed: u64) -> Result<Box<dyn SyndromeCode>> {
    let n = bsc.m_a;
    match config.code {
        CodeChoice::Ldpc { syndrome_fraction } => {
            let frac = syndrome_fraction.unwrap_or_else(|| default_syndrome_fraction(p));
            if !(frac > 0.0 && frac <= 1.0) {
                return Err(Error::InvalidParam(format!("syndrome fraction must be in (0, 1] (got {frac})")));
            }
            let checks = ((frac * n as f64).ceil() as usize).clamp(3, n.max(3));
            if n < 3 {
                return Err(Error::InvalidParam("LDPC reconciliation needs m_A >= 3".into()));
            }
            Ok(Box::new(LdpcCode::new(n, checks, derive_seed(seed, Role::CodeConstruction as u64))))
        }
        CodeChoice::HammingProduct { r } => {
            if !(2..=10).contains(&r) {
                return Err(Error::InvalidParam(format!("Hamming component r must be in 2..=10 (got {r})")));
            }
            Ok(Box::new(HammingProductCode::new(n, r)))
        }
    }
}

fn plan_with(bsc: &BscParams, config: &ReconcileConfig, code: Option<&dyn SyndromeCode>) -> Result<LeakPlan> {
    let xi = xi_digital(bsc)?;
    let p = effective_error_rates(bsc, RateModel::Exact).p_a_given_b;
    let (disclosed, tag) = match code {
        Some(c) => (c.disclosed_bits(), config.tag_bits),
        None => (0, 0),
    };
    let m = bsc.m_a as f64;
    let leak = (disclosed as f64 + tag as f64 - m * h2(p)).max(0.0);
    let budget = (1.0 - config.safety_margin) * (m * xi - leak);
    Ok(LeakPlan {
        xi,
        p_a_given_b: p,
        disclosed_bits: disclosed,
        tag_bits: tag,
        leak_bits: leak,
        max_key_len: if budget > 0.0 { budget.floor() as usize } else { 0 },
    })
}

/// The leak and key budget that [`reconcile_and_amplify`] will use.
pub fn plan_leak(bsc: &BscParams, config: &ReconcileConfig, seed: u64) -> Result<LeakPlan> {
    bsc.check()?;
    let p = effective_error_rates(bsc, RateModel::Exact).p_a_given_b;
    if p == 0.0 {
        return plan_with(bsc, config, None);
    }
    let code = build_code(bsc, config, p, seed)?;
    plan_with(bsc, config, Some(code.as_ref()))
}

/// Reconcile Alice's `bbar_AB` to Bob's `b_s` and hash both to `target_len`
/// bits. `seed` drives the public code, tag and hash choices.
pub fn reconcile_and_amplify(
    episode: &DigitalEpisode,
    bsc: &BscParams,
    target_len: usize,
    config: &ReconcileConfig,
    seed: u64,
) -> Result<ReconcileOutcome> {
    bsc.check()?;
    if episode.len() != bsc.m_a {
        return Err(Error::InvalidParam(format!(
            "episode has {} bits but m_A = {}",
            episode.len(),
            bsc.m_a
        )));
    }
    let p = effective_error_rates(bsc, RateModel::Exact).p_a_given_b;
    let code = if p == 0.0 { None } else { Some(build_code(bsc, config, p, seed)?) };
    let plan = plan_with(bsc, config, code.as_deref())?;
    if plan.xi <= 0.0 {
        return Err(Error::InvalidParam("no secrecy: xi must be > 0 (needs P_EA > 0)".into()));
    }
    if target_len > plan.max_key_len {
        return Err(Error::KeyTooLong {
            requested: target_len,
            max: plan.max_key_len,
        });
    }

    let bob = &episode.b_s;
    let alice = match &code {
        None => episode.bbar_ab.clone(),
        Some(code) => {
            let syndrome = code.syndrome(bob.as_slice());
            let decoded = code
                .decode(episode.bbar_ab.as_slice(), &syndrome, p)
                .ok_or_else(|| Error::ReconciliationFailed("decoder did not converge".into()))?;
            let decoded = Bits::from_vec(decoded)?;
            let tag = ToeplitzHash::with_role(bsc.m_a, config.tag_bits, seed, Role::VerifyHash);
            if tag.hash(&decoded) != tag.hash(bob) {
                return Err(Error::ReconciliationFailed("verification tags differ".into()));
            }
            decoded
        }
    };
    let hash = ToeplitzHash::new(bsc.m_a, target_len, seed);
    Ok(ReconcileOutcome {
        key_a: hash.hash(&alice),
        key_b: hash.hash(bob),
        leak_bits: plan.leak_bits,
        plan,
    })
}
