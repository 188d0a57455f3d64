//! Closed-form secret-key bounds and secrecy rates.
//!
//! Per-realization functions take a fixed [`ChannelRealization`] (the
//! long-coherence case where the expectation is dropped). The `*_bounds`
//! functions average the per-realization log terms over Monte Carlo channel
//! draws; every function given the same seed sees the same draws.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::sample_channel_batch;
use crate::error::{Error, Result};
use crate::params::{ChannelRealization, RateReport, SystemParams};
use crate::rng::{derive_seed, stream, Role};
use crate::stats::Estimate;

/// Which way the probes travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Alice probes, Bob receives (B <- A).
    BobFromAlice,
    /// Bob probes, Alice receives (A <- B).
    AliceFromBob,
}

/// Effective probe SINR: the legitimate receiver's SNR divided by one plus
/// Eve's matched-filter SNR on the same probes.
pub fn phi(params: &SystemParams, realization: &ChannelRealization, direction: Direction) -> f64 {
    match direction {
        Direction::BobFromAlice => realization.snr_ba(params) / (realization.snr_ea(params) + 1.0),
        Direction::AliceFromBob => realization.snr_ab(params) / (realization.snr_eb(params) + 1.0),
    }
}

/// Log terms and effective SNRs for one channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerRealizationRates {
    pub phi_ba: f64,
    pub phi_ab: f64,
    /// log2(1 + phi_BA)
    pub xi_ba: f64,
    pub xi_ab: f64,
    /// log2((1 + SNR_BA) / (1 + SNR_EA))
    pub gamma_ba: f64,
    pub gamma_ab: f64,
    pub snr_ab: f64,
    pub snr_eb: f64,
    pub xi_tilde: f64,
}

pub fn per_realization(params: &SystemParams, realization: &ChannelRealization) -> PerRealizationRates {
    let phi_ba = phi(params, realization, Direction::BobFromAlice);
    let phi_ab = phi(params, realization, Direction::AliceFromBob);
    let (snr_ab, snr_eb) = effective_snrs(params, realization);
    PerRealizationRates {
        phi_ba,
        phi_ab,
        xi_ba: phi_ba.ln_1p() / std::f64::consts::LN_2,
        xi_ab: phi_ab.ln_1p() / std::f64::consts::LN_2,
        gamma_ba: gamma_term(realization.snr_ba(params), realization.snr_ea(params)),
        gamma_ab: gamma_term(realization.snr_ab(params), realization.snr_eb(params)),
        snr_ab,
        snr_eb,
        xi_tilde: xi_tilde_from(params.secret_to_noise(), phi_ba),
    }
}

fn gamma_term(snr_user: f64, snr_eve: f64) -> f64 {
    (snr_user.ln_1p() - snr_eve.ln_1p()) / std::f64::consts::LN_2
}

/// log2(1 + phi s / (s + 1 + phi)) with s = sigma_s^2 / sigma_B^2.
fn xi_tilde_from(s: f64, phi_ba: f64) -> f64 {
    if s == 0.0 || phi_ba == 0.0 {
        return 0.0;
    }
    (phi_ba * s / (s + 1.0 + phi_ba)).ln_1p() / std::f64::consts::LN_2
}

/// Effective return-channel SNRs `(SNR_A|B, SNR_E|B)` for the secret after
/// Alice removes her probes and Eve removes her probe estimate.
pub fn effective_snrs(params: &SystemParams, realization: &ChannelRealization) -> (f64, f64) {
    let s = params.secret_to_noise();
    let phi_ba = phi(params, realization, Direction::BobFromAlice);
    (s, s / (phi_ba + 1.0))
}

/// Secrecy rate of the effective wiretap channel, bits per sample.
pub fn xi_tilde_analog(params: &SystemParams, realization: &ChannelRealization) -> f64 {
    xi_tilde_from(params.secret_to_noise(), phi(params, realization, Direction::BobFromAlice))
}

/// log2(1 + eta_s phi_BA), eta_s = s / (s + 1): the middle of the chain
/// xi' <= xi_bar <= xi.
pub fn xi_bar_term(params: &SystemParams, realization: &ChannelRealization) -> f64 {
    let s = params.secret_to_noise();
    let phi_ba = phi(params, realization, Direction::BobFromAlice);
    (s / (s + 1.0) * phi_ba).ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    /// Bob's echo power |h_BA|^2 p_A + sigma_B^2 + sigma_s^2.
    pub p_r: f64,
    /// Equal split: sigma_s^2 = |h_BA|^2 p_A.
    pub recommended_sigma_s2: f64,
}

pub fn power_budget(params: &SystemParams, realization: &ChannelRealization) -> PowerBudget {
    let probe = realization.h_ba.norm_sqr() * params.p_a;
    PowerBudget {
        p_r: probe + params.sigma_b2 + params.sigma_s2,
        recommended_sigma_s2: probe,
    }
}

fn map_draws<F>(draws: &[ChannelRealization], f: F) -> Vec<f64>
where
    F: Fn(&ChannelRealization) -> f64 + Sync + Send,
{
    draws.par_iter().map(f).collect()
}

/// Two-way probing bounds C_A, C_B, C_E (plus C_L, C_U and I(A;B)) on a
/// given set of channel draws.
pub fn theorem1_bounds_on(params: &SystemParams, draws: &[ChannelRealization]) -> RateReport {
    let per: Vec<PerRealizationRates> = draws.par_iter().map(|c| per_realization(params, c)).collect();
    let col = |f: fn(&PerRealizationRates) -> f64| per.iter().map(f).collect::<Vec<f64>>();
    let alpha = params.alpha();
    let (ma, mb) = (params.m_a as f64, params.m_b as f64);

    let xi_ba = Estimate::from_samples(&col(|r| r.xi_ba));
    let xi_ab = Estimate::from_samples(&col(|r| r.xi_ab));
    let gamma_ba = Estimate::from_samples(&col(|r| r.gamma_ba));
    let gamma_ab = Estimate::from_samples(&col(|r| r.gamma_ab));
    let i_ba = Estimate::from_samples(&map_draws(draws, |c| c.snr_ba(params).ln_1p() / std::f64::consts::LN_2));
    let i_ab = Estimate::from_samples(&map_draws(draws, |c| c.snr_ab(params).ln_1p() / std::f64::consts::LN_2));

    // Means come from the combination of term means (so one-way identities
    // hold exactly); standard errors from the per-draw combinations.
    let combo = |a: f64, t1: &Estimate, b: f64, t2: &Estimate, f: &dyn Fn(&PerRealizationRates) -> f64| {
        let se = Estimate::from_samples(&per.iter().map(f).collect::<Vec<_>>()).std_error;
        Estimate {
            mean: alpha + a * t1.mean + b * t2.mean,
            std_error: se,
            n: per.len(),
        }
    };
    let c_a = combo(mb, &xi_ab, ma, &gamma_ba, &|r| mb * r.xi_ab + ma * r.gamma_ba);
    let c_b = combo(ma, &xi_ba, mb, &gamma_ab, &|r| ma * r.xi_ba + mb * r.gamma_ab);
    let c_e = combo(ma, &xi_ba, mb, &xi_ab, &|r| ma * r.xi_ba + mb * r.xi_ab);
    let i_joint = Estimate {
        mean: alpha + ma * i_ba.mean + mb * i_ab.mean,
        std_error: (ma * ma * i_ba.std_error.powi(2) + mb * mb * i_ab.std_error.powi(2)).sqrt(),
        n: per.len(),
    };

    let mut report = RateReport::new(params.clone());
    report.insert("alpha", alpha);
    report.insert_estimate("xi_BA", xi_ba);
    report.insert_estimate("xi_AB", xi_ab);
    report.insert_estimate("gamma_BA", gamma_ba);
    report.insert_estimate("gamma_AB", gamma_ab);
    report.insert_estimate("I_AB", i_joint);
    report.insert_estimate("C_A", c_a);
    report.insert_estimate("C_B", c_b);
    report.insert_estimate("C_E", c_e);
    report.insert("C_L", c_a.mean.max(c_b.mean));
    report.insert("C_U", i_joint.mean.min(c_e.mean));
    if params.m_a > 0 && params.m_b > 0 {
        report.notes.push(
            "two-way probing: C_A or C_B may be negative when Eve's probing channel is strong; \
             m_A = 0 or m_B = 0 guarantees a positive bound"
                .into(),
        );
    }
    for (name, c) in [("C_A", c_a), ("C_B", c_b)] {
        if c.mean < 0.0 {
            report.notes.push(format!("{name} is negative ({:.4} bits)", c.mean));
        }
    }
    report
}

pub fn theorem1_bounds(params: &SystemParams, n_draws: usize, rng_seed: u64) -> Result<RateReport> {
    let draws = draws_for(params, n_draws, rng_seed)?;
    Ok(theorem1_bounds_on(params, &draws))
}

fn draws_for(params: &SystemParams, n_draws: usize, seed: u64) -> Result<Vec<ChannelRealization>> {
    if n_draws == 0 {
        return Err(Error::InvalidParam("n_draws must be >= 1".into()));
    }
    sample_channel_batch(params, n_draws, seed)
}

/// Secret-key capacity of one-way probing, bits per probing session.
pub fn corollary1_capacity(params: &SystemParams, n_draws: usize, rng_seed: u64) -> Result<Estimate> {
    params.check()?;
    if params.m_a > 0 && params.m_b > 0 {
        return Err(Error::OneWayRequired);
    }
    let draws = draws_for(params, n_draws, rng_seed)?;
    Ok(corollary1_on(params, &draws))
}

pub fn corollary1_on(params: &SystemParams, draws: &[ChannelRealization]) -> Estimate {
    let (m, dir) = if params.m_b == 0 {
        (params.m_a as f64, Direction::BobFromAlice)
    } else {
        (params.m_b as f64, Direction::AliceFromBob)
    };
    let xi = Estimate::from_samples(&map_draws(draws, |c| phi(params, c, dir).ln_1p() / std::f64::consts::LN_2));
    xi.affine(m, params.alpha())
}

/// Per-draw ||x_A||^2 for the joint (channel, probe) expectation:
/// Gamma(m_A, p_A), i.e. p_A/2 times chi-square with 2 m_A degrees of freedom.
fn probe_norms(params: &SystemParams, n_draws: usize, seed: u64) -> Vec<f64> {
    if params.m_a == 0 {
        return vec![0.0; n_draws];
    }
    let gamma = Gamma::new(params.m_a as f64, params.p_a).expect("positive shape and scale");
    (0..n_draws as u64)
        .into_par_iter()
        .map(|i| gamma.sample(&mut stream(derive_seed(seed, i), Role::ProbeNorm)))
        .collect()
}

/// log2 of the reciprocity term left after the echo, given ||x_A||^2.
pub fn alpha_prime_term(params: &SystemParams, x_norm2: f64) -> f64 {
    let r2 = params.rho_abs2();
    let a = x_norm2 / (params.sigma_s2 + params.sigma_b2);
    (r2 / ((1.0 - r2) * (a + 1.0))).ln_1p() / std::f64::consts::LN_2
}

fn lower_bound_terms(params: &SystemParams, n_draws: usize, seed: u64) -> Result<(Estimate, Estimate)> {
    let draws = draws_for(params, n_draws, seed)?;
    let norms = probe_norms(params, n_draws, seed);
    let alpha_prime = Estimate::from_samples(&norms.iter().map(|&n| alpha_prime_term(params, n)).collect::<Vec<_>>());
    let xi_prime = Estimate::from_samples(&map_draws(&draws, |c| xi_tilde_analog(params, c)));
    Ok((alpha_prime, xi_prime))
}

fn check_small_return_noise(params: &SystemParams, report: &mut RateReport) {
    if params.eps_a > 0.01 * params.sigma_b2 || params.eps_e > 0.01 * params.sigma_b2 {
        report
            .notes
            .push("lower bound assumes eps_A, eps_E << sigma_B^2; current values are not small".into());
    }
}

/// Lower bound on C_B' after Bob's echo: alpha' + m_A xi'_BA + m_A log2(eta),
/// eta = eps_E / eps_A.
pub fn theorem2_lower_bound(params: &SystemParams, n_draws: usize, rng_seed: u64) -> Result<RateReport> {
    params.check()?;
    if !(params.eps_a > 0.0 && params.eps_e > 0.0) {
        return Err(Error::ReturnNoise("eta = eps_E / eps_A needs eps_A > 0 and eps_E > 0"));
    }
    let (alpha_prime, xi_prime) = lower_bound_terms(params, n_draws, rng_seed)?;
    let eta = params.eps_e / params.eps_a;
    let m = params.m_a as f64;
    let eta_term = m * eta.log2();
    let mut report = RateReport::new(params.clone());
    report.insert("alpha", params.alpha());
    report.insert_estimate("alpha_prime", alpha_prime);
    report.insert_estimate("xi_BA_prime", xi_prime);
    report.insert("eta", eta);
    report.insert("eta_term", eta_term);
    report.insert(
        "C_B_prime_lb",
        alpha_prime.mean + m * xi_prime.mean + eta_term,
    );
    report.std_errors.insert(
        "C_B_prime_lb".into(),
        (alpha_prime.std_error.powi(2) + (m * xi_prime.std_error).powi(2)).sqrt(),
    );
    check_small_return_noise(params, &mut report);
    Ok(report)
}

/// Lower bound on C_B'' when Bob keeps only his secret: alpha' + m_A xi'_BA.
/// Independent of eta.
pub fn theorem3_lower_bound(params: &SystemParams, n_draws: usize, rng_seed: u64) -> Result<RateReport> {
    params.check()?;
    let (alpha_prime, xi_prime) = lower_bound_terms(params, n_draws, rng_seed)?;
    let m = params.m_a as f64;
    let mut report = RateReport::new(params.clone());
    report.insert("alpha", params.alpha());
    report.insert_estimate("alpha_prime", alpha_prime);
    report.insert_estimate("xi_BA_prime", xi_prime);
    report.insert("C_B_pruned_lb", alpha_prime.mean + m * xi_prime.mean);
    report.std_errors.insert(
        "C_B_pruned_lb".into(),
        (alpha_prime.std_error.powi(2) + (m * xi_prime.std_error).powi(2)).sqrt(),
    );
    check_small_return_noise(params, &mut report);
    Ok(report)
}

/// E{log2(1 + SNR_BA / (1 + SNR_EA))}: the analog secrecy limit per probe.
pub fn xi_steep_ac(params: &SystemParams, n_draws: usize, rng_seed: u64) -> Result<Estimate> {
    let draws = draws_for(params, n_draws, rng_seed)?;
    Ok(Estimate::from_samples(&map_draws(&draws, |c| {
        phi(params, c, Direction::BobFromAlice).ln_1p() / std::f64::consts::LN_2
    })))
}

/// E{xi_tilde} over channel draws.
pub fn expected_xi_tilde(params: &SystemParams, n_draws: usize, rng_seed: u64) -> Result<Estimate> {
    let draws = draws_for(params, n_draws, rng_seed)?;
    Ok(Estimate::from_samples(&map_draws(&draws, |c| xi_tilde_analog(params, c))))
}

/// E{p_r} over channel draws.
pub fn expected_echo_power(params: &SystemParams, n_draws: usize, rng_seed: u64) -> Result<Estimate> {
    let draws = draws_for(params, n_draws, rng_seed)?;
    Ok(Estimate::from_samples(&map_draws(&draws, |c| power_budget(params, c).p_r)))
}
