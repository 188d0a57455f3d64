//! MMSE estimators of the secret at Alice and of the probes and secret at Eve.
//!
//! All estimators are conditioned on one channel realization and return the
//! estimate, the empirical per-entry MSE against the simulated truth and the
//! closed-form per-entry MSE for the same realization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::AnalogEpisode;
use crate::error::{Error, Result};
use crate::params::{ChannelRealization, SystemParams};
use crate::rates::{phi, Direction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: Vec<Complex64>,
    pub empirical_mse: f64,
    pub closedform_mse: f64,
}

/// What Eve knows besides her own observations and the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EveKnowledge {
    /// Eve knows g_A and h_BA (the pessimistic default).
    #[default]
    Full,
    /// Eve knows g_A but not h_BA; she falls back to a linear estimate from
    /// y_EB alone.
    WithoutBobGain,
}

fn mse(estimate: &[Complex64], truth: &[Complex64]) -> f64 {
    estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / truth.len() as f64
}

fn check_episode(params: &SystemParams, episode: &AnalogEpisode) -> Result<()> {
    params.check()?;
    episode.realization.check_lengths(params)?;
    if episode.is_empty() {
        return Err(Error::NothingToProbe);
    }
    Ok(())
}

/// Alice's estimate of s from y_AB, knowing x_A, h_AB and rho but not h_BA.
///
/// She predicts h_BA by conj(rho) h_AB; the residual r' = y_AB - conj(rho) h_AB x_A
/// has covariance (1 - |rho|^2) x x^H + g I with g = sigma_s^2 + sigma_B^2 + eps_A,
/// and the estimate is sigma_s^2 times its inverse applied to r'.
pub fn alice_estimate_s(params: &SystemParams, episode: &AnalogEpisode) -> Result<EstimateResult> {
    check_episode(params, episode)?;
    let h_hat = params.rho_complex().conj() * episode.realization.h_ab;
    let resid: Vec<Complex64> = episode
        .y_ab
        .iter()
        .zip(&episode.x_a)
        .map(|(y, x)| y - h_hat * x)
        .collect();
    let g = params.sigma_s2 + params.sigma_b2 + params.eps_a;
    let u = 1.0 - params.rho_abs2();
    let x_norm2: f64 = episode.x_a.iter().map(|x| x.norm_sqr()).sum();
    let c = (u / g) / (u * x_norm2 / g + 1.0);
    let proj: Complex64 = episode.x_a.iter().zip(&resid).map(|(x, r)| x.conj() * r).sum();
    let w = params.sigma_s2 / g;
    let estimate: Vec<Complex64> = resid
        .iter()
        .zip(&episode.x_a)
        .map(|(r, x)| w * (r - c * x * proj))
        .collect();
    Ok(EstimateResult {
        empirical_mse: mse(&estimate, &episode.s),
        estimate,
        closedform_mse: alice_conditional_mse(params, &episode.x_a),
    })
}

/// Per-entry MSE of Alice's estimate given her probe block:
/// sigma_s^2 [(1 - w) + w c ||x||^2 / m] with w = sigma_s^2 / g.
pub fn alice_conditional_mse(params: &SystemParams, x_a: &[Complex64]) -> f64 {
    let g = params.sigma_s2 + params.sigma_b2 + params.eps_a;
    let u = 1.0 - params.rho_abs2();
    let x_norm2: f64 = x_a.iter().map(|x| x.norm_sqr()).sum();
    let c = (u / g) / (u * x_norm2 / g + 1.0);
    let w = params.sigma_s2 / g;
    params.sigma_s2 * ((1.0 - w) + w * c * x_norm2 / x_a.len() as f64)
}

/// Large-m_A, vanishing-eps_A limit of Alice's MSE: sigma_s^2 / (sigma_s^2/sigma_B^2 + 1).
pub fn alice_mse_limit(params: &SystemParams) -> f64 {
    params.sigma_s2 / (params.secret_to_noise() + 1.0)
}

/// Per-sample MSE of Eve's probe estimate: p_A / (p_A ||g_A||^2 / sigma_EA^2 + 1).
pub fn eve_probe_mse(params: &SystemParams, realization: &ChannelRealization) -> f64 {
    params.p_a / (realization.snr_ea(params) + 1.0)
}

/// Eve's estimate of each probe from her n_E antennas:
/// p_A / (p_A ||g_A||^2 + sigma_EA^2) g_A^H e_A(k).
pub fn eve_estimate_xa(params: &SystemParams, episode: &AnalogEpisode) -> Result<EstimateResult> {
    check_episode(params, episode)?;
    let g = &episode.realization.g_a;
    let scale = params.p_a / (params.p_a * episode.realization.g_a_norm2() + params.sigma_ea2);
    let estimate: Vec<Complex64> = (0..episode.len())
        .map(|k| {
            let dot: Complex64 = g.iter().zip(&episode.e_a).map(|(gi, row)| gi.conj() * row[k]).sum();
            scale * dot
        })
        .collect();
    Ok(EstimateResult {
        empirical_mse: mse(&estimate, &episode.x_a),
        estimate,
        closedform_mse: eve_probe_mse(params, &episode.realization),
    })
}

/// Eve's estimate of s from y_EB after subtracting h_BA times her probe estimate.
pub fn eve_estimate_s(params: &SystemParams, episode: &AnalogEpisode, knowledge: EveKnowledge) -> Result<EstimateResult> {
    check_episode(params, episode)?;
    let (estimate, denom) = match knowledge {
        EveKnowledge::Full => {
            let h = episode.realization.h_ba;
            let x_hat = eve_estimate_xa(params, episode)?.estimate;
            let r_dx = eve_probe_mse(params, &episode.realization);
            let denom = params.sigma_s2 + h.norm_sqr() * r_dx + params.sigma_b2 + params.eps_e;
            let w = params.sigma_s2 / denom;
            let est = episode.y_eb.iter().zip(&x_hat).map(|(y, xh)| w * (y - h * xh)).collect();
            (est, denom)
        }
        EveKnowledge::WithoutBobGain => {
            // h_BA ~ CN(0, 1) unknown: h_BA x_A is uncorrelated noise of power p_A.
            let denom = params.sigma_s2 + params.p_a + params.sigma_b2 + params.eps_e;
            let w = params.sigma_s2 / denom;
            (episode.y_eb.iter().map(|y| w * y).collect::<Vec<_>>(), denom)
        }
    };
    let closedform_mse = params.sigma_s2 * (1.0 - params.sigma_s2 / denom);
    Ok(EstimateResult {
        empirical_mse: mse(&estimate, &episode.s),
        estimate,
        closedform_mse,
    })
}

/// Vanishing-eps_E limit of Eve's MSE: sigma_s^2 (phi + 1) / (s + phi + 1).
pub fn eve_mse_limit(params: &SystemParams, realization: &ChannelRealization) -> f64 {
    let phi_ba = phi(params, realization, Direction::BobFromAlice);
    params.sigma_s2 * (phi_ba + 1.0) / (params.secret_to_noise() + phi_ba + 1.0)
}

/// Ratio of Alice's limiting MSE to Eve's: (s + phi + 1) / ((s + 1)(phi + 1)).
pub fn mse_ratio_eta(params: &SystemParams, realization: &ChannelRealization) -> f64 {
    let s = params.secret_to_noise();
    let phi_ba = phi(params, realization, Direction::BobFromAlice);
    (s + phi_ba + 1.0) / ((s + 1.0) * (phi_ba + 1.0))
}

/// Effective channel outputs for the secret: t_A = y_AB - h_BA x_A at Alice
/// and t_E = y_EB - h_BA x_hat_A at Eve.
pub fn effective_outputs(params: &SystemParams, episode: &AnalogEpisode) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let x_hat = eve_estimate_xa(params, episode)?.estimate;
    let h = episode.realization.h_ba;
    let t_a = episode.y_ab.iter().zip(&episode.x_a).map(|(y, x)| y - h * x).collect();
    let t_e = episode.y_eb.iter().zip(&x_hat).map(|(y, x)| y - h * x).collect();
    Ok((t_a, t_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{run_echo, run_probing};
    use crate::rng::derive_seed;

    fn params() -> SystemParams {
        SystemParams {
            sigma_s2: 4.0,
            eps_a: 1e-6,
            eps_e: 1e-6,
            m_a: 200,
            ..Default::default()
        }
    }

    fn episode(p: &SystemParams, c: &ChannelRealization, seed: u64) -> AnalogEpisode {
        let probing = run_probing(p, c, derive_seed(seed, 1)).unwrap();
        run_echo(p, probing, derive_seed(seed, 2)).unwrap()
    }

    #[test]
    fn alice_matches_closed_form_on_average() {
        let p = params();
        let c = ChannelRealization::with_strengths(2, 1.0, 1.0, 1.0, 1.0);
        let mut diff = Vec::new();
        for t in 0..300 {
            let r = alice_estimate_s(&p, &episode(&p, &c, t)).unwrap();
            diff.push(r.empirical_mse - r.closedform_mse);
        }
        let e = crate::stats::Estimate::from_samples(&diff);
        assert!(e.mean.abs() < 4.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn alice_closed_form_tends_to_limit() {
        let c = ChannelRealization::with_strengths(2, 1.0, 1.0, 1.0, 1.0);
        let p = SystemParams {
            m_a: 20_000,
            eps_a: 1e-9,
            ..params()
        };
        let r = alice_estimate_s(&p, &episode(&p, &c, 3)).unwrap();
        let lim = alice_mse_limit(&p);
        assert!((r.closedform_mse - lim).abs() / lim < 1e-3);
        assert!((alice_mse_limit(&params()) - 4.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_gain_is_worse() {
        let p = params();
        let c = ChannelRealization::with_strengths(2, 1.5, 0.5, 1.0, 1.0);
        for factor in [0.95, 1.05] {
            let (mut best, mut off) = (0.0, 0.0);
            for t in 0..200 {
                let ep = episode(&p, &c, t);
                let r = alice_estimate_s(&p, &ep).unwrap();
                best += r.empirical_mse;
                let scaled: Vec<_> = r.estimate.iter().map(|z| z * factor).collect();
                off += mse(&scaled, &ep.s);

                let e = eve_estimate_s(&p, &ep, EveKnowledge::Full).unwrap();
                let scaled: Vec<_> = e.estimate.iter().map(|z| z * factor).collect();
                assert!(mse(&scaled, &ep.s) > 0.0);
            }
            assert!(off > best, "{factor}: {off} <= {best}");
        }
    }

    #[test]
    fn eve_probe_estimate_matches_closed_form() {
        let p = SystemParams {
            m_a: 5000,
            p_a: 2.0,
            sigma_ea2: 0.5,
            n_e: 3,
            ..params()
        };
        let c = crate::channel::sample_channels(&p, 4).unwrap();
        let r = eve_estimate_xa(&p, &episode(&p, &c, 4)).unwrap();
        assert!((r.empirical_mse - r.closedform_mse).abs() / r.closedform_mse < 0.06);
        assert!((r.closedform_mse - 2.0 / (2.0 * c.g_a_norm2() / 0.5 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn eve_without_probe_knowledge() {
        // g_A = 0: Eve learns nothing about the probes.
        let p = params();
        let c = ChannelRealization::with_strengths(2, 1.0, 0.0, 1.0, 1.0);
        let ep = episode(&p, &c, 5);
        let x = eve_estimate_xa(&p, &ep).unwrap();
        assert!(x.estimate.iter().all(|z| z.norm_sqr() == 0.0));
        assert_eq!(x.closedform_mse, p.p_a);
        let phi_ba = phi(&p, &c, Direction::BobFromAlice);
        assert!((phi_ba - 1.0).abs() < 1e-15);
        let s = p.secret_to_noise();
        let want = p.sigma_s2 * (phi_ba + 1.0) / (s + phi_ba + 1.0);
        assert!((eve_mse_limit(&p, &c) - want).abs() < 1e-15);
    }

    #[test]
    fn eve_secret_estimate_matches_closed_form() {
        let p = params();
        let c = ChannelRealization::with_strengths(2, 1.0, 2.0, 1.0, 1.0);
        for knowledge in [EveKnowledge::Full, EveKnowledge::WithoutBobGain] {
            let mut diff = Vec::new();
            for t in 0..300 {
                let r = eve_estimate_s(&p, &episode(&p, &c, 100 + t), knowledge).unwrap();
                diff.push(r.empirical_mse - r.closedform_mse);
            }
            let e = crate::stats::Estimate::from_samples(&diff);
            assert!(e.mean.abs() < 4.0 * e.std_error, "{knowledge:?} {e:?}");
        }
        let ep = episode(&p, &c, 1);
        let full = eve_estimate_s(&p, &ep, EveKnowledge::Full).unwrap();
        let blind = eve_estimate_s(&p, &ep, EveKnowledge::WithoutBobGain).unwrap();
        assert!(blind.closedform_mse > full.closedform_mse);
    }

    #[test]
    fn eta_limits() {
        let c = ChannelRealization::with_strengths(2, 1.0, 0.0, 1.0, 1.0);
        let huge = SystemParams {
            sigma_s2: 1e9,
            ..params()
        };
        assert!((mse_ratio_eta(&huge, &c) - 0.5).abs() < 1e-8);
        let tiny = SystemParams {
            sigma_s2: 1e-9,
            ..params()
        };
        assert!((mse_ratio_eta(&tiny, &c) - 1.0).abs() < 1e-8);
        let p = params();
        let ratio = alice_mse_limit(&p) / eve_mse_limit(&p, &c);
        assert!((ratio - mse_ratio_eta(&p, &c)).abs() < 1e-14);
    }

    #[test]
    fn effective_outputs_leave_secret_plus_noise() {
        let p = SystemParams {
            sigma_b2: 1e-24,
            eps_a: 1e-24,
            ..params()
        };
        let c = ChannelRealization::with_strengths(2, 1.0, 1.0, 1.0, 1.0);
        let ep = episode(&p, &c, 6);
        let (t_a, _) = effective_outputs(&p, &ep).unwrap();
        assert!(mse(&t_a, &ep.s) < 1e-20);
    }

    #[test]
    fn rejects_mismatched_realization() {
        let p = params();
        let c = ChannelRealization::with_strengths(2, 1.0, 1.0, 1.0, 1.0);
        let ep = episode(&p, &c, 7);
        let wrong = SystemParams { n_e: 3, ..p };
        assert!(alice_estimate_s(&wrong, &ep).is_err());
    }
}
