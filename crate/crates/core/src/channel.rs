//! Channel sampling and the analog probe/echo simulator.
//!
//! Probing: `y_B(k) = h_BA x_A(k) + w_B(k)` at Bob, `e_A(k) = g_A x_A(k) + w_EA(k)`
//! at Eve. Echo: Bob sends `r(k) = y_B(k) + s(k)`; the return paths are
//! unit-gain with additive noise, `y_AB = r + v_A` and `y_EB = r + v_E`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ChannelRealization, SystemParams};
use crate::rng::{complex_normal, complex_normal_vec, derive_seed, stream, Role};

/// Draw `(h_AB, h_BA)` with unit variances and E{h_AB conj(h_BA)} = rho, and
/// Eve's gain vectors i.i.d. CN(0, 1), independent of the reciprocal pair.
pub fn sample_channels(params: &SystemParams, rng_seed: u64) -> Result<ChannelRealization> {
    params.check()?;
    Ok(draw_channels(params, rng_seed))
}

fn draw_channels(params: &SystemParams, seed: u64) -> ChannelRealization {
    let mut pair = stream(seed, Role::ReciprocalPair);
    let h_ab = complex_normal(&mut pair, 1.0);
    let w = complex_normal(&mut pair, 1.0);
    let rho = params.rho_complex();
    let h_ba = rho.conj() * h_ab + (1.0 - rho.norm_sqr()).sqrt() * w;
    let g_a = complex_normal_vec(&mut stream(seed, Role::EveGainA), 1.0, params.n_e);
    let g_b = complex_normal_vec(&mut stream(seed, Role::EveGainB), 1.0, params.n_e);
    ChannelRealization { h_ab, h_ba, g_a, g_b }
}

/// `n_draws` independent realizations; draw `i` uses sub-seed
/// `derive_seed(seed, i)`, so the batch is identical for any worker count.
pub fn sample_channel_batch(params: &SystemParams, n_draws: usize, seed: u64) -> Result<Vec<ChannelRealization>> {
    params.check()?;
    Ok((0..n_draws as u64)
        .into_par_iter()
        .map(|i| draw_channels(params, derive_seed(seed, i)))
        .collect())
}

/// Phase-1 trace: Alice's probes and what Bob and Eve received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingEpisode {
    pub realization: ChannelRealization,
    pub x_a: Vec<Complex64>,
    pub y_b: Vec<Complex64>,
    /// Eve's probe receptions, one row per antenna (n_E x m_A).
    pub e_a: Vec<Vec<Complex64>>,
}

/// Full analog round: probing plus Bob's echo and both return receptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogEpisode {
    pub realization: ChannelRealization,
    pub x_a: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub y_b: Vec<Complex64>,
    pub e_a: Vec<Vec<Complex64>>,
    pub r: Vec<Complex64>,
    pub y_ab: Vec<Complex64>,
    pub y_eb: Vec<Complex64>,
}

pub fn run_probing(params: &SystemParams, realization: &ChannelRealization, rng_seed: u64) -> Result<ProbingEpisode> {
    params.check()?;
    realization.check_lengths(params)?;
    let m = params.m_a;
    if m == 0 {
        return Err(Error::NothingToProbe);
    }
    let x_a = complex_normal_vec(&mut stream(rng_seed, Role::Probe), params.p_a, m);
    let w_b = complex_normal_vec(&mut stream(rng_seed, Role::BobProbeNoise), params.sigma_b2, m);
    let y_b = x_a.iter().zip(&w_b).map(|(x, w)| realization.h_ba * x + w).collect();

    let mut eve_noise = stream(rng_seed, Role::EveProbeNoise);
    let e_a = realization
        .g_a
        .iter()
        .map(|g| {
            x_a.iter()
                .map(|x| g * x + complex_normal(&mut eve_noise, params.sigma_ea2))
                .collect()
        })
        .collect();

    Ok(ProbingEpisode {
        realization: realization.clone(),
        x_a,
        y_b,
        e_a,
    })
}

/// Bob's echo `r = y_B + s` and its receptions at Alice and Eve.
pub fn run_echo(params: &SystemParams, probing: ProbingEpisode, rng_seed: u64) -> Result<AnalogEpisode> {
    params.check()?;
    if !(params.eps_a > 0.0) {
        return Err(Error::ReturnNoise("eps_A must be > 0"));
    }
    if !(params.eps_e > 0.0) {
        return Err(Error::ReturnNoise("eps_E must be > 0"));
    }
    let m = probing.x_a.len();
    if m == 0 {
        return Err(Error::NothingToProbe);
    }
    let s = complex_normal_vec(&mut stream(rng_seed, Role::Secret), params.sigma_s2, m);
    let r: Vec<Complex64> = probing.y_b.iter().zip(&s).map(|(y, s)| y + s).collect();
    let mut va = stream(rng_seed, Role::AliceReturnNoise);
    let mut ve = stream(rng_seed, Role::EveReturnNoise);
    let y_ab = r.iter().map(|r| r + complex_normal(&mut va, params.eps_a)).collect();
    let y_eb = r.iter().map(|r| r + complex_normal(&mut ve, params.eps_e)).collect();

    Ok(AnalogEpisode {
        realization: probing.realization,
        x_a: probing.x_a,
        s,
        y_b: probing.y_b,
        e_a: probing.e_a,
        r,
        y_ab,
        y_eb,
    })
}

/// Channels, probing and echo in one call, with role seeds derived from
/// `rng_seed`.
pub fn simulate_analog(params: &SystemParams, rng_seed: u64) -> Result<AnalogEpisode> {
    let realization = sample_channels(params, derive_seed(rng_seed, 0))?;
    let probing = run_probing(params, &realization, derive_seed(rng_seed, 1))?;
    run_echo(params, probing, derive_seed(rng_seed, 2))
}

impl AnalogEpisode {
    pub fn len(&self) -> usize {
        self.x_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_a.is_empty()
    }

    /// Column names of [`AnalogEpisode::to_csv`].
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["k".to_string()];
        for name in ["x_a", "s", "y_b", "r", "y_ab", "y_eb"] {
            cols.push(format!("{name}_re"));
            cols.push(format!("{name}_im"));
        }
        for i in 0..self.e_a.len() {
            cols.push(format!("e_a{i}_re"));
            cols.push(format!("e_a{i}_im"));
        }
        cols.join(",")
    }

    /// One row per symbol index k: re/im of x_A, s, y_B, r, y_AB, y_EB, then
    /// re/im of each of Eve's antennas.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(out, "{k}");
            for v in [&self.x_a, &self.s, &self.y_b, &self.r, &self.y_ab, &self.y_eb] {
                let _ = write!(out, ",{},{}", v[k].re, v[k].im);
            }
            for row in &self.e_a {
                let _ = write!(out, ",{},{}", row[k].re, row[k].im);
            }
            out.push('\n');
        }
        out
    }
}

pub fn mean_power(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams {
            eps_a: 1e-3,
            eps_e: 1e-3,
            ..Default::default()
        }
    }

    /// E{a conj(b)} over a batch.
    fn cross(params: &SystemParams, n: usize, seed: u64) -> Complex64 {
        let batch = sample_channel_batch(params, n, seed).unwrap();
        batch.iter().map(|c| c.h_ab * c.h_ba.conj()).sum::<Complex64>() / n as f64
    }

    #[test]
    fn near_perfect_correlation_copies_the_gain() {
        let p = SystemParams {
            rho: 1.0 - 1e-12,
            ..params()
        };
        for seed in 0..200 {
            let c = sample_channels(&p, seed).unwrap();
            assert!((c.h_ba - c.h_ab).norm() < 1e-5);
        }
    }

    #[test]
    fn uncorrelated_pair() {
        let p = SystemParams { rho: 0.0, ..params() };
        let c = cross(&p, 100_000, 11);
        assert!(c.norm() < 0.02, "{c}");
    }

    #[test]
    fn correlation_matches_rho() {
        let c = cross(&params(), 100_000, 12);
        assert!((c.re - 0.5).abs() < 0.02 && c.im.abs() < 0.02, "{c}");
        let p = SystemParams {
            rho_phase: 1.0,
            ..params()
        };
        let c = cross(&p, 100_000, 13);
        let want = p.rho_complex();
        assert!((c - want).norm() < 0.02, "{c} vs {want}");
    }

    #[test]
    fn gain_vectors_have_eve_length() {
        let p = SystemParams { n_e: 5, ..params() };
        for c in sample_channel_batch(&p, 50, 1).unwrap() {
            c.check_lengths(&p).unwrap();
        }
    }

    #[test]
    fn noiseless_probe_reveals_gain() {
        let p = SystemParams {
            sigma_b2: 1e-12,
            m_a: 64,
            ..params()
        };
        let c = sample_channels(&p, 4).unwrap();
        let ep = run_probing(&p, &c, 5).unwrap();
        for (x, y) in ep.x_a.iter().zip(&ep.y_b) {
            assert!((y / x - c.h_ba).norm() < 1e-4);
        }
    }

    #[test]
    fn probe_reception_power_and_snr() {
        let p = SystemParams {
            m_a: 100_000,
            ..params()
        };
        let c = sample_channels(&p, 21).unwrap();
        let ep = run_probing(&p, &c, 22).unwrap();
        let want = c.h_ba.norm_sqr() + 1.0;
        let got = mean_power(&ep.y_b);
        assert!((got - want).abs() / want < 0.02, "{got} vs {want}");

        let signal: Vec<Complex64> = ep.x_a.iter().map(|x| c.h_ba * x).collect();
        let noise: Vec<Complex64> = ep.y_b.iter().zip(&signal).map(|(y, s)| y - s).collect();
        let snr = mean_power(&signal) / mean_power(&noise);
        let want = c.snr_ba(&p);
        assert!((snr - want).abs() / want < 0.02, "{snr} vs {want}");
        assert_eq!(ep.e_a.len(), p.n_e);
        assert!(ep.e_a.iter().all(|row| row.len() == p.m_a));
    }

    #[test]
    fn zero_probes_is_an_error() {
        let p = SystemParams { m_a: 0, ..params() };
        let c = sample_channels(&p, 1).unwrap();
        assert!(matches!(run_probing(&p, &c, 1), Err(Error::NothingToProbe)));
    }

    #[test]
    fn echo_requires_return_noise() {
        let p = params();
        let c = sample_channels(&p, 1).unwrap();
        let ep = run_probing(&p, &c, 2).unwrap();
        let bad = SystemParams { eps_a: 0.0, ..p.clone() };
        assert!(matches!(run_echo(&bad, ep.clone(), 3), Err(Error::ReturnNoise(_))));
        let bad = SystemParams { eps_e: 0.0, ..p };
        assert!(matches!(run_echo(&bad, ep, 3), Err(Error::ReturnNoise(_))));
    }

    #[test]
    fn echo_structure_and_powers() {
        let p = SystemParams {
            m_a: 100_000,
            eps_a: 1e-6,
            sigma_s2: 2.0,
            ..params()
        };
        let c = sample_channels(&p, 31).unwrap();
        let ep = run_echo(&p, run_probing(&p, &c, 32).unwrap(), 33).unwrap();
        for k in 0..ep.len() {
            assert_eq!(ep.r[k], ep.y_b[k] + ep.s[k]);
        }
        let want = c.h_ba.norm_sqr() * p.p_a + p.sigma_b2 + p.sigma_s2;
        let got = mean_power(&ep.r);
        assert!((got - want).abs() / want < 0.02, "{got} vs {want}");

        let va: Vec<Complex64> = ep.y_ab.iter().zip(&ep.r).map(|(y, r)| y - r).collect();
        let got = mean_power(&va);
        assert!((got - 1e-6).abs() / 1e-6 < 0.05, "{got}");

        // x_A and s are independent: |mean(x conj(s))| within 3 sigma.
        let xs = ep.x_a.iter().zip(&ep.s).map(|(x, s)| x * s.conj()).sum::<Complex64>() / ep.len() as f64;
        let sd = (p.p_a * p.sigma_s2 / ep.len() as f64).sqrt();
        assert!(xs.norm() < 3.0 * sd, "{xs}");
    }

    #[test]
    fn tiny_secret_leaves_the_probe_echo() {
        let p = SystemParams {
            sigma_s2: 1e-14,
            m_a: 32,
            ..params()
        };
        let ep = simulate_analog(&p, 9).unwrap();
        let va = complex_normal_vec(&mut stream(derive_seed(9, 2), Role::AliceReturnNoise), p.eps_a, p.m_a);
        for k in 0..p.m_a {
            assert!((ep.y_ab[k] - (ep.y_b[k] + va[k])).norm() < 1e-6);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = SystemParams { m_a: 50, ..params() };
        assert_eq!(simulate_analog(&p, 77).unwrap(), simulate_analog(&p, 77).unwrap());
        assert_ne!(simulate_analog(&p, 77).unwrap(), simulate_analog(&p, 78).unwrap());
        assert_eq!(
            sample_channel_batch(&p, 100, 3).unwrap(),
            (0..100).map(|i| sample_channels(&p, derive_seed(3, i)).unwrap()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn csv_layout() {
        let p = SystemParams { m_a: 3, n_e: 2, ..params() };
        let ep = simulate_analog(&p, 1).unwrap();
        let csv = ep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("k,x_a_re,x_a_im,s_re,s_im,y_b_re"));
        assert!(lines[0].ends_with("e_a1_re,e_a1_im"));
        assert_eq!(lines[1].split(',').count(), 1 + 12 + 4);
        let first: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(first, ep.x_a[0].re);
    }
}
