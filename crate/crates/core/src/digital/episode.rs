use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::bits::Bits;
use super::bsc::BscParams;
use crate::error::{Error, Result};
use crate::rng::{stream, Role};

/// One run of the bit-level protocol.
///
/// Bob echoes `b_r = b_s ^ b_BA`; Alice forms `bbar_AB = b_AB ^ b_A`, Eve
/// forms `bbar_EB = b_EB ^ b_EA`. Keys stay empty until reconciliation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitalEpisode {
    pub b_a: Bits,
    pub b_ba: Bits,
    pub b_ea: Bits,
    pub b_s: Bits,
    pub b_r: Bits,
    pub b_ab: Bits,
    pub b_eb: Bits,
    pub bbar_ab: Bits,
    pub bbar_eb: Bits,
    pub key_a: Bits,
    pub key_b: Bits,
}

impl DigitalEpisode {
    pub fn len(&self) -> usize {
        self.b_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b_a.is_empty()
    }

    /// Empirical error rates of Alice's and Eve's effective outputs against b_s.
    pub fn empirical_rates(&self) -> (f64, f64) {
        (self.bbar_ab.error_rate(&self.b_s), self.bbar_eb.error_rate(&self.b_s))
    }
}

pub fn run_digital_episode(bsc: &BscParams, rng_seed: u64) -> Result<DigitalEpisode> {
    bsc.check()?;
    let m = bsc.m_a;
    let b_a = Bits::random(&mut stream(rng_seed, Role::ProbeBits), m);
    let w_ba = Bits::flips(&mut stream(rng_seed, Role::BobFlips), m, bsc.p_ba)?;
    let w_ea = Bits::flips(&mut stream(rng_seed, Role::EveFlips), m, bsc.p_ea)?;
    let b_s = Bits::random(&mut stream(rng_seed, Role::SecretBits), m);
    let w_ab = Bits::flips(&mut stream(rng_seed, Role::AliceReturnFlips), m, bsc.p_ab)?;
    let w_eb = Bits::flips(&mut stream(rng_seed, Role::EveReturnFlips), m, bsc.p_eb)?;

    let b_ba = b_a.xor(&w_ba);
    let b_ea = b_a.xor(&w_ea);
    let b_r = b_s.xor(&b_ba);
    let b_ab = b_r.xor(&w_ab);
    let b_eb = b_r.xor(&w_eb);
    let bbar_ab = b_ab.xor(&b_a);
    let bbar_eb = b_eb.xor(&b_ea);
    Ok(DigitalEpisode {
        b_a,
        b_ba,
        b_ea,
        b_s,
        b_r,
        b_ab,
        b_eb,
        bbar_ab,
        bbar_eb,
        key_a: Bits::default(),
        key_b: Bits::default(),
    })
}

/// A uniformly random permutation of 0..n from a shared public seed.
pub fn permutation(n: usize, shared_seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(shared_seed, Role::Permutation));
    idx
}

/// Replace lost bits by private fair coin flips, then reorder all bits by
/// the shared permutation: output bit i is input bit `perm[i]`.
///
/// The fill must come from the receiver's own randomness: filling from a
/// public seed would let anyone reproduce the filler bits.
pub fn reorder_bits(received: &Bits, loss_mask: &[bool], shared_seed: u64, private_seed: u64) -> Result<Bits> {
    if loss_mask.len() != received.len() {
        return Err(Error::InvalidParam(format!(
            "loss mask has {} entries for {} bits",
            loss_mask.len(),
            received.len()
        )));
    }
    let fill = Bits::random(&mut stream(private_seed, Role::LossFill), received.len());
    let filled: Vec<u8> = (0..received.len())
        .map(|i| if loss_mask[i] { fill[i] } else { received[i] })
        .collect();
    let perm = permutation(received.len(), shared_seed);
    Bits::from_vec(perm.iter().map(|&j| filled[j]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_pipeline_identities() {
        let bsc = BscParams {
            p_ab: 0.01,
            p_eb: 0.02,
            m_a: 2000,
            ..Default::default()
        };
        let ep = run_digital_episode(&bsc, 3).unwrap();
        let w_ba = ep.b_ba.xor(&ep.b_a);
        let w_ab = ep.b_ab.xor(&ep.b_r);
        assert_eq!(ep.b_r, ep.b_s.xor(&ep.b_ba));
        assert_eq!(ep.bbar_ab, ep.b_ab.xor(&ep.b_a));
        assert_eq!(ep.bbar_eb, ep.b_eb.xor(&ep.b_ea));
        assert_eq!(ep.bbar_ab, ep.b_s.xor(&w_ba).xor(&w_ab));
        assert_eq!(ep.len(), 2000);
    }

    #[test]
    fn noiseless_channels_deliver_the_secret() {
        let bsc = BscParams {
            p_ba: 0.0,
            p_ea: 0.0,
            m_a: 500,
            ..Default::default()
        };
        let ep = run_digital_episode(&bsc, 1).unwrap();
        assert_eq!(ep.bbar_ab, ep.b_s);
    }

    #[test]
    fn empirical_rates_converge() {
        let bsc = BscParams {
            m_a: 100_000,
            ..Default::default()
        };
        let (a, e) = run_digital_episode(&bsc, 11).unwrap().empirical_rates();
        assert!((a - 0.1).abs() < 0.003, "{a}");
        assert!((e - 0.26).abs() < 0.005, "{e}");
    }

    #[test]
    fn deterministic_under_seed() {
        let bsc = BscParams {
            m_a: 300,
            ..Default::default()
        };
        assert_eq!(run_digital_episode(&bsc, 5).unwrap(), run_digital_episode(&bsc, 5).unwrap());
        assert_ne!(run_digital_episode(&bsc, 5).unwrap(), run_digital_episode(&bsc, 6).unwrap());
    }

    #[test]
    fn reorder_without_loss_is_a_permutation() {
        let ep = run_digital_episode(&BscParams { m_a: 1000, ..Default::default() }, 2).unwrap();
        let out = reorder_bits(&ep.bbar_ab, &[false; 1000], 9, 10).unwrap();
        assert_eq!(out.weight(), ep.bbar_ab.weight());
        let perm = permutation(1000, 9);
        assert_eq!(perm, permutation(1000, 9));
        let undone: Vec<u8> = {
            let mut v = vec![0; 1000];
            for (i, &j) in perm.iter().enumerate() {
                v[j] = out[i];
            }
            v
        };
        assert_eq!(undone, ep.bbar_ab.as_slice());
    }

    #[test]
    fn half_loss_gives_quarter_error_rate() {
        let n = 100_000;
        let truth = Bits::random(&mut stream(1, Role::SecretBits), n);
        // Packets of 100 bits, every other one lost.
        let mask: Vec<bool> = (0..n).map(|i| (i / 100) % 2 == 1).collect();
        let shared = 77;
        let got = reorder_bits(&truth, &mask, shared, 78).unwrap();
        let perm = permutation(n, shared);
        let want = Bits::from_vec(perm.iter().map(|&j| truth[j]).collect()).unwrap();
        let rate = got.error_rate(&want);
        let sd = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((rate - 0.25).abs() < 4.0 * sd, "{rate}");
    }

    #[test]
    fn mask_length_must_match() {
        assert!(reorder_bits(&Bits::zeros(4), &[false; 3], 1, 2).is_err());
    }
}
