//! Toeplitz hashing over GF(2).

use rand::RngCore;

use super::bits::Bits;
use crate::rng::{stream, Role};

/// An `out_len x in_len` binary Toeplitz matrix defined by
/// `in_len + out_len - 1` seed bits: entry (j, i) is `t[j - i + in_len - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    in_len: usize,
    out_len: usize,
    diag: Vec<u64>,
}

impl ToeplitzHash {
    pub fn new(in_len: usize, out_len: usize, seed: u64) -> Self {
        Self::with_role(in_len, out_len, seed, Role::PrivacyHash)
    }

    pub(crate) fn with_role(in_len: usize, out_len: usize, seed: u64, role: Role) -> Self {
        let n_bits = (in_len + out_len).saturating_sub(1);
        // One spare word so window reads never run off the end.
        let mut diag = vec![0u64; n_bits.div_ceil(64) + 1];
        let mut rng = stream(seed, role);
        for w in diag.iter_mut().take(n_bits.div_ceil(64)) {
            *w = rng.next_u64();
        }
        if n_bits % 64 != 0 {
            let last = n_bits / 64;
            diag[last] &= (1u64 << (n_bits % 64)) - 1;
        }
        ToeplitzHash { in_len, out_len, diag }
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    /// `out_len` consecutive diagonal bits starting at `start`, packed LSB-first.
    fn window(&self, start: usize, out: &mut [u64]) {
        let (word, off) = (start / 64, start % 64);
        for (k, o) in out.iter_mut().enumerate() {
            let lo = self.diag[word + k] >> off;
            let hi = if off == 0 {
                0
            } else {
                self.diag.get(word + k + 1).copied().unwrap_or(0) << (64 - off)
            };
            *o ^= lo | hi;
        }
    }

    pub fn hash(&self, input: &Bits) -> Bits {
        assert_eq!(input.len(), self.in_len, "hash input length");
        let words = self.out_len.div_ceil(64);
        let mut acc = vec![0u64; words];
        let mut col = vec![0u64; words];
        for i in 0..self.in_len {
            if input[i] == 1 {
                col.iter_mut().for_each(|w| *w = 0);
                self.window(self.in_len - 1 - i, &mut col);
                acc.iter_mut().zip(&col).for_each(|(a, c)| *a ^= c);
            }
        }
        Bits::from_words(&acc, self.out_len)
    }
}
