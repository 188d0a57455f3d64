use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bit vector stored one bit per byte (each entry 0 or 1).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bits(Vec<u8>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![0; len])
    }

    /// Build from 0/1 bytes; anything else is an error.
    pub fn from_vec(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidParam(format!("bit {pos} is {} (expected 0 or 1)", bits[pos])));
        }
        Ok(Bits(bits))
    }

    /// Fair coin flips.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        Bits((0..len).map(|_| rng.random::<bool>() as u8).collect())
    }

    /// I.i.d. Bernoulli(p) bits, used as BSC error patterns.
    pub fn flips<R: Rng + ?Sized>(rng: &mut R, len: usize, p: f64) -> Result<Self> {
        let dist = Bernoulli::new(p).map_err(|_| Error::InvalidProbability(p))?;
        Ok(Bits((0..len).map(|_| dist.sample(rng) as u8).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len(), other.len(), "xor of unequal lengths");
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    pub fn weight(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    /// Fraction of positions where the two vectors differ.
    pub fn error_rate(&self, other: &Bits) -> f64 {
        self.xor(other).weight() as f64 / self.len() as f64
    }

    /// Pack LSB-first: bit i goes to byte i/8, position i%8.
    pub fn pack(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len().div_ceil(8)];
        for (i, &b) in self.0.iter().enumerate() {
            out[i / 8] |= b << (i % 8);
        }
        out
    }

    pub fn unpack(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Transcript(format!(
                "{} bits need {} bytes, got {}",
                len,
                len.div_ceil(8),
                bytes.len()
            )));
        }
        Ok(Bits((0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect()))
    }

    /// Pack into 64-bit words, LSB-first.
    pub fn to_words(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.len().div_ceil(64)];
        for (i, &b) in self.0.iter().enumerate() {
            out[i / 64] |= (b as u64) << (i % 64);
        }
        out
    }

    pub fn from_words(words: &[u64], len: usize) -> Self {
        Bits((0..len).map(|i| ((words[i / 64] >> (i % 64)) & 1) as u8).collect())
    }

    pub fn to_hex(&self) -> String {
        self.pack().iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl std::ops::Index<usize> for Bits {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl From<&[bool]> for Bits {
    fn from(v: &[bool]) -> Self {
        Bits(v.iter().map(|&b| b as u8).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pack_layout_is_lsb_first() {
        let b = Bits::from_vec(vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        assert_eq!(b.pack(), vec![0x01, 0x02]);
        assert_eq!(b.to_hex(), "0102");
    }

    #[test]
    fn rejects_non_bits() {
        assert!(Bits::from_vec(vec![0, 2]).is_err());
        assert!(Bits::unpack(&[0], 9).is_err());
    }

    proptest! {
        #[test]
        fn pack_round_trips(v in proptest::collection::vec(0u8..2, 0..300)) {
            let b = Bits::from_vec(v).unwrap();
            prop_assert_eq!(Bits::unpack(&b.pack(), b.len()).unwrap(), b.clone());
            prop_assert_eq!(Bits::from_words(&b.to_words(), b.len()), b);
        }
    }
}
