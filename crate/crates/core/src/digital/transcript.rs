//! Binary layout of a [`DigitalEpisode`].
//!
//! ```text
//! magic    8 bytes  "STEEPDG1"
//! version  u32 LE   1
//! then, for each of b_a, b_ba, b_ea, b_s, b_r, b_ab, b_eb, bbar_ab, bbar_eb,
//! key_a, key_b in this order:
//!   len    u64 LE   number of bits
//!   data   ceil(len / 8) bytes, bit i in byte i/8 at position i%8
//! ```

use super::bits::Bits;
use super::episode::DigitalEpisode;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"STEEPDG1";
const VERSION: u32 = 1;

fn fields(ep: &DigitalEpisode) -> [&Bits; 11] {
    [
        &ep.b_a, &ep.b_ba, &ep.b_ea, &ep.b_s, &ep.b_r, &ep.b_ab, &ep.b_eb, &ep.bbar_ab, &ep.bbar_eb, &ep.key_a,
        &ep.key_b,
    ]
}

pub fn to_bytes(ep: &DigitalEpisode) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for bits in fields(ep) {
        out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
        out.extend_from_slice(&bits.pack());
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Transcript(format!("truncated at byte {}", self.pos)))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn bits(&mut self) -> Result<Bits> {
        let len = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        let len = usize::try_from(len).map_err(|_| Error::Transcript("length overflow".into()))?;
        let bytes = self.take(len.div_ceil(8))?;
        Bits::unpack(bytes, len)
    }
}

pub fn from_bytes(data: &[u8]) -> Result<DigitalEpisode> {
    let mut r = Reader { data, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Transcript("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Transcript(format!("unsupported version {version}")));
    }
    let ep = DigitalEpisode {
        b_a: r.bits()?,
        b_ba: r.bits()?,
        b_ea: r.bits()?,
        b_s: r.bits()?,
        b_r: r.bits()?,
        b_ab: r.bits()?,
        b_eb: r.bits()?,
        bbar_ab: r.bits()?,
        bbar_eb: r.bits()?,
        key_a: r.bits()?,
        key_b: r.bits()?,
    };
    if r.pos != data.len() {
        return Err(Error::Transcript(format!("{} trailing bytes", data.len() - r.pos)));
    }
    Ok(ep)
}

/// Lowercase hex of the binary layout, 32 bytes per line.
pub fn hex_dump(ep: &DigitalEpisode) -> String {
    to_bytes(ep)
        .chunks(32)
        .map(|line| line.iter().map(|b| format!("{b:02x}")).collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}
