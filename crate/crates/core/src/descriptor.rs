//! Fixed-width binary descriptors and the Hamming kernel.

use std::fmt;

use crate::error::{Error, Result};

/// Width of every descriptor handled by the engine.
pub const DESCRIPTOR_BITS: usize = 256;
const WORDS: usize = DESCRIPTOR_BITS / 64;
/// Number of hex characters in the textual form.
pub const DESCRIPTOR_HEX_LEN: usize = DESCRIPTOR_BITS / 4;

/// A 256-bit binary descriptor. Bit `i` lives in word `i / 64`, position `i % 64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Descriptor([u64; WORDS]);

impl Descriptor {
    pub const fn zeros() -> Self {
        Descriptor([0; WORDS])
    }

    pub const fn ones() -> Self {
        Descriptor([u64::MAX; WORDS])
    }

    pub const fn from_words(words: [u64; WORDS]) -> Self {
        Descriptor(words)
    }

    pub fn words(&self) -> &[u64; WORDS] {
        &self.0
    }

    pub fn from_bytes(bytes: &[u8; DESCRIPTOR_BITS / 8]) -> Self {
        let mut words = [0u64; WORDS];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        }
        Descriptor(words)
    }

    pub fn to_bytes(&self) -> [u8; DESCRIPTOR_BITS / 8] {
        let mut out = [0u8; DESCRIPTOR_BITS / 8];
        for (chunk, w) in out.chunks_exact_mut(8).zip(self.0.iter()) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.0[i / 64] |= mask;
        } else {
            self.0[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip_bit(&mut self, i: usize) {
        self.0[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    /// Lower-case hex of the little-endian byte form, 64 characters.
    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s.len() != DESCRIPTOR_HEX_LEN {
            return Err(Error::Format(format!(
                "descriptor must have {} hex characters, got {}",
                DESCRIPTOR_HEX_LEN,
                s.len()
            )));
        }
        let mut bytes = [0u8; DESCRIPTOR_BITS / 8];
        hex::decode_to_slice(s, &mut bytes).map_err(|e| Error::Format(format!("bad descriptor hex: {e}")))?;
        Ok(Descriptor::from_bytes(&bytes))
    }
}

impl fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Descriptor({})", self.to_hex())
    }
}

/// Number of differing bits.
#[inline]
pub fn hamming(a: &Descriptor, b: &Descriptor) -> u32 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// `1 - hamming / 256`, in `[0, 1]`.
#[inline]
pub fn similarity(a: &Descriptor, b: &Descriptor) -> f64 {
    1.0 - hamming(a, b) as f64 / DESCRIPTOR_BITS as f64
}

/// Per-bit vote counter used to form majority centroids.
#[derive(Clone, Debug)]
pub struct BitCounter {
    counts: [u32; DESCRIPTOR_BITS],
    total: u32,
}

impl Default for BitCounter {
    fn default() -> Self {
        BitCounter {
            counts: [0; DESCRIPTOR_BITS],
            total: 0,
        }
    }
}

impl BitCounter {
    pub fn add(&mut self, d: &Descriptor) {
        for (w, word) in d.0.iter().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                self.counts[w * 64 + b] += 1;
                bits &= bits - 1;
            }
        }
        self.total += 1;
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    /// Bitwise majority; ties resolve to 1.
    pub fn majority(&self) -> Descriptor {
        let mut out = Descriptor::zeros();
        for (i, &c) in self.counts.iter().enumerate() {
            if self.total > 0 && 2 * c >= self.total {
                out.set_bit(i, true);
            }
        }
        out
    }
}

/// Bitwise majority of a set of descriptors, ties toward 1.
pub fn majority<'a, I>(items: I) -> Descriptor
where
    I: IntoIterator<Item = &'a Descriptor>,
{
    let mut counter = BitCounter::default();
    for d in items {
        counter.add(d);
    }
    counter.majority()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_complement() {
        let a = Descriptor::from_words([0xdead_beef, 7, 0, u64::MAX]);
        assert_eq!(hamming(&a, &a), 0);
        assert_eq!(hamming(&Descriptor::ones(), &Descriptor::zeros()), 256);
    }

    #[test]
    fn constructed_three_bits() {
        let a = Descriptor::zeros();
        let mut b = a;
        for i in [0, 7, 130] {
            b.flip_bit(i);
        }
        assert_eq!(hamming(&a, &b), 3);
        assert_eq!(hamming(&b, &a), 3);
    }

    #[test]
    fn majority_ties_to_one() {
        let a = Descriptor::zeros();
        let b = Descriptor::ones();
        assert_eq!(majority([&a, &b]), Descriptor::ones());
        assert_eq!(majority([&a, &a, &b]), Descriptor::zeros());
        assert_eq!(majority(std::iter::empty()), Descriptor::zeros());
    }

    #[test]
    fn hex_rejects_bad_input() {
        assert!(Descriptor::from_hex("00").is_err());
        assert!(Descriptor::from_hex(&"zz".repeat(32)).is_err());
    }

    fn arb_desc() -> impl Strategy<Value = Descriptor> {
        any::<[u64; 4]>().prop_map(Descriptor::from_words)
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric(a in arb_desc(), b in arb_desc(), c in arb_desc()) {
            let ab = hamming(&a, &b);
            prop_assert_eq!(ab, hamming(&b, &a));
            prop_assert!(ab <= 256);
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(hamming(&a, &c) <= ab + hamming(&b, &c));
            let s = similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn hex_round_trip(a in arb_desc()) {
            prop_assert_eq!(Descriptor::from_hex(&a.to_hex()).unwrap(), a);
        }
    }
}
