//! Packed binary sample sequences.
//!
//! Every waveform in the toolkit is a sequence of 0/1 samples, one per
//! simulation cycle, stored 64 samples per word. Sample `i` lives in bit
//! `i % 64` of word `i / 64`, which matches the on-disk row layout
//! (LSB-first within each byte).

/// A packed sequence of binary samples.
///
/// Invariant: bits at positions `>= len` in the last word are always zero,
/// so whole-word population counts never see garbage.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(len: usize) -> Self {
        Bits {
            words: Vec::with_capacity(len.div_ceil(64)),
            len: 0,
        }
    }

    /// All-zero sequence of the given length.
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(samples: &[bool]) -> Self {
        let mut b = Bits::with_capacity(samples.len());
        for &s in samples {
            b.push(s);
        }
        b
    }

    /// Parses a `"0101..."` string; only `0` and `1` are accepted.
    pub fn from_bitstring(s: &str) -> Option<Self> {
        let mut b = Bits::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => b.push(false),
                '1' => b.push(true),
                _ => return None,
            }
        }
        Some(b)
    }

    /// Rebuilds a sequence from `len` bits packed LSB-first in `bytes`.
    pub fn from_packed_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (i, &byte) in bytes.iter().enumerate() {
            words[i / 8] |= (byte as u64) << ((i % 8) * 8);
        }
        let mut b = Bits { words, len };
        b.mask_tail();
        Some(b)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().unwrap() |= 1u64 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {} out of range {}", i, self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len);
        if bit {
            self.words[i / 64] |= 1u64 << (i % 64);
        } else {
            self.words[i / 64] &= !(1u64 << (i % 64));
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Builds a sequence directly from packed words; tail bits are cleared.
    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        assert_eq!(words.len(), len.div_ceil(64));
        let mut b = Bits { words, len };
        b.mask_tail();
        b
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_zeros(&self) -> usize {
        self.len - self.count_ones()
    }

    /// Number of positions `i` with `self[i] != self[i+1]`.
    pub fn count_adjacent_diffs(&self) -> usize {
        self.adjacent_xor().map_or(0, |d| d.count_ones())
    }

    /// Pairwise XOR of adjacent samples: result bit `i` is `self[i] ^ self[i+1]`.
    /// Returns `None` when the sequence has fewer than two samples.
    pub fn adjacent_xor(&self) -> Option<Bits> {
        if self.len < 2 {
            return None;
        }
        let out_len = self.len - 1;
        let mut out = vec![0u64; out_len.div_ceil(64)];
        for (k, slot) in out.iter_mut().enumerate() {
            let w = self.words[k];
            let hi = self.words.get(k + 1).copied().unwrap_or(0);
            let shifted = (w >> 1) | (hi << 63);
            *slot = w ^ shifted;
        }
        Some(Bits::from_words(out, out_len))
    }

    /// Joint occurrence counts for two equal-length sequences, indexed as
    /// `[n00, n01, n10, n11]` where the first bit is `self` and the second
    /// is `other`.
    pub fn pair_counts(&self, other: &Bits) -> [usize; 4] {
        assert_eq!(self.len, other.len, "pair_counts length mismatch");
        let mut n11 = 0usize;
        let mut n10 = 0usize;
        let mut n01 = 0usize;
        for (a, b) in self.words.iter().zip(other.words.iter()) {
            n11 += (a & b).count_ones() as usize;
            // tails are zero on both sides, so `!b` garbage is masked by `a`
            n10 += (a & !b).count_ones() as usize;
            n01 += (!a & b).count_ones() as usize;
        }
        let n00 = self.len - n11 - n10 - n01;
        [n00, n01, n10, n11]
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bitstring(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Serializes the sequence as `ceil(len/8)` bytes, LSB-first within each
    /// byte (the on-disk row format).
    pub fn packed_bytes(&self) -> Vec<u8> {
        let n_bytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n_bytes);
        for i in 0..n_bytes {
            out.push(((self.words[i / 8] >> ((i % 8) * 8)) & 0xFF) as u8);
        }
        out
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}
