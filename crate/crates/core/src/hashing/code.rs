use std::fmt;

use crate::error::{Error, Result};

/// A fixed-length bit string, bit `k` stored in word `k / 64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    words: Vec<u64>,
    len: usize,
}

impl BinaryCode {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut code = Self::zeros(0);
        for (k, bit) in bits.into_iter().enumerate() {
            if k % 64 == 0 {
                code.words.push(0);
            }
            code.len = k + 1;
            if bit {
                code.words[k / 64] |= 1 << (k % 64);
            }
        }
        code
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: usize) -> bool {
        assert!(
            k < self.len,
            "bit {k} out of range for {}-bit code",
            self.len
        );
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn set(&mut self, k: usize, bit: bool) {
        assert!(
            k < self.len,
            "bit {k} out of range for {}-bit code",
            self.len
        );
        let mask = 1u64 << (k % 64);
        if bit {
            self.words[k / 64] |= mask;
        } else {
            self.words[k / 64] &= !mask;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn hamming(&self, other: &Self) -> Result<u32> {
        if self.len != other.len {
            return Err(Error::invalid(format!(
                "code lengths differ: {} vs {}",
                self.len, other.len
            )));
        }
        Ok(hamming_words(&self.words, &other.words))
    }

    /// Number of bytes used by [`BinaryCode::to_packed`] for `len` bits.
    pub fn packed_len(len: usize) -> usize {
        len.div_ceil(8)
    }

    /// Packs to `ceil(len / 8)` bytes, bit `k` at bit `k % 8` of byte `k / 8`.
    pub fn to_packed(&self) -> Vec<u8> {
        let n = Self::packed_len(self.len);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push((self.words[i / 8] >> (8 * (i % 8))) as u8);
        }
        out
    }

    pub fn from_packed(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != Self::packed_len(len) {
            return Err(Error::invalid(format!(
                "{len}-bit code needs {} bytes, got {}",
                Self::packed_len(len),
                bytes.len()
            )));
        }
        let mut code = Self::zeros(len);
        for (i, &b) in bytes.iter().enumerate() {
            code.words[i / 8] |= u64::from(b) << (8 * (i % 8));
        }
        if !len.is_multiple_of(64) {
            let last = code.words.len() - 1;
            if code.words[last] >> (len % 64) != 0 {
                return Err(Error::invalid("padding bits set in packed code"));
            }
        }
        Ok(code)
    }
}

impl fmt::Debug for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = (0..self.len)
            .map(|k| if self.get(k) { '1' } else { '0' })
            .collect();
        write!(f, "BinaryCode({bits})")
    }
}

pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Centroid index plus binary refinement code of one descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HashCode {
    pub q: u32,
    pub code: BinaryCode,
}

/// Number of agreeing bits when both codes fall in the same centroid cell,
/// zero otherwise.
pub fn similarity(a: &HashCode, b: &HashCode) -> Result<u32> {
    let distance = a.code.hamming(&b.code)?;
    if a.q != b.q {
        return Ok(0);
    }
    Ok(a.code.len() as u32 - distance)
}
