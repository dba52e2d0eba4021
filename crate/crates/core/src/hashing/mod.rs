//! Hamming-embedding hash codes: a k-means codebook quantizes each descriptor
//! to a centroid, and per-centroid median thresholds turn the descriptor into
//! an `N_F`-bit refinement code.

mod code;
mod kmeans;

use std::path::Path;

pub(crate) use code::hamming_words;
pub use code::{similarity, BinaryCode, HashCode};
pub use kmeans::{median, train_codebook};

use crate::codec::{self, ByteReader, ByteWriter};
use crate::error::{Error, FormatError, Result};
use crate::fingerprint::Descriptor;

pub const CODEBOOK_MAGIC: &[u8; 4] = b"VEEC";
pub const CODEBOOK_VERSION: u16 = 1;

/// `N_C` centroids of dimension `N_F` with one threshold vector per centroid,
/// both stored row-major as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n_c: usize,
    n_f: usize,
    seed: u64,
    centroids: Vec<f32>,
    thresholds: Vec<f32>,
}

impl Codebook {
    pub fn from_parts(
        n_f: usize,
        seed: u64,
        centroids: Vec<f32>,
        thresholds: Vec<f32>,
    ) -> Result<Self> {
        if n_f == 0 {
            return Err(Error::invalid("codebook dimension must be at least 1"));
        }
        if centroids.is_empty() || !centroids.len().is_multiple_of(n_f) {
            return Err(Error::invalid(format!(
                "{} centroid values do not form rows of {n_f}",
                centroids.len()
            )));
        }
        if thresholds.len() != centroids.len() {
            return Err(Error::invalid(format!(
                "{} thresholds for {} centroid values",
                thresholds.len(),
                centroids.len()
            )));
        }
        if centroids.iter().chain(&thresholds).any(|v| !v.is_finite()) {
            return Err(Error::invalid("codebook contains non-finite values"));
        }
        Ok(Self {
            n_c: centroids.len() / n_f,
            n_f,
            seed,
            centroids,
            thresholds,
        })
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.n_f..(i + 1) * self.n_f]
    }

    pub fn thresholds(&self, i: usize) -> &[f32] {
        &self.thresholds[i * self.n_f..(i + 1) * self.n_f]
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_f {
            return Err(Error::invalid(format!(
                "descriptor has {} dimensions, codebook has {}",
                v.len(),
                self.n_f
            )));
        }
        Ok(())
    }

    /// Index of the nearest centroid by squared Euclidean distance; the
    /// smallest index wins ties.
    pub fn assign(&self, v: &[f64]) -> Result<u32> {
        self.check_dim(v)?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centroids.chunks_exact(self.n_f).enumerate() {
            let d: f64 = v
                .iter()
                .zip(c)
                .map(|(&a, &b)| {
                    let diff = a - f64::from(b);
                    diff * diff
                })
                .sum();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best as u32)
    }

    /// Bit `k` is set iff `v[k] >= thresholds[q][k]`.
    pub fn binarize(&self, v: &[f64], q: u32) -> Result<BinaryCode> {
        self.check_dim(v)?;
        let q = q as usize;
        if q >= self.n_c {
            return Err(Error::Precondition(format!(
                "centroid {q} out of range for {} centroids",
                self.n_c
            )));
        }
        Ok(BinaryCode::from_bits(
            v.iter()
                .zip(self.thresholds(q))
                .map(|(&x, &tau)| x >= f64::from(tau)),
        ))
    }

    pub fn hash(&self, v: &[f64]) -> Result<HashCode> {
        let q = self.assign(v)?;
        let code = self.binarize(v, q)?;
        Ok(HashCode { q, code })
    }

    pub fn hash_descriptor(&self, d: &Descriptor) -> Result<HashCode> {
        self.hash(&d.values)
    }

    /// `N_C`, `N_F` (u32), seed (u64), centroids then thresholds as `f32`.
    pub fn write_section(&self, w: &mut ByteWriter) {
        w.u32(self.n_c as u32);
        w.u32(self.n_f as u32);
        w.u64(self.seed);
        for &v in self.centroids.iter().chain(&self.thresholds) {
            w.f32(v);
        }
    }

    pub fn read_section(r: &mut ByteReader<'_>) -> Result<Self> {
        let n_c = r.u32()? as usize;
        let n_f = r.u32()? as usize;
        let seed = r.u64()?;
        let cells = n_c
            .checked_mul(n_f)
            .filter(|&c| c.checked_mul(8).is_some_and(|b| b <= r.remaining()))
            .ok_or_else(|| FormatError::Corrupt(format!("codebook {n_c}x{n_f} exceeds file")))?;
        let mut read = |n: usize| -> Result<Vec<f32>> { (0..n).map(|_| Ok(r.f32()?)).collect() };
        let centroids = read(cells)?;
        let thresholds = read(cells)?;
        Codebook::from_parts(n_f, seed, centroids, thresholds)
            .map_err(|e| FormatError::Corrupt(e.to_string()).into())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::with_header(CODEBOOK_MAGIC, CODEBOOK_VERSION);
        self.write_section(&mut w);
        w.finish_with_checksum()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = codec::open_checksummed(bytes, CODEBOOK_MAGIC, CODEBOOK_VERSION)?;
        let cb = Self::read_section(&mut r)?;
        r.expect_end()?;
        Ok(cb)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        codec::write_atomic(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&codec::read_file(path)?)
    }
}
