//! `VEEP` fingerprint files: the descriptors of one clip plus the parameters
//! they were extracted with.
//!
//! ```text
//! magic "VEEP" | version u16
//! N_T u32 | N_F u32 | min_separation u32
//! frame count u64 | rate num u32 | rate den u32
//! descriptor count u64, then per descriptor: t u32, N_F x f64
//! checksum u64
//! ```

use std::path::Path;

use crate::codec::{self, ByteWriter};
use crate::error::{FormatError, Result};
use crate::fingerprint::{Descriptor, FingerprintConfig};
use crate::frame::FrameRate;

pub const FINGERPRINT_MAGIC: &[u8; 4] = b"VEEP";
pub const FINGERPRINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintFile {
    pub config: FingerprintConfig,
    pub frame_count: u64,
    pub frame_rate: FrameRate,
    pub descriptors: Vec<Descriptor>,
}

impl FingerprintFile {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::with_header(FINGERPRINT_MAGIC, FINGERPRINT_VERSION);
        w.u32(self.config.n_t as u32);
        w.u32(self.config.n_f as u32);
        w.u32(self.config.min_separation as u32);
        w.u64(self.frame_count);
        w.u32(self.frame_rate.num);
        w.u32(self.frame_rate.den);
        w.u64(self.descriptors.len() as u64);
        for d in &self.descriptors {
            w.u32(d.t);
            for &v in &d.values {
                w.f64(v);
            }
        }
        w.finish_with_checksum()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = codec::open_checksummed(bytes, FINGERPRINT_MAGIC, FINGERPRINT_VERSION)?;
        let config = FingerprintConfig {
            n_t: r.u32()? as usize,
            n_f: r.u32()? as usize,
            min_separation: r.u32()? as usize,
        };
        config
            .validate()
            .map_err(|e| FormatError::Corrupt(e.to_string()))?;
        let frame_count = r.u64()?;
        let frame_rate = FrameRate {
            num: r.u32()?,
            den: r.u32()?,
        };
        let count = r.u64()?;
        let record = 4 + 8 * config.n_f as u64;
        if count.checked_mul(record) != Some(r.remaining() as u64) {
            return Err(FormatError::Corrupt(format!(
                "{count} descriptors do not fit {} payload bytes",
                r.remaining()
            ))
            .into());
        }
        let mut descriptors = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let t = r.u32()?;
            let values = (0..config.n_f)
                .map(|_| r.f64())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            descriptors.push(Descriptor { t, values });
        }
        Ok(Self {
            config,
            frame_count,
            frame_rate,
            descriptors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        codec::write_atomic(path, &self.encode())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&codec::read_file(path)?)
    }
}
