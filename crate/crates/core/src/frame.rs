//! Grayscale frames and the raw `VEEF` frame stream container.
//!
//! A `VEEF` file is a fixed little-endian header followed by planar 8-bit
//! frames with no per-frame framing:
//!
//! | field            | type     |
//! |------------------|----------|
//! | magic `"VEEF"`   | 4 bytes  |
//! | version          | u16      |
//! | width, height    | u32 each |
//! | rate num, den    | u32 each |
//! | frame count      | u64      |
//! | frames           | count × width × height bytes |

use std::path::Path;

use crate::codec::{self, ByteReader, ByteWriter};
use crate::error::{Error, FormatError, Result};

pub const FRAME_MAGIC: &[u8; 4] = b"VEEF";
pub const FRAME_VERSION: u16 = 1;

/// A row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::invalid(format!(
                "frame is {width}x{height}, Sobel needs at least 3x3"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "frame {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub const PAL: FrameRate = FrameRate { num: 25, den: 1 };

    pub fn as_f64(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            f64::from(self.num) / f64::from(self.den)
        }
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        Self::PAL
    }
}

/// An in-memory clip: equally sized frames plus their nominal rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameStream {
    pub width: usize,
    pub height: usize,
    pub rate: FrameRate,
    pub frames: Vec<Frame>,
}

impl FrameStream {
    pub fn new(width: usize, height: usize, rate: FrameRate, frames: Vec<Frame>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::invalid(format!(
                "stream is {width}x{height}, frames must be at least 3x3"
            )));
        }
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.dims() != (width, height))
        {
            return Err(Error::invalid(format!(
                "frame {i} is {}x{}, stream is {width}x{height}",
                f.width, f.height
            )));
        }
        Ok(Self {
            width,
            height,
            rate,
            frames,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::with_header(FRAME_MAGIC, FRAME_VERSION);
        w.u32(self.width as u32);
        w.u32(self.height as u32);
        w.u32(self.rate.num);
        w.u32(self.rate.den);
        w.u64(self.frames.len() as u64);
        for f in &self.frames {
            w.bytes(&f.pixels);
        }
        w.into_inner()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_header(FRAME_MAGIC, FRAME_VERSION)?;
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let rate = FrameRate {
            num: r.u32()?,
            den: r.u32()?,
        };
        let count = r.u64()?;
        if width < 3 || height < 3 {
            return Err(
                FormatError::Corrupt(format!("frame size {width}x{height} below 3x3")).into(),
            );
        }
        let plane = width
            .checked_mul(height)
            .ok_or_else(|| FormatError::Corrupt("frame size overflows".into()))?;
        let expected = (count as u128) * (plane as u128);
        if expected != r.remaining() as u128 {
            if expected > r.remaining() as u128 {
                return Err(FormatError::Truncated {
                    offset: r.position(),
                    needed: (expected - r.remaining() as u128).min(usize::MAX as u128) as usize,
                }
                .into());
            }
            return Err(FormatError::Corrupt(format!(
                "{} bytes after {count} frames",
                r.remaining() as u128 - expected
            ))
            .into());
        }
        let mut frames = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let pixels = r.take(plane)?.to_vec();
            frames.push(Frame {
                width,
                height,
                pixels,
            });
        }
        Ok(Self {
            width,
            height,
            rate,
            frames,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&codec::read_file(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        codec::write_atomic(path, &self.encode())
    }
}
