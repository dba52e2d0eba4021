use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::frame::Frame;

/// A rectangular overlay stamped onto every frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogoPatch {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl LogoPatch {
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distortion {
    /// Additive zero-mean Gaussian noise, rounded and clamped to 0..=255.
    Noise { sigma: f64 },
    /// Overwrites the patch with its top-left corner at `(x, y)`.
    Logo {
        patch: LogoPatch,
        x: usize,
        y: usize,
    },
    /// Keeps frames `start..=end`.
    Crop { start: usize, end: usize },
}

pub fn distort(frames: &[Frame], kind: &Distortion, seed: u64) -> Result<Vec<Frame>> {
    match kind {
        Distortion::Noise { sigma } => {
            if !sigma.is_finite() || *sigma < 0.0 {
                return Err(Error::invalid(format!(
                    "noise sigma {sigma} must be finite and >= 0"
                )));
            }
            if *sigma == 0.0 {
                return Ok(frames.to_vec());
            }
            let normal = Normal::new(0.0, *sigma).map_err(|e| Error::invalid(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(frames
                .iter()
                .map(|f| {
                    let mut out = f.clone();
                    for p in out.pixels_mut() {
                        let v = f64::from(*p) + normal.sample(&mut rng);
                        *p = v.round().clamp(0.0, 255.0) as u8;
                    }
                    out
                })
                .collect())
        }
        Distortion::Logo { patch, x, y } => {
            if patch.pixels.len() != patch.width * patch.height {
                return Err(Error::invalid(
                    "logo patch pixel count does not match its size",
                ));
            }
            let mut out = frames.to_vec();
            for f in &mut out {
                let (w, h) = f.dims();
                if x + patch.width > w || y + patch.height > h {
                    return Err(Error::invalid(format!(
                        "{}x{} logo at ({x}, {y}) exceeds {w}x{h} frame",
                        patch.width, patch.height
                    )));
                }
                let px = f.pixels_mut();
                for row in 0..patch.height {
                    let dst = (y + row) * w + x;
                    px[dst..dst + patch.width]
                        .copy_from_slice(&patch.pixels[row * patch.width..(row + 1) * patch.width]);
                }
            }
            Ok(out)
        }
        Distortion::Crop { start, end } => {
            if start > end || *end >= frames.len() {
                return Err(Error::invalid(format!(
                    "crop [{start}, {end}] outside {} frames",
                    frames.len()
                )));
            }
            Ok(frames[*start..=*end].to_vec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip() -> Vec<Frame> {
        (0..5)
            .map(|t| Frame::from_fn(8, 6, |x, y| ((x * 29 + y * 7 + t * 13) % 256) as u8).unwrap())
            .collect()
    }

    #[test]
    fn zero_noise_is_identity() {
        let c = clip();
        assert_eq!(
            distort(&c, &Distortion::Noise { sigma: 0.0 }, 1).unwrap(),
            c
        );
    }

    #[test]
    fn noise_is_seeded() {
        let c = clip();
        let a = distort(&c, &Distortion::Noise { sigma: 5.0 }, 3).unwrap();
        assert_eq!(
            a,
            distort(&c, &Distortion::Noise { sigma: 5.0 }, 3).unwrap()
        );
        assert_ne!(
            a,
            distort(&c, &Distortion::Noise { sigma: 5.0 }, 4).unwrap()
        );
        assert_ne!(a, c);
        assert!(distort(&c, &Distortion::Noise { sigma: -1.0 }, 3).is_err());
    }

    #[test]
    fn empty_logo_is_identity() {
        let c = clip();
        let logo = Distortion::Logo {
            patch: LogoPatch::filled(0, 0, 255),
            x: 3,
            y: 3,
        };
        assert_eq!(distort(&c, &logo, 0).unwrap(), c);
    }

    #[test]
    fn logo_overwrites_patch_only() {
        let c = clip();
        let logo = Distortion::Logo {
            patch: LogoPatch::filled(2, 3, 255),
            x: 5,
            y: 1,
        };
        let out = distort(&c, &logo, 0).unwrap();
        for (a, b) in c.iter().zip(&out) {
            for y in 0..6 {
                for x in 0..8 {
                    let inside = (5..7).contains(&x) && (1..4).contains(&y);
                    if inside {
                        assert_eq!(b.get(x, y), 255);
                    } else {
                        assert_eq!(a.get(x, y), b.get(x, y));
                    }
                }
            }
        }
        let off = Distortion::Logo {
            patch: LogoPatch::filled(4, 1, 0),
            x: 5,
            y: 0,
        };
        assert!(distort(&c, &off, 0).is_err());
    }

    #[test]
    fn crop_keeps_frames_verbatim() {
        let c = clip();
        let out = distort(&c, &Distortion::Crop { start: 1, end: 3 }, 0).unwrap();
        assert_eq!(out, c[1..=3].to_vec());
        assert!(distort(&c, &Distortion::Crop { start: 3, end: 5 }, 0).is_err());
        assert!(distort(&c, &Distortion::Crop { start: 3, end: 2 }, 0).is_err());
    }
}
