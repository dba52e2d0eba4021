//! Edge-energy time series and the sparse spectral descriptors taken at its
//! local extrema.
//!
//! A clip is reduced to one scalar per frame, the mean Sobel gradient
//! magnitude. Descriptors are only computed where that series has a strict
//! local extremum: the `2·N_T + 1` samples centred on the extremum are
//! Hanning weighted, transformed with a DFT of exactly that length, and the
//! magnitudes of bins `1..=N_F` form the descriptor (DC is dropped).

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameRate};

/// Mean 3×3 Sobel gradient magnitude of `frame`, with replicate-edge padding.
pub fn edge_energy(frame: &Frame) -> f64 {
    sobel_mean_magnitude(frame.width(), frame.height(), frame.pixels())
}

/// [`edge_energy`] over an arbitrary integer plane, so scaled frames can be
/// evaluated without clipping to 8 bits.
pub fn edge_energy_plane<P>(width: usize, height: usize, pixels: &[P]) -> Result<f64>
where
    P: Copy + Into<i64>,
{
    if width < 3 || height < 3 {
        return Err(Error::invalid(format!(
            "plane is {width}x{height}, Sobel needs at least 3x3"
        )));
    }
    if pixels.len() != width * height {
        return Err(Error::invalid(format!(
            "plane {width}x{height} needs {} values, got {}",
            width * height,
            pixels.len()
        )));
    }
    Ok(sobel_mean_magnitude(width, height, pixels))
}

fn sobel_mean_magnitude<P: Copy + Into<i64>>(width: usize, height: usize, pixels: &[P]) -> f64 {
    let mut sum = 0.0f64;
    for_each_magnitude(width, height, pixels, |m| sum += m);
    sum / (width * height) as f64
}

/// Visits the Sobel gradient magnitude of every pixel in row-major order.
///
/// The kernels are separable: `gx` is the horizontal difference of the
/// vertically smoothed rows, `gy` the horizontal smoothing of the vertical
/// difference, both computed once per row.
fn for_each_magnitude<P: Copy + Into<i64>>(
    width: usize,
    height: usize,
    pixels: &[P],
    mut visit: impl FnMut(f64),
) {
    let mut smooth = vec![0i64; width];
    let mut diff = vec![0i64; width];
    for y in 0..height {
        let up = &pixels[y.saturating_sub(1) * width..][..width];
        let mid = &pixels[y * width..][..width];
        let down = &pixels[(y + 1).min(height - 1) * width..][..width];
        for x in 0..width {
            let (u, m, d) = (up[x].into(), mid[x].into(), down[x].into());
            smooth[x] = u + 2 * m + d;
            diff[x] = d - u;
        }
        for x in 0..width {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(width - 1);
            let gx = smooth[right] - smooth[left];
            let gy = diff[left] + 2 * diff[x] + diff[right];
            visit(((gx * gx + gy * gy) as f64).sqrt());
        }
    }
}

/// Per-pixel Sobel gradient magnitudes of `frame`, row-major.
pub fn gradient_magnitudes(frame: &Frame) -> Vec<f64> {
    let mut out = Vec::with_capacity(frame.pixels().len());
    for_each_magnitude(frame.width(), frame.height(), frame.pixels(), |m| {
        out.push(m)
    });
    out
}

/// Per-frame edge energy of a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEnergySeries {
    pub values: Vec<f64>,
    pub frame_rate: FrameRate,
}

impl EdgeEnergySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn ee_series(frames: &[Frame], frame_rate: FrameRate) -> Result<EdgeEnergySeries> {
    if let Some(first) = frames.first() {
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.dims() != first.dims())
        {
            return Err(Error::invalid(format!(
                "frame {i} is {}x{}, frame 0 is {}x{}",
                f.width(),
                f.height(),
                first.width(),
                first.height()
            )));
        }
    }
    let values = frames.par_iter().map(edge_energy).collect();
    Ok(EdgeEnergySeries { values, frame_rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtremumPoint {
    pub t: usize,
    pub kind: ExtremumKind,
}

/// Strict local extrema of `series` within `±min_separation` frames whose
/// `[t - n_t, t + n_t]` window lies inside the series. Plateaus never qualify,
/// and a point needs at least one neighbour on each side.
pub fn find_extrema(series: &[f64], n_t: usize, min_separation: usize) -> Vec<ExtremumPoint> {
    // a radius of 0 would make every sample its own extremum
    let radius = min_separation.max(1);
    let len = series.len();
    if len < 2 * n_t + 1 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for t in n_t..=len - 1 - n_t {
        let lo = t.saturating_sub(radius);
        let hi = (t + radius).min(len - 1);
        if lo == t || hi == t {
            continue;
        }
        let centre = series[t];
        let neighbours = series[lo..t].iter().chain(&series[t + 1..=hi]);
        let (mut above, mut below) = (true, true);
        for &v in neighbours {
            above &= centre > v;
            below &= centre < v;
            if !above && !below {
                break;
            }
        }
        if above {
            out.push(ExtremumPoint {
                t,
                kind: ExtremumKind::Maximum,
            });
        } else if below {
            out.push(ExtremumPoint {
                t,
                kind: ExtremumKind::Minimum,
            });
        }
    }
    out
}

/// Spectral magnitudes around one extremum.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    /// Frame index of the extremum in its source clip.
    pub t: u32,
    pub values: Vec<f64>,
}

impl Descriptor {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Symmetric Hanning window of length `2·n_t + 1`, zero at both ends.
pub fn hanning(n_t: usize) -> Vec<f64> {
    if n_t == 0 {
        return vec![1.0];
    }
    let period = (2 * n_t) as f64;
    (0..=2 * n_t)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / period).cos()))
        .collect()
}

/// Reusable windowed-DFT descriptor extractor for a fixed `(N_T, N_F)`.
#[derive(Clone)]
pub struct DescriptorExtractor {
    n_t: usize,
    n_f: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DescriptorExtractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DescriptorExtractor")
            .field("n_t", &self.n_t)
            .field("n_f", &self.n_f)
            .finish_non_exhaustive()
    }
}

impl DescriptorExtractor {
    pub fn new(n_t: usize, n_f: usize) -> Result<Self> {
        if n_f < 1 || n_f > n_t {
            return Err(Error::Precondition(format!(
                "need 1 <= N_F <= N_T, got N_F={n_f}, N_T={n_t}"
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(2 * n_t + 1);
        Ok(Self {
            n_t,
            n_f,
            window: hanning(n_t),
            fft,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn extract(&self, series: &[f64], t: usize) -> Result<Descriptor> {
        if t < self.n_t || t + self.n_t >= series.len() {
            return Err(Error::Precondition(format!(
                "window [{t} - {n}, {t} + {n}] does not fit a series of length {len}",
                n = self.n_t,
                len = series.len()
            )));
        }
        let samples = &series[t - self.n_t..=t + self.n_t];
        Ok(Descriptor {
            t: t as u32,
            values: self.spectrum(samples),
        })
    }

    /// Magnitudes of DFT bins `1..=N_F` of the Hanning-weighted `samples`.
    pub fn spectrum(&self, samples: &[f64]) -> Vec<f64> {
        assert_eq!(samples.len(), self.window.len(), "window length");
        let mut buf: Vec<Complex<f64>> = samples
            .iter()
            .zip(&self.window)
            .map(|(&s, &w)| Complex::new(s * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        buf[1..=self.n_f].iter().map(|c| c.norm()).collect()
    }
}

pub fn descriptor(series: &[f64], p: ExtremumPoint, n_t: usize, n_f: usize) -> Result<Descriptor> {
    DescriptorExtractor::new(n_t, n_f)?.extract(series, p.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FingerprintConfig {
    pub n_t: usize,
    pub n_f: usize,
    pub min_separation: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        Self {
            n_t: 100,
            n_f: 48,
            min_separation: 3,
        }
    }
}

impl FingerprintConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_f < 1 || self.n_f > self.n_t {
            return Err(Error::invalid(format!(
                "need 1 <= N_F <= N_T, got N_F={}, N_T={}",
                self.n_f, self.n_t
            )));
        }
        if self.min_separation < 1 {
            return Err(Error::invalid("min_separation must be at least 1"));
        }
        Ok(())
    }
}

/// One descriptor per surviving extremum of an edge-energy series, by time.
pub fn fingerprint_series(series: &[f64], config: &FingerprintConfig) -> Result<Vec<Descriptor>> {
    config.validate()?;
    let extractor = DescriptorExtractor::new(config.n_t, config.n_f)?;
    find_extrema(series, config.n_t, config.min_separation)
        .into_iter()
        .map(|p| extractor.extract(series, p.t))
        .collect()
}

pub fn fingerprint_video(frames: &[Frame], config: &FingerprintConfig) -> Result<Vec<Descriptor>> {
    config.validate()?;
    let series = ee_series(frames, FrameRate::default())?;
    fingerprint_series(&series.values, config)
}
