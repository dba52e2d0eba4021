use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::GroundTruthEntry;
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameRate, FrameStream};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusParams {
    pub n_videos: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Length of the subclip cut from each reference video as its query.
    pub query_frames: usize,
    /// Shortest clip that can still host one descriptor window (`2·N_T + 1`).
    pub min_window: usize,
    pub width: usize,
    pub height: usize,
    pub frame_rate: FrameRate,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            n_videos: 12,
            min_frames: 2000,
            max_frames: 3000,
            query_frames: 1500,
            min_window: 201,
            width: 64,
            height: 48,
            frame_rate: FrameRate::PAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClip {
    pub name: String,
    pub stream: FrameStream,
}

/// Reference videos with ids `0..n`, one query subclip per reference, and
/// exact ground truth for each query.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub references: Vec<SyntheticClip>,
    pub queries: Vec<SyntheticClip>,
    pub ground_truth: Vec<GroundTruthEntry>,
}

/// One camera shot: a fixed texture that drifts and pulses in contrast.
struct Shot {
    pattern: Vec<f64>,
    mean: f64,
    contrast: f64,
    pulse_depth: f64,
    pulse_period: f64,
    pulse_phase: f64,
    vx: isize,
    vy: isize,
}

impl Shot {
    fn random(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Self {
        let mut pattern = vec![0.0; w * h];
        for _ in 0..rng.random_range(1..=3) {
            let amp = rng.random_range(0.3..1.0);
            let fx = rng.random_range(-6.0..6.0) / w as f64;
            let fy = rng.random_range(-6.0..6.0) / h as f64;
            let phase = rng.random_range(0.0..TAU);
            for y in 0..h {
                for x in 0..w {
                    pattern[y * w + x] +=
                        amp * (TAU * (fx * x as f64 + fy * y as f64) + phase).sin();
                }
            }
        }
        for _ in 0..rng.random_range(0..=6) {
            let bw = rng.random_range(2..=w / 3);
            let bh = rng.random_range(2..=h / 3);
            let x0 = rng.random_range(0..w - bw);
            let y0 = rng.random_range(0..h - bh);
            let v = rng.random_range(-1.0..1.0);
            for y in y0..y0 + bh {
                for x in x0..x0 + bw {
                    pattern[y * w + x] = v;
                }
            }
        }
        let peak = pattern.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
        pattern.iter_mut().for_each(|v| *v /= peak);
        Self {
            pattern,
            mean: rng.random_range(60.0..200.0),
            contrast: rng.random_range(15.0..70.0),
            pulse_depth: rng.random_range(0.1..0.6),
            pulse_period: rng.random_range(8.0..40.0),
            pulse_phase: rng.random_range(0.0..TAU),
            vx: rng.random_range(-2i64..=2) as isize,
            vy: rng.random_range(-1i64..=1) as isize,
        }
    }

    fn render(&self, k: usize, w: usize, h: usize) -> Frame {
        let c = self.contrast
            * (1.0
                + self.pulse_depth * (TAU * k as f64 / self.pulse_period + self.pulse_phase).sin());
        let dx = (self.vx * k as isize).rem_euclid(w as isize) as usize;
        let dy = (self.vy * k as isize).rem_euclid(h as isize) as usize;
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            let row = &self.pattern[((y + dy) % h) * w..][..w];
            // rotate the row left by dx
            for &p in row[dx..].iter().chain(&row[..dx]) {
                pixels.push((self.mean + c * p).round().clamp(0.0, 255.0) as u8);
            }
        }
        Frame::new(w, h, pixels).expect("corpus frames are at least 3x3")
    }
}

fn render_video(rng: &mut ChaCha8Rng, n: usize, w: usize, h: usize) -> Vec<Frame> {
    let mut frames = Vec::with_capacity(n);
    while frames.len() < n {
        let len = rng.random_range(12..=60).min(n - frames.len());
        let shot = Shot::random(rng, w, h);
        frames.extend((0..len).map(|k| shot.render(k, w, h)));
    }
    frames
}

/// Generates a deterministic corpus: every video is a run of textured shots
/// of random length with drifting motion and pulsing contrast, so its edge
/// energy has frequent extrema, concentrated at cuts.
pub fn make_corpus(seed: u64, params: &CorpusParams) -> Result<Corpus> {
    let p = params;
    if p.width < 6 || p.height < 6 {
        return Err(Error::invalid("corpus frames must be at least 6x6"));
    }
    if p.n_videos > 0 {
        if p.query_frames < p.min_window {
            return Err(Error::invalid(format!(
                "query of {} frames cannot host a {}-frame window",
                p.query_frames, p.min_window
            )));
        }
        if p.min_frames < p.query_frames || p.max_frames < p.min_frames {
            return Err(Error::invalid(format!(
                "video lengths {}..={} cannot host {}-frame queries",
                p.min_frames, p.max_frames, p.query_frames
            )));
        }
    }
    let videos = (0..p.n_videos)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let n = rng.random_range(p.min_frames..=p.max_frames);
            let frames = render_video(&mut rng, n, p.width, p.height);
            let start = rng.random_range(0..=n - p.query_frames);
            (frames, start)
        })
        .collect::<Vec<_>>();
    let mut references = Vec::with_capacity(p.n_videos);
    let mut queries = Vec::with_capacity(p.n_videos);
    let mut ground_truth = Vec::with_capacity(p.n_videos);
    for (i, (frames, start)) in videos.into_iter().enumerate() {
        let end = start + p.query_frames - 1;
        let query_frames = frames[start..=end].to_vec();
        let query_id = format!("q{i:02}");
        references.push(SyntheticClip {
            name: format!("ref{i:02}"),
            stream: FrameStream::new(p.width, p.height, p.frame_rate, frames)?,
        });
        queries.push(SyntheticClip {
            name: query_id.clone(),
            stream: FrameStream::new(p.width, p.height, p.frame_rate, query_frames)?,
        });
        ground_truth.push(GroundTruthEntry {
            query_id,
            video_id: i as u32,
            r_start: start as u32,
            r_end: end as u32,
            q_start: 0,
            q_end: (p.query_frames - 1) as u32,
        });
    }
    Ok(Corpus {
        references,
        queries,
        ground_truth,
    })
}
