#![allow(dead_code)]

use edgevote::index::Match;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-pixel Sobel with replicate padding, summed row-major and divided by M.
pub fn sobel_oracle(width: usize, height: usize, pixels: &[i64]) -> f64 {
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, width as isize - 1) as usize;
        let y = y.clamp(0, height as isize - 1) as usize;
        pixels[y * width + x]
    };
    let mut sum = 0.0;
    for y in 0..height as isize {
        for x in 0..width as isize {
            let gx = -at(x - 1, y - 1) + at(x + 1, y - 1) - 2 * at(x - 1, y) + 2 * at(x + 1, y)
                - at(x - 1, y + 1)
                + at(x + 1, y + 1);
            let gy = -at(x - 1, y - 1) - 2 * at(x, y - 1) - at(x + 1, y - 1)
                + at(x - 1, y + 1)
                + 2 * at(x, y + 1)
                + at(x + 1, y + 1);
            sum += ((gx * gx + gy * gy) as f64).sqrt();
        }
    }
    sum / (width * height) as f64
}

pub fn step_pixels() -> Vec<u8> {
    (0..64).map(|i| if i % 8 < 4 { 0 } else { 255 }).collect()
}

/// Hanning-weighted direct DFT magnitudes of bins `1..=n_f`.
pub fn naive_descriptor(samples: &[f64], n_f: usize) -> Vec<f64> {
    let len = samples.len();
    let n_t = (len - 1) / 2;
    let windowed: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let w = 0.5 * (1.0 - (std::f64::consts::TAU * n as f64 / (2 * n_t) as f64).cos());
            s * w
        })
        .collect();
    (1..=n_f)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, x) in windowed.iter().enumerate() {
                let a = -std::f64::consts::TAU * (k * n) as f64 / len as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            re.hypot(im)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// A random per-signature match stream with at most `n_nn` matches per
/// signature, over at most 5 videos and at most `max_matches` matches total.
///
/// Each video draws offsets from its own set. When `lattice` is set the
/// offsets are multiples of `tol_err`, so no two distinct offsets of one video
/// are within tolerance of each other.
pub struct StreamCase {
    pub tol_err: u32,
    pub n_conf: u32,
    pub n_nn: usize,
    pub stream: Vec<(u32, Vec<Match>)>,
}

impl StreamCase {
    pub fn matches(&self) -> Vec<Match> {
        self.stream
            .iter()
            .flat_map(|(_, m)| m.iter().copied())
            .collect()
    }
}

pub fn random_stream(seed: u64, max_matches: usize) -> StreamCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol_err = if seed.is_multiple_of(2) {
        1
    } else {
        rng.random_range(2..=4)
    };
    let n_videos = rng.random_range(1..=5u32);
    let n_nn = rng.random_range(1..=8usize);
    let offsets: Vec<Vec<i64>> = (0..n_videos)
        .map(|_| {
            let n = rng.random_range(1..=4);
            (0..n)
                .map(|_| {
                    if tol_err == 1 {
                        rng.random_range(-60..=60)
                    } else {
                        rng.random_range(-15..=15) * i64::from(tol_err)
                    }
                })
                .collect()
        })
        .collect();
    let target = rng.random_range(0..=max_matches);
    let mut stream = Vec::new();
    let mut total = 0;
    let mut t_q = 100u32;
    while total < target {
        t_q += rng.random_range(1..=40);
        let k = rng.random_range(0..=n_nn).min(target - total);
        let mut matches: Vec<Match> = (0..k)
            .map(|_| {
                let video_id = rng.random_range(0..n_videos);
                let set = &offsets[video_id as usize];
                let offset = set[rng.random_range(0..set.len())];
                Match {
                    video_id,
                    t_r: (i64::from(t_q) - offset) as u32,
                    t_q,
                    score: rng.random_range(1..=16),
                }
            })
            .collect();
        matches.sort_by(|a, b| {
            b.score
                .cmp(&a.score)
                .then((a.video_id, a.t_r).cmp(&(b.video_id, b.t_r)))
        });
        total += matches.len();
        stream.push((t_q, matches));
    }
    StreamCase {
        tol_err,
        n_conf: rng.random_range(1..=6),
        n_nn,
        stream,
    }
}

pub mod pipeline {
    use edgevote::evalkit::{
        build_index, fingerprint_clip, make_corpus, train_from_clips, Corpus, CorpusParams,
    };
    use edgevote::{FingerprintConfig, FingerprintFile, FrameRate, InvertedIndex};

    pub fn small_params(n_videos: usize) -> CorpusParams {
        CorpusParams {
            n_videos,
            min_frames: 600,
            max_frames: 800,
            query_frames: 300,
            min_window: 61,
            width: 32,
            height: 24,
            frame_rate: FrameRate::PAL,
        }
    }

    pub fn small_fp() -> FingerprintConfig {
        FingerprintConfig {
            n_t: 30,
            n_f: 16,
            min_separation: 3,
        }
    }

    pub struct Built {
        pub corpus: Corpus,
        pub refs: Vec<(String, FingerprintFile)>,
        pub queries: Vec<FingerprintFile>,
        pub index: InvertedIndex,
    }

    pub fn build(seed: u64, params: &CorpusParams, fp: &FingerprintConfig, n_c: usize) -> Built {
        let corpus = make_corpus(seed, params).unwrap();
        let refs: Vec<(String, FingerprintFile)> = corpus
            .references
            .iter()
            .map(|c| (c.name.clone(), fingerprint_clip(&c.stream, fp).unwrap()))
            .collect();
        let files: Vec<FingerprintFile> = refs.iter().map(|r| r.1.clone()).collect();
        let codebook = train_from_clips(&files, n_c, 50, seed).unwrap();
        let index = build_index(codebook, &refs).unwrap();
        let queries = corpus
            .queries
            .iter()
            .map(|q| fingerprint_clip(&q.stream, fp).unwrap())
            .collect();
        Built {
            corpus,
            refs,
            queries,
            index,
        }
    }
}
