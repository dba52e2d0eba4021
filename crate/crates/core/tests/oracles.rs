mod common;

use common::*;
use edgevote::evalkit::{
    average_precision, fingerprint_clip, make_corpus, CorpusParams, GroundTruthEntry, OverlapRule,
};
use edgevote::fingerprint::{
    descriptor, edge_energy, edge_energy_plane, ee_series, find_extrema, fingerprint_video,
    DescriptorExtractor, ExtremumKind,
};
use edgevote::hashing::{train_codebook, BinaryCode};
use edgevote::index::VideoEntry;
use edgevote::voting::{finalize_segments, ResultSegment};
use edgevote::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn step_frame_matches_per_pixel_sobel() {
    let pixels = step_pixels();
    let frame = Frame::new(8, 8, pixels.clone()).unwrap();
    let wide: Vec<i64> = pixels.iter().map(|&p| i64::from(p)).collect();
    let expected = sobel_oracle(8, 8, &wide);
    assert_eq!(edge_energy(&frame), expected);
    // two interior columns each see 4·255 in every row
    assert_eq!(expected, 2.0 * 8.0 * 1020.0 / 64.0);
}

#[test]
fn random_frames_match_per_pixel_sobel() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (w, h) = (rng.random_range(3..20), rng.random_range(3..20));
        let px: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
        let wide: Vec<i64> = px.iter().map(|&p| i64::from(p)).collect();
        let f = Frame::new(w, h, px).unwrap();
        assert_eq!(edge_energy(&f), sobel_oracle(w, h, &wide));
        assert_eq!(
            edge_energy_plane(w, h, &wide).unwrap(),
            sobel_oracle(w, h, &wide)
        );
    }
}

#[test]
fn constant_step_constant_series() {
    let frames = vec![
        Frame::filled(8, 8, 40).unwrap(),
        Frame::new(8, 8, step_pixels()).unwrap(),
        Frame::filled(8, 8, 200).unwrap(),
    ];
    let d = edge_energy(&frames[1]);
    let s = ee_series(&frames, FrameRate::PAL).unwrap();
    assert_eq!(s.values, vec![0.0, d, 0.0]);
    assert!(ee_series(&[], FrameRate::PAL).unwrap().is_empty());
    let mixed = vec![
        Frame::filled(8, 8, 0).unwrap(),
        Frame::filled(9, 8, 0).unwrap(),
    ];
    assert!(ee_series(&mixed, FrameRate::PAL).is_err());
}

/// Exhaustive scan for strict extrema within ±radius whose window fits.
fn extrema_oracle(s: &[f64], n_t: usize, radius: usize) -> Vec<(usize, ExtremumKind)> {
    let mut out = Vec::new();
    for t in 0..s.len() {
        if t < n_t || t + n_t >= s.len() || t < 1 || t + 1 >= s.len() {
            continue;
        }
        let ns: Vec<f64> = (t.saturating_sub(radius)..=(t + radius).min(s.len() - 1))
            .filter(|&u| u != t)
            .map(|u| s[u])
            .collect();
        if ns.iter().all(|&v| s[t] > v) {
            out.push((t, ExtremumKind::Maximum));
        } else if ns.iter().all(|&v| s[t] < v) {
            out.push((t, ExtremumKind::Minimum));
        }
    }
    out
}

#[test]
fn extrema_match_exhaustive_scan() {
    let got: Vec<_> = find_extrema(&[0.0, 5.0, 0.0, 5.0, 0.0], 1, 1)
        .into_iter()
        .map(|p| (p.t, p.kind))
        .collect();
    assert_eq!(
        got,
        vec![
            (1, ExtremumKind::Maximum),
            (2, ExtremumKind::Minimum),
            (3, ExtremumKind::Maximum)
        ]
    );
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let len = rng.random_range(0..40);
        let s: Vec<f64> = (0..len)
            .map(|_| f64::from(rng.random_range(0..6u8)))
            .collect();
        let n_t = rng.random_range(0..5);
        let radius = rng.random_range(1..4);
        let got: Vec<_> = find_extrema(&s, n_t, radius)
            .into_iter()
            .map(|p| (p.t, p.kind))
            .collect();
        assert_eq!(
            got,
            extrema_oracle(&s, n_t, radius),
            "{s:?} n_t={n_t} r={radius}"
        );
    }
}

#[test]
fn cosine_descriptor_matches_direct_dft() {
    let n_t = 8;
    let len = 2 * n_t + 1;
    let samples: Vec<f64> = (0..len)
        .map(|n| (std::f64::consts::TAU * 3.0 * n as f64 / len as f64).cos())
        .collect();
    let ex = DescriptorExtractor::new(n_t, 8).unwrap();
    let got = ex.spectrum(&samples);
    let want = naive_descriptor(&samples, 8);
    for (g, w) in got.iter().zip(&want) {
        assert!(
            rel_err(*g, *w) < 1e-6 || (g - w).abs() < 1e-12,
            "{g} vs {w}"
        );
    }
    // the tone sits in bin 3
    let peak = got
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0;
    assert_eq!(peak + 1, 3);
}

#[test]
fn random_windows_match_direct_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n_t in 1..=16 {
        for n_f in 1..=n_t {
            let samples: Vec<f64> = (0..2 * n_t + 1)
                .map(|_| rng.random_range(0.0..50.0))
                .collect();
            let got = DescriptorExtractor::new(n_t, n_f)
                .unwrap()
                .spectrum(&samples);
            let want = naive_descriptor(&samples, n_f);
            let scale = want.iter().cloned().fold(0.0, f64::max);
            for (g, w) in got.iter().zip(&want) {
                assert!(
                    (g - w).abs() <= 1e-6 * w.abs().max(1e-9 * scale),
                    "{g} vs {w}"
                );
            }
        }
    }
}

#[test]
fn zero_series_window_is_zero() {
    let s = vec![0.0; 41];
    let d = DescriptorExtractor::new(20, 20)
        .unwrap()
        .extract(&s, 20)
        .unwrap();
    assert!(d.values.iter().all(|&v| v == 0.0));
    assert!(DescriptorExtractor::new(20, 20)
        .unwrap()
        .extract(&s, 21)
        .is_err());
    assert!(DescriptorExtractor::new(4, 5).is_err());
}

#[test]
fn padded_alternating_video_descriptors() {
    // e-series [0, d, 0, d, 0] padded with zeros so windows of N_T = 2 fit
    let flat = Frame::filled(8, 8, 0).unwrap();
    let step = Frame::new(8, 8, step_pixels()).unwrap();
    let frames = vec![
        flat.clone(),
        flat.clone(),
        flat.clone(),
        step.clone(),
        flat.clone(),
        step,
        flat.clone(),
        flat.clone(),
        flat,
    ];
    let cfg = FingerprintConfig {
        n_t: 2,
        n_f: 2,
        min_separation: 1,
    };
    let series = ee_series(&frames, FrameRate::PAL).unwrap().values;
    let descs = fingerprint_video(&frames, &cfg).unwrap();
    let points = find_extrema(&series, 2, 1);
    assert_eq!(
        points.iter().map(|p| p.t).collect::<Vec<_>>(),
        vec![3, 4, 5]
    );
    assert_eq!(descs.len(), points.len());
    for (d, p) in descs.iter().zip(&points) {
        assert_eq!(d.t as usize, p.t);
        let want = naive_descriptor(&series[p.t - 2..=p.t + 2], 2);
        for (g, w) in d.values.iter().zip(&want) {
            assert!(rel_err(*g, *w) < 1e-9);
        }
        assert_eq!(d, &descriptor(&series, *p, 2, 2).unwrap());
    }
}

#[test]
fn concatenated_videos_fingerprint_locally() {
    let corpus = make_corpus(
        4,
        &CorpusParams {
            n_videos: 2,
            min_frames: 300,
            max_frames: 400,
            query_frames: 100,
            min_window: 41,
            width: 24,
            height: 18,
            frame_rate: FrameRate::PAL,
        },
    )
    .unwrap();
    let cfg = FingerprintConfig {
        n_t: 20,
        n_f: 10,
        min_separation: 3,
    };
    let a = &corpus.references[0].stream.frames;
    let b = &corpus.references[1].stream.frames;
    let joint: Vec<Frame> = a.iter().chain(b).cloned().collect();
    let fa = fingerprint_video(a, &cfg).unwrap();
    let fb = fingerprint_video(b, &cfg).unwrap();
    let fj = fingerprint_video(&joint, &cfg).unwrap();
    let seam = a.len() as u32;
    let far = |t: u32| t + 20 < seam || t > seam + 20;
    for d in fa.iter().filter(|d| far(d.t)) {
        assert!(fj.contains(d), "A descriptor at {} lost", d.t);
    }
    for d in fb.iter().filter(|d| far(d.t + seam)) {
        let shifted = Descriptor {
            t: d.t + seam,
            values: d.values.clone(),
        };
        assert!(fj.contains(&shifted), "B descriptor at {} lost", d.t);
    }
    for d in fj.iter().filter(|d| far(d.t)) {
        let inside_a = d.t < seam && fa.iter().any(|x| x == d);
        let inside_b = d.t > seam && fb.iter().any(|x| x.t + seam == d.t && x.values == d.values);
        assert!(inside_a || inside_b, "spurious descriptor at {}", d.t);
    }
}

/// Plain Lloyd iterations from a given start, used to check training on
/// well-separated points.
fn lloyd_by_hand(points: &[Vec<f64>], mut centres: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for _ in 0..20 {
        let mut sums = vec![vec![0.0; points[0].len()]; centres.len()];
        let mut counts = vec![0usize; centres.len()];
        for p in points {
            let best = (0..centres.len())
                .min_by(|&a, &b| {
                    let da: f64 = p
                        .iter()
                        .zip(&centres[a])
                        .map(|(x, c)| (x - c).powi(2))
                        .sum();
                    let db: f64 = p
                        .iter()
                        .zip(&centres[b])
                        .map(|(x, c)| (x - c).powi(2))
                        .sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            counts[best] += 1;
            sums[best].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for (c, (s, n)) in centres.iter_mut().zip(sums.iter().zip(&counts)) {
            if *n > 0 {
                *c = s.iter().map(|v| v / *n as f64).collect();
            }
        }
    }
    centres
}

#[test]
fn separated_points_are_recovered() {
    let pts: Vec<Vec<f64>> = vec![
        vec![0.0, 0.0, 0.0],
        vec![100.0, 0.0, 5.0],
        vec![0.0, 100.0, 10.0],
        vec![100.0, 100.0, 20.0],
        vec![50.0, 300.0, 40.0],
    ];
    let descs: Vec<Descriptor> = pts
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            (0..3).map(move |j| Descriptor {
                t: (i * 3 + j) as u32,
                values: p.iter().map(|v| v + j as f64 * 0.5).collect(),
            })
        })
        .collect();
    let cb = train_codebook(&descs, 5, 50, 9).unwrap();
    let all: Vec<Vec<f64>> = descs.iter().map(|d| d.values.clone()).collect();
    let mut want = lloyd_by_hand(&all, pts.clone());
    let mut got: Vec<Vec<f64>> = (0..5)
        .map(|i| cb.centroid(i).iter().map(|&v| f64::from(v)).collect())
        .collect();
    let key = |v: &Vec<f64>| (v[0] as i64, v[1] as i64);
    want.sort_by_key(key);
    got.sort_by_key(key);
    for (g, w) in got.iter().zip(&want) {
        for (a, b) in g.iter().zip(w) {
            assert!((a - b).abs() < 1e-4, "{g:?} vs {w:?}");
        }
    }
}

#[test]
fn single_cell_is_the_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let descs: Vec<Descriptor> = (0..40)
        .map(|t| Descriptor {
            t,
            values: (0..4).map(|_| rng.random_range(0.0..10.0)).collect(),
        })
        .collect();
    let cb = train_codebook(&descs, 1, 10, 0).unwrap();
    for k in 0..4 {
        let mean = descs.iter().map(|d| d.values[k]).sum::<f64>() / 40.0;
        assert!((f64::from(cb.centroid(0)[k]) - mean).abs() < 1e-4);
    }
}

#[test]
fn assignment_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n_f = 6;
    let centroids: Vec<f32> = (0..100 * n_f)
        .map(|_| rng.random_range(0.0..10.0))
        .collect();
    let cb = Codebook::from_parts(n_f, 0, centroids.clone(), vec![0.0; 100 * n_f]).unwrap();
    for _ in 0..1000 {
        let v: Vec<f64> = (0..n_f).map(|_| rng.random_range(-1.0..11.0)).collect();
        let mut best = (f64::INFINITY, 0);
        for i in 0..100 {
            let d: f64 = v
                .iter()
                .zip(&centroids[i * n_f..(i + 1) * n_f])
                .map(|(a, &c)| (a - f64::from(c)).powi(2))
                .sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        assert_eq!(cb.assign(&v).unwrap(), best.1 as u32);
    }
    // ties go to the smaller index
    let cb = Codebook::from_parts(1, 0, vec![5.0, 0.0, 3.0, 2.0, 1.0], vec![0.0; 5]).unwrap();
    assert_eq!(cb.assign(&[1.5]).unwrap(), 3);
    assert_eq!(cb.assign(&[3.0]).unwrap(), 2);
    assert!(cb.assign(&[1.0, 2.0]).is_err());
}

#[test]
fn binarize_examples() {
    let th = vec![1.0f32, 2.0, 3.0, 4.0];
    let cb = Codebook::from_parts(4, 0, vec![0.0; 4], th.clone()).unwrap();
    let at: Vec<f64> = th.iter().map(|&v| f64::from(v)).collect();
    assert_eq!(
        cb.binarize(&at, 0).unwrap(),
        BinaryCode::from_bits([true; 4])
    );
    let below: Vec<f64> = at.iter().map(|v| v - 0.5).collect();
    assert_eq!(
        cb.binarize(&below, 0).unwrap(),
        BinaryCode::from_bits([false; 4])
    );
    let alt: Vec<f64> = at
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { v + 1.0 } else { v - 1.0 })
        .collect();
    assert_eq!(
        cb.binarize(&alt, 0).unwrap(),
        BinaryCode::from_bits([true, false, true, false])
    );
    assert!(cb.binarize(&at, 1).is_err());
}

fn code(rng: &mut ChaCha8Rng, n_f: usize) -> BinaryCode {
    BinaryCode::from_bits((0..n_f).map(|_| rng.random::<bool>()))
}

#[test]
fn knn_matches_score_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n_f = 12;
    for trial in 0..30 {
        let cb = Codebook::from_parts(n_f, 0, vec![0.0; 2 * n_f], vec![0.0; 2 * n_f]).unwrap();
        let mut index = InvertedIndex::new(cb);
        let mut all = Vec::new();
        for vid in 0..5u32 {
            let mut sigs = Vec::new();
            for t in 0..10u32 {
                let h = HashCode {
                    q: rng.random_range(0..2),
                    code: code(&mut rng, n_f),
                };
                all.push((vid, t * 3, h.clone()));
                sigs.push((t * 3, h));
            }
            let entry = VideoEntry {
                name: format!("v{vid}"),
                frame_count: 30,
                frame_rate: FrameRate::PAL,
            };
            index.add_video(vid, entry, &sigs).unwrap();
        }
        index.freeze();
        let probe = HashCode {
            q: trial % 2,
            code: code(&mut rng, n_f),
        };
        let tau = if trial < 15 {
            0
        } else {
            rng.random_range(0..=n_f as u32)
        };
        let mut want: Vec<(u32, u32, u32)> = all
            .iter()
            .filter(|(_, _, h)| h.q == probe.q)
            .map(|(v, t, h)| (*v, *t, n_f as u32 - h.code.hamming(&probe.code).unwrap()))
            .filter(|&(_, _, s)| s >= tau.max(1))
            .collect();
        want.sort_by(|a, b| b.2.cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
        want.truncate(10);
        let got: Vec<(u32, u32, u32)> = index
            .knn(&probe, 77, 10, tau)
            .unwrap()
            .iter()
            .map(|m| {
                assert_eq!(m.t_q, 77);
                (m.video_id, m.t_r, m.score)
            })
            .collect();
        assert_eq!(got, want);
    }
}

#[test]
fn hand_merged_finalize() {
    let seg = |offset: i64, r_start: u32, r_end: u32, votes: u32| ResultSegment {
        video_id: 1,
        q_start: (r_start as i64 + offset) as u32,
        q_end: (r_end as i64 + offset) as u32,
        r_start,
        r_end,
        votes,
        offset,
    };
    let out = finalize_segments(vec![seg(60, 10, 20, 5), seg(61, 18, 30, 7)], 2, 10);
    assert_eq!(out.len(), 1);
    let m = out[0];
    assert_eq!((m.r_start, m.r_end, m.votes, m.offset), (10, 30, 12, 61));
    assert_eq!((m.q_start, m.q_end), (70, 91));
    let other = ResultSegment {
        video_id: 2,
        ..seg(60, 18, 30, 7)
    };
    assert_eq!(
        finalize_segments(vec![seg(60, 10, 20, 5), other], 2, 1).len(),
        2
    );
    assert_eq!(
        finalize_segments(vec![seg(60, 10, 20, 5)], 2, 5),
        vec![seg(60, 10, 20, 5)]
    );
}

#[test]
fn hand_computed_average_precision() {
    let gt = |r_start, r_end| GroundTruthEntry {
        query_id: "q".into(),
        video_id: 0,
        r_start,
        r_end,
        q_start: 0,
        q_end: r_end - r_start,
    };
    let hit = |r_start, r_end| ResultSegment {
        video_id: 0,
        q_start: 0,
        q_end: 1,
        r_start,
        r_end,
        votes: 9,
        offset: 0,
    };
    let truths = [gt(0, 99), gt(500, 599)];
    let ranked = [hit(0, 99), hit(1000, 1099), hit(500, 599)];
    let ap = average_precision(
        &ranked,
        &truths.iter().collect::<Vec<_>>(),
        &OverlapRule::default(),
    );
    assert!((ap - 5.0 / 6.0).abs() < 1e-12);
}

#[test]
fn query_subclip_shares_extrema_with_source() {
    let params = CorpusParams {
        n_videos: 3,
        min_frames: 500,
        max_frames: 600,
        query_frames: 250,
        min_window: 61,
        width: 32,
        height: 24,
        frame_rate: FrameRate::PAL,
    };
    let corpus = make_corpus(8, &params).unwrap();
    let cfg = FingerprintConfig {
        n_t: 30,
        n_f: 16,
        min_separation: 3,
    };
    for (q, g) in corpus.queries.iter().zip(&corpus.ground_truth) {
        let fq = fingerprint_clip(&q.stream, &cfg).unwrap();
        let fr = fingerprint_clip(&corpus.references[g.video_id as usize].stream, &cfg).unwrap();
        let common = fq
            .descriptors
            .iter()
            .filter(|d| {
                fr.descriptors
                    .iter()
                    .any(|r| r.t == d.t + g.r_start && r.values == d.values)
            })
            .count();
        assert!(
            common >= 1,
            "query {} shares no extremum with its source",
            q.name
        );
    }
}
