use std::collections::BTreeMap;
use std::mem;

use super::{finalize_segments, ResultSegment};
use crate::index::Match;

/// One cell of the dense offset table.
#[derive(Debug, Clone, Copy)]
struct Bucket {
    segment: ResultSegment,
    first_seen: usize,
}

#[derive(Debug, Clone)]
pub struct BruteForceOutcome {
    pub results: Vec<ResultSegment>,
    /// Bytes allocated for the dense table.
    pub table_bytes: usize,
}

fn bucket_of(offset: i64, width: i64) -> i64 {
    offset.div_euclid(width)
}

/// Reference voting over the complete match list.
///
/// A dense table covering every offset bucket (width `tol_err`) between the
/// smallest and largest observed offset is allocated per video. Each match
/// votes its bucket and widens the bucket's spans; the bucket keeps the offset
/// of its latest match. The populated buckets, in order of first vote, then go
/// through the same merge, threshold and ranking as the queue.
pub fn brute_force_vote(all_matches: &[Match], tol_err: u32, n_conf: u32) -> BruteForceOutcome {
    let width = i64::from(tol_err.max(1));
    let mut ranges: BTreeMap<u32, (i64, i64)> = BTreeMap::new();
    for m in all_matches {
        let b = bucket_of(m.offset(), width);
        ranges
            .entry(m.video_id)
            .and_modify(|r| *r = (r.0.min(b), r.1.max(b)))
            .or_insert((b, b));
    }
    let mut tables: BTreeMap<u32, (i64, Vec<Option<Bucket>>)> = ranges
        .iter()
        .map(|(&v, &(lo, hi))| (v, (lo, vec![None; (hi - lo + 1) as usize])))
        .collect();
    let table_bytes = tables
        .values()
        .map(|(_, t)| t.len() * mem::size_of::<Option<Bucket>>())
        .sum();

    for (i, m) in all_matches.iter().enumerate() {
        let (lo, table) = tables.get_mut(&m.video_id).expect("range computed above");
        let slot = &mut table[(bucket_of(m.offset(), width) - *lo) as usize];
        match slot {
            Some(b) => {
                let s = &mut b.segment;
                s.votes += 1;
                s.q_start = s.q_start.min(m.t_q);
                s.q_end = s.q_end.max(m.t_q);
                s.r_start = s.r_start.min(m.t_r);
                s.r_end = s.r_end.max(m.t_r);
                s.offset = m.offset();
            }
            None => {
                *slot = Some(Bucket {
                    segment: ResultSegment {
                        video_id: m.video_id,
                        q_start: m.t_q,
                        q_end: m.t_q,
                        r_start: m.t_r,
                        r_end: m.t_r,
                        votes: 1,
                        offset: m.offset(),
                    },
                    first_seen: i,
                })
            }
        }
    }

    let mut buckets: Vec<Bucket> = tables
        .into_values()
        .flat_map(|(_, t)| t.into_iter().flatten())
        .collect();
    buckets.sort_by_key(|b| b.first_seen);
    let candidates = buckets.into_iter().map(|b| b.segment).collect();
    BruteForceOutcome {
        results: finalize_segments(candidates, tol_err, n_conf),
        table_bytes,
    }
}

/// Size of a dense table spanning every possible offset between a query of
/// `query_frames` and each reference video, the up-front allocation a full
/// voting table needs before any match is seen.
pub fn full_table_bytes(
    query_frames: u64,
    reference_frames: impl IntoIterator<Item = u64>,
    tol_err: u32,
) -> u64 {
    let width = u64::from(tol_err.max(1));
    let cell = mem::size_of::<Option<Bucket>>() as u64;
    reference_frames
        .into_iter()
        .map(|r| (query_frames + r).div_ceil(width) * cell)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(video_id: u32, t_q: u32, t_r: u32) -> Match {
        Match {
            video_id,
            t_q,
            t_r,
            score: 1,
        }
    }

    #[test]
    fn empty_stream() {
        let out = brute_force_vote(&[], 2, 1);
        assert!(out.results.is_empty());
        assert_eq!(out.table_bytes, 0);
    }

    #[test]
    fn repeated_pair_accumulates() {
        let matches = vec![m(4, 50, 20); 7];
        let out = brute_force_vote(&matches, 2, 7);
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.results[0].votes, 7);
        assert_eq!(out.results[0].offset, 30);
        assert!(brute_force_vote(&matches, 2, 8).results.is_empty());
    }

    #[test]
    fn buckets_split_on_width() {
        // offsets 4, 5 share bucket 2; offset 6 opens bucket 3 but merges back
        let matches = vec![m(1, 14, 10), m(1, 16, 11), m(1, 18, 12)];
        let out = brute_force_vote(&matches, 2, 1);
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.results[0].votes, 3);
        // negative offsets floor, not truncate
        let out = brute_force_vote(&[m(1, 0, 1), m(1, 0, 2)], 2, 1);
        assert_eq!(out.results.len(), 1);
    }

    #[test]
    fn full_table_size() {
        let cell = mem::size_of::<Option<Bucket>>() as u64;
        assert_eq!(full_table_bytes(10, [20, 30], 2), (15 + 20) * cell);
        assert_eq!(full_table_bytes(10, [], 2), 0);
    }
}
