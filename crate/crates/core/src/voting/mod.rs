//! Temporal voting: per-signature matches are folded into candidate segments
//! that share a query/reference offset, and the strongest segments are
//! reported.
//!
//! [`VotingQueue`] keeps only segments that voted recently and grows as
//! candidates appear. [`brute_force_vote`] builds the complete
//! offset table instead and serves as its reference.

mod brute;
mod search;

use std::collections::BTreeMap;
use std::mem;

pub use brute::{brute_force_vote, full_table_bytes, BruteForceOutcome};
pub use search::{
    hash_query, query_matches, search, vote_stream, SearchOutcome, SearchParams, SearchStats,
    StreamStats,
};

use crate::error::{Error, Result};
use crate::index::Match;

/// Offsets are considered the same alignment iff `|a - b| < tol_err`.
pub fn same(offset_a: i64, offset_b: i64, tol_err: u32) -> bool {
    offset_a.abs_diff(offset_b) < u64::from(tol_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VotingConfig {
    pub tol_err: u32,
    /// Idle query frames after which a segment is purged; `None` never purges.
    pub tol_delete: Option<u32>,
    pub n_conf: u32,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            tol_err: 2,
            tol_delete: Some(250),
            n_conf: 200,
        }
    }
}

impl VotingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_conf < 1 {
            return Err(Error::invalid("n_conf must be at least 1"));
        }
        Ok(())
    }
}

/// A candidate alignment accumulating votes in the queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub video_id: u32,
    pub q_start: u32,
    pub q_end: u32,
    pub r_start: u32,
    pub r_end: u32,
    /// `t_q - t_r` of the most recently accepted pair.
    pub offset: i64,
    pub votes: u32,
    pub last_vote_t_q: u32,
    /// Creation order; older segments win ties.
    pub seq: u64,
}

impl Segment {
    fn from_match(m: &Match, seq: u64) -> Self {
        Self {
            video_id: m.video_id,
            q_start: m.t_q,
            q_end: m.t_q,
            r_start: m.t_r,
            r_end: m.t_r,
            offset: m.offset(),
            votes: 1,
            last_vote_t_q: m.t_q,
            seq,
        }
    }

    fn absorb(&mut self, m: &Match) {
        self.votes += 1;
        self.q_start = self.q_start.min(m.t_q);
        self.q_end = self.q_end.max(m.t_q);
        self.r_start = self.r_start.min(m.t_r);
        self.r_end = self.r_end.max(m.t_r);
        self.offset = m.offset();
        self.last_vote_t_q = m.t_q;
    }

    pub fn to_result(&self) -> ResultSegment {
        ResultSegment {
            video_id: self.video_id,
            q_start: self.q_start,
            q_end: self.q_end,
            r_start: self.r_start,
            r_end: self.r_end,
            votes: self.votes,
            offset: self.offset,
        }
    }
}

/// A reported alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResultSegment {
    pub video_id: u32,
    pub q_start: u32,
    pub q_end: u32,
    pub r_start: u32,
    pub r_end: u32,
    pub votes: u32,
    pub offset: i64,
}

/// Active segments grouped per reference video.
#[derive(Debug, Clone)]
pub struct VotingQueue {
    config: VotingConfig,
    by_video: BTreeMap<u32, Vec<Segment>>,
    /// Purged segments that had already reached `n_conf`.
    retired: Vec<Segment>,
    len: usize,
    next_seq: u64,
    last_t_q: Option<u32>,
    peak_len: usize,
    peak_held: usize,
}

impl VotingQueue {
    pub fn new(config: VotingConfig) -> Self {
        Self {
            config,
            by_video: BTreeMap::new(),
            retired: Vec::new(),
            len: 0,
            next_seq: 0,
            last_t_q: None,
            peak_len: 0,
            peak_held: 0,
        }
    }

    pub fn config(&self) -> &VotingConfig {
        &self.config
    }

    /// Number of active segments.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn peak_len(&self) -> usize {
        self.peak_len
    }

    /// Peak bytes held in segment records, active plus retired.
    pub fn peak_bytes(&self) -> usize {
        self.peak_held * mem::size_of::<Segment>()
    }

    pub fn total_votes(&self) -> u64 {
        self.by_video
            .values()
            .flatten()
            .chain(&self.retired)
            .map(|s| u64::from(s.votes))
            .sum()
    }

    /// Active segments in creation order.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = self.by_video.values().flatten().copied().collect();
        out.sort_by_key(|s| s.seq);
        out
    }

    pub fn retired(&self) -> &[Segment] {
        &self.retired
    }

    pub fn process_match(&mut self, m: &Match) -> Result<()> {
        if let Some(last) = self.last_t_q {
            if m.t_q < last {
                return Err(Error::Contract(format!(
                    "match at t_q={} arrived after t_q={last}",
                    m.t_q
                )));
            }
        }
        self.last_t_q = Some(m.t_q);

        let offset = m.offset();
        let tol_err = self.config.tol_err;
        let segments = self.by_video.entry(m.video_id).or_default();
        // most votes wins; among equals the earliest created, which sits first
        let mut best: Option<usize> = None;
        for (i, s) in segments.iter().enumerate() {
            if same(offset, s.offset, tol_err) && best.is_none_or(|b| s.votes > segments[b].votes) {
                best = Some(i);
            }
        }
        match best {
            Some(i) => segments[i].absorb(m),
            None => {
                segments.push(Segment::from_match(m, self.next_seq));
                self.next_seq += 1;
                self.len += 1;
                self.peak_len = self.peak_len.max(self.len);
                self.peak_held = self.peak_held.max(self.len + self.retired.len());
            }
        }
        Ok(())
    }

    /// Removes segments idle for more than `tol_delete` query frames. Those
    /// that already reached `n_conf` are kept aside for [`Self::finalize`].
    pub fn purge(&mut self, current_t_q: u32) {
        let Some(tol_delete) = self.config.tol_delete else {
            return;
        };
        let n_conf = self.config.n_conf;
        let mut removed = 0;
        let retired = &mut self.retired;
        self.by_video.retain(|_, segments| {
            segments.retain(|s| {
                let stale = current_t_q.saturating_sub(s.last_vote_t_q) > tol_delete;
                if stale {
                    removed += 1;
                    if s.votes >= n_conf {
                        retired.push(*s);
                    }
                }
                !stale
            });
            !segments.is_empty()
        });
        self.len -= removed;
    }

    pub fn finalize(self) -> Vec<ResultSegment> {
        let mut all: Vec<Segment> = self.retired;
        all.extend(self.by_video.into_values().flatten());
        all.sort_by_key(|s| s.seq);
        let candidates: Vec<ResultSegment> = all.iter().map(Segment::to_result).collect();
        finalize_segments(candidates, self.config.tol_err, self.config.n_conf)
    }
}

fn spans_touch(a: &ResultSegment, b: &ResultSegment) -> bool {
    u64::from(a.r_start) <= u64::from(b.r_end) + 1 && u64::from(b.r_start) <= u64::from(a.r_end) + 1
}

fn mergeable(a: &ResultSegment, b: &ResultSegment, tol_err: u32) -> bool {
    a.video_id == b.video_id && same(a.offset, b.offset, tol_err) && spans_touch(a, b)
}

/// Merges `b` into `a`: spans are unioned, votes summed, and the offset of the
/// member with more votes is kept (`a` on ties).
fn merge_into(a: &mut ResultSegment, b: &ResultSegment) {
    if b.votes > a.votes {
        a.offset = b.offset;
    }
    a.votes += b.votes;
    a.q_start = a.q_start.min(b.q_start);
    a.q_end = a.q_end.max(b.q_end);
    a.r_start = a.r_start.min(b.r_start);
    a.r_end = a.r_end.max(b.r_end);
}

/// Combines same-video segments with compatible offsets and touching
/// reference spans until no pair qualifies. Earlier candidates absorb later
/// ones, so the outcome depends only on the input order.
pub fn merge_segments(candidates: Vec<ResultSegment>, tol_err: u32) -> Vec<ResultSegment> {
    let mut groups: BTreeMap<u32, Vec<ResultSegment>> = BTreeMap::new();
    for c in candidates {
        groups.entry(c.video_id).or_default().push(c);
    }
    let mut out = Vec::new();
    for (_, mut segs) in groups {
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < segs.len() {
                let mut j = i + 1;
                while j < segs.len() {
                    if mergeable(&segs[i], &segs[j], tol_err) {
                        let b = segs.remove(j);
                        merge_into(&mut segs[i], &b);
                        changed = true;
                        j = i + 1;
                    } else {
                        j += 1;
                    }
                }
                i += 1;
            }
            if !changed {
                break;
            }
        }
        out.extend(segs);
    }
    out
}

/// Votes descending, then `(video_id, r_start)`, then the remaining fields so
/// the order is total.
pub fn rank_results(results: &mut [ResultSegment]) {
    results.sort_by(|a, b| {
        b.votes
            .cmp(&a.votes)
            .then(a.video_id.cmp(&b.video_id))
            .then(a.r_start.cmp(&b.r_start))
            .then(a.r_end.cmp(&b.r_end))
            .then(a.q_start.cmp(&b.q_start))
            .then(a.q_end.cmp(&b.q_end))
            .then(a.offset.cmp(&b.offset))
    });
}

/// Merge, drop everything under `n_conf` votes, and rank.
pub fn finalize_segments(
    candidates: Vec<ResultSegment>,
    tol_err: u32,
    n_conf: u32,
) -> Vec<ResultSegment> {
    let mut merged = merge_segments(candidates, tol_err);
    merged.retain(|s| s.votes >= n_conf);
    rank_results(&mut merged);
    merged
}
