use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{full_table_bytes, ResultSegment, VotingConfig, VotingQueue};
use crate::error::{Error, Result};
use crate::fingerprint::Descriptor;
use crate::hashing::HashCode;
use crate::index::{InvertedIndex, Match};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Neighbours kept per query signature.
    pub n_nn: usize,
    /// Minimum similarity for a neighbour; 0 keeps every non-zero score.
    pub tau_sc: u32,
    pub voting: VotingConfig,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            n_nn: 200,
            tau_sc: 0,
            voting: VotingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamStats {
    pub signatures: usize,
    pub matches: usize,
    pub peak_queue_len: usize,
    pub peak_queue_bytes: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub stream: StreamStats,
    /// Bytes a dense offset table over the whole database would allocate.
    pub table_bytes_estimate: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub results: Vec<ResultSegment>,
    pub stats: SearchStats,
}

fn check_sorted(descriptors: &[Descriptor]) -> Result<()> {
    if let Some(w) = descriptors.windows(2).find(|w| w[1].t < w[0].t) {
        return Err(Error::Contract(format!(
            "query signatures out of order: t={} after t={}",
            w[1].t, w[0].t
        )));
    }
    Ok(())
}

pub fn hash_query(
    index: &InvertedIndex,
    descriptors: &[Descriptor],
) -> Result<Vec<(u32, HashCode)>> {
    descriptors
        .par_iter()
        .map(|d| Ok((d.t, index.codebook().hash_descriptor(d)?)))
        .collect()
}

/// Hashes every query descriptor and retrieves its capped neighbour list,
/// keeping query order.
pub fn query_matches(
    index: &InvertedIndex,
    descriptors: &[Descriptor],
    params: &SearchParams,
) -> Result<Vec<(u32, Vec<Match>)>> {
    check_sorted(descriptors)?;
    descriptors
        .par_iter()
        .map(|d| {
            let h = index.codebook().hash_descriptor(d)?;
            Ok((d.t, index.knn(&h, d.t, params.n_nn, params.tau_sc)?))
        })
        .collect()
}

/// Feeds per-signature match lists through a voting queue, purging before each
/// signature. `observe` sees the queue after every purge and every match.
pub fn vote_stream<I>(
    stream: I,
    config: VotingConfig,
    mut observe: impl FnMut(&VotingQueue),
) -> Result<(Vec<ResultSegment>, StreamStats)>
where
    I: IntoIterator<Item = (u32, Vec<Match>)>,
{
    config.validate()?;
    let mut queue = VotingQueue::new(config);
    let mut stats = StreamStats::default();
    for (t_q, matches) in stream {
        stats.signatures += 1;
        queue.purge(t_q);
        observe(&queue);
        for m in &matches {
            if m.t_q != t_q {
                return Err(Error::Contract(format!(
                    "match stamped t_q={} inside signature t_q={t_q}",
                    m.t_q
                )));
            }
            queue.process_match(m)?;
            stats.matches += 1;
            observe(&queue);
        }
    }
    stats.peak_queue_len = queue.peak_len();
    stats.peak_queue_bytes = queue.peak_bytes();
    Ok((queue.finalize(), stats))
}

/// Full query pipeline against a frozen index.
pub fn search(
    index: &InvertedIndex,
    descriptors: &[Descriptor],
    params: &SearchParams,
) -> Result<SearchOutcome> {
    if !index.is_frozen() {
        return Err(Error::Contract("search needs a frozen index".into()));
    }
    let start = Instant::now();
    let stream = query_matches(index, descriptors, params)?;
    let (results, stream_stats) = vote_stream(stream, params.voting, |_| {})?;
    let query_frames = descriptors.last().map_or(0, |d| u64::from(d.t) + 1);
    let table_bytes_estimate = full_table_bytes(
        query_frames,
        index.videos().values().map(|v| v.frame_count),
        params.voting.tol_err,
    );
    Ok(SearchOutcome {
        results,
        stats: SearchStats {
            stream: stream_stats,
            table_bytes_estimate,
            elapsed: start.elapsed(),
        },
    })
}
