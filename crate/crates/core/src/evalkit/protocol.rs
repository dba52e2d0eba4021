use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::{mean_average_precision, EvalReport, GroundTruthEntry, OverlapRule};
use crate::error::Result;
use crate::fingerprint::{ee_series, fingerprint_series, FingerprintConfig};
use crate::fpfile::FingerprintFile;
use crate::frame::FrameStream;
use crate::hashing::{train_codebook, Codebook};
use crate::index::{InvertedIndex, VideoEntry};
use crate::voting::{search, ResultSegment, SearchParams};

pub fn fingerprint_clip(
    stream: &FrameStream,
    config: &FingerprintConfig,
) -> Result<FingerprintFile> {
    let series = ee_series(&stream.frames, stream.rate)?;
    Ok(FingerprintFile {
        config: *config,
        frame_count: stream.len() as u64,
        frame_rate: stream.rate,
        descriptors: fingerprint_series(&series.values, config)?,
    })
}

/// Trains a codebook on every descriptor of `clips`, pooled in order.
pub fn train_from_clips(
    clips: &[FingerprintFile],
    n_c: usize,
    max_iters: usize,
    seed: u64,
) -> Result<Codebook> {
    let pooled: Vec<_> = clips
        .iter()
        .flat_map(|c| c.descriptors.iter().cloned())
        .collect();
    train_codebook(&pooled, n_c, max_iters, seed)
}

/// Indexes `clips` under ids `0..n` in order and freezes the index.
pub fn build_index(
    codebook: Codebook,
    clips: &[(String, FingerprintFile)],
) -> Result<InvertedIndex> {
    let mut index = InvertedIndex::new(codebook);
    for (id, (name, clip)) in clips.iter().enumerate() {
        let signatures = clip
            .descriptors
            .par_iter()
            .map(|d| Ok((d.t, index.codebook().hash_descriptor(d)?)))
            .collect::<Result<Vec<_>>>()?;
        index.add_video(
            id as u32,
            VideoEntry {
                name: name.clone(),
                frame_count: clip.frame_count,
                frame_rate: clip.frame_rate,
            },
            &signatures,
        )?;
    }
    index.freeze();
    Ok(index)
}

#[derive(Debug, Clone)]
pub struct EvalQuery {
    pub id: String,
    pub fingerprint: FingerprintFile,
    pub fingerprint_seconds: f64,
}

impl EvalQuery {
    pub fn from_stream(
        id: impl Into<String>,
        stream: &FrameStream,
        config: &FingerprintConfig,
    ) -> Result<Self> {
        let start = Instant::now();
        let fingerprint = fingerprint_clip(stream, config)?;
        Ok(Self {
            id: id.into(),
            fingerprint,
            fingerprint_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Runs every query against `index` in parallel and scores the ranked
/// results. Returns the report and the ranked results per query id.
pub fn evaluate(
    index: &InvertedIndex,
    queries: &[EvalQuery],
    ground_truth: &[GroundTruthEntry],
    params: &SearchParams,
    rule: &OverlapRule,
) -> Result<(EvalReport, BTreeMap<String, Vec<ResultSegment>>)> {
    let outcomes = queries
        .par_iter()
        .map(|q| search(index, &q.fingerprint.descriptors, params).map(|o| (q, o)))
        .collect::<Result<Vec<_>>>()?;
    let n = outcomes.len().max(1) as f64;
    let mean_query_seconds = outcomes
        .iter()
        .map(|(_, o)| o.stats.elapsed.as_secs_f64())
        .sum::<f64>()
        / n;
    let mean_fingerprint_seconds = outcomes
        .iter()
        .map(|(q, _)| q.fingerprint_seconds)
        .sum::<f64>()
        / n;
    let peak_queue_bytes = outcomes
        .iter()
        .map(|(_, o)| o.stats.stream.peak_queue_bytes)
        .max()
        .unwrap_or(0);
    let table_bytes_estimate = outcomes
        .iter()
        .map(|(_, o)| o.stats.table_bytes_estimate)
        .max()
        .unwrap_or(0);
    let results: BTreeMap<String, Vec<ResultSegment>> = outcomes
        .into_iter()
        .map(|(q, o)| (q.id.clone(), o.results))
        .collect();
    let scored = mean_average_precision(&results, ground_truth, rule);
    let report = EvalReport {
        map: scored.map,
        per_query: scored.per_query,
        excluded: scored.excluded,
        mean_query_seconds,
        mean_fingerprint_seconds,
        peak_queue_bytes,
        table_bytes_estimate,
    };
    Ok((report, results))
}
