//! Retrieval evaluation: temporal-overlap correctness, mean average
//! precision, ground-truth files, and the report format. Synthetic corpora
//! and distortions stand in for real footage.

mod corpus;
mod distort;
mod protocol;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub use corpus::{make_corpus, Corpus, CorpusParams, SyntheticClip};
pub use distort::{distort, Distortion, LogoPatch};
pub use protocol::{build_index, evaluate, fingerprint_clip, train_from_clips, EvalQuery};

use crate::codec;
use crate::error::{Error, Result};
use crate::voting::ResultSegment;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthEntry {
    pub query_id: String,
    pub video_id: u32,
    pub r_start: u32,
    pub r_end: u32,
    pub q_start: u32,
    pub q_end: u32,
}

/// Which interval the overlap ratio is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapBasis {
    /// Fraction of the true reference span covered by the result.
    #[default]
    GroundTruth,
    /// Fraction of the result's reference span inside the true span.
    Result,
    /// Intersection over union of the two reference spans.
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapRule {
    pub basis: OverlapBasis,
    pub min_ratio: f64,
}

impl Default for OverlapRule {
    fn default() -> Self {
        Self {
            basis: OverlapBasis::GroundTruth,
            min_ratio: 0.6,
        }
    }
}

fn span_len(start: u32, end: u32) -> u64 {
    if end < start {
        0
    } else {
        u64::from(end - start) + 1
    }
}

impl OverlapRule {
    pub fn is_correct(&self, result: &ResultSegment, gt: &GroundTruthEntry) -> bool {
        if result.video_id != gt.video_id {
            return false;
        }
        let inter = span_len(result.r_start.max(gt.r_start), result.r_end.min(gt.r_end));
        let denom = match self.basis {
            OverlapBasis::GroundTruth => span_len(gt.r_start, gt.r_end),
            OverlapBasis::Result => span_len(result.r_start, result.r_end),
            OverlapBasis::Union => {
                span_len(result.r_start, result.r_end) + span_len(gt.r_start, gt.r_end) - inter
            }
        };
        denom > 0 && inter as f64 / denom as f64 >= self.min_ratio
    }
}

/// At least 60% of the true reference span is covered by the result, on the
/// right video.
pub fn is_correct(result: &ResultSegment, gt: &GroundTruthEntry) -> bool {
    OverlapRule::default().is_correct(result, gt)
}

/// Non-interpolated AP: precision at every rank that finds a not yet found
/// relevant entry, summed and divided by the number of relevant entries.
pub fn average_precision(
    ranked: &[ResultSegment],
    relevant: &[&GroundTruthEntry],
    rule: &OverlapRule,
) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut found = vec![false; relevant.len()];
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, r) in ranked.iter().enumerate() {
        if let Some(k) = (0..relevant.len()).find(|&k| !found[k] && rule.is_correct(r, relevant[k]))
        {
            found[k] = true;
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    sum / relevant.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapOutcome {
    pub map: f64,
    /// Average precision of every scored query, by query id.
    pub per_query: Vec<(String, f64)>,
    /// Queries with results but no ground truth; left out of the mean.
    pub excluded: Vec<String>,
}

/// Mean AP over every query that has ground truth. Queries with ground truth
/// but no results score 0.
pub fn mean_average_precision(
    results: &BTreeMap<String, Vec<ResultSegment>>,
    ground_truth: &[GroundTruthEntry],
    rule: &OverlapRule,
) -> MapOutcome {
    let mut by_query: BTreeMap<&str, Vec<&GroundTruthEntry>> = BTreeMap::new();
    for g in ground_truth {
        by_query.entry(g.query_id.as_str()).or_default().push(g);
    }
    let per_query: Vec<(String, f64)> = by_query
        .iter()
        .map(|(q, rel)| {
            let ranked = results.get(*q).map_or(&[][..], Vec::as_slice);
            (q.to_string(), average_precision(ranked, rel, rule))
        })
        .collect();
    let excluded = results
        .keys()
        .filter(|q| !by_query.contains_key(q.as_str()))
        .cloned()
        .collect();
    let map = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().map(|(_, ap)| ap).sum::<f64>() / per_query.len() as f64
    };
    MapOutcome {
        map,
        per_query,
        excluded,
    }
}

pub fn format_ground_truth(entries: &[GroundTruthEntry]) -> String {
    let mut s = String::new();
    for g in entries {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            g.query_id, g.video_id, g.r_start, g.r_end, g.q_start, g.q_end
        );
    }
    s
}

/// Parses tab-separated `query_id video_id r_start r_end q_start q_end` rows.
/// Blank lines and `#` comments are skipped.
pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruthEntry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(Error::invalid(format!(
                "ground truth line {}: expected 6 tab-separated columns, got {}",
                n + 1,
                cols.len()
            )));
        }
        let num = |i: usize| -> Result<u32> {
            cols[i].parse().map_err(|_| {
                Error::invalid(format!(
                    "ground truth line {}: bad number {:?}",
                    n + 1,
                    cols[i]
                ))
            })
        };
        let entry = GroundTruthEntry {
            query_id: cols[0].to_string(),
            video_id: num(1)?,
            r_start: num(2)?,
            r_end: num(3)?,
            q_start: num(4)?,
            q_end: num(5)?,
        };
        if entry.r_end < entry.r_start || entry.q_end < entry.q_start {
            return Err(Error::invalid(format!(
                "ground truth line {}: empty span",
                n + 1
            )));
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthEntry>> {
    let bytes = codec::read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::invalid("ground truth is not utf-8"))?;
    parse_ground_truth(&text)
}

/// Result records: `query_id video_id q_start q_end r_start r_end votes`,
/// tab-separated, one line per segment.
pub fn format_results(query_id: &str, results: &[ResultSegment]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(
            s,
            "{query_id}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.video_id, r.q_start, r.q_end, r.r_start, r.r_end, r.votes
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub map: f64,
    pub per_query: Vec<(String, f64)>,
    pub excluded: Vec<String>,
    /// Mean wall time of index search alone.
    pub mean_query_seconds: f64,
    /// Mean wall time of descriptor extraction for a query.
    pub mean_fingerprint_seconds: f64,
    pub peak_queue_bytes: usize,
    /// Largest up-front allocation a dense offset table would need for one query.
    pub table_bytes_estimate: u64,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "map\t{:.4}", self.map);
        let _ = writeln!(s, "queries\t{}", self.per_query.len());
        let _ = writeln!(s, "mean_query_seconds\t{:.4}", self.mean_query_seconds);
        let _ = writeln!(
            s,
            "mean_fingerprint_seconds\t{:.4}",
            self.mean_fingerprint_seconds
        );
        let _ = writeln!(s, "peak_queue_bytes\t{}", self.peak_queue_bytes);
        let _ = writeln!(s, "table_bytes_estimate\t{}", self.table_bytes_estimate);
        let _ = writeln!(
            s,
            "cell\t{:.3} / {:.2} sec",
            self.map, self.mean_query_seconds
        );
        for (q, ap) in &self.per_query {
            let _ = writeln!(s, "ap\t{q}\t{ap:.4}");
        }
        for q in &self.excluded {
            let _ = writeln!(s, "excluded\t{q}");
        }
        s
    }
}
