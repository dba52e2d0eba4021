use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use edgevote::codec::write_atomic;
use edgevote::evalkit::{
    build_index, distort, evaluate, fingerprint_clip, format_ground_truth, format_results,
    make_corpus, read_ground_truth, train_from_clips, CorpusParams, Distortion, EvalQuery,
    OverlapBasis, OverlapRule,
};
use edgevote::fpfile::FINGERPRINT_MAGIC;
use edgevote::frame::FRAME_MAGIC;
use edgevote::voting::search;
use edgevote::{Codebook, FingerprintFile, FrameRate, FrameStream, InvertedIndex, SearchConfig};
use rayon::prelude::*;

use crate::{display, Usage};

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    /// VEEF frame file.
    input: PathBuf,
    /// Output VEEP fingerprint file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// VEEP fingerprint files whose descriptors are pooled for training.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output codebook file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Reference videos, VEEF or VEEP. Video ids follow argument order and
    /// names are the file stems.
    inputs: Vec<PathBuf>,
    #[arg(long)]
    codebook: PathBuf,
    /// Output index file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    /// Query clips, VEEF or VEEP. Query ids are the file stems.
    #[arg(required = true)]
    queries: Vec<PathBuf>,
    /// Write the result records here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    index: PathBuf,
    /// Tab-separated ground truth: query_id, video_id, r_start, r_end, q_start, q_end.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Query clips, VEEF or VEEP, named by file stem.
    queries: Vec<PathBuf>,
    /// Interval the 60% overlap is measured against.
    #[arg(long, value_enum, default_value = "ground-truth")]
    overlap: Basis,
    #[arg(long, default_value_t = 0.6)]
    min_overlap: f64,
    /// Also write the report here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Basis {
    GroundTruth,
    Result,
    Union,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving refs/, queries/ and ground_truth.tsv.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    corpus_seed: u64,
    #[arg(long, default_value_t = 12)]
    videos: usize,
    #[arg(long, default_value_t = 2000)]
    min_frames: usize,
    #[arg(long, default_value_t = 3000)]
    max_frames: usize,
    #[arg(long, default_value_t = 1500)]
    query_frames: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 48)]
    height: usize,
    /// Gaussian noise added to the queries.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| anyhow!("{} has no usable file name", display(path)))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", display(path)))
}

/// Loads a clip as descriptors: VEEP files as stored, VEEF files
/// fingerprinted with `cfg`. Also returns the extraction time.
fn load_clip(path: &Path, cfg: &SearchConfig) -> Result<(FingerprintFile, f64)> {
    let bytes = read(path)?;
    let start = Instant::now();
    let file = if bytes.starts_with(FINGERPRINT_MAGIC) {
        FingerprintFile::decode(&bytes)?
    } else if bytes.starts_with(FRAME_MAGIC) {
        fingerprint_clip(&FrameStream::decode(&bytes)?, &cfg.fingerprint())?
    } else {
        bail!(
            "{} is neither a VEEF frame file nor a VEEP fingerprint file",
            display(path)
        );
    };
    Ok((file, start.elapsed().as_secs_f64()))
}

fn check_dims(path: &Path, file: &FingerprintFile, codebook: &Codebook) -> Result<()> {
    if file.config.n_f != codebook.n_f() {
        bail!(
            "{} has N_F={} but the codebook has N_F={}",
            display(path),
            file.config.n_f,
            codebook.n_f()
        );
    }
    Ok(())
}

fn load_index(path: &Path, cfg: &SearchConfig) -> Result<InvertedIndex> {
    let index =
        InvertedIndex::load(path).with_context(|| format!("loading index {}", display(path)))?;
    if index.codebook().n_f() != cfg.n_f {
        bail!(
            "configured N_F={} does not match the index codebook's N_F={}",
            cfg.n_f,
            index.codebook().n_f()
        );
    }
    Ok(index)
}

pub fn fingerprint(cfg: &SearchConfig, a: FingerprintArgs) -> Result<()> {
    let stream = FrameStream::decode(&read(&a.input)?)
        .with_context(|| format!("parsing {}", display(&a.input)))?;
    let start = Instant::now();
    let file = fingerprint_clip(&stream, &cfg.fingerprint())?;
    let secs = start.elapsed().as_secs_f64();
    file.save(&a.output)?;
    println!(
        "descriptors\t{}\tframes\t{}\textract_seconds\t{secs:.4}",
        file.descriptors.len(),
        stream.len()
    );
    Ok(())
}

pub fn train(cfg: &SearchConfig, a: TrainArgs) -> Result<()> {
    let mut files = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let file = FingerprintFile::decode(&read(path)?)
            .with_context(|| format!("parsing {}", display(path)))?;
        if file.config.n_f != cfg.n_f || file.config.n_t != cfg.n_t {
            bail!(
                "{} was extracted with N_T={}, N_F={} but the configuration has N_T={}, N_F={}",
                display(path),
                file.config.n_t,
                file.config.n_f,
                cfg.n_t,
                cfg.n_f
            );
        }
        files.push(file);
    }
    let total: usize = files.iter().map(|f| f.descriptors.len()).sum();
    if total < cfg.n_c {
        bail!(
            "training {} centroids needs at least {} descriptors, got {total}",
            cfg.n_c,
            cfg.n_c
        );
    }
    let start = Instant::now();
    let codebook = train_from_clips(&files, cfg.n_c, cfg.kmeans_iters, cfg.seed)?;
    codebook.save(&a.output)?;
    println!(
        "centroids\t{}\tdescriptors\t{total}\ttrain_seconds\t{:.3}",
        codebook.n_c(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn index(cfg: &SearchConfig, a: IndexArgs) -> Result<()> {
    let codebook = Codebook::load(&a.codebook)
        .with_context(|| format!("loading codebook {}", display(&a.codebook)))?;
    let mut names = BTreeSet::new();
    for path in &a.inputs {
        let name = stem(path)?;
        if !names.insert(name.clone()) {
            bail!(edgevote::Error::Conflict(format!(
                "duplicate video name {name:?}"
            )));
        }
    }
    let clips = a
        .inputs
        .par_iter()
        .map(|path| {
            let (file, _) = load_clip(path, cfg)?;
            check_dims(path, &file, &codebook)?;
            Ok((stem(path)?, file))
        })
        .collect::<Result<Vec<_>>>()?;
    let index = build_index(codebook, &clips)?;
    let bytes = index.save(&a.output)?;
    println!(
        "videos\t{}\tpostings\t{}\tbytes\t{bytes}",
        index.videos().len(),
        index.posting_count()
    );
    Ok(())
}

pub fn query(cfg: &SearchConfig, a: QueryArgs) -> Result<()> {
    let index = load_index(&a.index, cfg)?;
    let params = cfg.search_params();
    let outcomes = a
        .queries
        .par_iter()
        .map(|path| {
            let id = stem(path)?;
            let (file, fp_secs) = load_clip(path, cfg)?;
            check_dims(path, &file, index.codebook())?;
            let outcome = search(&index, &file.descriptors, &params)?;
            Ok((id, fp_secs, outcome))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = String::new();
    let mut stats = String::new();
    for (id, fp_secs, o) in &outcomes {
        if o.results.is_empty() {
            let _ = writeln!(records, "{id}\tno match");
        } else {
            records.push_str(&format_results(id, &o.results));
        }
        let s = &o.stats;
        let _ = writeln!(
            stats,
            "#stats\t{id}\tsignatures={}\tmatches={}\tpeak_queue_len={}\tpeak_queue_bytes={}\ttable_bytes_estimate={}\tsearch_seconds={:.4}\tfingerprint_seconds={fp_secs:.4}",
            s.stream.signatures,
            s.stream.matches,
            s.stream.peak_queue_len,
            s.stream.peak_queue_bytes,
            s.table_bytes_estimate,
            s.elapsed.as_secs_f64()
        );
    }
    match &a.output {
        Some(path) => write_atomic(path, records.as_bytes())?,
        None => print!("{records}"),
    }
    print!("{stats}");
    Ok(())
}

pub fn eval(cfg: &SearchConfig, a: EvalArgs) -> Result<()> {
    if a.queries.is_empty() {
        return Err(Usage("eval needs at least one query".into()).into());
    }
    if !(0.0..=1.0).contains(&a.min_overlap) {
        return Err(Usage(format!("--min-overlap {} is outside [0, 1]", a.min_overlap)).into());
    }
    let index = load_index(&a.index, cfg)?;
    let gt = read_ground_truth(&a.ground_truth)
        .with_context(|| format!("reading ground truth {}", display(&a.ground_truth)))?;
    let queries = a
        .queries
        .par_iter()
        .map(|path| {
            let (fingerprint, fingerprint_seconds) = load_clip(path, cfg)?;
            check_dims(path, &fingerprint, index.codebook())?;
            Ok(EvalQuery {
                id: stem(path)?,
                fingerprint,
                fingerprint_seconds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rule = OverlapRule {
        basis: match a.overlap {
            Basis::GroundTruth => OverlapBasis::GroundTruth,
            Basis::Result => OverlapBasis::Result,
            Basis::Union => OverlapBasis::Union,
        },
        min_ratio: a.min_overlap,
    };
    let (report, _) = evaluate(&index, &queries, &gt, &cfg.search_params(), &rule)?;
    for q in &report.excluded {
        eprintln!("warning: query {q} has no ground truth rows and is excluded");
    }
    if report.per_query.is_empty() {
        eprintln!("warning: no query has ground truth; mAP is undefined and reported as 0");
    }
    let text = report.to_text();
    if let Some(path) = &a.output {
        write_atomic(path, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

pub fn synth(cfg: &SearchConfig, a: SynthArgs) -> Result<()> {
    let params = CorpusParams {
        n_videos: a.videos,
        min_frames: a.min_frames,
        max_frames: a.max_frames,
        query_frames: a.query_frames,
        width: a.width,
        height: a.height,
        min_window: 2 * cfg.n_t + 1,
        frame_rate: FrameRate::PAL,
    };
    let corpus = make_corpus(a.corpus_seed, &params)?;
    let refs = a.out_dir.join("refs");
    let queries = a.out_dir.join("queries");
    for dir in [&refs, &queries] {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", display(dir)))?;
    }
    for c in &corpus.references {
        c.stream.write(&refs.join(format!("{}.veef", c.name)))?;
    }
    for (i, q) in corpus.queries.iter().enumerate() {
        let frames = distort(
            &q.stream.frames,
            &Distortion::Noise { sigma: a.noise },
            a.corpus_seed ^ (i as u64 + 1),
        )?;
        let stream = FrameStream::new(q.stream.width, q.stream.height, q.stream.rate, frames)?;
        stream.write(&queries.join(format!("{}.veef", q.name)))?;
    }
    write_atomic(
        &a.out_dir.join("ground_truth.tsv"),
        format_ground_truth(&corpus.ground_truth).as_bytes(),
    )?;
    println!(
        "references\t{}\tqueries\t{}\tdir\t{}",
        corpus.references.len(),
        corpus.queries.len(),
        display(&a.out_dir)
    );
    Ok(())
}
