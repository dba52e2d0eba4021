use std::fmt;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use edgevote::SearchConfig;

mod commands;

/// Subclip search over edge-energy video fingerprints.
#[derive(Debug, Parser)]
#[command(name = "edgevote", version)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,

    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Overrides for the pipeline parameters. Flags beat `--config`, which beats
/// the built-in defaults.
#[derive(Debug, Args, Default)]
struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Descriptor window half-length N_T.
    #[arg(long, global = true)]
    nt: Option<usize>,
    /// Descriptor length and code bits N_F.
    #[arg(long, global = true)]
    nf: Option<usize>,
    /// Codebook size N_C.
    #[arg(long, global = true)]
    nc: Option<usize>,
    /// Neighbours kept per query signature.
    #[arg(long, global = true)]
    nnn: Option<usize>,
    #[arg(long, global = true)]
    tol_err: Option<u32>,
    /// Idle query frames before a segment is dropped, or `inf`.
    #[arg(long, global = true)]
    tol_delete: Option<String>,
    #[arg(long, global = true)]
    n_conf: Option<u32>,
    #[arg(long, global = true)]
    tau_sc: Option<u32>,
    #[arg(long, global = true)]
    min_separation: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    kmeans_iters: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract descriptors from a VEEF frame file into a VEEP fingerprint file.
    Fingerprint(commands::FingerprintArgs),
    /// Train a codebook from fingerprint files.
    Train(commands::TrainArgs),
    /// Build an index from reference videos (VEEF or VEEP files).
    Index(commands::IndexArgs),
    /// Search queries against an index.
    Query(commands::QueryArgs),
    /// Search a labelled query set and report mAP.
    Eval(commands::EvalArgs),
    /// Write a synthetic reference/query corpus with ground truth.
    Synth(commands::SynthArgs),
}

/// A command-line mistake rather than bad data.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

impl ConfigArgs {
    fn resolve(&self) -> Result<SearchConfig> {
        let mut cfg = SearchConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_kv(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        let flags: [(&str, Option<String>); 11] = [
            ("nt", self.nt.map(|v| v.to_string())),
            ("nf", self.nf.map(|v| v.to_string())),
            ("nc", self.nc.map(|v| v.to_string())),
            ("nnn", self.nnn.map(|v| v.to_string())),
            ("tol_err", self.tol_err.map(|v| v.to_string())),
            ("tol_delete", self.tol_delete.clone()),
            ("n_conf", self.n_conf.map(|v| v.to_string())),
            ("tau_sc", self.tau_sc.map(|v| v.to_string())),
            ("min_separation", self.min_separation.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("kmeans_iters", self.kmeans_iters.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)
                    .map_err(|e| Usage(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        cfg.validate()
            .map_err(|e| Usage(format!("invalid configuration: {e}")))?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config.resolve()?;
    if cli.print_config {
        print!("{}", cfg.to_kv());
        return Ok(());
    }
    match cli.command {
        None => Err(Usage("no subcommand given; see --help".into()).into()),
        Some(Command::Fingerprint(a)) => commands::fingerprint(&cfg, a),
        Some(Command::Train(a)) => commands::train(&cfg, a),
        Some(Command::Index(a)) => commands::index(&cfg, a),
        Some(Command::Query(a)) => commands::query(&cfg, a),
        Some(Command::Eval(a)) => commands::eval(&cfg, a),
        Some(Command::Synth(a)) => commands::synth(&cfg, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if let Some(edgevote::Error::Contract(_)) = cause.downcast_ref::<edgevote::Error>() {
            return 3;
        }
    }
    2
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
