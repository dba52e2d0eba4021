//! The complete set of pipeline parameters and its flat `key=value` form.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fingerprint::FingerprintConfig;
use crate::voting::{SearchParams, VotingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    /// Half-length of the descriptor window.
    pub n_t: usize,
    /// Descriptor and binary code length.
    pub n_f: usize,
    /// Codebook size.
    pub n_c: usize,
    /// Neighbours kept per query signature.
    pub n_nn: usize,
    pub tol_err: u32,
    pub n_conf: u32,
    pub tol_delete: Option<u32>,
    pub tau_sc: u32,
    pub min_separation: usize,
    pub seed: u64,
    pub kmeans_iters: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_t: 100,
            n_f: 48,
            n_c: 4000,
            n_nn: 200,
            tol_err: 2,
            n_conf: 200,
            tol_delete: Some(250),
            tau_sc: 0,
            min_separation: 3,
            seed: 0,
            kmeans_iters: 50,
        }
    }
}

/// Keys accepted by [`SearchConfig::set`], in output order.
pub const CONFIG_KEYS: &[&str] = &[
    "nt",
    "nf",
    "nc",
    "nnn",
    "tol_err",
    "n_conf",
    "tol_delete",
    "tau_sc",
    "min_separation",
    "seed",
    "kmeans_iters",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_f < 1 || self.n_f > self.n_t {
            return Err(Error::invalid(format!(
                "need 1 <= nf <= nt, got nf={} nt={}",
                self.n_f, self.n_t
            )));
        }
        if self.n_nn < 1 {
            return Err(Error::invalid("nnn must be at least 1"));
        }
        if self.n_conf < 1 {
            return Err(Error::invalid("n_conf must be at least 1"));
        }
        if self.n_c < 1 {
            return Err(Error::invalid("nc must be at least 1"));
        }
        if self.min_separation < 1 {
            return Err(Error::invalid("min_separation must be at least 1"));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> FingerprintConfig {
        FingerprintConfig {
            n_t: self.n_t,
            n_f: self.n_f,
            min_separation: self.min_separation,
        }
    }

    pub fn voting(&self) -> VotingConfig {
        VotingConfig {
            tol_err: self.tol_err,
            tol_delete: self.tol_delete,
            n_conf: self.n_conf,
        }
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            n_nn: self.n_nn,
            tau_sc: self.tau_sc,
            voting: self.voting(),
        }
    }

    /// Sets one field by key. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_").to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "nt" | "n_t" => self.n_t = parse(&key, value)?,
            "nf" | "n_f" => self.n_f = parse(&key, value)?,
            "nc" | "n_c" => self.n_c = parse(&key, value)?,
            "nnn" | "n_nn" => self.n_nn = parse(&key, value)?,
            "tol_err" => self.tol_err = parse(&key, value)?,
            "n_conf" => self.n_conf = parse(&key, value)?,
            "tol_delete" => {
                self.tol_delete = match value {
                    "inf" | "none" | "off" => None,
                    v => Some(parse(&key, v)?),
                }
            }
            "tau_sc" => self.tau_sc = parse(&key, value)?,
            "min_separation" => self.min_separation = parse(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "kmeans_iters" => self.kmeans_iters = parse(&key, value)?,
            _ => return Err(Error::invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key=value` document on top of `self`. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::invalid(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let tol_delete = self
            .tol_delete
            .map_or_else(|| "inf".to_string(), |v| v.to_string());
        let values = [
            self.n_t.to_string(),
            self.n_f.to_string(),
            self.n_c.to_string(),
            self.n_nn.to_string(),
            self.tol_err.to_string(),
            self.n_conf.to_string(),
            tol_delete,
            self.tau_sc.to_string(),
            self.min_separation.to_string(),
            self.seed.to_string(),
            self.kmeans_iters.to_string(),
        ];
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}
