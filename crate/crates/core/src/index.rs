//! Inverted index of reference signatures, one posting list per centroid.
//!
//! File layout (`VEEI`, little-endian), the last 8 bytes being a CRC-64 of
//! everything after the 6-byte header:
//!
//! ```text
//! magic "VEEI" | version u16
//! video table  : count u32, then per video: id u32, name len u32, name utf-8,
//!                frame count u64, rate num u32, rate den u32
//! codebook     : N_C u32, N_F u32, seed u64, centroids f32[N_C*N_F], thresholds f32[N_C*N_F]
//! posting lists: N_C times { count u64, count * (video_id u32, t u32, code ceil(N_F/8) bytes) }
//! checksum u64
//! ```

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use crate::codec::{self, ByteReader, ByteWriter};
use crate::error::{Error, FormatError, Result};
use crate::frame::FrameRate;
use crate::hashing::{BinaryCode, Codebook, HashCode};

pub const INDEX_MAGIC: &[u8; 4] = b"VEEI";
pub const INDEX_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoEntry {
    pub name: String,
    pub frame_count: u64,
    pub frame_rate: FrameRate,
}

/// One reference signature as stored in a posting list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    pub video_id: u32,
    pub t: u32,
    pub code: BinaryCode,
}

/// A scored reference hit for one query signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Match {
    pub video_id: u32,
    pub t_r: u32,
    pub t_q: u32,
    pub score: u32,
}

impl Match {
    pub fn offset(&self) -> i64 {
        i64::from(self.t_q) - i64::from(self.t_r)
    }
}

/// Postings of one centroid, kept as parallel arrays sorted by `(video_id, t)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct PostingList {
    keys: Vec<(u32, u32)>,
    words: Vec<u64>,
}

impl PostingList {
    fn len(&self) -> usize {
        self.keys.len()
    }
}

#[derive(Debug, Clone)]
pub struct InvertedIndex {
    codebook: Codebook,
    lists: Vec<PostingList>,
    videos: BTreeMap<u32, VideoEntry>,
    words_per_code: usize,
    frozen: bool,
}

impl PartialEq for InvertedIndex {
    fn eq(&self, other: &Self) -> bool {
        self.codebook == other.codebook && self.lists == other.lists && self.videos == other.videos
    }
}

impl InvertedIndex {
    pub fn new(codebook: Codebook) -> Self {
        let n_c = codebook.n_c();
        let words_per_code = codebook.n_f().div_ceil(64);
        Self {
            codebook,
            lists: vec![PostingList::default(); n_c],
            videos: BTreeMap::new(),
            words_per_code,
            frozen: false,
        }
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn videos(&self) -> &BTreeMap<u32, VideoEntry> {
        &self.videos
    }

    pub fn video(&self, id: u32) -> Option<&VideoEntry> {
        self.videos.get(&id)
    }

    pub fn posting_count(&self) -> usize {
        self.lists.iter().map(PostingList::len).sum()
    }

    pub fn list_len(&self, q: u32) -> usize {
        self.lists.get(q as usize).map_or(0, PostingList::len)
    }

    /// Postings of centroid `q`, in stored order.
    pub fn postings(&self, q: u32) -> Vec<Posting> {
        let Some(list) = self.lists.get(q as usize) else {
            return Vec::new();
        };
        let n_f = self.codebook.n_f();
        list.keys
            .iter()
            .zip(list.words.chunks_exact(self.words_per_code.max(1)))
            .map(|(&(video_id, t), w)| Posting {
                video_id,
                t,
                code: code_from_words(w, n_f),
            })
            .collect()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Ends construction; further `add_video` calls are rejected.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn add_video(
        &mut self,
        video_id: u32,
        entry: VideoEntry,
        signatures: &[(u32, HashCode)],
    ) -> Result<()> {
        if self.frozen {
            return Err(Error::Contract(
                "index is frozen; add_video rejected".into(),
            ));
        }
        if self.videos.contains_key(&video_id) {
            return Err(Error::Conflict(format!(
                "video id {video_id} already indexed"
            )));
        }
        if let Some((id, _)) = self.videos.iter().find(|(_, v)| v.name == entry.name) {
            return Err(Error::Conflict(format!(
                "video name {:?} already indexed as id {id}",
                entry.name
            )));
        }
        let (n_c, n_f) = (self.codebook.n_c(), self.codebook.n_f());
        let mut incoming: Vec<(u32, u32, &BinaryCode)> = Vec::with_capacity(signatures.len());
        for (t, h) in signatures {
            if h.q as usize >= n_c {
                return Err(Error::invalid(format!(
                    "signature at t={t} names centroid {} of {n_c}",
                    h.q
                )));
            }
            if h.code.len() != n_f {
                return Err(Error::invalid(format!(
                    "signature at t={t} has a {}-bit code, index uses {n_f}",
                    h.code.len()
                )));
            }
            incoming.push((h.q, *t, &h.code));
        }
        incoming.sort_by_key(|&(q, t, _)| (q, t));
        if let Some(w) = incoming
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::invalid(format!(
                "two signatures at t={} in centroid {}",
                w[0].1, w[0].0
            )));
        }

        for (q, t, code) in incoming {
            let list = &mut self.lists[q as usize];
            let key = (video_id, t);
            let pos = list.keys.partition_point(|k| *k < key);
            list.keys.insert(pos, key);
            let at = pos * self.words_per_code;
            list.words.splice(at..at, code.words().iter().copied());
        }
        self.videos.insert(video_id, entry);
        Ok(())
    }

    /// Up to `n_nn` postings from the query's own centroid list with
    /// similarity at least `max(1, tau_sc)`, best first; equal scores are
    /// ordered by `(video_id, t)`.
    pub fn knn(&self, query: &HashCode, t_q: u32, n_nn: usize, tau_sc: u32) -> Result<Vec<Match>> {
        let n_f = self.codebook.n_f();
        if query.code.len() != n_f {
            return Err(Error::invalid(format!(
                "query code has {} bits, index uses {n_f}",
                query.code.len()
            )));
        }
        if n_nn == 0 {
            return Err(Error::invalid("N_nn must be at least 1"));
        }
        let Some(list) = self.lists.get(query.q as usize) else {
            return Err(Error::invalid(format!(
                "query centroid {} out of range for {} centroids",
                query.q,
                self.lists.len()
            )));
        };
        let min_score = tau_sc.max(1);
        let qw = query.code.words();
        let mut hits: Vec<Match> = list
            .keys
            .iter()
            .zip(list.words.chunks_exact(self.words_per_code))
            .filter_map(|(&(video_id, t_r), w)| {
                let score = n_f as u32 - crate::hashing::hamming_words(qw, w);
                (score >= min_score).then_some(Match {
                    video_id,
                    t_r,
                    t_q,
                    score,
                })
            })
            .collect();
        if hits.len() > n_nn {
            hits.select_nth_unstable_by(n_nn - 1, rank);
            hits.truncate(n_nn);
        }
        hits.sort_unstable_by(rank);
        Ok(hits)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = ByteWriter::with_header(INDEX_MAGIC, INDEX_VERSION);
        w.u32(self.videos.len() as u32);
        for (&id, v) in &self.videos {
            w.u32(id);
            w.u32(v.name.len() as u32);
            w.bytes(v.name.as_bytes());
            w.u64(v.frame_count);
            w.u32(v.frame_rate.num);
            w.u32(v.frame_rate.den);
        }
        self.codebook.write_section(&mut w);
        let n_f = self.codebook.n_f();
        for list in &self.lists {
            w.u64(list.len() as u64);
            for (&(video_id, t), words) in list
                .keys
                .iter()
                .zip(list.words.chunks_exact(self.words_per_code))
            {
                w.u32(video_id);
                w.u32(t);
                w.bytes(&code_from_words(words, n_f).to_packed());
            }
        }
        w.finish_with_checksum()
    }

    /// Parses an index file. The result is frozen.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = codec::open_checksummed(bytes, INDEX_MAGIC, INDEX_VERSION)?;
        let videos = read_video_table(&mut r)?;
        let codebook = Codebook::read_section(&mut r)?;
        let mut index = InvertedIndex::new(codebook);
        index.videos = videos;
        let n_f = index.codebook.n_f();
        let code_bytes = BinaryCode::packed_len(n_f);
        for q in 0..index.lists.len() {
            let count = r.u64()?;
            let need = count.checked_mul(8 + code_bytes as u64);
            if need.is_none_or(|n| n > r.remaining() as u64) {
                return Err(FormatError::Corrupt(format!(
                    "posting list {q} claims {count} entries beyond end of file"
                ))
                .into());
            }
            let list = &mut index.lists[q];
            list.keys.reserve(count as usize);
            for _ in 0..count {
                let key = (r.u32()?, r.u32()?);
                if list.keys.last().is_some_and(|&last| last >= key) {
                    return Err(
                        FormatError::Corrupt(format!("posting list {q} is not sorted")).into(),
                    );
                }
                if !index.videos.contains_key(&key.0) {
                    return Err(FormatError::Corrupt(format!(
                        "posting list {q} references unknown video {}",
                        key.0
                    ))
                    .into());
                }
                let code = BinaryCode::from_packed(r.take(code_bytes)?, n_f)
                    .map_err(|e| FormatError::Corrupt(e.to_string()))?;
                list.keys.push(key);
                list.words.extend_from_slice(code.words());
            }
        }
        r.expect_end()?;
        index.frozen = true;
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<u64> {
        let bytes = self.encode();
        codec::write_atomic(path, &bytes)?;
        Ok(bytes.len() as u64)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&codec::read_file(path)?)
    }
}

fn rank(a: &Match, b: &Match) -> Ordering {
    b.score
        .cmp(&a.score)
        .then(a.video_id.cmp(&b.video_id))
        .then(a.t_r.cmp(&b.t_r))
}

fn code_from_words(words: &[u64], n_f: usize) -> BinaryCode {
    BinaryCode::from_bits((0..n_f).map(|k| words[k / 64] >> (k % 64) & 1 == 1))
}

fn read_video_table(r: &mut ByteReader<'_>) -> Result<BTreeMap<u32, VideoEntry>> {
    let count = r.u32()?;
    let mut videos = BTreeMap::new();
    for _ in 0..count {
        let id = r.u32()?;
        let name_len = r.u32()? as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| FormatError::Corrupt(format!("video {id} name is not utf-8")))?;
        let entry = VideoEntry {
            name,
            frame_count: r.u64()?,
            frame_rate: FrameRate {
                num: r.u32()?,
                den: r.u32()?,
            },
        };
        if videos.insert(id, entry).is_some() {
            return Err(FormatError::Corrupt(format!("video id {id} listed twice")).into());
        }
    }
    Ok(videos)
}
