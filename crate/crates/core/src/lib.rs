//! # edgevote
//!
//! Subclip search over a video database using sparse edge-energy
//! fingerprints.
//!
//! The pipeline:
//!
//! 1. [`fingerprint`]: each frame is reduced to its mean Sobel gradient
//!    magnitude. At every strict local extremum of that series, a
//!    Hanning-weighted window of `2·N_T + 1` samples is transformed and the
//!    first `N_F` non-DC magnitudes become a descriptor.
//! 2. [`hashing`]: a k-means codebook maps a descriptor to its nearest
//!    centroid, and per-centroid median thresholds give an `N_F`-bit code.
//!    Two signatures are similar only inside the same centroid cell, scored
//!    by agreeing bits.
//! 3. [`index`]: reference signatures live in per-centroid posting lists.
//!    A query signature scans its own list and keeps the `N_nn` best hits.
//! 4. [`voting`]: hits vote for `(video, t_query - t_ref)` alignments in a
//!    queue that drops idle candidates, so memory follows the number of
//!    recent hits rather than the size of the database.
//!
//! [`evalkit`] holds the synthetic corpus, distortions, and mAP scoring used
//! to exercise the whole chain.

pub mod codec;
pub mod config;
pub mod error;
pub mod evalkit;
pub mod fingerprint;
pub mod fpfile;
pub mod frame;
pub mod hashing;
pub mod index;
pub mod voting;

pub use config::SearchConfig;
pub use error::{Error, FormatError, Result};
pub use fingerprint::{Descriptor, FingerprintConfig};
pub use fpfile::FingerprintFile;
pub use frame::{Frame, FrameRate, FrameStream};
pub use hashing::{Codebook, HashCode};
pub use index::{InvertedIndex, Match};
pub use voting::{ResultSegment, SearchParams, VotingConfig};
