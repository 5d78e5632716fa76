//! Clustering-based language models over word embeddings, applied to text
//! readability regression and sentence matching.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`text`]: tokenization, stopword removal and corpus loading.
//! - [`embed`]: skip-gram and character n-gram embeddings trained with
//!   negative sampling, PV-DBOW paragraph vectors, and pooling.
//! - [`cluster`]: K-means over word vectors and exact greedy Brown clustering.
//! - [`featurize`]: cluster-membership histograms and baseline features.
//! - [`regress`]: linear epsilon-insensitive SVR (L2-loss, dual coordinate descent).
//! - [`eval`]: correlation metrics, the readability experiment and P_N sentence matching.
//!
//! [`persist`] holds the plain-text file formats shared by the CLI stages.

pub mod cli;
pub mod cluster;
pub mod embed;
pub mod error;
pub mod eval;
pub mod featurize;
pub mod persist;
pub mod regress;
pub mod seed;
pub mod synth;
pub mod text;

pub use error::{Error, Result};

/// Tool version written into the header comment of every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
