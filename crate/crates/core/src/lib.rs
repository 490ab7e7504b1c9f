//! diaryforge-core: handwriting evolution and diary sentiment analysis.
//!
//! The pipeline segments scanned diary pages into word snippets, measures
//! their similarity with MSE, windowed SSIM, and projection-profile dynamic
//! time warping, removes outliers with 2-way spectral clustering to blend
//! canonical word forms, and scores weekly transcripts against a happiness
//! lexicon, including entity-conditioned sentiment.
//!
//! Everything is deterministic given (inputs, config, seed): matrices,
//! charts, and manifests are byte-reproducible across runs.

pub mod chart;
pub mod cluster;
pub mod corpus;
pub mod entities;
pub mod error;
pub mod hedonometer;
pub mod imagecore;
pub mod io;
pub mod pipeline;
pub mod segmentation;
pub mod similarity;

pub use error::{Error, Result};
