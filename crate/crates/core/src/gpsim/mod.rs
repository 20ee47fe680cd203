//! Exact Gaussian path synthesis on uniform grids.

pub mod cholesky;
pub mod comparison;
pub mod embedding;
pub mod fbm;
pub mod grid;
pub mod path;
pub mod rng;
pub mod synth;

pub use cholesky::{cholesky_path, CholeskyFactor};
pub use comparison::{sample_comparison_path, ComparisonSynth};
pub use embedding::{Embedding, EmbeddingOptions, FftWorkspace};
pub use fbm::{sample_fbm, FbmSynth};
pub use grid::GridSpec;
pub use path::{path_extremes, path_max, GapMask, SamplePath};
pub use rng::{domain, substream, RngStream};
pub use synth::{sample_path, Ar1Synth, Backend, PathSynth, SynthWorkspace};
