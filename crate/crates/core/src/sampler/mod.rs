//! Exact Gaussian path simulation on uniform grids with per-path
//! counter-based random streams.

pub mod batch;
pub mod factor;
pub mod grid;
pub mod rng;
pub mod stats;

pub use batch::{sample_paths, DumpHeader, PathBatch, Sampler, SamplingStrategy, CHUNK, DUMP_MAGIC};
pub use factor::{build_covariance_matrix, dot, factor_covariance, CholeskyFactor, CovMatrix, JITTER_LADDER};
pub use grid::TimeGrid;
pub use rng::RngSpec;
pub use stats::{ks_critical_value, ks_statistic_standard_normal, path_statistic, StatKind};
