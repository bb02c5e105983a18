//! Instance generators, on-disk formats and the plumbing behind the `efr`
//! command-line tool.

pub mod format;
pub mod generators;
pub mod solve;

pub use format::FormatError;
pub use generators::{gen_identical_chores, gen_paired_goods, gen_partition_reduction, gen_random};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] efr_core::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}
