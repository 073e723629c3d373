//! File formats: CSV data, JSON configuration and summaries, JSON-lines
//! chains.

pub mod chain;
pub mod config;
pub mod csv;
pub mod summary;

pub use self::chain::{load_chain, read_chain, ChainWriter};
pub use self::config::{ElicitSpec, KernelChoice, KernelName, PriorChoice, PriorName, ResolvedModel, RunConfig};
pub use self::csv::{load_csv, parse_csv, write_csv};
pub use self::summary::{summarize, DensityGrid, FitSummary};

/// Version of the `summary.json` and diagnostics layout.
pub const SCHEMA_VERSION: u32 = 1;
