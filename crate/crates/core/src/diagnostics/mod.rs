//! Turning finished chains into evaluation numbers: effective sample size,
//! distance to an enumerated target, and flat per-chain summaries.

mod ess;
mod exact;
mod summary;

pub use ess::{ess, EssReport, MIN_TRACE_LEN};
pub use exact::{compare_counts, compare_to_exact, DistributionReport};
pub use summary::{format_float, read_summaries_csv, summarize, write_summaries_csv, Summary};
