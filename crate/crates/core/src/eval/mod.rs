//! Per-image Jaccard evaluation, aggregate statistics and contact sheets.

mod jaccard;
mod report;
mod sheet;

pub use jaccard::{confusion, jaccard, mask_jaccard, ConfusionCounts};
pub use report::{aggregate, write_report, EvalReport, ImageScore, ReportFormat, Summary, DEFAULT_THRESHOLD};
pub use sheet::contact_sheet;
