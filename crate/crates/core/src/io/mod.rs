//! File formats, result serialization, run configuration and the colon
//! tissue pipeline.

mod colon;
mod config;
mod emit;
mod table;

pub use colon::{colon_pipeline, load_colon, parse_tissue_labels, ColonMode, ColonReport, ColonTestSummary};
pub use config::{RunConfig, CONFIG_KEYS};
pub use emit::{emit_results, format_f64, to_json_string, Envelope, OutputFormat, Tabular, SCHEMA_VERSION};
pub use table::{load_csv, write_sample_csv, ColumnRef, CsvOptions, LabelSource};
