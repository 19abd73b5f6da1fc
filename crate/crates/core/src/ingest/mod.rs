//! Loading series from CSV files, URLs or the built-in generator, the run
//! configuration, the staged pipeline and its report writers.

mod config;
mod fetch;
mod load;
mod pipeline;
mod report;

pub use config::{RecoveryConfig, RunConfig, ScenarioConfig, SeriesConfig};
pub use fetch::{cache_path, fetch_indicator_csv, Fetcher, HttpFetcher};
pub use load::{load_series_csv, parse_period, parse_series_csv, DatasetConfig};
pub use pipeline::{
    compute, fetch_datasets, run_pipeline, Fitness, RecoveryResult, RunOptions, RunResults, ScenarioResult,
    SeriesDiagnostics, SeriesResult, Stage,
};
pub use report::{fmt_num, load_model, render_reports, save_model, write_reports, write_tree, OutputTree, OUTPUT_MARKER};
