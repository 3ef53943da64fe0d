//! File formats, configuration and the batch pipeline.

pub mod config;
pub mod pipeline;
pub mod records;
pub mod session;
pub mod synthetic;
pub mod trades;

pub use config::Config;
pub use pipeline::{run_pipeline, PipelineConfig, PipelineSummary};
pub use records::{emit_cloud_csv, read_daily_records, write_daily_records, OptimalTickRow};
pub use session::SessionFilter;
pub use synthetic::{equilibrium_intensity, SyntheticAsset, SyntheticMarket};
pub use trades::{ingest_trades, read_trade_file, write_trade_csv, write_trade_file};
