//! Divisive clustering of variables by principal components and squared
//! cosine similarity, with the pipeline around it for monthly
//! macroeconomic panels: stationary transformations, rolling windows,
//! per-window clustering and scenario comparison.

pub mod cluster;
mod error;
pub mod ingest;
pub mod matrix;
pub mod month;
pub mod report;
pub mod similarity;
pub mod synth;
pub mod transform;

pub use cluster::{cluster_variables, Cluster, ClusteringConfig, Partition, SplitOrder};
pub use error::{Error, Result};
pub use ingest::{load_panel, load_scenario, ScenarioPanel, TimeSeriesPanel};
pub use matrix::{standardize_columns, ObservationMatrix};
pub use month::{Month, MonthRange};
pub use report::{compare_results, run_rolling_clustering, run_scenario_clustering, RunOptions, RunReport, WindowResult};
