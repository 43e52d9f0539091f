//! Dataset ingestion, synthetic generators, experiment runners, and
//! machine-readable result export.

mod experiment;
mod export;
mod load;
mod synth;

pub use experiment::{
    run_convergence_experiment, run_timing_experiment, ExperimentReport, ReportFormat,
    ReportRecord,
};
pub use export::{export_distance_matrix, export_distances, write_distance_matrix, write_distances};
pub use load::{load_dataset, DatasetFile, DatasetFormat, LabelSpec, LoadedDataset};
pub use synth::{gen_two_clusters, gen_uniform_square, TwoClusters};
