//! Benchmark protocol: perturbed initial conditions, error metrics,
//! parameter sweeps, median tables and the flat-valley metric.

mod analysis;
mod benchmark;
mod perturbation;
mod records;
mod sweep;

pub use analysis::{
    aggregate_median, best_parameters, flat_valley, write_median_rows, MedianRow, ParamInterval,
};
pub use benchmark::{
    expand_filters, initial_transform, perturbation_seed, run_benchmark, run_benchmark_streaming,
    sort_records, BenchmarkCell,
};
pub use perturbation::{sample_perturbation, transform_error, PerturbationSpec};
pub use records::{
    load_pairs, load_records, read_manifest, read_records, write_records, BenchmarkPair,
    BenchmarkRecord, ManifestEntry, RecordWriter,
};
pub use sweep::{build_sweep, SweepPlan};
