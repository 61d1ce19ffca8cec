//! Rigid 3D point-cloud registration with robust outlier filtering.
//!
//! The pipeline has four stages: data filtering ([`pointcloud`]), data
//! association ([`matching`]), outlier filtering ([`robust`]) and error
//! minimization ([`minimizer`]). [`icp`] runs them as an iteratively
//! reweighted loop and [`evaluation`] wraps that loop in a perturbation
//! benchmark with parameter sweeps and median-error analysis.

pub mod error;
pub mod evaluation;
pub mod icp;
pub mod matching;
pub mod minimizer;
pub mod pointcloud;
pub mod robust;
pub mod seed;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use evaluation::{
    aggregate_median, build_sweep, flat_valley, run_benchmark, sample_perturbation,
    transform_error, BenchmarkCell, BenchmarkPair, BenchmarkRecord, MedianRow,
    PerturbationSpec, SweepPlan,
};
pub use icp::{register, IcpConfig, IterationTrace, RegistrationResult, StopReason};
pub use matching::{associate, KdTree, Match, MatchSet};
pub use minimizer::{
    check_convergence, point_to_plane_step, ConvergenceSpec, ConvergenceStatus, RigidTransform,
};
pub use pointcloud::{CloudFormat, PointCloud};
pub use robust::{apply_filter, FilterKind, FilterSpec, ScaleSpec, ScaleState};
