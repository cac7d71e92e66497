//! Evaluation metrics, studies and runtime benchmarks.

mod bench;
pub mod lap;
mod metrics;
mod report;
pub mod special;
pub mod stats;
mod studies;

pub use bench::{bench_runtime, time_calls, time_pool_generation, BenchConfig, BenchSweep};
pub use metrics::{
    exact_w2_geodesic, geodesic_assignment, kl_vmf_uniform, nll, nll_points, MAX_ASSIGNMENT_SIZE,
};
pub use report::{ParamValue, StudyCell, StudyReport};
pub use studies::{distortion_study, eps_stability_study, evolution_study, EvolutionKind, StudySettings};
