//! Benchmark support: camera paths, aggregation, quality metrics and reports.

pub mod metrics;
pub mod path;
pub mod report;
pub mod stats;

pub use metrics::{mse, psnr, ssim};
pub use path::{CameraPath, PathKind};
pub use path::{DEFAULT_FRAMES, DEFAULT_STEP_DEGREES};
pub use report::{
    run_bench, Aggregate, Aggregates, BenchConfig, BenchReport, BenchSetup, ExternalQuality,
    FrameRecord, DEFAULT_EYE_SEPARATION, DEFAULT_REPETITIONS, SCHEMA_VERSION,
};
pub use stats::{max_of_medians, mean, median, percentile};
