//! The two-phase pipeline over synthetic workloads: profile with baseline
//! collections, plan, re-run with replacements, compare.

mod fixtures;
mod report;
mod run;
mod spec;

pub use fixtures::{fixture, FIXTURE_NAMES};
pub use report::{
    compare, histogram, ComparisonReport, FallbackRow, FallbackTable, Histogram, Ratio, RatioRow, ReplacementCount,
    RunReport, SiteSummary, TraceSummary, MAP_SET_ROW, OVERALL_ROW,
};
pub use run::{run_instrumented, run_optimized, run_pipeline, run_with_plan, PipelineOutput, RunOutput};
pub use spec::{SiteSpec, SizeWeight, SpecIdentity, WorkloadSpec, DEFAULT_PROFILE_SCALE};

use thiserror::Error;

use crate::engine::EngineError;
use crate::profile::ProfileError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid workload spec: {0}")]
    Spec(String),
    #[error("site {ctx}: {reason}")]
    Mismatch { ctx: String, reason: String },
    #[error("reports come from different runs: {0}")]
    Identity(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}
