//! Replacement heuristics, plans, and the site-bound collection factory.

mod factory;
mod plan;
mod policy;

pub use factory::{create_list, create_map, create_set, SiteFactory};
pub use plan::{build_plan, provenance_of, PlanEntry, ReplacementPlan, PLAN_EXTENSION};
pub use policy::{decide, decide_list, decide_map, decide_set, PolicyConfig, ReplacementDecision};

use thiserror::Error;

use crate::profile::{DsKind, ProfileError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("site {ctx}: profile has zero allocations")]
    ZeroAllocations { ctx: String },
    #[error("site {ctx}: {kind} profile passed to the {expected} heuristic")]
    WrongKind { ctx: String, kind: DsKind, expected: &'static str },
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("malformed plan: {0}")]
    Json(#[from] serde_json::Error),
    #[error("site {ctx}: unknown decision {token:?}")]
    UnknownDecision { ctx: String, token: String },
    #[error("site {ctx}: decision {decision} is not valid for {kind}")]
    Incompatible { ctx: String, kind: DsKind, decision: ReplacementDecision },
    #[error("site {ctx}: listed more than once")]
    DuplicateSite { ctx: String },
    #[error("site {ctx}: plan records {planned}, allocation requested {requested}")]
    KindMismatch { ctx: String, planned: DsKind, requested: DsKind },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}
