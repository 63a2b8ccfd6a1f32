//! Profile-guided collection specialization.
//!
//! Instrumented baseline collections record per-allocation-site profiles; a
//! heuristic engine picks a memory-efficient replacement per site, and a
//! deterministic byte ledger measures what the replacement saves.

pub mod baseline;
pub mod collection;
pub mod cost;
pub mod engine;
pub mod harness;
pub mod instrument;
pub mod ir;
pub mod profile;
pub mod specialized;
pub mod value;

pub use collection::{CollectionError, Implementation, ListOps, MapOps, SetOps};
pub use cost::{AllocationLedger, Category, Heap, LayoutConstants, LedgerSnapshot};
pub use profile::{DsKind, ElementTypeTag, ProfileStore, Profiler, SiteId, SiteProfile, SizeClass};
pub use value::Value;
