use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{decide, EngineError, PolicyConfig, ReplacementDecision};
use crate::collection::Implementation;
use crate::profile::{self, DsKind, ProfileStore, SiteId};

pub const PLAN_EXTENSION: &str = "dsplan.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanEntry {
    pub kind: DsKind,
    pub decision: ReplacementDecision,
}

/// Per-site decisions derived from one profile under one policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplacementPlan {
    pub entries: BTreeMap<SiteId, PlanEntry>,
    pub policy: PolicyConfig,
    /// Identity of the source profile document.
    pub provenance: String,
}

/// `sha256:<hex>` of a profile document's bytes.
pub fn provenance_of(document: &str) -> String {
    let digest = Sha256::digest(document.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Runs the kind-appropriate heuristic on every site. Sites with no
/// allocations carry no information and are kept.
pub fn build_plan(store: &ProfileStore, cfg: &PolicyConfig) -> Result<ReplacementPlan, EngineError> {
    cfg.validate()?;
    let mut entries = BTreeMap::new();
    for (site, p) in store.iter() {
        let decision = if p.allocations == 0 { ReplacementDecision::Keep } else { decide(site, p, cfg)? };
        entries.insert(site.clone(), PlanEntry { kind: p.kind, decision });
    }
    Ok(ReplacementPlan { entries, policy: cfg.clone(), provenance: provenance_of(&profile::serialize(store)) })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteRecord {
    ctx: String,
    kind: String,
    decision: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDocument {
    provenance: String,
    policy: PolicyConfig,
    sites: Vec<SiteRecord>,
}

impl ReplacementPlan {
    pub fn decision(&self, site: &SiteId) -> ReplacementDecision {
        self.entries.get(site).map_or(ReplacementDecision::Keep, |e| e.decision)
    }

    pub fn get(&self, site: &SiteId) -> Option<&PlanEntry> {
        self.entries.get(site)
    }

    /// Number of sites per decision name.
    pub fn decision_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in self.entries.values() {
            *counts.entry(e.decision.name()).or_insert(0) += 1;
        }
        counts
    }

    /// Number of sites per replacement type, kept sites excluded.
    pub fn replacement_counts(&self) -> BTreeMap<Implementation, usize> {
        let mut counts = BTreeMap::new();
        for e in self.entries.values() {
            if let Some(i) = e.decision.implementation(e.kind).filter(|i| i.is_replacement()) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Pretty JSON with sites sorted by ctx string.
    pub fn serialize(&self) -> String {
        let mut sites: Vec<SiteRecord> = self
            .entries
            .iter()
            .map(|(s, e)| SiteRecord { ctx: s.ctx(), kind: e.kind.name().into(), decision: e.decision.name() })
            .collect();
        sites.sort_by(|a, b| a.ctx.cmp(&b.ctx));
        let doc = PlanDocument { provenance: self.provenance.clone(), policy: self.policy.clone(), sites };
        serde_json::to_string_pretty(&doc).expect("plan documents always serialize")
    }

    pub fn parse(document: &str) -> Result<Self, EngineError> {
        let doc: PlanDocument = serde_json::from_str(document)?;
        doc.policy.validate()?;
        let mut entries = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for r in doc.sites {
            if !seen.insert(r.ctx.clone()) {
                return Err(EngineError::DuplicateSite { ctx: r.ctx });
            }
            let site: SiteId = r.ctx.parse()?;
            let kind: DsKind =
                r.kind.parse().map_err(|name| profile::ProfileError::UnknownKind { ctx: r.ctx.clone(), name })?;
            let decision: ReplacementDecision =
                r.decision.parse().map_err(|token| EngineError::UnknownDecision { ctx: r.ctx.clone(), token })?;
            if !decision.is_compatible(kind) {
                return Err(EngineError::Incompatible { ctx: r.ctx, kind, decision });
            }
            entries.insert(site, PlanEntry { kind, decision });
        }
        Ok(ReplacementPlan { entries, policy: doc.policy, provenance: doc.provenance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ProfileStore {
        let mut s = ProfileStore::new();
        let a = SiteId::single("A.a()", 1).unwrap();
        let b: SiteId = "A.a(): 10 > B.b(): 2".parse().unwrap();
        let idle = SiteId::single("C.c()", 3).unwrap();
        for _ in 0..10 {
            s.record_allocation(&a, DsKind::HashMap).unwrap();
            s.record_allocation(&b, DsKind::HashSet).unwrap();
        }
        s.record_size_change(&b, 0, 40).unwrap();
        s.insert(idle, crate::profile::SiteProfile::new(DsKind::ArrayList)).unwrap();
        s
    }

    #[test]
    fn empty_store_gives_empty_plan() {
        let plan = build_plan(&ProfileStore::new(), &PolicyConfig::default()).unwrap();
        assert!(plan.entries.is_empty());
        assert_eq!(ReplacementPlan::parse(&plan.serialize()).unwrap(), plan);
    }

    #[test]
    fn plan_is_deterministic_and_round_trips() {
        let s = store();
        let cfg = PolicyConfig::default().exclude(SiteId::single("X.x()", 0).unwrap());
        let p1 = build_plan(&s, &cfg).unwrap();
        let p2 = build_plan(&s, &cfg).unwrap();
        assert_eq!(p1.serialize(), p2.serialize());
        let parsed = ReplacementPlan::parse(&p1.serialize()).unwrap();
        assert_eq!(parsed, p1);
        assert_eq!(parsed.provenance, provenance_of(&profile::serialize(&s)));
        assert!(parsed.provenance.starts_with("sha256:") && parsed.provenance.len() == 7 + 64);

        let counts = p1.decision_counts();
        assert_eq!((counts["EMPTY"], counts["OPEN_SET"], counts["KEEP"]), (1, 1, 1));
    }

    #[test]
    fn unknown_sites_are_kept() {
        let plan = build_plan(&store(), &PolicyConfig::default()).unwrap();
        assert_eq!(plan.decision(&SiteId::single("Z.z()", 9).unwrap()), ReplacementDecision::Keep);
    }

    #[test]
    fn rejects_bad_documents() {
        let plan = build_plan(&store(), &PolicyConfig::default()).unwrap();
        let doc = plan.serialize();
        let unknown = doc.replacen("\"EMPTY\"", "\"TINY\"", 1);
        assert!(matches!(ReplacementPlan::parse(&unknown), Err(EngineError::UnknownDecision { .. })));
        let bad_ctx = doc.replacen("A.a(): 1\"", "A.a():1\"", 1);
        assert!(matches!(ReplacementPlan::parse(&bad_ctx), Err(EngineError::Profile(_))));
        let incompatible = doc.replacen("\"EMPTY\"", "\"OPEN_SET\"", 1);
        assert!(matches!(ReplacementPlan::parse(&incompatible), Err(EngineError::Incompatible { .. })));
        assert!(matches!(ReplacementPlan::parse("{"), Err(EngineError::Json(_))));
    }
}
