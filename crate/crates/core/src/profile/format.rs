//! The profile document: a JSON array with one object per site,
//! `{"kind": .., "ctx": .., "records": [..]}`.
//!
//! Record order: allocations, max size, gets, inserts, entry accesses,
//! element-type mask, then the ten size-class counters from class 0 to inf.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde_json::Value as Json;

use super::{DsKind, ProfileError, ProfileStore, SiteId, SiteProfile, SizeClass, TagSet};

pub const PROFILE_EXTENSION: &str = "dsprof.json";
pub const RECORD_ARITY: usize = 6 + SizeClass::COUNT;

fn records(p: &SiteProfile) -> [u64; RECORD_ARITY] {
    let mut r = [0; RECORD_ARITY];
    r[..6].copy_from_slice(&[
        p.allocations,
        p.max_size,
        p.gets,
        p.inserts,
        p.entry_accesses,
        p.element_types.bits() as u64,
    ]);
    r[6..].copy_from_slice(&p.size_class_counts);
    r
}

/// Deterministic rendering, entries sorted by ctx string.
pub fn serialize(store: &ProfileStore) -> String {
    let mut entries: Vec<(String, &SiteProfile)> = store.iter().map(|(s, p)| (s.ctx(), p)).collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    if entries.is_empty() {
        return "[]".to_string();
    }
    let mut out = String::from("[\n");
    for (i, (ctx, profile)) in entries.iter().enumerate() {
        let ctx = serde_json::to_string(ctx).expect("strings always serialize");
        let records = records(profile).map(|n| n.to_string()).join(", ");
        let _ = write!(out, "  {{ \"kind\": \"{}\", \"ctx\": {ctx}, \"records\": [{records}] }}", profile.kind);
        out.push_str(if i + 1 < entries.len() { ",\n" } else { "\n" });
    }
    out.push(']');
    out
}

pub fn parse(document: &str) -> Result<ProfileStore, ProfileError> {
    let root: Json = serde_json::from_str(document)?;
    let items = root
        .as_array()
        .ok_or_else(|| ProfileError::Schema { ctx: String::new(), reason: "document must be a JSON array".into() })?;
    let mut store = ProfileStore::new();
    let mut seen = BTreeSet::new();
    for item in items {
        let obj = item
            .as_object()
            .ok_or_else(|| ProfileError::Schema { ctx: String::new(), reason: "entry must be an object".into() })?;
        let ctx = obj.get("ctx").and_then(Json::as_str).ok_or_else(|| ProfileError::Schema {
            ctx: String::new(),
            reason: "missing string field \"ctx\"".into(),
        })?;
        let schema = |reason: &str| ProfileError::Schema { ctx: ctx.into(), reason: reason.into() };
        if !seen.insert(ctx.to_string()) {
            return Err(ProfileError::DuplicateSite { ctx: ctx.into() });
        }
        let site: SiteId = ctx.parse()?;
        let kind_name =
            obj.get("kind").and_then(Json::as_str).ok_or_else(|| schema("missing string field \"kind\""))?;
        let kind: DsKind = kind_name.parse().map_err(|name| ProfileError::UnknownKind { ctx: ctx.into(), name })?;
        let raw =
            obj.get("records").and_then(Json::as_array).ok_or_else(|| schema("missing array field \"records\""))?;
        if raw.len() != RECORD_ARITY {
            return Err(ProfileError::Arity { ctx: ctx.into(), expected: RECORD_ARITY, found: raw.len() });
        }
        let mut r = [0u64; RECORD_ARITY];
        for (index, (slot, v)) in r.iter_mut().zip(raw).enumerate() {
            *slot = v.as_u64().ok_or(ProfileError::NegativeCounter { ctx: ctx.into(), index })?;
        }
        let element_types = u16::try_from(r[5])
            .ok()
            .and_then(TagSet::from_bits)
            .ok_or_else(|| schema("element-type mask has bits beyond the nine tags"))?;
        let mut size_class_counts = [0; SizeClass::COUNT];
        size_class_counts.copy_from_slice(&r[6..]);
        let profile = SiteProfile {
            kind,
            allocations: r[0],
            max_size: r[1],
            size_class_counts,
            gets: r[2],
            inserts: r[3],
            entry_accesses: r[4],
            element_types,
        };
        store.insert(site, profile)?;
    }
    Ok(store)
}
