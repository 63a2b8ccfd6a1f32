use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::EngineError;
use crate::collection::Implementation;
use crate::profile::{DsKind, ElementTypeTag, SiteId, SiteProfile, SizeClass};

/// Thresholds of the replacement heuristics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Minimum share of instances whose maximum fits a fixed-size variant.
    pub fixed_size_share: f64,
    /// Economic maps need entry accesses below this fraction of inserts.
    pub entry_access_ratio_max: f64,
    /// Fixed-size maps need fewer entry accesses than this.
    pub fixed_entry_access_limit: u64,
    pub economic_min_size: u64,
    pub economic_min_size_share: f64,
    /// Economic maps need a maximum size below this.
    pub economic_size_cap: u64,
    /// Sites forced to keep their original type.
    #[serde(default)]
    pub excluded: BTreeSet<SiteId>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            fixed_size_share: 0.95,
            entry_access_ratio_max: 0.05,
            fixed_entry_access_limit: 3,
            economic_min_size: 5,
            economic_min_size_share: 0.90,
            economic_size_cap: 256,
            excluded: BTreeSet::new(),
        }
    }
}

impl PolicyConfig {
    /// Shares must be positive and finite. Values above 1 are accepted and
    /// simply make the corresponding test unsatisfiable.
    pub fn validate(&self) -> Result<(), EngineError> {
        for (name, v) in [
            ("fixed_size_share", self.fixed_size_share),
            ("entry_access_ratio_max", self.entry_access_ratio_max),
            ("economic_min_size_share", self.economic_min_size_share),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EngineError::Policy(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [
            ("fixed_entry_access_limit", self.fixed_entry_access_limit),
            ("economic_min_size", self.economic_min_size),
            ("economic_size_cap", self.economic_size_cap),
        ] {
            if v == 0 {
                return Err(EngineError::Policy(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn exclude(mut self, site: SiteId) -> Self {
        self.excluded.insert(site);
        self
    }
}

/// What to allocate at a site, relative to its kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReplacementDecision {
    Keep,
    Empty,
    Singleton,
    Size2,
    Economic,
    OpenSet,
    PrimitiveList(ElementTypeTag),
}

impl ReplacementDecision {
    const FIXED: [ReplacementDecision; 3] =
        [ReplacementDecision::Empty, ReplacementDecision::Singleton, ReplacementDecision::Size2];

    pub fn name(self) -> String {
        match self {
            ReplacementDecision::Keep => "KEEP".into(),
            ReplacementDecision::Empty => "EMPTY".into(),
            ReplacementDecision::Singleton => "SINGLETON".into(),
            ReplacementDecision::Size2 => "SIZE2".into(),
            ReplacementDecision::Economic => "ECONOMIC".into(),
            ReplacementDecision::OpenSet => "OPEN_SET".into(),
            ReplacementDecision::PrimitiveList(tag) => format!("PRIMITIVE_LIST({})", tag.name()),
        }
    }

    pub fn is_compatible(self, kind: DsKind) -> bool {
        match self {
            ReplacementDecision::Keep
            | ReplacementDecision::Empty
            | ReplacementDecision::Singleton
            | ReplacementDecision::Size2 => true,
            ReplacementDecision::Economic => kind.is_map(),
            ReplacementDecision::OpenSet => kind == DsKind::HashSet,
            ReplacementDecision::PrimitiveList(tag) => kind == DsKind::ArrayList && tag.is_primitive(),
        }
    }

    /// The concrete type allocated for this decision at a `kind` site.
    pub fn implementation(self, kind: DsKind) -> Option<Implementation> {
        use Implementation as I;
        if !self.is_compatible(kind) {
            return None;
        }
        let fixed = |n: usize| match kind {
            DsKind::HashMap => [I::EmptyHashMap, I::SingletonHashMap, I::Size2HashMap][n],
            DsKind::LinkedHashMap => [I::EmptyLinkedHashMap, I::SingletonLinkedHashMap, I::Size2LinkedHashMap][n],
            DsKind::HashSet => [I::EmptyHashSet, I::SingletonHashSet, I::Size2HashSet][n],
            DsKind::ArrayList => [I::EmptyArrayList, I::SingletonArrayList, I::Size2ArrayList][n],
        };
        Some(match self {
            ReplacementDecision::Keep => I::baseline(kind),
            ReplacementDecision::Empty => fixed(0),
            ReplacementDecision::Singleton => fixed(1),
            ReplacementDecision::Size2 => fixed(2),
            ReplacementDecision::Economic if kind == DsKind::LinkedHashMap => I::EconomicLinkedHashMap,
            ReplacementDecision::Economic => I::EconomicHashMap,
            ReplacementDecision::OpenSet => I::MemoryEfficientHashSet,
            ReplacementDecision::PrimitiveList(tag) => I::PrimitiveArrayList(tag),
        })
    }
}

impl fmt::Display for ReplacementDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ReplacementDecision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "KEEP" => ReplacementDecision::Keep,
            "EMPTY" => ReplacementDecision::Empty,
            "SINGLETON" => ReplacementDecision::Singleton,
            "SIZE2" => ReplacementDecision::Size2,
            "ECONOMIC" => ReplacementDecision::Economic,
            "OPEN_SET" => ReplacementDecision::OpenSet,
            _ => {
                let tag = s
                    .strip_prefix("PRIMITIVE_LIST(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .and_then(|t| t.parse::<ElementTypeTag>().ok())
                    .filter(|t| t.is_primitive())
                    .ok_or_else(|| s.to_string())?;
                ReplacementDecision::PrimitiveList(tag)
            }
        })
    }
}

impl Serialize for ReplacementDecision {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for ReplacementDecision {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|t| serde::de::Error::custom(format!("unknown decision {t:?}")))
    }
}

fn share(count: u64, total: u64) -> f64 {
    count as f64 / total as f64
}

fn require(p: &SiteProfile, ctx: &dyn Fn() -> String, ok: bool, expected: &'static str) -> Result<(), EngineError> {
    if !ok {
        return Err(EngineError::WrongKind { ctx: ctx(), kind: p.kind, expected });
    }
    if p.allocations == 0 {
        return Err(EngineError::ZeroAllocations { ctx: ctx() });
    }
    Ok(())
}

/// Smallest fixed size whose cumulative class share clears the threshold.
fn fixed_size(p: &SiteProfile, cfg: &PolicyConfig) -> Option<ReplacementDecision> {
    [SizeClass::Zero, SizeClass::One, SizeClass::Two]
        .into_iter()
        .position(|c| share(p.count_at_most(c), p.allocations) >= cfg.fixed_size_share)
        .map(|k| ReplacementDecision::FIXED[k])
}

/// Instances whose maximum may reach `economic_min_size`: every class whose
/// upper bound is at least that size. Classes are coarser than sizes, so
/// with the default of 5 this counts maxima of 3 and above.
fn large_instances(p: &SiteProfile, cfg: &PolicyConfig) -> u64 {
    SizeClass::ALL
        .iter()
        .filter(|c| c.bound().is_none_or(|b| b >= cfg.economic_min_size))
        .map(|c| p.class_count(*c))
        .sum()
}

fn economic(p: &SiteProfile, cfg: &PolicyConfig) -> bool {
    p.inserts > 0
        && share(p.entry_accesses, p.inserts) < cfg.entry_access_ratio_max
        && share(large_instances(p, cfg), p.allocations) >= cfg.economic_min_size_share
        && p.max_size < cfg.economic_size_cap
        && (p.gets as u128) < p.max_size as u128 * p.allocations as u128
}

pub fn decide_map(p: &SiteProfile, cfg: &PolicyConfig) -> Result<ReplacementDecision, EngineError> {
    decide_map_at(p, cfg, &|| String::new())
}

fn decide_map_at(
    p: &SiteProfile,
    cfg: &PolicyConfig,
    ctx: &dyn Fn() -> String,
) -> Result<ReplacementDecision, EngineError> {
    require(p, ctx, p.kind.is_map(), "map")?;
    if p.entry_accesses < cfg.fixed_entry_access_limit {
        if let Some(d) = fixed_size(p, cfg) {
            return Ok(d);
        }
    }
    Ok(if economic(p, cfg) { ReplacementDecision::Economic } else { ReplacementDecision::Keep })
}

pub fn decide_set(p: &SiteProfile, cfg: &PolicyConfig) -> Result<ReplacementDecision, EngineError> {
    decide_set_at(p, cfg, &|| String::new())
}

fn decide_set_at(
    p: &SiteProfile,
    cfg: &PolicyConfig,
    ctx: &dyn Fn() -> String,
) -> Result<ReplacementDecision, EngineError> {
    require(p, ctx, p.kind == DsKind::HashSet, "set")?;
    Ok(fixed_size(p, cfg).unwrap_or(ReplacementDecision::OpenSet))
}

pub fn decide_list(p: &SiteProfile, cfg: &PolicyConfig) -> Result<ReplacementDecision, EngineError> {
    decide_list_at(p, cfg, &|| String::new())
}

fn decide_list_at(
    p: &SiteProfile,
    cfg: &PolicyConfig,
    ctx: &dyn Fn() -> String,
) -> Result<ReplacementDecision, EngineError> {
    require(p, ctx, p.kind == DsKind::ArrayList, "list")?;
    if let Some(d) = fixed_size(p, cfg) {
        return Ok(d);
    }
    Ok(p.element_types.single_primitive().map_or(ReplacementDecision::Keep, ReplacementDecision::PrimitiveList))
}

/// Kind-appropriate heuristic for one site; excluded sites are kept.
pub fn decide(site: &SiteId, p: &SiteProfile, cfg: &PolicyConfig) -> Result<ReplacementDecision, EngineError> {
    if cfg.excluded.contains(site) {
        return Ok(ReplacementDecision::Keep);
    }
    let ctx = || site.ctx();
    match p.kind {
        DsKind::HashMap | DsKind::LinkedHashMap => decide_map_at(p, cfg, &ctx),
        DsKind::HashSet => decide_set_at(p, cfg, &ctx),
        DsKind::ArrayList => decide_list_at(p, cfg, &ctx),
    }
}
