//! Allocation-site profiles: site identity, the per-site metrics, size-class
//! arithmetic and the `.dsprof.json` document format.

mod counters;
mod format;
mod site;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use counters::{Profiler, SiteCounters, SiteHook};
pub use format::{parse, serialize, PROFILE_EXTENSION, RECORD_ARITY};
pub use site::{Frame, SiteId};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("malformed profile document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("profile entry {ctx:?}: {reason}")]
    Schema { ctx: String, reason: String },
    #[error("profile entry {ctx:?}: unknown kind {name:?}")]
    UnknownKind { ctx: String, name: String },
    #[error("profile entry {ctx:?}: expected {expected} records, found {found}")]
    Arity { ctx: String, expected: usize, found: usize },
    #[error("profile entry {ctx:?}: record {index} is not a non-negative integer")]
    NegativeCounter { ctx: String, index: usize },
    #[error("profile entry {ctx:?} appears more than once")]
    DuplicateSite { ctx: String },
    #[error("bad context {ctx:?}: {reason}")]
    BadContext { ctx: String, reason: String },
    #[error("site {ctx:?} is a {existing} site, not {requested}")]
    KindMismatch { ctx: String, existing: DsKind, requested: DsKind },
    #[error("site {ctx:?} has not been allocated")]
    UnknownSite { ctx: String },
    #[error("site {ctx:?}: element types are only tracked for ARRAY_LIST sites, not {kind}")]
    NotAList { ctx: String, kind: DsKind },
    #[error("site {ctx:?}: size class {class} counter would drop below zero")]
    CounterUnderflow { ctx: String, class: SizeClass },
}

/// The profiled collection families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DsKind {
    HashMap,
    LinkedHashMap,
    HashSet,
    ArrayList,
}

impl DsKind {
    pub const ALL: [DsKind; 4] = [DsKind::HashMap, DsKind::LinkedHashMap, DsKind::HashSet, DsKind::ArrayList];

    pub fn name(self) -> &'static str {
        match self {
            DsKind::HashMap => "HASH_MAP",
            DsKind::LinkedHashMap => "LINKED_HASH_MAP",
            DsKind::HashSet => "HASH_SET",
            DsKind::ArrayList => "ARRAY_LIST",
        }
    }

    /// The source-level type name, as it appears in IR allocations.
    pub fn type_name(self) -> &'static str {
        match self {
            DsKind::HashMap => "HashMap",
            DsKind::LinkedHashMap => "LinkedHashMap",
            DsKind::HashSet => "HashSet",
            DsKind::ArrayList => "ArrayList",
        }
    }

    pub fn from_type_name(name: &str) -> Option<Self> {
        DsKind::ALL.into_iter().find(|k| k.type_name() == name)
    }

    pub fn is_map(self) -> bool {
        matches!(self, DsKind::HashMap | DsKind::LinkedHashMap)
    }
}

impl fmt::Display for DsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DsKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DsKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| s.to_string())
    }
}

/// Element types distinguished for list profiles: the eight primitives plus
/// references. The declaration order fixes the bit order of [`TagSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementTypeTag {
    Byte,
    Short,
    Int,
    Long,
    Float,
    Double,
    Char,
    Boolean,
    Object,
}

impl ElementTypeTag {
    pub const ALL: [ElementTypeTag; 9] = [
        ElementTypeTag::Byte,
        ElementTypeTag::Short,
        ElementTypeTag::Int,
        ElementTypeTag::Long,
        ElementTypeTag::Float,
        ElementTypeTag::Double,
        ElementTypeTag::Char,
        ElementTypeTag::Boolean,
        ElementTypeTag::Object,
    ];

    pub const PRIMITIVES: [ElementTypeTag; 8] = [
        ElementTypeTag::Byte,
        ElementTypeTag::Short,
        ElementTypeTag::Int,
        ElementTypeTag::Long,
        ElementTypeTag::Float,
        ElementTypeTag::Double,
        ElementTypeTag::Char,
        ElementTypeTag::Boolean,
    ];

    pub fn bit(self) -> u16 {
        1 << (self as u16)
    }

    pub fn is_primitive(self) -> bool {
        self != ElementTypeTag::Object
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementTypeTag::Byte => "BYTE",
            ElementTypeTag::Short => "SHORT",
            ElementTypeTag::Int => "INT",
            ElementTypeTag::Long => "LONG",
            ElementTypeTag::Float => "FLOAT",
            ElementTypeTag::Double => "DOUBLE",
            ElementTypeTag::Char => "CHAR",
            ElementTypeTag::Boolean => "BOOLEAN",
            ElementTypeTag::Object => "OBJECT",
        }
    }

    /// Capitalized primitive name used in replacement type names, e.g. `Int`.
    pub fn java_name(self) -> &'static str {
        match self {
            ElementTypeTag::Byte => "Byte",
            ElementTypeTag::Short => "Short",
            ElementTypeTag::Int => "Int",
            ElementTypeTag::Long => "Long",
            ElementTypeTag::Float => "Float",
            ElementTypeTag::Double => "Double",
            ElementTypeTag::Char => "Char",
            ElementTypeTag::Boolean => "Boolean",
            ElementTypeTag::Object => "Object",
        }
    }
}

impl fmt::Display for ElementTypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementTypeTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ElementTypeTag::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| s.to_string())
    }
}

/// A set of [`ElementTypeTag`]s packed into nine bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TagSet(u16);

impl TagSet {
    pub const EMPTY: TagSet = TagSet(0);
    const MASK: u16 = (1 << 9) - 1;

    pub fn from_bits(bits: u16) -> Option<Self> {
        (bits & !Self::MASK == 0).then_some(TagSet(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn insert(&mut self, tag: ElementTypeTag) {
        self.0 |= tag.bit();
    }

    pub fn with(mut self, tag: ElementTypeTag) -> Self {
        self.insert(tag);
        self
    }

    pub fn contains(self, tag: ElementTypeTag) -> bool {
        self.0 & tag.bit() != 0
    }

    pub fn union(self, other: TagSet) -> TagSet {
        TagSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = ElementTypeTag> {
        ElementTypeTag::ALL.into_iter().filter(move |t| self.contains(*t))
    }

    /// The tag, if this set holds exactly one primitive tag and nothing else.
    pub fn single_primitive(self) -> Option<ElementTypeTag> {
        let mut tags = self.iter();
        match (tags.next(), tags.next()) {
            (Some(tag), None) if tag.is_primitive() => Some(tag),
            _ => None,
        }
    }
}

impl FromIterator<ElementTypeTag> for TagSet {
    fn from_iter<I: IntoIterator<Item = ElementTypeTag>>(iter: I) -> Self {
        iter.into_iter().fold(TagSet::EMPTY, TagSet::with)
    }
}

/// Maximum-size bucket of an instance. Bounds are inclusive; `Inf` is
/// everything above 65536.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    Zero,
    One,
    Two,
    Upto8,
    Upto16,
    Upto64,
    Upto256,
    Upto1024,
    Upto65536,
    Inf,
}

impl SizeClass {
    pub const COUNT: usize = 10;

    pub const ALL: [SizeClass; SizeClass::COUNT] = [
        SizeClass::Zero,
        SizeClass::One,
        SizeClass::Two,
        SizeClass::Upto8,
        SizeClass::Upto16,
        SizeClass::Upto64,
        SizeClass::Upto256,
        SizeClass::Upto1024,
        SizeClass::Upto65536,
        SizeClass::Inf,
    ];

    const BOUNDS: [u64; SizeClass::COUNT - 1] = [0, 1, 2, 8, 16, 64, 256, 1024, 65536];

    /// The smallest class whose bound is at least `n`.
    pub fn for_size(n: u64) -> SizeClass {
        Self::BOUNDS.iter().position(|&bound| n <= bound).map_or(SizeClass::Inf, |i| SizeClass::ALL[i])
    }

    /// Inclusive upper bound; `None` for `Inf`.
    pub fn bound(self) -> Option<u64> {
        Self::BOUNDS.get(self.index()).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column label, e.g. `sc64` or `scInf`.
    pub fn label(self) -> String {
        match self.bound() {
            Some(b) => format!("sc{b}"),
            None => "scInf".to_string(),
        }
    }

    /// The class transition an instance makes when its maximum grows from
    /// `prev` to `new`, if it crosses a boundary.
    pub fn transition(prev: u64, new: u64) -> Option<(SizeClass, SizeClass)> {
        let (from, to) = (Self::for_size(prev), Self::for_size(new));
        (to > from).then_some((from, to))
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bound() {
            Some(b) => write!(f, "{b}"),
            None => f.write_str("inf"),
        }
    }
}

/// Shorthand for [`SizeClass::for_size`].
pub fn size_class_for(n: u64) -> SizeClass {
    SizeClass::for_size(n)
}

/// Counters for one allocation site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteProfile {
    pub kind: DsKind,
    pub allocations: u64,
    pub max_size: u64,
    pub size_class_counts: [u64; SizeClass::COUNT],
    pub gets: u64,
    pub inserts: u64,
    pub entry_accesses: u64,
    pub element_types: TagSet,
}

impl SiteProfile {
    pub fn new(kind: DsKind) -> Self {
        SiteProfile {
            kind,
            allocations: 0,
            max_size: 0,
            size_class_counts: [0; SizeClass::COUNT],
            gets: 0,
            inserts: 0,
            entry_accesses: 0,
            element_types: TagSet::EMPTY,
        }
    }

    pub fn class_count(&self, class: SizeClass) -> u64 {
        self.size_class_counts[class.index()]
    }

    /// Instances whose maximum size fell into `class` or a smaller one.
    pub fn count_at_most(&self, class: SizeClass) -> u64 {
        self.size_class_counts[..=class.index()].iter().sum()
    }

    /// Whether the size-class histogram accounts for every allocation.
    pub fn is_conserved(&self) -> bool {
        self.size_class_counts.iter().sum::<u64>() == self.allocations
    }

    fn absorb(&mut self, other: &SiteProfile) {
        self.allocations += other.allocations;
        self.max_size = self.max_size.max(other.max_size);
        for (mine, theirs) in self.size_class_counts.iter_mut().zip(other.size_class_counts) {
            *mine += theirs;
        }
        self.gets += other.gets;
        self.inserts += other.inserts;
        self.entry_accesses += other.entry_accesses;
        self.element_types = self.element_types.union(other.element_types);
    }
}

/// All site profiles of one run, keyed by site.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProfileStore {
    entries: BTreeMap<SiteId, SiteProfile>,
}

impl ProfileStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, site: &SiteId) -> Option<&SiteProfile> {
        self.entries.get(site)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SiteId, &SiteProfile)> {
        self.entries.iter()
    }

    /// Inserts a complete profile, refusing a second profile for the same site.
    pub fn insert(&mut self, site: SiteId, profile: SiteProfile) -> Result<(), ProfileError> {
        use std::collections::btree_map::Entry;
        match self.entries.entry(site) {
            Entry::Occupied(e) => Err(ProfileError::DuplicateSite { ctx: e.key().ctx() }),
            Entry::Vacant(e) => {
                e.insert(profile);
                Ok(())
            }
        }
    }

    fn existing_mut(&mut self, site: &SiteId) -> Result<&mut SiteProfile, ProfileError> {
        self.entries.get_mut(site).ok_or_else(|| ProfileError::UnknownSite { ctx: site.ctx() })
    }

    pub fn record_allocation(&mut self, site: &SiteId, kind: DsKind) -> Result<(), ProfileError> {
        let profile = self.entries.entry(site.clone()).or_insert_with(|| SiteProfile::new(kind));
        if profile.kind != kind {
            return Err(ProfileError::KindMismatch { ctx: site.ctx(), existing: profile.kind, requested: kind });
        }
        profile.allocations += 1;
        profile.size_class_counts[SizeClass::Zero.index()] += 1;
        Ok(())
    }

    /// `prev_size` must be the instance's previous maximum size.
    pub fn record_size_change(&mut self, site: &SiteId, prev_size: u64, new_size: u64) -> Result<(), ProfileError> {
        let profile = self.existing_mut(site)?;
        if let Some((from, to)) = SizeClass::transition(prev_size, new_size) {
            let slot = &mut profile.size_class_counts[from.index()];
            if *slot == 0 {
                return Err(ProfileError::CounterUnderflow { ctx: site.ctx(), class: from });
            }
            *slot -= 1;
            profile.size_class_counts[to.index()] += 1;
        }
        profile.max_size = profile.max_size.max(new_size);
        Ok(())
    }

    pub fn record_get(&mut self, site: &SiteId) -> Result<(), ProfileError> {
        self.existing_mut(site)?.gets += 1;
        Ok(())
    }

    pub fn record_insert(&mut self, site: &SiteId) -> Result<(), ProfileError> {
        self.existing_mut(site)?.inserts += 1;
        Ok(())
    }

    pub fn record_entry_access(&mut self, site: &SiteId) -> Result<(), ProfileError> {
        self.existing_mut(site)?.entry_accesses += 1;
        Ok(())
    }

    pub fn record_element_type(&mut self, site: &SiteId, tag: ElementTypeTag) -> Result<(), ProfileError> {
        let profile = self.existing_mut(site)?;
        if profile.kind != DsKind::ArrayList {
            return Err(ProfileError::NotAList { ctx: site.ctx(), kind: profile.kind });
        }
        profile.element_types.insert(tag);
        Ok(())
    }

    /// Combines two runs: counters add, maxima take the larger value and
    /// element-type sets union.
    pub fn merge(&self, other: &ProfileStore) -> Result<ProfileStore, ProfileError> {
        let mut merged = self.clone();
        for (site, theirs) in &other.entries {
            match merged.entries.get_mut(site) {
                Some(mine) if mine.kind != theirs.kind => {
                    return Err(ProfileError::KindMismatch {
                        ctx: site.ctx(),
                        existing: mine.kind,
                        requested: theirs.kind,
                    })
                }
                Some(mine) => mine.absorb(theirs),
                None => {
                    merged.entries.insert(site.clone(), theirs.clone());
                }
            }
        }
        Ok(merged)
    }

    /// Per-kind histogram of instances by size class.
    pub fn histogram(&self) -> BTreeMap<DsKind, [u64; SizeClass::COUNT]> {
        let mut out = BTreeMap::new();
        for profile in self.entries.values() {
            let row = out.entry(profile.kind).or_insert([0; SizeClass::COUNT]);
            for (cell, n) in row.iter_mut().zip(profile.size_class_counts) {
                *cell += n;
            }
        }
        out
    }
}

pub fn merge(a: &ProfileStore, b: &ProfileStore) -> Result<ProfileStore, ProfileError> {
    a.merge(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site() -> SiteId {
        SiteId::single("Foo.bar()", 4).unwrap()
    }

    #[test]
    fn size_classes_match_the_boundaries() {
        assert_eq!(size_class_for(17), SizeClass::Upto64);
        assert_eq!(size_class_for(0), SizeClass::Zero);
        assert_eq!(size_class_for(2), SizeClass::Two);
        assert_eq!(size_class_for(3), SizeClass::Upto8);
        assert_eq!(size_class_for(70_000), SizeClass::Inf);
        for class in &SizeClass::ALL[..9] {
            let bound = class.bound().unwrap();
            assert_eq!(size_class_for(bound), *class);
            assert!(size_class_for(bound + 1) > *class);
        }
        assert_eq!(SizeClass::Inf.label(), "scInf");
        assert_eq!(SizeClass::Upto65536.label(), "sc65536");
    }

    #[test]
    fn allocation_starts_in_class_zero() {
        let mut store = ProfileStore::new();
        store.record_allocation(&site(), DsKind::HashMap).unwrap();
        let p = store.get(&site()).unwrap();
        assert_eq!(p.allocations, 1);
        assert_eq!(p.size_class_counts, [1, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        for _ in 0..69 {
            store.record_allocation(&site(), DsKind::HashMap).unwrap();
        }
        assert_eq!(store.get(&site()).unwrap().allocations, 70);
    }

    #[test]
    fn kind_is_fixed_per_site() {
        let mut store = ProfileStore::new();
        store.record_allocation(&site(), DsKind::HashMap).unwrap();
        let err = store.record_allocation(&site(), DsKind::HashSet).unwrap_err();
        assert!(matches!(err, ProfileError::KindMismatch { .. }));
    }

    #[test]
    fn size_changes_move_instances_between_classes() {
        let mut store = ProfileStore::new();
        store.record_allocation(&site(), DsKind::HashMap).unwrap();
        store.record_size_change(&site(), 0, 1).unwrap();
        let p = store.get(&site()).unwrap();
        assert_eq!(p.size_class_counts[..2], [0, 1]);
        assert_eq!(p.max_size, 1);

        store.record_size_change(&site(), 1, 0).unwrap();
        assert_eq!(store.get(&site()).unwrap().size_class_counts[..2], [0, 1]);

        store.record_size_change(&site(), 1, 16).unwrap();
        store.record_size_change(&site(), 16, 17).unwrap();
        let p = store.get(&site()).unwrap();
        assert_eq!(p.class_count(SizeClass::Upto16), 0);
        assert_eq!(p.class_count(SizeClass::Upto64), 1);
        assert!(p.is_conserved());
    }

    #[test]
    fn underflow_is_reported() {
        let mut store = ProfileStore::new();
        store.record_allocation(&site(), DsKind::HashMap).unwrap();
        store.record_size_change(&site(), 0, 1).unwrap();
        // a second 0 -> 1 would need another instance in class 0
        let err = store.record_size_change(&site(), 0, 1).unwrap_err();
        assert!(matches!(err, ProfileError::CounterUnderflow { class: SizeClass::Zero, .. }));
    }

    #[test]
    fn counters_require_a_known_site() {
        let mut store = ProfileStore::new();
        assert!(matches!(store.record_get(&site()), Err(ProfileError::UnknownSite { .. })));
        store.record_allocation(&site(), DsKind::HashMap).unwrap();
        for _ in 0..76 {
            store.record_get(&site()).unwrap();
        }
        store.record_insert(&site()).unwrap();
        store.record_entry_access(&site()).unwrap();
        let p = store.get(&site()).unwrap();
        assert_eq!((p.gets, p.inserts, p.entry_accesses), (76, 1, 1));
    }

    #[test]
    fn element_types_only_for_lists() {
        let mut store = ProfileStore::new();
        store.record_allocation(&site(), DsKind::HashMap).unwrap();
        assert!(matches!(store.record_element_type(&site(), ElementTypeTag::Int), Err(ProfileError::NotAList { .. })));

        let list = SiteId::single("Foo.list()", 1).unwrap();
        store.record_allocation(&list, DsKind::ArrayList).unwrap();
        store.record_element_type(&list, ElementTypeTag::Int).unwrap();
        store.record_element_type(&list, ElementTypeTag::Int).unwrap();
        assert_eq!(store.get(&list).unwrap().element_types, TagSet::EMPTY.with(ElementTypeTag::Int));
        store.record_element_type(&list, ElementTypeTag::Object).unwrap();
        let tags: Vec<_> = store.get(&list).unwrap().element_types.iter().collect();
        assert_eq!(tags, [ElementTypeTag::Int, ElementTypeTag::Object]);
    }

    #[test]
    fn tag_set_single_primitive() {
        assert_eq!(TagSet::EMPTY.single_primitive(), None);
        assert_eq!(TagSet::EMPTY.with(ElementTypeTag::Byte).single_primitive(), Some(ElementTypeTag::Byte));
        assert_eq!(TagSet::EMPTY.with(ElementTypeTag::Object).single_primitive(), None);
        assert_eq!(TagSet::EMPTY.with(ElementTypeTag::Int).with(ElementTypeTag::Long).single_primitive(), None);
        assert_eq!(ElementTypeTag::Object.bit(), 1 << 8);
        assert!(TagSet::from_bits(1 << 9).is_none());
    }

    #[test]
    fn merge_adds_counters_and_takes_max() {
        let mut a = ProfileStore::new();
        let mut b = ProfileStore::new();
        for _ in 0..3 {
            a.record_allocation(&site(), DsKind::HashMap).unwrap();
        }
        for _ in 0..4 {
            b.record_allocation(&site(), DsKind::HashMap).unwrap();
        }
        a.record_size_change(&site(), 0, 5).unwrap();
        b.record_size_change(&site(), 0, 9).unwrap();
        let m = merge(&a, &b).unwrap();
        let p = m.get(&site()).unwrap();
        assert_eq!(p.allocations, 7);
        assert_eq!(p.max_size, 9);
        assert!(p.is_conserved());
        assert_eq!(merge(&a, &ProfileStore::new()).unwrap(), a);

        let mut c = ProfileStore::new();
        c.record_allocation(&site(), DsKind::HashSet).unwrap();
        assert!(merge(&a, &c).is_err());
    }
}
