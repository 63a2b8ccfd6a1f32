use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU16, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use super::{DsKind, ElementTypeTag, ProfileError, ProfileStore, SiteId, SiteProfile, SizeClass, TagSet};

/// Live counters of one site; shared by every instance allocated there.
///
/// All updates are relaxed atomic read-modify-writes, so totals are exact
/// once recorders quiesce.
#[derive(Debug)]
pub struct SiteCounters {
    site: SiteId,
    kind: DsKind,
    allocations: AtomicU64,
    max_size: AtomicU64,
    size_classes: [AtomicU64; SizeClass::COUNT],
    gets: AtomicU64,
    inserts: AtomicU64,
    entry_accesses: AtomicU64,
    element_types: AtomicU16,
    fallbacks: AtomicU64,
}

impl SiteCounters {
    fn new(site: SiteId, kind: DsKind) -> Self {
        SiteCounters {
            site,
            kind,
            allocations: AtomicU64::new(0),
            max_size: AtomicU64::new(0),
            size_classes: Default::default(),
            gets: AtomicU64::new(0),
            inserts: AtomicU64::new(0),
            entry_accesses: AtomicU64::new(0),
            element_types: AtomicU16::new(0),
            fallbacks: AtomicU64::new(0),
        }
    }

    pub fn site(&self) -> &SiteId {
        &self.site
    }

    pub fn kind(&self) -> DsKind {
        self.kind
    }

    pub fn record_allocation(&self) {
        self.allocations.fetch_add(1, Ordering::Relaxed);
        self.size_classes[SizeClass::Zero.index()].fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_size_change(&self, prev_size: u64, new_size: u64) -> Result<(), ProfileError> {
        self.max_size.fetch_max(new_size, Ordering::Relaxed);
        if let Some((from, to)) = SizeClass::transition(prev_size, new_size) {
            self.size_classes[from.index()]
                .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |n| n.checked_sub(1))
                .map_err(|_| ProfileError::CounterUnderflow { ctx: self.site.ctx(), class: from })?;
            self.size_classes[to.index()].fetch_add(1, Ordering::Relaxed);
        }
        Ok(())
    }

    pub fn record_get(&self) {
        self.gets.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_insert(&self) {
        self.inserts.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_entry_access(&self) {
        self.entry_accesses.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_element_type(&self, tag: ElementTypeTag) -> Result<(), ProfileError> {
        if self.kind != DsKind::ArrayList {
            return Err(ProfileError::NotAList { ctx: self.site.ctx(), kind: self.kind });
        }
        self.element_types.fetch_or(tag.bit(), Ordering::Relaxed);
        Ok(())
    }

    /// Counts a replacement instance switching to its fallback.
    pub fn record_fallback(&self) {
        self.fallbacks.fetch_add(1, Ordering::Relaxed);
    }

    pub fn fallbacks(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> SiteProfile {
        let mut size_class_counts = [0; SizeClass::COUNT];
        for (out, c) in size_class_counts.iter_mut().zip(&self.size_classes) {
            *out = c.load(Ordering::Relaxed);
        }
        SiteProfile {
            kind: self.kind,
            allocations: self.allocations.load(Ordering::Relaxed),
            max_size: self.max_size.load(Ordering::Relaxed),
            size_class_counts,
            gets: self.gets.load(Ordering::Relaxed),
            inserts: self.inserts.load(Ordering::Relaxed),
            entry_accesses: self.entry_accesses.load(Ordering::Relaxed),
            element_types: TagSet::from_bits(self.element_types.load(Ordering::Relaxed)).unwrap_or_default(),
        }
    }
}

/// Concurrent registry of live site counters for one run.
#[derive(Debug, Default)]
pub struct Profiler {
    sites: RwLock<BTreeMap<SiteId, Arc<SiteCounters>>>,
}

impl Profiler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the counters of `site`, creating them on first use.
    pub fn counters(&self, site: &SiteId, kind: DsKind) -> Result<Arc<SiteCounters>, ProfileError> {
        let check = |c: &Arc<SiteCounters>| {
            if c.kind == kind {
                Ok(Arc::clone(c))
            } else {
                Err(ProfileError::KindMismatch { ctx: site.ctx(), existing: c.kind, requested: kind })
            }
        };
        if let Some(c) = self.sites.read().expect("profiler lock poisoned").get(site) {
            return check(c);
        }
        let mut sites = self.sites.write().expect("profiler lock poisoned");
        let c = sites.entry(site.clone()).or_insert_with(|| Arc::new(SiteCounters::new(site.clone(), kind)));
        check(c)
    }

    /// Registers an allocation at `site` and returns the hook the new
    /// instance reports through.
    pub fn allocate(&self, site: &SiteId, kind: DsKind) -> Result<SiteHook, ProfileError> {
        Ok(SiteHook::attach(self.counters(site, kind)?))
    }

    pub fn get(&self, site: &SiteId) -> Option<Arc<SiteCounters>> {
        self.sites.read().expect("profiler lock poisoned").get(site).cloned()
    }

    /// Point-in-time copy of every site. Call at quiescence for exact totals.
    pub fn snapshot(&self) -> ProfileStore {
        let sites = self.sites.read().expect("profiler lock poisoned");
        let mut store = ProfileStore::new();
        for (site, counters) in sites.iter() {
            store.insert(site.clone(), counters.snapshot()).expect("registry holds one entry per site");
        }
        store
    }

    pub fn fallbacks(&self) -> BTreeMap<SiteId, u64> {
        let sites = self.sites.read().expect("profiler lock poisoned");
        sites.iter().map(|(s, c)| (s.clone(), c.fallbacks())).collect()
    }
}

/// Per-instance handle on the site counters. Tracks the instance's own
/// maximum size so class transitions are reported against it.
#[derive(Debug)]
pub struct SiteHook {
    counters: Arc<SiteCounters>,
    max_seen: u64,
}

impl SiteHook {
    /// Counts a new allocation; the instance starts in size class 0.
    pub fn attach(counters: Arc<SiteCounters>) -> Self {
        counters.record_allocation();
        SiteHook { counters, max_seen: 0 }
    }

    pub fn counters(&self) -> &SiteCounters {
        &self.counters
    }

    /// Reports the instance's current size after an operation that may have
    /// changed it.
    pub fn size_changed(&mut self, size: u64) {
        if size > self.max_seen {
            self.counters
                .record_size_change(self.max_seen, size)
                .expect("an instance is counted in the class of its own maximum");
            self.max_seen = size;
        }
    }

    pub fn max_seen(&self) -> u64 {
        self.max_seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn hooks_track_per_instance_maxima() {
        let profiler = Profiler::new();
        let site = SiteId::single("A.a()", 1).unwrap();
        let mut a = profiler.allocate(&site, DsKind::HashMap).unwrap();
        let mut b = profiler.allocate(&site, DsKind::HashMap).unwrap();
        a.size_changed(2);
        a.size_changed(0);
        a.size_changed(1);
        b.size_changed(1);
        let p = profiler.snapshot().get(&site).unwrap().clone();
        assert_eq!(p.size_class_counts[..3], [0, 1, 1]);
        assert_eq!(p.max_size, 2);
        assert!(p.is_conserved());
    }

    #[test]
    fn kind_mismatch_on_registration() {
        let profiler = Profiler::new();
        let site = SiteId::single("A.a()", 1).unwrap();
        profiler.allocate(&site, DsKind::HashMap).unwrap();
        assert!(profiler.allocate(&site, DsKind::ArrayList).is_err());
    }

    #[test]
    fn concurrent_recorders_lose_no_events() {
        let profiler = Profiler::new();
        let site = SiteId::single("A.a()", 1).unwrap();
        thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    for i in 0..1000u64 {
                        let mut hook = profiler.allocate(&site, DsKind::HashMap).unwrap();
                        hook.counters().record_get();
                        hook.counters().record_insert();
                        hook.size_changed(i % 20);
                    }
                });
            }
        });
        let p = profiler.snapshot().get(&site).unwrap().clone();
        assert_eq!(p.allocations, 8000);
        assert_eq!(p.gets, 8000);
        assert_eq!(p.inserts, 8000);
        assert_eq!(p.max_size, 19);
        assert!(p.is_conserved());
    }
}
