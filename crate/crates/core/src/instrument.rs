//! Wrappers that report collection events to a site's profile counters.
//!
//! The wrapped instance may be a baseline or a replacement; the same hooks
//! apply, plus a one-time fallback notification for replacements.

use crate::collection::{CollectionError, EntryIter, Implementation, ListOps, MapOps, SetOps, ValueIter};
use crate::profile::SiteHook;
use crate::value::Value;

struct Probe {
    hook: SiteHook,
    fell_back: bool,
}

impl Probe {
    /// Reports a successful insert if the size grew.
    fn after_insert(&mut self, before: usize, after: usize) {
        if after > before {
            self.hook.counters().record_insert();
            self.hook.size_changed(after as u64);
        }
    }

    fn check_fallback(&mut self, fell_back: bool) {
        if fell_back && !self.fell_back {
            self.fell_back = true;
            self.hook.counters().record_fallback();
        }
    }
}

pub struct InstrumentedMap {
    inner: Box<dyn MapOps>,
    probe: Probe,
}

impl InstrumentedMap {
    pub fn new(inner: Box<dyn MapOps>, hook: SiteHook) -> Self {
        InstrumentedMap { inner, probe: Probe { hook, fell_back: false } }
    }

    pub fn inner(&self) -> &dyn MapOps {
        self.inner.as_ref()
    }

    pub fn hook(&self) -> &SiteHook {
        &self.probe.hook
    }
}

impl MapOps for InstrumentedMap {
    fn put(&mut self, key: Value, value: Value) -> Option<Value> {
        let before = self.inner.len();
        let previous = self.inner.put(key, value);
        self.probe.after_insert(before, self.inner.len());
        self.probe.check_fallback(self.inner.fell_back());
        previous
    }

    fn get(&self, key: &Value) -> Option<Value> {
        self.probe.hook.counters().record_get();
        self.inner.get(key)
    }

    fn remove(&mut self, key: &Value) -> Option<Value> {
        let removed = self.inner.remove(key);
        self.probe.check_fallback(self.inner.fell_back());
        removed
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn entries(&self) -> EntryIter<'_> {
        let counters = self.probe.hook.counters();
        Box::new(self.inner.entries().inspect(move |_| counters.record_entry_access()))
    }

    fn implementation(&self) -> Implementation {
        self.inner.implementation()
    }

    fn fell_back(&self) -> bool {
        self.inner.fell_back()
    }
}

pub struct InstrumentedSet {
    inner: Box<dyn SetOps>,
    probe: Probe,
}

impl InstrumentedSet {
    pub fn new(inner: Box<dyn SetOps>, hook: SiteHook) -> Self {
        InstrumentedSet { inner, probe: Probe { hook, fell_back: false } }
    }

    pub fn hook(&self) -> &SiteHook {
        &self.probe.hook
    }
}

impl SetOps for InstrumentedSet {
    fn add(&mut self, value: Value) -> bool {
        let before = self.inner.len();
        let added = self.inner.add(value);
        self.probe.after_insert(before, self.inner.len());
        self.probe.check_fallback(self.inner.fell_back());
        added
    }

    fn contains(&self, value: &Value) -> bool {
        self.inner.contains(value)
    }

    fn remove(&mut self, value: &Value) -> bool {
        self.inner.remove(value)
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn iter(&self) -> ValueIter<'_> {
        self.inner.iter()
    }

    fn implementation(&self) -> Implementation {
        self.inner.implementation()
    }

    fn fell_back(&self) -> bool {
        self.inner.fell_back()
    }
}

pub struct InstrumentedList {
    inner: Box<dyn ListOps>,
    probe: Probe,
}

impl InstrumentedList {
    pub fn new(inner: Box<dyn ListOps>, hook: SiteHook) -> Self {
        InstrumentedList { inner, probe: Probe { hook, fell_back: false } }
    }

    pub fn hook(&self) -> &SiteHook {
        &self.probe.hook
    }

    fn record_tag(&self, value: &Value) {
        self.probe.hook.counters().record_element_type(value.tag()).expect("list wrappers attach to list sites");
    }
}

impl ListOps for InstrumentedList {
    fn add(&mut self, value: Value) {
        self.record_tag(&value);
        let before = self.inner.len();
        self.inner.add(value);
        self.probe.after_insert(before, self.inner.len());
        self.probe.check_fallback(self.inner.fell_back());
    }

    fn get_at(&self, index: usize) -> Result<Value, CollectionError> {
        self.inner.get_at(index)
    }

    fn set_at(&mut self, index: usize, value: Value) -> Result<Value, CollectionError> {
        let old = self.inner.set_at(index, value)?;
        self.record_tag(&value);
        self.probe.check_fallback(self.inner.fell_back());
        Ok(old)
    }

    fn remove_at(&mut self, index: usize) -> Result<Value, CollectionError> {
        self.inner.remove_at(index)
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn iter(&self) -> ValueIter<'_> {
        self.inner.iter()
    }

    fn implementation(&self) -> Implementation {
        self.inner.implementation()
    }

    fn fell_back(&self) -> bool {
        self.inner.fell_back()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::baseline::{BaselineList, BaselineMap, BaselineSet};
    use crate::cost::Heap;
    use crate::profile::{DsKind, ElementTypeTag, Profiler, SiteId, TagSet};
    use crate::specialized::SingletonMap;

    fn site() -> SiteId {
        SiteId::single("Foo.bar()", 4).unwrap()
    }

    #[test]
    fn map_hooks_count_gets_inserts_and_entries() {
        let profiler = Profiler::new();
        let heap = Arc::new(Heap::default());
        let hook = profiler.allocate(&site(), DsKind::HashMap).unwrap();
        let mut m = InstrumentedMap::new(Box::new(BaselineMap::new(heap)), hook);
        assert_eq!(m.get(&Value::Int(1)), None);
        for k in 0..3 {
            m.put(Value::Int(k), Value::Int(k));
        }
        m.put(Value::Int(0), Value::Int(5));
        assert_eq!(m.entries().count(), 3);
        let p = profiler.snapshot().get(&site()).unwrap().clone();
        assert_eq!((p.gets, p.inserts, p.entry_accesses, p.max_size), (1, 3, 3, 3));
        assert_eq!(p.size_class_counts[3], 1);
    }

    #[test]
    fn fallback_is_reported_once() {
        let profiler = Profiler::new();
        let heap = Arc::new(Heap::default());
        let hook = profiler.allocate(&site(), DsKind::HashMap).unwrap();
        let mut m = InstrumentedMap::new(Box::new(SingletonMap::new(heap, false, None)), hook);
        for k in 0..5 {
            m.put(Value::Int(k), Value::Null);
        }
        assert!(m.fell_back());
        assert_eq!(profiler.get(&site()).unwrap().fallbacks(), 1);
    }

    #[test]
    fn set_adds_forward_to_the_set_site() {
        let profiler = Profiler::new();
        let hook = profiler.allocate(&site(), DsKind::HashSet).unwrap();
        let mut s = InstrumentedSet::new(Box::new(BaselineSet::new(Arc::new(Heap::default()))), hook);
        s.add(Value::Int(1));
        s.add(Value::Int(1));
        let p = profiler.snapshot().get(&site()).unwrap().clone();
        assert_eq!((p.inserts, p.max_size), (1, 1));
    }

    #[test]
    fn list_records_declared_tags() {
        let profiler = Profiler::new();
        let hook = profiler.allocate(&site(), DsKind::ArrayList).unwrap();
        let mut l = InstrumentedList::new(Box::new(BaselineList::new(Arc::new(Heap::default()))), hook);
        l.add(Value::Int(1));
        l.add(Value::Int(2));
        let mask = |p: &Profiler| p.snapshot().get(&site()).unwrap().element_types;
        assert_eq!(mask(&profiler), TagSet::EMPTY.with(ElementTypeTag::Int));
        l.add(Value::Null);
        assert_eq!(mask(&profiler), TagSet::EMPTY.with(ElementTypeTag::Int).with(ElementTypeTag::Object));
    }
}
