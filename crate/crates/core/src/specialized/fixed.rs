use std::sync::Arc;

use arrayvec::ArrayVec;

use super::{FallbackState, TRANSIENT_ENTRY_LAYOUT};
use crate::baseline::{BaselineList, BaselineMap, BaselineSet, MapOptions};
use crate::collection::{check_index, CollectionError, EntryIter, Implementation, ListOps, MapOps, SetOps, ValueIter};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::value::Value;

const REFS: [FieldKind; 5] = [FieldKind::REF; 5];

fn layout(name: &'static str, refs: usize) -> TypeLayout {
    // `refs` slot references, the fallback reference, then the state byte
    let mut fields = REFS[..refs + 1].to_vec();
    fields.push(FieldKind::BYTE);
    TypeLayout { name: name.into(), fields: fields.into() }
}

/// Layout of a map specialized for `n` pairs: 2n slots, fallback, state.
pub fn fixed_map_layout(n: usize) -> TypeLayout {
    layout(["EmptyHashMap", "SingletonHashMap", "Size2HashMap"][n], 2 * n)
}

pub fn fixed_set_layout(n: usize) -> TypeLayout {
    layout(["EmptyHashSet", "SingletonHashSet", "Size2HashSet"][n], n)
}

pub fn fixed_list_layout(n: usize) -> TypeLayout {
    layout(["EmptyArrayList", "SingletonArrayList", "Size2ArrayList"][n], n)
}

/// A map holding at most `N` pairs in fields.
///
/// Exceeding `N` allocates the baseline (linked or plain), moves the cached
/// pairs into it and delegates to it from then on.
pub struct FixedMap<const N: usize> {
    heap: Arc<Heap>,
    linked: bool,
    initial_capacity: Option<usize>,
    state: FallbackState,
    slots: ArrayVec<(Value, Value), N>,
    fallback: Option<Box<BaselineMap>>,
}

pub type EmptyMap = FixedMap<0>;
pub type SingletonMap = FixedMap<1>;
pub type Size2Map = FixedMap<2>;

impl<const N: usize> FixedMap<N> {
    pub fn new(heap: Arc<Heap>, linked: bool, initial_capacity: Option<usize>) -> Self {
        heap.alloc_object(Self::category_for(linked), &fixed_map_layout(N));
        FixedMap { heap, linked, initial_capacity, state: FallbackState::Empty, slots: ArrayVec::new(), fallback: None }
    }

    fn category_for(linked: bool) -> Category {
        if linked {
            Category::LinkedHashMap
        } else {
            Category::HashMap
        }
    }

    pub fn state(&self) -> FallbackState {
        self.state
    }

    pub fn fallback(&self) -> Option<&BaselineMap> {
        self.fallback.as_deref()
    }

    fn init_fallback(&mut self) -> &mut BaselineMap {
        debug_assert_ne!(self.state, FallbackState::Fallback);
        let options = if self.linked { MapOptions::linked() } else { MapOptions::plain() };
        let mut map = BaselineMap::with_options(self.heap.clone(), options.with_capacity(self.initial_capacity));
        for (k, v) in self.slots.drain(..) {
            map.put(k, v);
        }
        self.state = FallbackState::Fallback;
        self.fallback.insert(Box::new(map))
    }
}

impl<const N: usize> MapOps for FixedMap<N> {
    fn put(&mut self, key: Value, value: Value) -> Option<Value> {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.put(key, value);
        }
        if let Some(slot) = self.slots.iter_mut().find(|(k, _)| *k == key) {
            return Some(std::mem::replace(&mut slot.1, value));
        }
        if self.slots.is_full() {
            return self.init_fallback().put(key, value);
        }
        self.slots.push((key, value));
        self.state = FallbackState::Cached;
        None
    }

    fn get(&self, key: &Value) -> Option<Value> {
        match &self.fallback {
            Some(fb) => fb.get(key),
            None => self.slots.iter().find(|(k, _)| k == key).map(|(_, v)| *v),
        }
    }

    fn remove(&mut self, key: &Value) -> Option<Value> {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.remove(key);
        }
        let pos = self.slots.iter().position(|(k, _)| k == key)?;
        let (_, v) = self.slots.remove(pos);
        if self.slots.is_empty() {
            self.state = FallbackState::Empty;
        }
        Some(v)
    }

    fn len(&self) -> usize {
        self.fallback.as_ref().map_or(self.slots.len(), |fb| fb.len())
    }

    fn entries(&self) -> EntryIter<'_> {
        match &self.fallback {
            Some(fb) => fb.entries(),
            None => {
                let category = Self::category_for(self.linked);
                Box::new(self.slots.iter().map(move |pair| {
                    self.heap.alloc_object(category, &TRANSIENT_ENTRY_LAYOUT);
                    *pair
                }))
            }
        }
    }

    fn implementation(&self) -> Implementation {
        use Implementation::*;
        match (N, self.linked) {
            (0, false) => EmptyHashMap,
            (1, false) => SingletonHashMap,
            (_, false) => Size2HashMap,
            (0, true) => EmptyLinkedHashMap,
            (1, true) => SingletonLinkedHashMap,
            (_, true) => Size2LinkedHashMap,
        }
    }

    fn fell_back(&self) -> bool {
        self.state == FallbackState::Fallback
    }
}

/// A set holding at most `N` elements in fields; no backing map.
pub struct FixedSet<const N: usize> {
    heap: Arc<Heap>,
    initial_capacity: Option<usize>,
    state: FallbackState,
    slots: ArrayVec<Value, N>,
    fallback: Option<Box<BaselineSet>>,
}

pub type EmptySet = FixedSet<0>;
pub type SingletonSet = FixedSet<1>;
pub type Size2Set = FixedSet<2>;

impl<const N: usize> FixedSet<N> {
    pub fn new(heap: Arc<Heap>, initial_capacity: Option<usize>) -> Self {
        heap.alloc_object(Category::HashSet, &fixed_set_layout(N));
        FixedSet { heap, initial_capacity, state: FallbackState::Empty, slots: ArrayVec::new(), fallback: None }
    }

    pub fn state(&self) -> FallbackState {
        self.state
    }

    fn init_fallback(&mut self) -> &mut BaselineSet {
        let mut set = BaselineSet::with_capacity(self.heap.clone(), self.initial_capacity);
        for v in self.slots.drain(..) {
            set.add(v);
        }
        self.state = FallbackState::Fallback;
        self.fallback.insert(Box::new(set))
    }
}

impl<const N: usize> SetOps for FixedSet<N> {
    fn add(&mut self, value: Value) -> bool {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.add(value);
        }
        if self.slots.contains(&value) {
            return false;
        }
        if self.slots.is_full() {
            return self.init_fallback().add(value);
        }
        self.slots.push(value);
        self.state = FallbackState::Cached;
        true
    }

    fn contains(&self, value: &Value) -> bool {
        match &self.fallback {
            Some(fb) => fb.contains(value),
            None => self.slots.contains(value),
        }
    }

    fn remove(&mut self, value: &Value) -> bool {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.remove(value);
        }
        match self.slots.iter().position(|v| v == value) {
            Some(pos) => {
                self.slots.remove(pos);
                if self.slots.is_empty() {
                    self.state = FallbackState::Empty;
                }
                true
            }
            None => false,
        }
    }

    fn len(&self) -> usize {
        self.fallback.as_ref().map_or(self.slots.len(), |fb| fb.len())
    }

    fn iter(&self) -> ValueIter<'_> {
        match &self.fallback {
            Some(fb) => fb.iter(),
            None => Box::new(self.slots.iter().copied()),
        }
    }

    fn implementation(&self) -> Implementation {
        [Implementation::EmptyHashSet, Implementation::SingletonHashSet, Implementation::Size2HashSet][N]
    }

    fn fell_back(&self) -> bool {
        self.state == FallbackState::Fallback
    }
}

/// A list holding at most `N` elements in fields. Elements are references,
/// so primitives are boxed exactly as in the baseline.
pub struct FixedList<const N: usize> {
    heap: Arc<Heap>,
    initial_capacity: Option<usize>,
    state: FallbackState,
    slots: ArrayVec<Value, N>,
    fallback: Option<Box<BaselineList>>,
}

pub type EmptyList = FixedList<0>;
pub type SingletonList = FixedList<1>;
pub type Size2List = FixedList<2>;

impl<const N: usize> FixedList<N> {
    pub fn new(heap: Arc<Heap>, initial_capacity: Option<usize>) -> Self {
        heap.alloc_object(Category::ArrayList, &fixed_list_layout(N));
        FixedList { heap, initial_capacity, state: FallbackState::Empty, slots: ArrayVec::new(), fallback: None }
    }

    pub fn state(&self) -> FallbackState {
        self.state
    }

    fn boxed(&self, value: Value) -> Value {
        if value.is_primitive() {
            self.heap.alloc_box(value.tag());
        }
        value
    }

    fn init_fallback(&mut self) -> &mut BaselineList {
        let mut list = BaselineList::with_capacity(self.heap.clone(), self.initial_capacity);
        for v in self.slots.drain(..) {
            list.push_moved(v);
        }
        self.state = FallbackState::Fallback;
        self.fallback.insert(Box::new(list))
    }
}

impl<const N: usize> ListOps for FixedList<N> {
    fn add(&mut self, value: Value) {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.add(value);
        }
        if self.slots.is_full() {
            return self.init_fallback().add(value);
        }
        let value = self.boxed(value);
        self.slots.push(value);
        self.state = FallbackState::Cached;
    }

    fn get_at(&self, index: usize) -> Result<Value, CollectionError> {
        if let Some(fb) = &self.fallback {
            return fb.get_at(index);
        }
        check_index(index, self.slots.len())?;
        Ok(self.slots[index])
    }

    fn set_at(&mut self, index: usize, value: Value) -> Result<Value, CollectionError> {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.set_at(index, value);
        }
        check_index(index, self.slots.len())?;
        let value = self.boxed(value);
        Ok(std::mem::replace(&mut self.slots[index], value))
    }

    fn remove_at(&mut self, index: usize) -> Result<Value, CollectionError> {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.remove_at(index);
        }
        check_index(index, self.slots.len())?;
        let v = self.slots.remove(index);
        if self.slots.is_empty() {
            self.state = FallbackState::Empty;
        }
        Ok(v)
    }

    fn len(&self) -> usize {
        self.fallback.as_ref().map_or(self.slots.len(), |fb| fb.len())
    }

    fn iter(&self) -> ValueIter<'_> {
        match &self.fallback {
            Some(fb) => fb.iter(),
            None => Box::new(self.slots.iter().copied()),
        }
    }

    fn implementation(&self) -> Implementation {
        [Implementation::EmptyArrayList, Implementation::SingletonArrayList, Implementation::Size2ArrayList][N]
    }

    fn fell_back(&self) -> bool {
        self.state == FallbackState::Fallback
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::LayoutConstants;

    fn heap() -> Arc<Heap> {
        Arc::new(Heap::default())
    }

    #[test]
    fn layout_sizes() {
        let c = LayoutConstants::default();
        let maps: Vec<u64> = (0..3).map(|n| c.object_size(&fixed_map_layout(n))).collect();
        let sets: Vec<u64> = (0..3).map(|n| c.object_size(&fixed_set_layout(n))).collect();
        assert_eq!(maps, [32, 48, 64]);
        assert_eq!(sets, [32, 40, 48]);
        assert_eq!(fixed_map_layout(1).fields.len(), 4);
    }

    #[test]
    fn singleton_put_paths() {
        let heap = heap();
        let mut m = SingletonMap::new(heap.clone(), false, None);
        assert_eq!(m.put(Value::Int(1), Value::Int(10)), None);
        assert_eq!(m.state(), FallbackState::Cached);
        assert_eq!(m.put(Value::Int(1), Value::Int(11)), Some(Value::Int(10)));
        assert_eq!(m.state(), FallbackState::Cached);
        assert_eq!(heap.ledger().bytes(Category::HashMap), 48);

        assert_eq!(m.put(Value::Int(2), Value::Int(20)), None);
        assert!(m.fell_back());
        let fb = m.fallback().unwrap();
        assert_eq!(fb.len(), 2);
        assert_eq!(fb.get(&Value::Int(1)), Some(Value::Int(11)));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn null_key_is_distinguished_by_state() {
        let mut m = SingletonMap::new(heap(), false, None);
        assert_eq!(m.get(&Value::Null), None);
        m.put(Value::Null, Value::Null);
        assert_eq!(m.get(&Value::Null), Some(Value::Null));
        assert_eq!(m.len(), 1);
        assert_eq!(m.remove(&Value::Null), Some(Value::Null));
        assert_eq!(m.state(), FallbackState::Empty);
    }

    #[test]
    fn empty_map_falls_back_on_first_put() {
        let heap = heap();
        let mut m = EmptyMap::new(heap.clone(), true, None);
        assert_eq!(heap.ledger().bytes(Category::LinkedHashMap), 32);
        m.put(Value::Int(1), Value::Int(1));
        assert!(m.fell_back());
        assert!(m.fallback().unwrap().is_linked());
        assert_eq!(m.implementation(), Implementation::EmptyLinkedHashMap);
    }

    #[test]
    fn entry_iteration_materializes_entries() {
        let heap = heap();
        let mut m = Size2Map::new(heap.clone(), false, None);
        assert_eq!(m.entries().count(), 0);
        assert_eq!(heap.ledger().count(Category::HashMap), 1);
        m.put(Value::Int(1), Value::Int(1));
        m.put(Value::Int(2), Value::Int(2));
        let pairs: Vec<_> = m.entries().collect();
        assert_eq!(pairs, [(Value::Int(1), Value::Int(1)), (Value::Int(2), Value::Int(2))]);
        assert_eq!(heap.ledger().count(Category::HashMap), 3);
        assert_eq!(heap.ledger().bytes(Category::HashMap), 64 + 2 * 32);
    }

    #[test]
    fn set_fallback_allocates_set_and_backing_map() {
        let heap = heap();
        let mut s = SingletonSet::new(heap.clone(), None);
        assert!(s.add(Value::Int(1)));
        assert!(!s.add(Value::Int(1)));
        assert_eq!(heap.ledger().count(Category::HashMap), 0);
        assert!(s.add(Value::Int(2)));
        assert!(s.fell_back());
        // backing map object, its table, two nodes
        assert_eq!(heap.ledger().count(Category::HashMap), 4);
        assert_eq!(heap.ledger().count(Category::HashSet), 2);
    }

    #[test]
    fn list_fallback_moves_without_reboxing() {
        let heap = heap();
        let mut l = SingletonList::new(heap.clone(), None);
        l.add(Value::Int(1));
        assert_eq!(heap.ledger().count(Category::ElementData), 1);
        l.add(Value::Int(2));
        assert!(l.fell_back());
        assert_eq!(heap.ledger().count(Category::ElementData), 2);
        assert_eq!(l.iter().collect::<Vec<_>>(), [Value::Int(1), Value::Int(2)]);
        assert_eq!(l.remove_at(0), Ok(Value::Int(1)));
        assert_eq!(l.len(), 1);
    }
}
