use std::sync::Arc;

use crate::baseline::table_size_for;
use crate::collection::{Implementation, SetOps, ValueIter};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::value::{spread, Value};

/// slots array, size, tombstone count.
pub const OPEN_SET_LAYOUT: TypeLayout =
    TypeLayout::new("MemoryEfficientHashSet", &[FieldKind::REF, FieldKind::INT, FieldKind::INT]);

pub const OPEN_SET_INITIAL_CAPACITY: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Free,
    Tombstone,
    Full(Value),
}

/// Open-addressing set with linear probing over a single slot array.
///
/// Occupied plus tombstoned slots never exceed 3/4 of the capacity; an add
/// that would cross it rehashes (doubling only when live elements alone
/// require it), which drops all tombstones.
pub struct OpenSet {
    heap: Arc<Heap>,
    initial_capacity: usize,
    slots: Vec<Slot>,
    size: usize,
    tombstones: usize,
}

impl OpenSet {
    pub fn new(heap: Arc<Heap>, initial_capacity: Option<usize>) -> Self {
        heap.alloc_object(Category::HashSet, &OPEN_SET_LAYOUT);
        OpenSet {
            heap,
            initial_capacity: initial_capacity.map_or(OPEN_SET_INITIAL_CAPACITY, |n| table_size_for(n).max(2)),
            slots: Vec::new(),
            size: 0,
            tombstones: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn tombstones(&self) -> usize {
        self.tombstones
    }

    /// Used plus tombstoned slots stay within 3/4 of the array.
    pub fn within_load(&self) -> bool {
        4 * (self.size + self.tombstones) <= 3 * self.slots.len()
    }

    fn find(&self, value: &Value) -> Option<usize> {
        if self.slots.is_empty() {
            return None;
        }
        let mask = self.slots.len() - 1;
        let mut i = spread(value.hash_code()) as usize & mask;
        loop {
            match self.slots[i] {
                Slot::Free => return None,
                Slot::Full(v) if v == *value => return Some(i),
                _ => i = (i + 1) & mask,
            }
        }
    }

    fn rehash(&mut self, capacity: usize) {
        self.heap.alloc_array(Category::HashSet, FieldKind::REF, capacity as u64);
        let old = std::mem::replace(&mut self.slots, vec![Slot::Free; capacity]);
        self.tombstones = 0;
        for slot in old {
            if let Slot::Full(v) = slot {
                let i = self.free_slot(&v);
                self.slots[i] = Slot::Full(v);
            }
        }
    }

    /// First free or tombstoned slot on `value`'s probe path.
    fn free_slot(&self, value: &Value) -> usize {
        let mask = self.slots.len() - 1;
        let mut i = spread(value.hash_code()) as usize & mask;
        while let Slot::Full(_) = self.slots[i] {
            i = (i + 1) & mask;
        }
        i
    }
}

impl SetOps for OpenSet {
    fn add(&mut self, value: Value) -> bool {
        if self.find(&value).is_some() {
            return false;
        }
        let cap = self.slots.len();
        if cap == 0 {
            self.rehash(self.initial_capacity);
        } else if 4 * (self.size + self.tombstones + 1) > 3 * cap {
            let grow = 4 * (self.size + 1) > 3 * cap;
            self.rehash(if grow { cap * 2 } else { cap });
        }
        let i = self.free_slot(&value);
        if self.slots[i] == Slot::Tombstone {
            self.tombstones -= 1;
        }
        self.slots[i] = Slot::Full(value);
        self.size += 1;
        true
    }

    fn contains(&self, value: &Value) -> bool {
        self.find(value).is_some()
    }

    fn remove(&mut self, value: &Value) -> bool {
        match self.find(value) {
            Some(i) => {
                self.slots[i] = Slot::Tombstone;
                self.size -= 1;
                self.tombstones += 1;
                true
            }
            None => false,
        }
    }

    fn len(&self) -> usize {
        self.size
    }

    fn iter(&self) -> ValueIter<'_> {
        Box::new(self.slots.iter().filter_map(|s| match s {
            Slot::Full(v) => Some(*v),
            _ => None,
        }))
    }

    fn implementation(&self) -> Implementation {
        Implementation::MemoryEfficientHashSet
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_adds_grow_four_times_without_nodes() {
        let heap = Arc::new(Heap::default());
        let mut s = OpenSet::new(heap.clone(), None);
        for i in 0..100 {
            assert!(s.add(Value::Int(i)));
        }
        assert_eq!(s.capacity(), 256);
        let ledger = heap.ledger().snapshot();
        // object + arrays of 16, 32, 64, 128, 256 slots
        assert_eq!(ledger.count(Category::HashSet), 6);
        assert_eq!(ledger.count(Category::HashMap), 0);
        assert_eq!(ledger.count(Category::ElementData), 0);
    }

    #[test]
    fn tombstones_are_purged_on_rehash() {
        let mut s = OpenSet::new(Arc::new(Heap::default()), None);
        for round in 0..50 {
            for i in 0..5 {
                s.add(Value::Int(round * 5 + i));
            }
            for i in 0..5 {
                assert!(s.remove(&Value::Int(round * 5 + i)));
                assert!(!s.contains(&Value::Int(round * 5 + i)));
            }
            assert!(s.within_load());
        }
        assert_eq!(s.capacity(), 16);
        assert!(s.is_empty());
    }

    #[test]
    fn explicit_capacity_rounds_up() {
        let mut s = OpenSet::new(Arc::new(Heap::default()), Some(0));
        s.add(Value::Int(1));
        assert_eq!(s.capacity(), 2);
        s.add(Value::Int(2));
        assert_eq!(s.capacity(), 4);
        assert!(s.within_load());
    }
}
