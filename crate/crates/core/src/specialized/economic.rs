use std::sync::Arc;

use super::TRANSIENT_ENTRY_LAYOUT;
use crate::collection::{EntryIter, Implementation, MapOps};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::value::{spread, Value};

/// entries array, index array, size.
pub const ECONOMIC_LAYOUT: TypeLayout =
    TypeLayout::new("EconomicMap", &[FieldKind::REF, FieldKind::REF, FieldKind::INT]);

pub const ECONOMIC_INITIAL_CAPACITY: usize = 4;
/// Up to this many entries lookups scan the entry array; beyond it a hash
/// index is kept.
pub const ECONOMIC_LINEAR_SCAN_LIMIT: usize = 8;

const FIELD_SHORT: FieldKind = FieldKind::Primitive(crate::profile::ElementTypeTag::Short);

/// Map storing keys and values alternately in one array, in insertion order,
/// without entry nodes.
///
/// Past [`ECONOMIC_LINEAR_SCAN_LIMIT`] entries a linear-probing index of
/// `2 * next_pow2(capacity)` slots maps hashes to entry positions (1-based,
/// 0 = empty). Index slots are bytes while the capacity fits, shorts or ints
/// beyond.
pub struct EconomicMap {
    heap: Arc<Heap>,
    linked: bool,
    initial_capacity: usize,
    /// Entry capacity of the allocated storage array (0 = not allocated).
    capacity: usize,
    entries: Vec<(Value, Value)>,
    index: Option<Vec<u32>>,
}

impl EconomicMap {
    pub fn new(heap: Arc<Heap>, linked: bool, initial_capacity: Option<usize>) -> Self {
        heap.alloc_object(Self::category_for(linked), &ECONOMIC_LAYOUT);
        EconomicMap {
            heap,
            linked,
            initial_capacity: initial_capacity.unwrap_or(ECONOMIC_INITIAL_CAPACITY).max(1),
            capacity: 0,
            entries: Vec::new(),
            index: None,
        }
    }

    fn category_for(linked: bool) -> Category {
        if linked {
            Category::LinkedHashMap
        } else {
            Category::HashMap
        }
    }

    fn category(&self) -> Category {
        Self::category_for(self.linked)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn has_index(&self) -> bool {
        self.index.is_some()
    }

    fn index_width(capacity: usize) -> FieldKind {
        if capacity < 1 << 8 {
            FieldKind::BYTE
        } else if capacity < 1 << 16 {
            FIELD_SHORT
        } else {
            FieldKind::INT
        }
    }

    fn index_len(&self) -> usize {
        2 * self.capacity.next_power_of_two()
    }

    fn position(&self, key: &Value) -> Option<usize> {
        match &self.index {
            None => self.entries.iter().position(|(k, _)| k == key),
            Some(index) => {
                let mask = index.len() - 1;
                let mut slot = spread(key.hash_code()) as usize & mask;
                loop {
                    match index[slot] {
                        0 => return None,
                        e if self.entries[e as usize - 1].0 == *key => return Some(e as usize - 1),
                        _ => slot = (slot + 1) & mask,
                    }
                }
            }
        }
    }

    /// Fills a fresh index of the current length from the entry array.
    fn reindex(&mut self) {
        let len = self.index_len();
        let mut index = self.index.take().unwrap_or_default();
        index.clear();
        index.resize(len, 0);
        for (i, (k, _)) in self.entries.iter().enumerate() {
            let mut slot = spread(k.hash_code()) as usize & (len - 1);
            while index[slot] != 0 {
                slot = (slot + 1) & (len - 1);
            }
            index[slot] = i as u32 + 1;
        }
        self.index = Some(index);
    }

    fn charge_index(&self) {
        self.heap.alloc_array(self.category(), Self::index_width(self.capacity), self.index_len() as u64);
    }

    fn grow_if_full(&mut self) {
        if self.entries.len() < self.capacity {
            return;
        }
        self.capacity = if self.capacity == 0 { self.initial_capacity } else { self.capacity * 2 };
        self.heap.alloc_array(self.category(), FieldKind::REF, 2 * self.capacity as u64);
        if self.index.is_some() {
            self.charge_index();
            self.reindex();
        }
    }
}

impl MapOps for EconomicMap {
    fn put(&mut self, key: Value, value: Value) -> Option<Value> {
        if let Some(i) = self.position(&key) {
            return Some(std::mem::replace(&mut self.entries[i].1, value));
        }
        self.grow_if_full();
        self.entries.push((key, value));
        match &mut self.index {
            Some(index) => {
                let mask = index.len() - 1;
                let mut slot = spread(key.hash_code()) as usize & mask;
                while index[slot] != 0 {
                    slot = (slot + 1) & mask;
                }
                index[slot] = self.entries.len() as u32;
            }
            None if self.entries.len() > ECONOMIC_LINEAR_SCAN_LIMIT => {
                self.charge_index();
                self.reindex();
            }
            None => {}
        }
        None
    }

    fn get(&self, key: &Value) -> Option<Value> {
        self.position(key).map(|i| self.entries[i].1)
    }

    fn remove(&mut self, key: &Value) -> Option<Value> {
        let i = self.position(key)?;
        let (_, v) = self.entries.remove(i);
        if self.index.is_some() {
            self.reindex();
        }
        Some(v)
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    fn entries(&self) -> EntryIter<'_> {
        let category = self.category();
        Box::new(self.entries.iter().map(move |pair| {
            self.heap.alloc_object(category, &TRANSIENT_ENTRY_LAYOUT);
            *pair
        }))
    }

    fn implementation(&self) -> Implementation {
        if self.linked {
            Implementation::EconomicLinkedHashMap
        } else {
            Implementation::EconomicHashMap
        }
    }
}
