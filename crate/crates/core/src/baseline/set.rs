use std::sync::Arc;

use super::map::{BaselineMap, MapOptions};
use crate::collection::{Implementation, MapOps, SetOps, ValueIter};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::value::Value;

/// Just the backing map reference.
pub const HASH_SET_LAYOUT: TypeLayout = TypeLayout::new("HashSet", &[FieldKind::REF]);

/// The shared dummy stored as every key's value.
const PRESENT: Value = Value::Object(0);

/// Set backed by a [`BaselineMap`]; allocating one charges both objects.
pub struct BaselineSet {
    map: BaselineMap,
}

impl BaselineSet {
    pub fn new(heap: Arc<Heap>) -> Self {
        Self::with_capacity(heap, None)
    }

    pub fn with_capacity(heap: Arc<Heap>, initial_capacity: Option<usize>) -> Self {
        heap.alloc_object(Category::HashSet, &HASH_SET_LAYOUT);
        let map = BaselineMap::with_options(heap, MapOptions::plain().with_capacity(initial_capacity));
        BaselineSet { map }
    }

    pub fn backing(&self) -> &BaselineMap {
        &self.map
    }
}

impl SetOps for BaselineSet {
    fn add(&mut self, value: Value) -> bool {
        self.map.put(value, PRESENT).is_none()
    }

    fn contains(&self, value: &Value) -> bool {
        self.map.contains_key(value)
    }

    fn remove(&mut self, value: &Value) -> bool {
        self.map.remove(value).is_some()
    }

    fn len(&self) -> usize {
        self.map.len()
    }

    fn iter(&self) -> ValueIter<'_> {
        Box::new(self.map.entries().map(|(k, _)| k))
    }

    fn implementation(&self) -> Implementation {
        Implementation::HashSet
    }
}
