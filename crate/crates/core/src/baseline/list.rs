use std::sync::Arc;

use crate::collection::{check_index, CollectionError, Implementation, ListOps, ValueIter};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::value::Value;

/// elementData, size, modCount.
pub const ARRAY_LIST_LAYOUT: TypeLayout =
    TypeLayout::new("ArrayList", &[FieldKind::REF, FieldKind::INT, FieldKind::INT]);

pub const DEFAULT_LIST_CAPACITY: usize = 10;

/// Growable reference-array list. Primitive-tagged values are boxed on the
/// way in, which charges one box per stored primitive.
pub struct BaselineList {
    heap: Arc<Heap>,
    elements: Vec<Value>,
    capacity: usize,
    /// Capacity of the first array when none was given explicitly.
    lazy_default: bool,
    mod_count: u64,
}

impl BaselineList {
    pub fn new(heap: Arc<Heap>) -> Self {
        Self::with_capacity(heap, None)
    }

    /// An explicit capacity allocates the array eagerly (zero allocates nothing).
    pub fn with_capacity(heap: Arc<Heap>, initial_capacity: Option<usize>) -> Self {
        heap.alloc_object(Category::ArrayList, &ARRAY_LIST_LAYOUT);
        let capacity = initial_capacity.unwrap_or(0);
        if capacity > 0 {
            heap.alloc_array(Category::ArrayList, FieldKind::REF, capacity as u64);
        }
        BaselineList {
            heap,
            elements: Vec::with_capacity(capacity),
            capacity,
            lazy_default: initial_capacity.is_none(),
            mod_count: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn ensure_room(&mut self) {
        let needed = self.elements.len() + 1;
        if needed <= self.capacity {
            return;
        }
        let grown = if self.capacity == 0 && self.lazy_default {
            DEFAULT_LIST_CAPACITY
        } else {
            self.capacity + (self.capacity >> 1)
        };
        self.capacity = grown.max(needed);
        self.heap.alloc_array(Category::ArrayList, FieldKind::REF, self.capacity as u64);
    }

    fn boxed(&self, value: Value) -> Value {
        if value.is_primitive() {
            self.heap.alloc_box(value.tag());
        }
        value
    }

    /// Appends an element that is already boxed, e.g. when a replacement
    /// moves its contents into this list.
    pub fn push_moved(&mut self, value: Value) {
        self.ensure_room();
        self.elements.push(value);
        self.mod_count += 1;
    }
}

impl ListOps for BaselineList {
    fn add(&mut self, value: Value) {
        let value = self.boxed(value);
        self.push_moved(value);
    }

    fn get_at(&self, index: usize) -> Result<Value, CollectionError> {
        check_index(index, self.elements.len())?;
        Ok(self.elements[index])
    }

    fn set_at(&mut self, index: usize, value: Value) -> Result<Value, CollectionError> {
        check_index(index, self.elements.len())?;
        let value = self.boxed(value);
        Ok(std::mem::replace(&mut self.elements[index], value))
    }

    fn remove_at(&mut self, index: usize) -> Result<Value, CollectionError> {
        check_index(index, self.elements.len())?;
        self.mod_count += 1;
        Ok(self.elements.remove(index))
    }

    fn len(&self) -> usize {
        self.elements.len()
    }

    fn iter(&self) -> ValueIter<'_> {
        Box::new(self.elements.iter().copied())
    }

    fn implementation(&self) -> Implementation {
        Implementation::ArrayList
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eleventh_add_grows_to_fifteen() {
        let heap = Arc::new(Heap::default());
        let mut l = BaselineList::new(heap.clone());
        assert_eq!(l.capacity(), 0);
        for i in 0..10 {
            l.add(Value::Object(i));
        }
        assert_eq!(l.capacity(), 10);
        l.add(Value::Object(10));
        assert_eq!(l.capacity(), 15);
        // object + 10-slot array + 15-slot array
        assert_eq!(heap.ledger().bytes(Category::ArrayList), 32 + 104 + 144);
    }

    #[test]
    fn primitive_adds_charge_boxes() {
        let heap = Arc::new(Heap::default());
        let mut l = BaselineList::new(heap.clone());
        l.add(Value::Int(7));
        assert_eq!(heap.ledger().bytes(Category::ElementData), 24);
        l.add(Value::Object(1));
        assert_eq!(heap.ledger().count(Category::ElementData), 1);
        l.set_at(1, Value::Long(2)).unwrap();
        assert_eq!(heap.ledger().bytes(Category::ElementData), 48);
    }

    #[test]
    fn index_errors() {
        let mut l = BaselineList::new(Arc::new(Heap::default()));
        assert_eq!(l.get_at(0), Err(CollectionError::IndexOutOfBounds { index: 0, len: 0 }));
        l.add(Value::Null);
        assert!(l.set_at(1, Value::Null).is_err());
        assert_eq!(l.remove_at(0), Ok(Value::Null));
        assert!(l.remove_at(0).is_err());
    }

    #[test]
    fn explicit_capacity_is_eager() {
        let heap = Arc::new(Heap::default());
        let mut l = BaselineList::with_capacity(heap.clone(), Some(0));
        assert_eq!(heap.ledger().bytes(Category::ArrayList), 32);
        l.add(Value::Null);
        assert_eq!(l.capacity(), 1);
        l.add(Value::Null);
        assert_eq!(l.capacity(), 2);
        let three = BaselineList::with_capacity(heap.clone(), Some(3));
        assert_eq!(three.capacity(), 3);
    }
}
