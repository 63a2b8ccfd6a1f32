use std::sync::Arc;

use crate::baseline::{BaselineList, DEFAULT_LIST_CAPACITY};
use crate::collection::{check_index, CollectionError, Implementation, ListOps, ValueIter};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::profile::ElementTypeTag;
use crate::value::Value;

/// storage array, size, fallback.
pub const PRIMITIVE_LIST_LAYOUT: TypeLayout =
    TypeLayout::new("PrimitiveArrayList", &[FieldKind::REF, FieldKind::INT, FieldKind::REF]);

/// List storing values of one primitive type unboxed.
///
/// Values come back equal to what was stored, not identical. The first
/// element of any other type moves everything into a boxed
/// [`BaselineList`] (re-boxing each element) and releases the storage.
pub struct PrimitiveList {
    heap: Arc<Heap>,
    tag: ElementTypeTag,
    initial_capacity: Option<usize>,
    capacity: usize,
    bits: Vec<u64>,
    fallback: Option<Box<BaselineList>>,
}

impl PrimitiveList {
    pub fn new(heap: Arc<Heap>, tag: ElementTypeTag, initial_capacity: Option<usize>) -> Self {
        assert!(tag.is_primitive(), "primitive lists need a primitive tag, got {tag}");
        heap.alloc_object(Category::ArrayList, &PRIMITIVE_LIST_LAYOUT);
        let capacity = initial_capacity.unwrap_or(0);
        if capacity > 0 {
            heap.alloc_array(Category::ArrayList, FieldKind::for_tag(tag), capacity as u64);
        }
        PrimitiveList { heap, tag, initial_capacity, capacity, bits: Vec::with_capacity(capacity), fallback: None }
    }

    pub fn tag(&self) -> ElementTypeTag {
        self.tag
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn accepts(&self, value: &Value) -> bool {
        value.is_primitive() && value.tag() == self.tag
    }

    fn value_at(&self, index: usize) -> Value {
        Value::from_primitive_bits(self.tag, self.bits[index]).expect("stored bits match the tag")
    }

    fn init_fallback(&mut self) -> &mut BaselineList {
        let mut list = BaselineList::with_capacity(self.heap.clone(), self.initial_capacity);
        for i in 0..self.bits.len() {
            list.add(self.value_at(i));
        }
        self.bits = Vec::new();
        self.capacity = 0;
        self.fallback.insert(Box::new(list))
    }

    fn ensure_room(&mut self) {
        let needed = self.bits.len() + 1;
        if needed <= self.capacity {
            return;
        }
        let grown = if self.capacity == 0 && self.initial_capacity.is_none() {
            DEFAULT_LIST_CAPACITY
        } else {
            self.capacity + (self.capacity >> 1)
        };
        self.capacity = grown.max(needed);
        self.heap.alloc_array(Category::ArrayList, FieldKind::for_tag(self.tag), self.capacity as u64);
    }
}

impl ListOps for PrimitiveList {
    fn add(&mut self, value: Value) {
        if self.fallback.is_none() && !self.accepts(&value) {
            self.init_fallback();
        }
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.add(value);
        }
        self.ensure_room();
        self.bits.push(value.primitive_bits().expect("accepted values are primitive"));
    }

    fn get_at(&self, index: usize) -> Result<Value, CollectionError> {
        if let Some(fb) = &self.fallback {
            return fb.get_at(index);
        }
        check_index(index, self.bits.len())?;
        Ok(self.value_at(index))
    }

    fn set_at(&mut self, index: usize, value: Value) -> Result<Value, CollectionError> {
        if self.fallback.is_none() {
            check_index(index, self.bits.len())?;
            if !self.accepts(&value) {
                self.init_fallback();
            }
        }
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.set_at(index, value);
        }
        let old = self.value_at(index);
        self.bits[index] = value.primitive_bits().expect("accepted values are primitive");
        Ok(old)
    }

    fn remove_at(&mut self, index: usize) -> Result<Value, CollectionError> {
        if let Some(fb) = self.fallback.as_deref_mut() {
            return fb.remove_at(index);
        }
        check_index(index, self.bits.len())?;
        let old = self.value_at(index);
        self.bits.remove(index);
        Ok(old)
    }

    fn len(&self) -> usize {
        self.fallback.as_ref().map_or(self.bits.len(), |fb| fb.len())
    }

    fn iter(&self) -> ValueIter<'_> {
        match &self.fallback {
            Some(fb) => fb.iter(),
            None => Box::new((0..self.bits.len()).map(move |i| self.value_at(i))),
        }
    }

    fn implementation(&self) -> Implementation {
        Implementation::PrimitiveArrayList(self.tag)
    }

    fn fell_back(&self) -> bool {
        self.fallback.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ints_are_stored_unboxed() {
        let heap = Arc::new(Heap::default());
        let mut l = PrimitiveList::new(heap.clone(), ElementTypeTag::Int, None);
        for i in 0..3 {
            l.add(Value::Int(i));
        }
        let ledger = heap.ledger().snapshot();
        assert_eq!(ledger.count(Category::ElementData), 0);
        // object + one int array of 10
        assert_eq!(ledger.count(Category::ArrayList), 2);
        assert_eq!(ledger.bytes(Category::ArrayList), 40 + 64);
        assert_eq!(l.get_at(2), Ok(Value::Int(2)));
    }

    #[test]
    fn object_add_falls_back_and_reboxes() {
        let heap = Arc::new(Heap::default());
        let mut l = PrimitiveList::new(heap.clone(), ElementTypeTag::Int, None);
        l.add(Value::Int(1));
        l.add(Value::Int(2));
        l.add(Value::Object(9));
        assert!(l.fell_back());
        assert_eq!(heap.ledger().count(Category::ElementData), 2);
        assert_eq!(l.iter().collect::<Vec<_>>(), [Value::Int(1), Value::Int(2), Value::Object(9)]);
        assert_eq!(l.implementation().name(), "IntArrayList");
    }

    #[test]
    fn mismatched_set_at_falls_back_after_range_check() {
        let mut l = PrimitiveList::new(Arc::new(Heap::default()), ElementTypeTag::Double, None);
        assert!(l.set_at(0, Value::Null).is_err());
        assert!(!l.fell_back());
        l.add(Value::double(1.5));
        assert_eq!(l.set_at(0, Value::Null), Ok(Value::double(1.5)));
        assert!(l.fell_back());
        assert_eq!(l.get_at(0), Ok(Value::Null));
    }

    #[test]
    fn float_values_round_trip_by_value() {
        let mut l = PrimitiveList::new(Arc::new(Heap::default()), ElementTypeTag::Float, None);
        l.add(Value::float(f32::NAN));
        l.add(Value::float(-0.0));
        assert_eq!(l.get_at(0), Ok(Value::float(f32::NAN)));
        assert_eq!(l.get_at(1), Ok(Value::float(-0.0)));
    }
}
