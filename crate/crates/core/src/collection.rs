//! Interfaces shared by baseline and replacement collections.

use std::fmt;

use thiserror::Error;

use crate::profile::{DsKind, ElementTypeTag};
use crate::value::Value;

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum CollectionError {
    #[error("index {index} out of range for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
}

pub type EntryIter<'a> = Box<dyn Iterator<Item = (Value, Value)> + 'a>;
pub type ValueIter<'a> = Box<dyn Iterator<Item = Value> + 'a>;

/// Map operations with `java.util.Map` semantics: `put` and `remove` return
/// the previous mapping, `Null` is a valid key and value.
pub trait MapOps: Send {
    fn put(&mut self, key: Value, value: Value) -> Option<Value>;
    fn get(&self, key: &Value) -> Option<Value>;
    fn remove(&mut self, key: &Value) -> Option<Value>;
    fn len(&self) -> usize;
    /// Iterates the entry set. Every step exposes one entry.
    fn entries(&self) -> EntryIter<'_>;
    fn implementation(&self) -> Implementation;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether a replacement switched to its fallback. Always false for
    /// baselines.
    fn fell_back(&self) -> bool {
        false
    }
}

pub trait SetOps: Send {
    /// Returns true if the element was not yet present.
    fn add(&mut self, value: Value) -> bool;
    fn contains(&self, value: &Value) -> bool;
    fn remove(&mut self, value: &Value) -> bool;
    fn len(&self) -> usize;
    fn iter(&self) -> ValueIter<'_>;
    fn implementation(&self) -> Implementation;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fell_back(&self) -> bool {
        false
    }
}

pub trait ListOps: Send {
    fn add(&mut self, value: Value);
    fn get_at(&self, index: usize) -> Result<Value, CollectionError>;
    /// Replaces the element at `index`, returning the old one.
    fn set_at(&mut self, index: usize, value: Value) -> Result<Value, CollectionError>;
    fn remove_at(&mut self, index: usize) -> Result<Value, CollectionError>;
    fn len(&self) -> usize;
    fn iter(&self) -> ValueIter<'_>;
    fn implementation(&self) -> Implementation;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fell_back(&self) -> bool {
        false
    }
}

pub(crate) fn check_index(index: usize, len: usize) -> Result<(), CollectionError> {
    if index < len {
        Ok(())
    } else {
        Err(CollectionError::IndexOutOfBounds { index, len })
    }
}

/// The concrete type behind a collection instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Implementation {
    HashMap,
    LinkedHashMap,
    HashSet,
    ArrayList,
    EmptyHashMap,
    SingletonHashMap,
    Size2HashMap,
    EconomicHashMap,
    EmptyLinkedHashMap,
    SingletonLinkedHashMap,
    Size2LinkedHashMap,
    EconomicLinkedHashMap,
    EmptyHashSet,
    SingletonHashSet,
    Size2HashSet,
    MemoryEfficientHashSet,
    EmptyArrayList,
    SingletonArrayList,
    Size2ArrayList,
    PrimitiveArrayList(ElementTypeTag),
}

impl Implementation {
    pub fn baseline(kind: DsKind) -> Self {
        match kind {
            DsKind::HashMap => Implementation::HashMap,
            DsKind::LinkedHashMap => Implementation::LinkedHashMap,
            DsKind::HashSet => Implementation::HashSet,
            DsKind::ArrayList => Implementation::ArrayList,
        }
    }

    pub fn is_replacement(self) -> bool {
        !matches!(
            self,
            Implementation::HashMap
                | Implementation::LinkedHashMap
                | Implementation::HashSet
                | Implementation::ArrayList
        )
    }

    /// The collection family this type belongs to.
    pub fn kind(self) -> DsKind {
        use Implementation::*;
        match self {
            HashMap | EmptyHashMap | SingletonHashMap | Size2HashMap | EconomicHashMap => DsKind::HashMap,
            LinkedHashMap
            | EmptyLinkedHashMap
            | SingletonLinkedHashMap
            | Size2LinkedHashMap
            | EconomicLinkedHashMap => DsKind::LinkedHashMap,
            HashSet | EmptyHashSet | SingletonHashSet | Size2HashSet | MemoryEfficientHashSet => DsKind::HashSet,
            ArrayList | EmptyArrayList | SingletonArrayList | Size2ArrayList | PrimitiveArrayList(_) => {
                DsKind::ArrayList
            }
        }
    }

    pub fn name(self) -> String {
        use Implementation::*;
        let s = match self {
            HashMap => "HashMap",
            LinkedHashMap => "LinkedHashMap",
            HashSet => "HashSet",
            ArrayList => "ArrayList",
            EmptyHashMap => "EmptyHashMap",
            SingletonHashMap => "SingletonHashMap",
            Size2HashMap => "Size2HashMap",
            EconomicHashMap => "EconomicHashMap",
            EmptyLinkedHashMap => "EmptyLinkedHashMap",
            SingletonLinkedHashMap => "SingletonLinkedHashMap",
            Size2LinkedHashMap => "Size2LinkedHashMap",
            EconomicLinkedHashMap => "EconomicLinkedHashMap",
            EmptyHashSet => "EmptyHashSet",
            SingletonHashSet => "SingletonHashSet",
            Size2HashSet => "Size2HashSet",
            MemoryEfficientHashSet => "MemoryEfficientHashSet",
            EmptyArrayList => "EmptyArrayList",
            SingletonArrayList => "SingletonArrayList",
            Size2ArrayList => "Size2ArrayList",
            PrimitiveArrayList(tag) => return format!("{}ArrayList", tag.java_name()),
        };
        s.to_string()
    }
}

impl fmt::Display for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
