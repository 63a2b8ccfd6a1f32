//! Deterministic byte accounting for the modeled heap.
//!
//! Object and array sizes follow a 64-bit managed-heap layout without
//! compressed references; every constant is configurable. Each modeled
//! allocation is charged to an [`AllocationLedger`] category, and the
//! ledger total is the run's "total allocated bytes".

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{DsKind, ElementTypeTag};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("layout constant {0} must be positive")]
    NonPositive(&'static str),
    #[error("alignment {0} is not a power of two")]
    Alignment(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutConstants {
    pub object_header_bytes: u64,
    pub array_header_bytes: u64,
    pub reference_bytes: u64,
    pub alignment_bytes: u64,
    pub byte_bytes: u64,
    pub boolean_bytes: u64,
    pub short_bytes: u64,
    pub char_bytes: u64,
    pub int_bytes: u64,
    pub float_bytes: u64,
    pub long_bytes: u64,
    pub double_bytes: u64,
}

impl Default for LayoutConstants {
    fn default() -> Self {
        LayoutConstants {
            object_header_bytes: 16,
            array_header_bytes: 24,
            reference_bytes: 8,
            alignment_bytes: 8,
            byte_bytes: 1,
            boolean_bytes: 1,
            short_bytes: 2,
            char_bytes: 2,
            int_bytes: 4,
            float_bytes: 4,
            long_bytes: 8,
            double_bytes: 8,
        }
    }
}

impl LayoutConstants {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let named = [
            ("object_header_bytes", self.object_header_bytes),
            ("array_header_bytes", self.array_header_bytes),
            ("reference_bytes", self.reference_bytes),
            ("alignment_bytes", self.alignment_bytes),
            ("byte_bytes", self.byte_bytes),
            ("boolean_bytes", self.boolean_bytes),
            ("short_bytes", self.short_bytes),
            ("char_bytes", self.char_bytes),
            ("int_bytes", self.int_bytes),
            ("float_bytes", self.float_bytes),
            ("long_bytes", self.long_bytes),
            ("double_bytes", self.double_bytes),
        ];
        if let Some((name, _)) = named.iter().find(|(_, v)| *v == 0) {
            return Err(LayoutError::NonPositive(name));
        }
        if !self.alignment_bytes.is_power_of_two() {
            return Err(LayoutError::Alignment(self.alignment_bytes));
        }
        Ok(())
    }

    pub fn width(&self, field: FieldKind) -> u64 {
        match field {
            FieldKind::Reference => self.reference_bytes,
            FieldKind::Primitive(tag) => self.primitive_width(tag),
        }
    }

    /// Width of a primitive slot; `OBJECT` is a reference.
    pub fn primitive_width(&self, tag: ElementTypeTag) -> u64 {
        match tag {
            ElementTypeTag::Byte => self.byte_bytes,
            ElementTypeTag::Boolean => self.boolean_bytes,
            ElementTypeTag::Short => self.short_bytes,
            ElementTypeTag::Char => self.char_bytes,
            ElementTypeTag::Int => self.int_bytes,
            ElementTypeTag::Float => self.float_bytes,
            ElementTypeTag::Long => self.long_bytes,
            ElementTypeTag::Double => self.double_bytes,
            ElementTypeTag::Object => self.reference_bytes,
        }
    }

    fn align(&self, n: u64) -> u64 {
        let a = self.alignment_bytes;
        n.div_ceil(a) * a
    }

    pub fn object_size(&self, layout: &TypeLayout) -> u64 {
        let fields: u64 = layout.fields.iter().map(|f| self.width(*f)).sum();
        self.align(self.object_header_bytes + fields)
    }

    pub fn array_size(&self, element: FieldKind, length: u64) -> u64 {
        self.align(self.array_header_bytes + length * self.width(element))
    }

    /// A boxed primitive: header plus the payload.
    pub fn box_size(&self, tag: ElementTypeTag) -> u64 {
        self.align(self.object_header_bytes + self.primitive_width(tag))
    }
}

/// A declared field: a reference or a primitive slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Reference,
    Primitive(ElementTypeTag),
}

impl FieldKind {
    pub const REF: FieldKind = FieldKind::Reference;
    pub const BYTE: FieldKind = FieldKind::Primitive(ElementTypeTag::Byte);
    pub const BOOLEAN: FieldKind = FieldKind::Primitive(ElementTypeTag::Boolean);
    pub const INT: FieldKind = FieldKind::Primitive(ElementTypeTag::Int);
    pub const FLOAT: FieldKind = FieldKind::Primitive(ElementTypeTag::Float);

    /// The storage slot kind for elements of `tag`.
    pub fn for_tag(tag: ElementTypeTag) -> FieldKind {
        if tag.is_primitive() {
            FieldKind::Primitive(tag)
        } else {
            FieldKind::Reference
        }
    }
}

/// The declared instance fields of a type. Replacement types list only their
/// own fields; nothing is inherited.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeLayout {
    pub name: Cow<'static, str>,
    pub fields: Cow<'static, [FieldKind]>,
}

impl TypeLayout {
    pub const fn new(name: &'static str, fields: &'static [FieldKind]) -> Self {
        TypeLayout { name: Cow::Borrowed(name), fields: Cow::Borrowed(fields) }
    }
}

pub fn object_size(layout: &TypeLayout, constants: &LayoutConstants) -> u64 {
    constants.object_size(layout)
}

pub fn array_size(element: FieldKind, length: u64, constants: &LayoutConstants) -> u64 {
    constants.array_size(element, length)
}

/// Ledger buckets. Collection categories cover the collection object and its
/// internal arrays and nodes; element payloads go to `ElementData`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Category {
    HashMap,
    LinkedHashMap,
    HashSet,
    ArrayList,
    ElementData,
    Other,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::HashMap,
        Category::LinkedHashMap,
        Category::HashSet,
        Category::ArrayList,
        Category::ElementData,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::HashMap => "HASH_MAP",
            Category::LinkedHashMap => "LINKED_HASH_MAP",
            Category::HashSet => "HASH_SET",
            Category::ArrayList => "ARRAY_LIST",
            Category::ElementData => "ELEMENT_DATA",
            Category::Other => "OTHER",
        }
    }
}

impl From<DsKind> for Category {
    fn from(kind: DsKind) -> Self {
        match kind {
            DsKind::HashMap => Category::HashMap,
            DsKind::LinkedHashMap => Category::LinkedHashMap,
            DsKind::HashSet => Category::HashSet,
            DsKind::ArrayList => Category::ArrayList,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Default)]
struct Tally {
    count: AtomicU64,
    bytes: AtomicU64,
}

/// Running totals per category. Charges are atomic increments.
#[derive(Debug, Default)]
pub struct AllocationLedger {
    tallies: [Tally; Category::ALL.len()],
}

impl AllocationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&self, category: Category, bytes: u64) {
        let t = &self.tallies[category as usize];
        t.count.fetch_add(1, Ordering::Relaxed);
        t.bytes.fetch_add(bytes, Ordering::Relaxed);
    }

    pub fn bytes(&self, category: Category) -> u64 {
        self.tallies[category as usize].bytes.load(Ordering::Relaxed)
    }

    pub fn count(&self, category: Category) -> u64 {
        self.tallies[category as usize].count.load(Ordering::Relaxed)
    }

    pub fn total_bytes(&self) -> u64 {
        Category::ALL.iter().map(|c| self.bytes(*c)).sum()
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        let categories = Category::ALL
            .iter()
            .map(|&c| (c, CategoryTotals { count: self.count(c), bytes: self.bytes(c) }))
            .collect::<BTreeMap<_, _>>();
        let overall = categories.values().map(|t| t.bytes).sum();
        LedgerSnapshot { overall, categories }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTotals {
    pub count: u64,
    pub bytes: u64,
}

/// Immutable copy of a ledger. Serializes as
/// `{"overall": n, "categories": {"HASH_MAP": {"count": c, "bytes": b}, ..}}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub overall: u64,
    pub categories: BTreeMap<Category, CategoryTotals>,
}

impl LedgerSnapshot {
    pub fn bytes(&self, category: Category) -> u64 {
        self.categories.get(&category).map_or(0, |t| t.bytes)
    }

    pub fn count(&self, category: Category) -> u64 {
        self.categories.get(&category).map_or(0, |t| t.count)
    }
}

/// The modeled heap shared by every collection of a run: layout constants
/// and the ledger that allocations are charged to.
#[derive(Debug, Default)]
pub struct Heap {
    constants: LayoutConstants,
    ledger: AllocationLedger,
}

impl Heap {
    pub fn new(constants: LayoutConstants) -> Result<Self, LayoutError> {
        constants.validate()?;
        Ok(Heap { constants, ledger: AllocationLedger::new() })
    }

    pub fn constants(&self) -> &LayoutConstants {
        &self.constants
    }

    pub fn ledger(&self) -> &AllocationLedger {
        &self.ledger
    }

    pub fn alloc_object(&self, category: Category, layout: &TypeLayout) -> u64 {
        let bytes = self.constants.object_size(layout);
        self.ledger.charge(category, bytes);
        bytes
    }

    pub fn alloc_array(&self, category: Category, element: FieldKind, length: u64) -> u64 {
        let bytes = self.constants.array_size(element, length);
        self.ledger.charge(category, bytes);
        bytes
    }

    /// Boxes a primitive element; charged as element data.
    pub fn alloc_box(&self, tag: ElementTypeTag) -> u64 {
        let bytes = self.constants.box_size(tag);
        self.ledger.charge(Category::ElementData, bytes);
        bytes
    }
}
