//! Replacement implementations. Every type is observably equivalent to the
//! baseline it replaces; fixed-size and primitive variants switch to a
//! baseline fallback once their envelope is exceeded.

mod economic;
mod fixed;
mod open_set;
mod primitive_list;

pub use economic::{EconomicMap, ECONOMIC_INITIAL_CAPACITY, ECONOMIC_LAYOUT, ECONOMIC_LINEAR_SCAN_LIMIT};
pub use fixed::{
    fixed_list_layout, fixed_map_layout, fixed_set_layout, EmptyList, EmptyMap, EmptySet, FixedList, FixedMap,
    FixedSet, SingletonList, SingletonMap, SingletonSet, Size2List, Size2Map, Size2Set,
};
pub use open_set::{OpenSet, OPEN_SET_INITIAL_CAPACITY, OPEN_SET_LAYOUT};
pub use primitive_list::{PrimitiveList, PRIMITIVE_LIST_LAYOUT};

use crate::cost::{FieldKind, TypeLayout};

/// The state byte of fixed-size replacements. `Fallback` is absorbing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum FallbackState {
    Empty = 0,
    Cached = 1,
    Fallback = 2,
}

/// Entry record materialized by entry-set iteration over entry-free maps.
pub const TRANSIENT_ENTRY_LAYOUT: TypeLayout = TypeLayout::new("Entry", &[FieldKind::REF, FieldKind::REF]);
