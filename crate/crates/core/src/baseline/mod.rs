//! Models of the original collection types.

mod list;
mod map;
mod set;

pub use list::{BaselineList, ARRAY_LIST_LAYOUT, DEFAULT_LIST_CAPACITY};
pub use map::{
    BaselineMap, MapOptions, DEFAULT_LOAD_FACTOR, DEFAULT_TABLE_SIZE, HASH_MAP_LAYOUT, LINKED_HASH_MAP_LAYOUT,
    LINKED_NODE_LAYOUT, NODE_LAYOUT,
};
pub use set::{BaselineSet, HASH_SET_LAYOUT};

pub(crate) use map::table_size_for;
