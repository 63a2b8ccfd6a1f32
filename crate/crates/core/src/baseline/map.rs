use std::sync::Arc;

use crate::collection::{EntryIter, Implementation, MapOps};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::value::{spread, Value};

/// table, size, threshold, mod count, and the three cached views.
pub const HASH_MAP_LAYOUT: TypeLayout = TypeLayout::new(
    "HashMap",
    &[FieldKind::REF, FieldKind::INT, FieldKind::INT, FieldKind::INT, FieldKind::REF, FieldKind::REF, FieldKind::REF],
);

/// The map fields plus head, tail and the access-order flag.
pub const LINKED_HASH_MAP_LAYOUT: TypeLayout = TypeLayout::new(
    "LinkedHashMap",
    &[
        FieldKind::REF,
        FieldKind::INT,
        FieldKind::INT,
        FieldKind::INT,
        FieldKind::REF,
        FieldKind::REF,
        FieldKind::REF,
        FieldKind::REF,
        FieldKind::REF,
        FieldKind::BOOLEAN,
    ],
);

/// hash, key, value, next.
pub const NODE_LAYOUT: TypeLayout =
    TypeLayout::new("HashMap$Node", &[FieldKind::INT, FieldKind::REF, FieldKind::REF, FieldKind::REF]);

/// A node plus the before/after links.
pub const LINKED_NODE_LAYOUT: TypeLayout = TypeLayout::new(
    "LinkedHashMap$Entry",
    &[FieldKind::INT, FieldKind::REF, FieldKind::REF, FieldKind::REF, FieldKind::REF, FieldKind::REF],
);

pub const DEFAULT_TABLE_SIZE: usize = 16;
pub const DEFAULT_LOAD_FACTOR: f64 = 0.75;

type NodeId = u32;

#[derive(Clone, Debug)]
struct Node {
    hash: i32,
    key: Value,
    value: Value,
    next: Option<NodeId>,
    before: Option<NodeId>,
    after: Option<NodeId>,
}

/// Construction options; the defaults match `new HashMap<>()`.
#[derive(Clone, Copy, Debug)]
pub struct MapOptions {
    pub linked: bool,
    pub category: Category,
    pub initial_capacity: Option<usize>,
}

impl MapOptions {
    pub fn plain() -> Self {
        MapOptions { linked: false, category: Category::HashMap, initial_capacity: None }
    }

    pub fn linked() -> Self {
        MapOptions { linked: true, category: Category::LinkedHashMap, initial_capacity: None }
    }

    pub fn with_capacity(mut self, capacity: Option<usize>) -> Self {
        self.initial_capacity = capacity;
        self
    }

    pub fn charged_to(mut self, category: Category) -> Self {
        self.category = category;
        self
    }
}

/// Entry-chained hash map. With `linked`, nodes also form a doubly linked
/// list in insertion order and iteration follows it.
///
/// The bucket table is allocated on the first insert and doubles whenever the
/// size exceeds `capacity * load_factor`. Chains are never tree-ified.
pub struct BaselineMap {
    heap: Arc<Heap>,
    category: Category,
    linked: bool,
    load_factor: f64,
    initial_table: usize,
    table: Option<Vec<Option<NodeId>>>,
    nodes: Vec<Option<Node>>,
    free: Vec<NodeId>,
    size: usize,
    threshold: usize,
    mod_count: u64,
    head: Option<NodeId>,
    tail: Option<NodeId>,
}

/// `tableSizeFor`: the next power of two at or above `n`, at least 1.
pub(crate) fn table_size_for(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

impl BaselineMap {
    pub fn new(heap: Arc<Heap>) -> Self {
        Self::with_options(heap, MapOptions::plain())
    }

    pub fn new_linked(heap: Arc<Heap>) -> Self {
        Self::with_options(heap, MapOptions::linked())
    }

    pub fn with_options(heap: Arc<Heap>, options: MapOptions) -> Self {
        let layout = if options.linked { &LINKED_HASH_MAP_LAYOUT } else { &HASH_MAP_LAYOUT };
        heap.alloc_object(options.category, layout);
        BaselineMap {
            heap,
            category: options.category,
            linked: options.linked,
            load_factor: DEFAULT_LOAD_FACTOR,
            initial_table: options.initial_capacity.map_or(DEFAULT_TABLE_SIZE, table_size_for),
            table: None,
            nodes: Vec::new(),
            free: Vec::new(),
            size: 0,
            threshold: 0,
            mod_count: 0,
            head: None,
            tail: None,
        }
    }

    pub fn is_linked(&self) -> bool {
        self.linked
    }

    /// Number of bucket slots, 0 before the first insert.
    pub fn table_len(&self) -> usize {
        self.table.as_ref().map_or(0, Vec::len)
    }

    /// Number of non-empty bucket slots.
    pub fn occupied_slots(&self) -> usize {
        self.table.as_ref().map_or(0, |t| t.iter().filter(|s| s.is_some()).count())
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn mod_count(&self) -> u64 {
        self.mod_count
    }

    pub fn contains_key(&self, key: &Value) -> bool {
        self.find(key).is_some()
    }

    fn node(&self, id: NodeId) -> &Node {
        self.nodes[id as usize].as_ref().expect("live node")
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node {
        self.nodes[id as usize].as_mut().expect("live node")
    }

    fn bucket_of(hash: i32, table_len: usize) -> usize {
        spread(hash) as usize & (table_len - 1)
    }

    fn find(&self, key: &Value) -> Option<NodeId> {
        let table = self.table.as_ref()?;
        let hash = key.hash_code();
        let mut cur = table[Self::bucket_of(hash, table.len())];
        while let Some(id) = cur {
            let n = self.node(id);
            if n.hash == hash && n.key == *key {
                return Some(id);
            }
            cur = n.next;
        }
        None
    }

    fn allocate_table(&mut self, len: usize) -> Vec<Option<NodeId>> {
        self.heap.alloc_array(self.category, FieldKind::REF, len as u64);
        self.threshold = (len as f64 * self.load_factor) as usize;
        vec![None; len]
    }

    fn new_node(&mut self, node: Node) -> NodeId {
        let layout = if self.linked { &LINKED_NODE_LAYOUT } else { &NODE_LAYOUT };
        self.heap.alloc_object(self.category, layout);
        match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = Some(node);
                id
            }
            None => {
                self.nodes.push(Some(node));
                (self.nodes.len() - 1) as NodeId
            }
        }
    }

    /// Doubles the table, keeping each chain's relative order.
    fn resize(&mut self) {
        let old = self.table.take().expect("resize after allocation");
        let new_len = old.len() * 2;
        let mut table = self.allocate_table(new_len);
        let mut tails: Vec<Option<NodeId>> = vec![None; new_len];
        for head in old {
            let mut cur = head;
            while let Some(id) = cur {
                let (hash, next) = {
                    let n = self.node(id);
                    (n.hash, n.next)
                };
                let b = Self::bucket_of(hash, new_len);
                self.node_mut(id).next = None;
                match tails[b] {
                    Some(t) => self.node_mut(t).next = Some(id),
                    None => table[b] = Some(id),
                }
                tails[b] = Some(id);
                cur = next;
            }
        }
        self.table = Some(table);
    }

    fn link_last(&mut self, id: NodeId) {
        self.node_mut(id).before = self.tail;
        match self.tail {
            Some(t) => self.node_mut(t).after = Some(id),
            None => self.head = Some(id),
        }
        self.tail = Some(id);
    }

    fn unlink(&mut self, id: NodeId) {
        let (before, after) = {
            let n = self.node(id);
            (n.before, n.after)
        };
        match before {
            Some(b) => self.node_mut(b).after = after,
            None => self.head = after,
        }
        match after {
            Some(a) => self.node_mut(a).before = before,
            None => self.tail = before,
        }
    }

    fn node_ids(&self) -> Vec<NodeId> {
        let mut ids = Vec::with_capacity(self.size);
        if self.linked {
            let mut cur = self.head;
            while let Some(id) = cur {
                ids.push(id);
                cur = self.node(id).after;
            }
        } else if let Some(table) = &self.table {
            for head in table {
                let mut cur = *head;
                while let Some(id) = cur {
                    ids.push(id);
                    cur = self.node(id).next;
                }
            }
        }
        ids
    }

    /// Keys in iteration order.
    pub fn keys(&self) -> Vec<Value> {
        self.node_ids().into_iter().map(|id| self.node(id).key).collect()
    }
}

impl MapOps for BaselineMap {
    fn put(&mut self, key: Value, value: Value) -> Option<Value> {
        if self.table.is_none() {
            let len = self.initial_table;
            self.table = Some(self.allocate_table(len));
        }
        if let Some(id) = self.find(&key) {
            return Some(std::mem::replace(&mut self.node_mut(id).value, value));
        }
        let hash = key.hash_code();
        let id = self.new_node(Node { hash, key, value, next: None, before: None, after: None });
        let table_len = self.table_len();
        let b = Self::bucket_of(hash, table_len);
        let head = self.table.as_ref().expect("allocated above")[b];
        match head {
            None => self.table.as_mut().expect("allocated above")[b] = Some(id),
            Some(mut cur) => {
                while let Some(next) = self.node(cur).next {
                    cur = next;
                }
                self.node_mut(cur).next = Some(id);
            }
        }
        if self.linked {
            self.link_last(id);
        }
        self.size += 1;
        self.mod_count += 1;
        if self.size > self.threshold {
            self.resize();
        }
        None
    }

    fn get(&self, key: &Value) -> Option<Value> {
        self.find(key).map(|id| self.node(id).value)
    }

    fn remove(&mut self, key: &Value) -> Option<Value> {
        let table_len = self.table_len();
        if table_len == 0 {
            return None;
        }
        let hash = key.hash_code();
        let b = Self::bucket_of(hash, table_len);
        let mut prev: Option<NodeId> = None;
        let mut cur = self.table.as_ref().expect("non-empty table")[b];
        while let Some(id) = cur {
            let (matches, next) = {
                let n = self.node(id);
                (n.hash == hash && n.key == *key, n.next)
            };
            if matches {
                match prev {
                    Some(p) => self.node_mut(p).next = next,
                    None => self.table.as_mut().expect("non-empty table")[b] = next,
                }
                if self.linked {
                    self.unlink(id);
                }
                let node = self.nodes[id as usize].take().expect("live node");
                self.free.push(id);
                self.size -= 1;
                self.mod_count += 1;
                return Some(node.value);
            }
            prev = Some(id);
            cur = next;
        }
        None
    }

    fn len(&self) -> usize {
        self.size
    }

    fn entries(&self) -> EntryIter<'_> {
        Box::new(self.node_ids().into_iter().map(move |id| {
            let n = self.node(id);
            (n.key, n.value)
        }))
    }

    fn implementation(&self) -> Implementation {
        if self.linked {
            Implementation::LinkedHashMap
        } else {
            Implementation::HashMap
        }
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
    fn first_insert_allocates_sixteen_slots() {
        let heap = heap();
        let mut m = BaselineMap::new(heap.clone());
        assert_eq!(m.table_len(), 0);
        assert_eq!(heap.ledger().bytes(Category::HashMap), 64);
        assert_eq!(m.put(Value::Object(1), Value::Object(2)), None);
        assert_eq!(m.table_len(), 16);
        assert_eq!(m.occupied_slots(), 1);
        assert_eq!(heap.ledger().bytes(Category::HashMap), 64 + 152 + 48);
    }

    #[test]
    fn thirteenth_insert_resizes_to_thirty_two() {
        let mut m = BaselineMap::new(heap());
        for i in 0..12 {
            m.put(Value::Int(i), Value::Int(i));
        }
        assert_eq!((m.table_len(), m.threshold()), (16, 12));
        m.put(Value::Int(12), Value::Int(12));
        assert_eq!((m.table_len(), m.threshold()), (32, 24));
        for i in 0..13 {
            assert_eq!(m.get(&Value::Int(i)), Some(Value::Int(i)));
        }
    }

    #[test]
    fn overwrite_returns_previous_and_keeps_size() {
        let mut m = BaselineMap::new(heap());
        assert_eq!(m.put(Value::Null, Value::Int(1)), None);
        assert_eq!(m.put(Value::Null, Value::Int(2)), Some(Value::Int(1)));
        assert_eq!(m.len(), 1);
        assert_eq!(m.get(&Value::Null), Some(Value::Int(2)));
        assert_eq!(m.remove(&Value::Null), Some(Value::Int(2)));
        assert_eq!(m.remove(&Value::Null), None);
        assert!(m.is_empty());
    }

    #[test]
    fn collisions_chain_and_unlink() {
        // Int(0) and Int(16 << 16 ^ ..) share a bucket; build keys with equal low bits after spreading
        let mut m = BaselineMap::new(heap());
        let keys: Vec<Value> = (0..6).map(|i| Value::Int(i * 16)).collect();
        for k in &keys {
            m.put(*k, *k);
        }
        assert!(m.occupied_slots() < keys.len());
        assert_eq!(m.remove(&keys[2]), Some(keys[2]));
        for (i, k) in keys.iter().enumerate() {
            assert_eq!(m.get(k).is_some(), i != 2);
        }
    }

    #[test]
    fn linked_iteration_follows_insertion_order() {
        let mut m = BaselineMap::new_linked(heap());
        for k in [5, 1, 9, 3] {
            m.put(Value::Int(k), Value::Null);
        }
        m.put(Value::Int(1), Value::Int(0));
        m.remove(&Value::Int(9));
        m.put(Value::Int(9), Value::Null);
        assert_eq!(m.keys(), [5, 1, 3, 9].map(Value::Int));
        assert_eq!(m.implementation(), Implementation::LinkedHashMap);
    }

    #[test]
    fn linked_nodes_cost_two_extra_references() {
        let c = LayoutConstants::default();
        assert_eq!(c.object_size(&HASH_MAP_LAYOUT), 64);
        assert_eq!(c.object_size(&LINKED_HASH_MAP_LAYOUT), 80);
        assert_eq!(c.object_size(&NODE_LAYOUT), 48);
        assert_eq!(c.object_size(&LINKED_NODE_LAYOUT), 64);
    }

    #[test]
    fn initial_capacity_rounds_to_power_of_two() {
        let mut m = BaselineMap::with_options(heap(), MapOptions::plain().with_capacity(Some(5)));
        m.put(Value::Int(1), Value::Int(1));
        assert_eq!(m.table_len(), 8);
        let mut z = BaselineMap::with_options(heap(), MapOptions::plain().with_capacity(Some(0)));
        z.put(Value::Int(1), Value::Int(1));
        z.put(Value::Int(2), Value::Int(2));
        assert_eq!(z.len(), 2);
        assert_eq!(z.table_len(), 4);
    }
}
