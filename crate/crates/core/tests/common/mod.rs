//! Differential drivers shared by the property and acceptance suites.
#![allow(dead_code)]

use std::sync::Arc;

use collspec::engine::{create_list, create_map, create_set, ReplacementDecision};
use collspec::{DsKind, ElementTypeTag, Heap, MapOps, SetOps, Value};
use rand::Rng;

/// Small key domain with hash collisions across types: `Int(1)`, `Long(1)`
/// and `Byte(1)` share a hash code but are distinct keys.
pub const KEYS: [Value; 11] = [
    Value::Null,
    Value::Int(0),
    Value::Int(1),
    Value::Int(2),
    Value::Long(1),
    Value::Long(2),
    Value::Byte(1),
    Value::Object(1),
    Value::Object(2),
    Value::Object(3),
    Value::Int(-7),
];

pub const CAPACITIES: [Option<usize>; 6] = [None, None, Some(0), Some(1), Some(3), Some(40)];

pub const TAGS: [ElementTypeTag; 9] = [
    ElementTypeTag::Byte,
    ElementTypeTag::Short,
    ElementTypeTag::Int,
    ElementTypeTag::Long,
    ElementTypeTag::Float,
    ElementTypeTag::Double,
    ElementTypeTag::Char,
    ElementTypeTag::Boolean,
    ElementTypeTag::Object,
];

/// Every specialized type, as (kind, decision).
pub fn specialized_types() -> Vec<(DsKind, ReplacementDecision)> {
    use ReplacementDecision::*;
    let mut out = Vec::new();
    for kind in [DsKind::HashMap, DsKind::LinkedHashMap] {
        for d in [Empty, Singleton, Size2, Economic] {
            out.push((kind, d));
        }
    }
    for d in [Empty, Singleton, Size2, OpenSet] {
        out.push((DsKind::HashSet, d));
    }
    for d in [Empty, Singleton, Size2] {
        out.push((DsKind::ArrayList, d));
    }
    for tag in TAGS.into_iter().filter(|t| t.is_primitive()) {
        out.push((DsKind::ArrayList, PrimitiveList(tag)));
    }
    out
}

pub fn value_of(tag: ElementTypeTag, rng: &mut impl Rng) -> Value {
    match tag {
        ElementTypeTag::Byte => Value::Byte(rng.gen_range(-3..3)),
        ElementTypeTag::Short => Value::Short(rng.gen_range(-3..3)),
        ElementTypeTag::Int => Value::Int(rng.gen_range(-3..3)),
        ElementTypeTag::Long => Value::Long(rng.gen_range(-3..3)),
        ElementTypeTag::Float => Value::float([0.0, -0.0, 1.5, f32::NAN][rng.gen_range(0..4)]),
        ElementTypeTag::Double => Value::double([0.0, -0.0, 2.5, f64::NAN][rng.gen_range(0..4)]),
        ElementTypeTag::Char => Value::Char(rng.gen_range(0..4)),
        ElementTypeTag::Boolean => Value::Boolean(rng.gen()),
        ElementTypeTag::Object => {
            if rng.gen_ratio(1, 5) {
                Value::Null
            } else {
                Value::Object(rng.gen_range(0..4))
            }
        }
    }
}

fn check<T: PartialEq + std::fmt::Debug>(what: &str, step: usize, base: T, spec: T) -> Result<(), String> {
    if base == spec {
        Ok(())
    } else {
        Err(format!("step {step}: {what}: baseline {base:?}, replacement {spec:?}"))
    }
}

fn entries_of(m: &dyn MapOps, ordered: bool) -> Vec<(Value, Value)> {
    let mut e: Vec<_> = m.entries().collect();
    if !ordered {
        e.sort();
    }
    e
}

/// One random operation sequence against the baseline and the replacement
/// of `kind`. Any observable divergence is an error.
pub fn map_sequence(
    rng: &mut impl Rng,
    kind: DsKind,
    decision: ReplacementDecision,
    heap: &Arc<Heap>,
) -> Result<(), String> {
    let cap = CAPACITIES[rng.gen_range(0..CAPACITIES.len())];
    let mut base = create_map(heap.clone(), kind, ReplacementDecision::Keep, cap).unwrap();
    let mut spec = create_map(heap.clone(), kind, decision, cap).unwrap();
    let domain = rng.gen_range(1..=KEYS.len());
    let ordered = kind == DsKind::LinkedHashMap;
    let steps = rng.gen_range(0..=28);
    for step in 0..steps {
        let key = KEYS[rng.gen_range(0..domain)];
        match rng.gen_range(0..10) {
            0..=3 => {
                let v = Value::Object(rng.gen_range(100..104));
                check("put", step, base.put(key, v), spec.put(key, v))?
            }
            4 | 5 => check("get", step, base.get(&key), spec.get(&key))?,
            6 | 7 => check("remove", step, base.remove(&key), spec.remove(&key))?,
            _ => check("entries", step, entries_of(&*base, ordered), entries_of(&*spec, ordered))?,
        }
        check("len", step, base.len(), spec.len())?;
    }
    for key in &KEYS {
        check("final get", steps, base.get(key), spec.get(key))?;
    }
    check("final entries", steps, entries_of(&*base, ordered), entries_of(&*spec, ordered))
}

fn members_of(s: &dyn SetOps) -> Vec<Value> {
    let mut v: Vec<_> = s.iter().collect();
    v.sort();
    v
}

pub fn set_sequence(rng: &mut impl Rng, decision: ReplacementDecision, heap: &Arc<Heap>) -> Result<(), String> {
    let cap = CAPACITIES[rng.gen_range(0..CAPACITIES.len())];
    let mut base = create_set(heap.clone(), ReplacementDecision::Keep, cap).unwrap();
    let mut spec = create_set(heap.clone(), decision, cap).unwrap();
    let domain = rng.gen_range(1..=KEYS.len());
    // large domains push open addressing through growth and tombstone purges
    let wide = rng.gen_ratio(1, 8);
    let steps = rng.gen_range(0..=if wide { 80 } else { 28 });
    for step in 0..steps {
        let v = if wide { Value::Int(rng.gen_range(0..40)) } else { KEYS[rng.gen_range(0..domain)] };
        match rng.gen_range(0..10) {
            0..=3 => check("add", step, base.add(v), spec.add(v))?,
            4 | 5 => check("contains", step, base.contains(&v), spec.contains(&v))?,
            6 | 7 => check("remove", step, base.remove(&v), spec.remove(&v))?,
            _ => check("iter", step, members_of(&*base), members_of(&*spec))?,
        }
        check("len", step, base.len(), spec.len())?;
    }
    for v in &KEYS {
        check("final contains", steps, base.contains(v), spec.contains(v))?;
    }
    check("final iter", steps, members_of(&*base), members_of(&*spec))
}

pub fn list_sequence(rng: &mut impl Rng, decision: ReplacementDecision, heap: &Arc<Heap>) -> Result<(), String> {
    let cap = CAPACITIES[rng.gen_range(0..CAPACITIES.len())];
    let mut base = create_list(heap.clone(), ReplacementDecision::Keep, cap).unwrap();
    let mut spec = create_list(heap.clone(), decision, cap).unwrap();
    let home = match decision {
        ReplacementDecision::PrimitiveList(tag) => tag,
        _ => TAGS[rng.gen_range(0..TAGS.len())],
    };
    // mostly the home tag, so primitive lists stay specialized for a while
    fn element(rng: &mut impl Rng, home: ElementTypeTag) -> Value {
        let tag = if rng.gen_ratio(9, 10) { home } else { TAGS[rng.gen_range(0..TAGS.len())] };
        value_of(tag, rng)
    }
    let steps = rng.gen_range(0..=28);
    for step in 0..steps {
        let index = rng.gen_range(0..=base.len());
        match rng.gen_range(0..10) {
            0..=3 => {
                let v = element(rng, home);
                base.add(v);
                spec.add(v);
            }
            4 | 5 => check("get_at", step, base.get_at(index), spec.get_at(index))?,
            6 => {
                let v = element(rng, home);
                check("set_at", step, base.set_at(index, v), spec.set_at(index, v))?
            }
            7 | 8 => check("remove_at", step, base.remove_at(index), spec.remove_at(index))?,
            _ => check("iter", step, base.iter().collect::<Vec<_>>(), spec.iter().collect::<Vec<_>>())?,
        }
        check("len", step, base.len(), spec.len())?;
    }
    check("final iter", steps, base.iter().collect::<Vec<_>>(), spec.iter().collect::<Vec<_>>())
}

pub fn sequence(
    rng: &mut impl Rng,
    kind: DsKind,
    decision: ReplacementDecision,
    heap: &Arc<Heap>,
) -> Result<(), String> {
    match kind {
        DsKind::HashMap | DsKind::LinkedHashMap => map_sequence(rng, kind, decision, heap),
        DsKind::HashSet => set_sequence(rng, decision, heap),
        DsKind::ArrayList => list_sequence(rng, decision, heap),
    }
}
