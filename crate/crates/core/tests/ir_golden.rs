use std::fs;
use std::path::PathBuf;

use collspec::engine::{build_plan, PolicyConfig};
use collspec::ir::{apply_plan, IrGraph, NodeKind, TypeCatalog};
use collspec::profile;

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn rewritten() -> (IrGraph, IrGraph) {
    let store = profile::parse(&golden("foo_bar.dsprof.json")).unwrap();
    let plan = build_plan(&store, &PolicyConfig::default()).unwrap();
    let graph = IrGraph::parse(&golden("foo_bar.ir")).unwrap();
    let out = apply_plan(&graph, &plan, &TypeCatalog::standard()).unwrap();
    (graph, out)
}

#[test]
fn singleton_rewrite_matches_golden_dump() {
    let (_, out) = rewritten();
    out.validate().unwrap();
    assert_eq!(out.dump(), golden("foo_bar.expected.ir"));
}

#[test]
fn rewrite_touches_only_the_replaced_allocation() {
    let (before, after) = rewritten();
    assert_eq!(before.len(), after.len());
    let changed: Vec<_> = before.nodes().filter(|(id, n)| after.node(*id).unwrap() != *n).map(|(id, _)| id).collect();
    assert_eq!(changed, [3, 4, 5, 9]);
    for (id, n) in before.nodes() {
        let m = after.node(id).unwrap();
        assert_eq!((n.next, &n.uses), (m.next, &m.uses), "wiring of node {id}");
    }
    assert!(matches!(after.node(8).unwrap().kind, NodeKind::InvokeDirect(_)));
}

#[test]
fn applying_twice_is_idempotent() {
    let store = profile::parse(&golden("foo_bar.dsprof.json")).unwrap();
    let plan = build_plan(&store, &PolicyConfig::default()).unwrap();
    let (_, once) = rewritten();
    let twice = apply_plan(&once, &plan, &TypeCatalog::standard()).unwrap();
    assert_eq!(once, twice);
}
