use std::collections::{BTreeMap, BTreeSet};

use super::{IrError, IrGraph, NodeId, NodeKind};
use crate::collection::Implementation;
use crate::engine::{ReplacementDecision, ReplacementPlan};
use crate::profile::{DsKind, ElementTypeTag};

/// Which replacement types may stand in for which originals, and the
/// constructor arities every type offers.
#[derive(Clone, Debug, Default)]
pub struct TypeCatalog {
    constructors: BTreeMap<String, BTreeSet<usize>>,
    replacements: BTreeSet<(String, String)>,
}

impl TypeCatalog {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn add_type(&mut self, name: &str, arities: &[usize]) -> &mut Self {
        self.constructors.entry(name.to_string()).or_default().extend(arities);
        self
    }

    pub fn add_replacement(&mut self, original: &str, replacement: &str) -> &mut Self {
        self.replacements.insert((original.to_string(), replacement.to_string()));
        self
    }

    pub fn allows(&self, original: &str, replacement: &str) -> bool {
        self.replacements.contains(&(original.to_string(), replacement.to_string()))
    }

    pub fn arities(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.constructors.get(name)
    }

    /// The collection types and their replacements. Every replacement
    /// offers exactly the constructors of its original.
    pub fn standard() -> Self {
        let mut c = Self::empty();
        let decisions = [
            ReplacementDecision::Empty,
            ReplacementDecision::Singleton,
            ReplacementDecision::Size2,
            ReplacementDecision::Economic,
            ReplacementDecision::OpenSet,
        ]
        .into_iter()
        .chain(ElementTypeTag::PRIMITIVES.map(ReplacementDecision::PrimitiveList));
        let arities: [(DsKind, &[usize]); 4] = [
            (DsKind::HashMap, &[0, 1, 2]),
            (DsKind::LinkedHashMap, &[0, 1, 2, 3]),
            (DsKind::HashSet, &[0, 1, 2]),
            (DsKind::ArrayList, &[0, 1]),
        ];
        let decisions: Vec<_> = decisions.collect();
        for (kind, a) in arities {
            c.add_type(kind.type_name(), a);
            for d in &decisions {
                if let Some(i) = d.implementation(kind) {
                    c.add_type(&i.name(), a);
                    c.add_replacement(kind.type_name(), &i.name());
                }
            }
        }
        c
    }
}

fn constructor_method(type_name: &str) -> String {
    format!("{type_name}.<init>")
}

/// Retypes allocation `alloc` to `replacement`, retargets its constructor
/// invocation, and turns direct calls on it into virtual calls. No nodes or
/// edges are added or removed.
pub fn rewrite_allocation(
    graph: &IrGraph,
    alloc: NodeId,
    replacement: &str,
    catalog: &TypeCatalog,
) -> Result<IrGraph, IrError> {
    let node = graph.node(alloc).ok_or(IrError::UnknownNode(alloc))?;
    let NodeKind::Alloc { type_name: original, .. } = &node.kind else {
        return Err(IrError::NotAnAllocation(alloc));
    };
    if !catalog.allows(original, replacement) {
        return Err(IrError::MissingCatalogEntry { original: original.clone(), replacement: replacement.into() });
    }
    let ctor = graph
        .nodes()
        .find(|(_, n)| matches!(n.kind, NodeKind::InvokeConstructor(_)) && n.uses.first() == Some(&alloc))
        .map(|(id, _)| id)
        .ok_or(IrError::NoConstructor(alloc))?;
    let arity = graph.node(ctor).expect("found above").uses.len() - 1;
    if !catalog.arities(replacement).is_some_and(|a| a.contains(&arity)) {
        return Err(IrError::ArityMismatch { replacement: replacement.into(), arity });
    }

    let mut out = graph.clone();
    if let Some(n) = out.node_mut(alloc) {
        if let NodeKind::Alloc { type_name, .. } = &mut n.kind {
            *type_name = replacement.to_string();
        }
    }
    if let Some(n) = out.node_mut(ctor) {
        n.kind = NodeKind::InvokeConstructor(constructor_method(replacement));
    }
    let direct: Vec<NodeId> = graph
        .nodes()
        .filter(|(_, n)| matches!(n.kind, NodeKind::InvokeDirect(_)) && n.uses.first() == Some(&alloc))
        .map(|(id, _)| id)
        .collect();
    for id in direct {
        let n = out.node_mut(id).expect("id taken from the graph");
        if let NodeKind::InvokeDirect(m) = &n.kind {
            n.kind = NodeKind::InvokeVirtual(m.clone());
        }
    }
    Ok(out)
}

/// Rewrites every site-labelled allocation whose planned decision is not
/// KEEP. Allocations already of the planned type are left alone, so
/// applying a plan twice changes nothing.
pub fn apply_plan(graph: &IrGraph, plan: &ReplacementPlan, catalog: &TypeCatalog) -> Result<IrGraph, IrError> {
    let mut out = graph.clone();
    let allocs: Vec<(NodeId, String, _)> = graph
        .nodes()
        .filter_map(|(id, n)| match &n.kind {
            NodeKind::Alloc { type_name, site: Some(site) } => Some((id, type_name.clone(), site.clone())),
            _ => None,
        })
        .collect();
    for (id, type_name, site) in allocs {
        let Some(entry) = plan.get(&site) else { continue };
        if entry.decision == ReplacementDecision::Keep {
            continue;
        }
        let target = entry
            .decision
            .implementation(entry.kind)
            .map(Implementation::name)
            .expect("plans only hold decisions compatible with their kind");
        if type_name == target {
            continue;
        }
        if type_name != entry.kind.type_name() {
            return Err(IrError::KindMismatch { node: id, found: type_name, planned: target });
        }
        out = rewrite_allocation(&out, id, &target, catalog)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ALLOCS: &str = "\
0: START -> 1 | -
1: ALLOC(HashMap @ A.a(): 1) -> 2 | -
2: INVOKE_CONSTRUCTOR(HashMap.<init>) -> 3 | 1
3: ALLOC(ArrayList @ A.a(): 2) -> 4 | -
4: INVOKE_CONSTRUCTOR(ArrayList.<init>) -> 5 | 3
5: INVOKE_DIRECT(ArrayList.add) -> 6 | 3, 1
6: INVOKE_DIRECT(HashMap.size) -> 7 | 1
7: END -> - | -
";

    #[test]
    fn receiver_filter_leaves_other_calls() {
        let g = IrGraph::parse(TWO_ALLOCS).unwrap();
        let r = rewrite_allocation(&g, 1, "EconomicHashMap", &TypeCatalog::standard()).unwrap();
        assert_eq!(r.node(5).unwrap().kind, NodeKind::InvokeDirect("ArrayList.add".into()));
        assert_eq!(r.node(6).unwrap().kind, NodeKind::InvokeVirtual("HashMap.size".into()));
        assert_eq!(r.node(2).unwrap().kind, NodeKind::InvokeConstructor("EconomicHashMap.<init>".into()));
        assert_eq!(r.len(), g.len());
        for (id, n) in g.nodes() {
            let m = r.node(id).unwrap();
            assert_eq!((&n.next, &n.uses), (&m.next, &m.uses));
        }
        r.validate().unwrap();
    }

    #[test]
    fn rewrite_errors() {
        let g = IrGraph::parse(TWO_ALLOCS).unwrap();
        let catalog = TypeCatalog::standard();
        assert!(matches!(
            rewrite_allocation(&g, 1, "MemoryEfficientHashSet", &catalog),
            Err(IrError::MissingCatalogEntry { .. })
        ));
        assert_eq!(rewrite_allocation(&g, 2, "EmptyHashMap", &catalog), Err(IrError::NotAnAllocation(2)));

        let mut narrow = TypeCatalog::empty();
        narrow.add_type("TinyMap", &[1]).add_replacement("HashMap", "TinyMap");
        assert_eq!(
            rewrite_allocation(&g, 1, "TinyMap", &narrow),
            Err(IrError::ArityMismatch { replacement: "TinyMap".into(), arity: 0 })
        );

        let orphan = IrGraph::parse("0: START -> 1 | -\n1: ALLOC(HashMap) -> 2 | -\n2: END -> - | -\n").unwrap();
        assert_eq!(rewrite_allocation(&orphan, 1, "EmptyHashMap", &catalog), Err(IrError::NoConstructor(1)));
    }

    #[test]
    fn standard_catalog_matches_constructors() {
        let c = TypeCatalog::standard();
        assert!(c.allows("HashSet", "MemoryEfficientHashSet"));
        assert!(c.allows("ArrayList", "IntArrayList"));
        assert!(c.allows("LinkedHashMap", "SingletonLinkedHashMap"));
        assert!(!c.allows("HashMap", "IntArrayList"));
        assert_eq!(c.arities("Size2LinkedHashMap"), c.arities("LinkedHashMap"));
    }
}
