//! A miniature graph IR and the allocation-site rewrite.
//!
//! Control flow is a single successor chain from `START` to `END`; values
//! flow along data edges (`uses`). For invocations the first use is the
//! receiver and the rest are arguments.
//!
//! Text form, one node per line sorted by id:
//!
//! ```text
//! 3: ALLOC(HashMap @ Foo.bar(): 4) -> 4 | -
//! 4: INVOKE_CONSTRUCTOR(HashMap.<init>) -> 5 | 3
//! ```

mod rewrite;

pub use rewrite::{apply_plan, rewrite_allocation, TypeCatalog};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::profile::SiteId;

pub type NodeId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IrError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is not an allocation")]
    NotAnAllocation(NodeId),
    #[error("no catalog entry replacing {original} with {replacement}")]
    MissingCatalogEntry { original: String, replacement: String },
    #[error("{replacement} has no constructor taking {arity} argument(s)")]
    ArityMismatch { replacement: String, arity: usize },
    #[error("allocation {0} has no constructor invocation")]
    NoConstructor(NodeId),
    #[error("allocation {node} of {found} is planned as {planned}")]
    KindMismatch { node: NodeId, found: String, planned: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Start,
    End,
    Const(String),
    Param(u32),
    Alloc { type_name: String, site: Option<SiteId> },
    InvokeConstructor(String),
    InvokeDirect(String),
    InvokeVirtual(String),
}

impl NodeKind {
    fn tag(&self) -> &'static str {
        match self {
            NodeKind::Start => "START",
            NodeKind::End => "END",
            NodeKind::Const(_) => "CONST",
            NodeKind::Param(_) => "PARAM",
            NodeKind::Alloc { .. } => "ALLOC",
            NodeKind::InvokeConstructor(_) => "INVOKE_CONSTRUCTOR",
            NodeKind::InvokeDirect(_) => "INVOKE_DIRECT",
            NodeKind::InvokeVirtual(_) => "INVOKE_VIRTUAL",
        }
    }

    fn payload(&self) -> Option<String> {
        match self {
            NodeKind::Start | NodeKind::End => None,
            NodeKind::Const(text) => Some(text.clone()),
            NodeKind::Param(n) => Some(n.to_string()),
            NodeKind::Alloc { type_name, site: None } => Some(type_name.clone()),
            NodeKind::Alloc { type_name, site: Some(site) } => Some(format!("{type_name} @ {site}")),
            NodeKind::InvokeConstructor(m) | NodeKind::InvokeDirect(m) | NodeKind::InvokeVirtual(m) => Some(m.clone()),
        }
    }

    /// Whether the node sits on the control chain.
    pub fn is_control(&self) -> bool {
        !matches!(self, NodeKind::Const(_) | NodeKind::Param(_))
    }

    pub fn is_invoke(&self) -> bool {
        matches!(self, NodeKind::InvokeConstructor(_) | NodeKind::InvokeDirect(_) | NodeKind::InvokeVirtual(_))
    }

    fn parse(tag: &str, payload: Option<&str>) -> Result<NodeKind, String> {
        let need = |p: Option<&str>| p.map(str::to_string).ok_or_else(|| format!("{tag} needs a payload"));
        Ok(match tag {
            "START" | "END" if payload.is_some_and(|p| !p.is_empty()) => {
                return Err(format!("{tag} takes no payload"));
            }
            "START" => NodeKind::Start,
            "END" => NodeKind::End,
            "CONST" => NodeKind::Const(need(payload)?),
            "PARAM" => NodeKind::Param(need(payload)?.parse().map_err(|_| "PARAM index must be a number")?),
            "ALLOC" => {
                let p = need(payload)?;
                match p.split_once(" @ ") {
                    Some((t, ctx)) => NodeKind::Alloc {
                        type_name: t.to_string(),
                        site: Some(ctx.parse().map_err(|e| format!("{e}"))?),
                    },
                    None => NodeKind::Alloc { type_name: p, site: None },
                }
            }
            "INVOKE_CONSTRUCTOR" => NodeKind::InvokeConstructor(need(payload)?),
            "INVOKE_DIRECT" => NodeKind::InvokeDirect(need(payload)?),
            "INVOKE_VIRTUAL" => NodeKind::InvokeVirtual(need(payload)?),
            other => return Err(format!("unknown node kind {other:?}")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    /// Control successor.
    pub next: Option<NodeId>,
    /// Data inputs; for invokes the receiver comes first.
    pub uses: Vec<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IrGraph {
    nodes: BTreeMap<NodeId, Node>,
}

impl IrGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, id: NodeId, kind: NodeKind, next: Option<NodeId>, uses: Vec<NodeId>) -> &mut Self {
        self.nodes.insert(id, Node { kind, next, uses });
        self
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        self.nodes.get_mut(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().map(|(id, n)| (*id, n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids along the control chain, START first.
    pub fn control_order(&self) -> Result<Vec<NodeId>, IrError> {
        let starts: Vec<NodeId> =
            self.nodes.iter().filter(|(_, n)| n.kind == NodeKind::Start).map(|(id, _)| *id).collect();
        let [start] = starts[..] else {
            return Err(IrError::Invalid(format!("expected exactly one START, found {}", starts.len())));
        };
        let mut order = vec![start];
        let mut seen = BTreeSet::from([start]);
        let mut cur = start;
        while let Some(next) = self.nodes[&cur].next {
            let node = self.nodes.get(&next).ok_or(IrError::UnknownNode(next))?;
            if !node.kind.is_control() {
                return Err(IrError::Invalid(format!("control edge {cur} -> {next} targets a value node")));
            }
            if !seen.insert(next) {
                return Err(IrError::Invalid(format!("control chain revisits node {next}")));
            }
            order.push(next);
            cur = next;
        }
        if self.nodes[&cur].kind != NodeKind::End {
            return Err(IrError::Invalid(format!("control chain ends at {cur}, not at END")));
        }
        Ok(order)
    }

    /// Checks the structural invariants: one START→END chain covering every
    /// control node, resolvable data edges, allocation receivers for
    /// constructors, and constructors placed after their allocation.
    pub fn validate(&self) -> Result<(), IrError> {
        let order = self.control_order()?;
        let position: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        for (id, node) in &self.nodes {
            if node.kind.is_control() && !position.contains_key(id) {
                return Err(IrError::Invalid(format!("control node {id} is not on the START-END chain")));
            }
            if !node.kind.is_control() && node.next.is_some() {
                return Err(IrError::Invalid(format!("value node {id} has a control successor")));
            }
            for u in &node.uses {
                if !self.nodes.contains_key(u) {
                    return Err(IrError::UnknownNode(*u));
                }
            }
            if node.kind.is_invoke() {
                let Some(&receiver) = node.uses.first() else {
                    return Err(IrError::Invalid(format!("invoke {id} has no receiver")));
                };
                let r = &self.nodes[&receiver];
                if matches!(r.kind, NodeKind::Start | NodeKind::End) {
                    return Err(IrError::Invalid(format!("invoke {id} has a non-value receiver {receiver}")));
                }
                if let NodeKind::InvokeConstructor(_) = node.kind {
                    if !matches!(r.kind, NodeKind::Alloc { .. }) {
                        return Err(IrError::Invalid(format!("constructor {id} does not consume an allocation")));
                    }
                    if position[id] < position[&receiver] {
                        return Err(IrError::Invalid(format!("constructor {id} precedes allocation {receiver}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dump(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<IrGraph, IrError> {
        let mut graph = IrGraph::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| IrError::Parse { line: i + 1, reason };
            let (id, rest) = line.split_once(": ").ok_or_else(|| err("expected \"<id>: \"".into()))?;
            let id: NodeId = id.parse().map_err(|_| err(format!("bad node id {id:?}")))?;
            let (head, edges) = rest.rsplit_once(" -> ").ok_or_else(|| err("expected \" -> \"".into()))?;
            let (tag, payload) = match head.split_once('(') {
                Some((tag, p)) => {
                    let p = p.strip_suffix(')').ok_or_else(|| err("unbalanced payload parentheses".into()))?;
                    (tag, Some(p))
                }
                None => (head, None),
            };
            let kind = NodeKind::parse(tag, payload).map_err(err)?;
            let (next, uses) = edges.split_once(" | ").ok_or_else(|| err("expected \" | \"".into()))?;
            let next = match next {
                "-" => None,
                n => Some(n.parse().map_err(|_| err(format!("bad successor {n:?}")))?),
            };
            let uses = match uses {
                "-" => Vec::new(),
                u => u
                    .split(", ")
                    .map(|x| x.parse().map_err(|_| err(format!("bad use {x:?}"))))
                    .collect::<Result<_, _>>()?,
            };
            if graph.nodes.insert(id, Node { kind, next, uses }).is_some() {
                return Err(err(format!("duplicate node id {id}")));
            }
        }
        Ok(graph)
    }
}

impl fmt::Display for IrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, node) in &self.nodes {
            let mut line = format!("{id}: {}", node.kind.tag());
            if let Some(p) = node.kind.payload() {
                let _ = write!(line, "({p})");
            }
            let next = node.next.map_or("-".to_string(), |n| n.to_string());
            let uses = if node.uses.is_empty() {
                "-".to_string()
            } else {
                node.uses.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
            };
            writeln!(f, "{line} -> {next} | {uses}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
0: START -> 3 | -
1: CONST(\"key\") -> - | -
2: PARAM(0) -> - | -
3: ALLOC(HashMap @ Foo.bar(): 10 > Foo.baz(): 4) -> 4 | -
4: INVOKE_CONSTRUCTOR(HashMap.<init>) -> 5 | 3
5: INVOKE_DIRECT(HashMap.put) -> 6 | 3, 1, 2
6: END -> - | -
";

    #[test]
    fn dump_round_trips() {
        let g = IrGraph::parse(SAMPLE).unwrap();
        g.validate().unwrap();
        assert_eq!(g.dump(), SAMPLE);
        assert_eq!(g.control_order().unwrap(), [0, 3, 4, 5, 6]);
    }

    #[test]
    fn rejects_broken_graphs() {
        let cycle = SAMPLE.replace("5: INVOKE_DIRECT(HashMap.put) -> 6", "5: INVOKE_DIRECT(HashMap.put) -> 3");
        assert!(IrGraph::parse(&cycle).unwrap().validate().is_err());
        let ctor_first = "0: START -> 2 | -\n1: ALLOC(HashMap) -> 3 | -\n2: INVOKE_CONSTRUCTOR(HashMap.<init>) -> 1 | 1\n3: END -> - | -\n";
        assert!(IrGraph::parse(ctor_first).unwrap().validate().is_err());
        let dangling = SAMPLE.replace("| 3, 1, 2", "| 3, 9");
        assert_eq!(IrGraph::parse(&dangling).unwrap().validate(), Err(IrError::UnknownNode(9)));
        assert!(matches!(IrGraph::parse("0 START -> - | -"), Err(IrError::Parse { line: 1, .. })));
        assert!(matches!(IrGraph::parse("0: LOOP -> - | -"), Err(IrError::Parse { .. })));
    }
}
