use std::sync::Arc;

use super::{EngineError, ReplacementDecision, ReplacementPlan};
use crate::baseline::{BaselineList, BaselineMap, BaselineSet, MapOptions};
use crate::collection::{ListOps, MapOps, SetOps};
use crate::cost::Heap;
use crate::instrument::{InstrumentedList, InstrumentedMap, InstrumentedSet};
use crate::profile::{DsKind, Profiler, SiteId};
use crate::specialized::{
    EconomicMap, EmptyList, EmptyMap, EmptySet, OpenSet, PrimitiveList, SingletonList, SingletonMap, SingletonSet,
    Size2List, Size2Map, Size2Set,
};

fn incompatible(kind: DsKind, decision: ReplacementDecision) -> EngineError {
    EngineError::Incompatible { ctx: String::new(), kind, decision }
}

/// Uninstrumented map of the decided type. `initial_capacity` is passed to
/// whichever type is built, unchanged.
pub fn create_map(
    heap: Arc<Heap>,
    kind: DsKind,
    decision: ReplacementDecision,
    initial_capacity: Option<usize>,
) -> Result<Box<dyn MapOps>, EngineError> {
    let linked = match kind {
        DsKind::HashMap => false,
        DsKind::LinkedHashMap => true,
        _ => return Err(incompatible(kind, decision)),
    };
    Ok(match decision {
        ReplacementDecision::Keep => {
            let options = if linked { MapOptions::linked() } else { MapOptions::plain() };
            Box::new(BaselineMap::with_options(heap, options.with_capacity(initial_capacity)))
        }
        ReplacementDecision::Empty => Box::new(EmptyMap::new(heap, linked, initial_capacity)),
        ReplacementDecision::Singleton => Box::new(SingletonMap::new(heap, linked, initial_capacity)),
        ReplacementDecision::Size2 => Box::new(Size2Map::new(heap, linked, initial_capacity)),
        ReplacementDecision::Economic => Box::new(EconomicMap::new(heap, linked, initial_capacity)),
        d => return Err(incompatible(kind, d)),
    })
}

pub fn create_set(
    heap: Arc<Heap>,
    decision: ReplacementDecision,
    initial_capacity: Option<usize>,
) -> Result<Box<dyn SetOps>, EngineError> {
    Ok(match decision {
        ReplacementDecision::Keep => Box::new(BaselineSet::with_capacity(heap, initial_capacity)),
        ReplacementDecision::Empty => Box::new(EmptySet::new(heap, initial_capacity)),
        ReplacementDecision::Singleton => Box::new(SingletonSet::new(heap, initial_capacity)),
        ReplacementDecision::Size2 => Box::new(Size2Set::new(heap, initial_capacity)),
        ReplacementDecision::OpenSet => Box::new(OpenSet::new(heap, initial_capacity)),
        d => return Err(incompatible(DsKind::HashSet, d)),
    })
}

pub fn create_list(
    heap: Arc<Heap>,
    decision: ReplacementDecision,
    initial_capacity: Option<usize>,
) -> Result<Box<dyn ListOps>, EngineError> {
    Ok(match decision {
        ReplacementDecision::Keep => Box::new(BaselineList::with_capacity(heap, initial_capacity)),
        ReplacementDecision::Empty => Box::new(EmptyList::new(heap, initial_capacity)),
        ReplacementDecision::Singleton => Box::new(SingletonList::new(heap, initial_capacity)),
        ReplacementDecision::Size2 => Box::new(Size2List::new(heap, initial_capacity)),
        ReplacementDecision::PrimitiveList(tag) if tag.is_primitive() => {
            Box::new(PrimitiveList::new(heap, tag, initial_capacity))
        }
        d => return Err(incompatible(DsKind::ArrayList, d)),
    })
}

/// Builds collections for allocation sites according to a plan, wired to the
/// run's profiler and heap. Sites without a plan entry get the baseline.
/// Shareable across workload threads.
#[derive(Clone)]
pub struct SiteFactory {
    plan: Option<Arc<ReplacementPlan>>,
    heap: Arc<Heap>,
    profiler: Arc<Profiler>,
}

impl SiteFactory {
    /// All-baseline factory, as used for profiling runs.
    pub fn baseline(heap: Arc<Heap>, profiler: Arc<Profiler>) -> Self {
        SiteFactory { plan: None, heap, profiler }
    }

    pub fn with_plan(plan: Arc<ReplacementPlan>, heap: Arc<Heap>, profiler: Arc<Profiler>) -> Self {
        SiteFactory { plan: Some(plan), heap, profiler }
    }

    pub fn heap(&self) -> &Arc<Heap> {
        &self.heap
    }

    pub fn profiler(&self) -> &Arc<Profiler> {
        &self.profiler
    }

    pub fn decision(&self, site: &SiteId, kind: DsKind) -> Result<ReplacementDecision, EngineError> {
        let Some(entry) = self.plan.as_ref().and_then(|p| p.get(site)) else {
            return Ok(ReplacementDecision::Keep);
        };
        if entry.kind != kind {
            return Err(EngineError::KindMismatch { ctx: site.ctx(), planned: entry.kind, requested: kind });
        }
        Ok(entry.decision)
    }

    fn with_ctx(site: &SiteId, e: EngineError) -> EngineError {
        match e {
            EngineError::Incompatible { kind, decision, .. } => {
                EngineError::Incompatible { ctx: site.ctx(), kind, decision }
            }
            e => e,
        }
    }

    pub fn new_map(
        &self,
        site: &SiteId,
        kind: DsKind,
        initial_capacity: Option<usize>,
    ) -> Result<InstrumentedMap, EngineError> {
        let decision = self.decision(site, kind)?;
        let inner =
            create_map(self.heap.clone(), kind, decision, initial_capacity).map_err(|e| Self::with_ctx(site, e))?;
        Ok(InstrumentedMap::new(inner, self.profiler.allocate(site, kind)?))
    }

    pub fn new_set(&self, site: &SiteId, initial_capacity: Option<usize>) -> Result<InstrumentedSet, EngineError> {
        let decision = self.decision(site, DsKind::HashSet)?;
        let inner = create_set(self.heap.clone(), decision, initial_capacity).map_err(|e| Self::with_ctx(site, e))?;
        Ok(InstrumentedSet::new(inner, self.profiler.allocate(site, DsKind::HashSet)?))
    }

    pub fn new_list(&self, site: &SiteId, initial_capacity: Option<usize>) -> Result<InstrumentedList, EngineError> {
        let decision = self.decision(site, DsKind::ArrayList)?;
        let inner = create_list(self.heap.clone(), decision, initial_capacity).map_err(|e| Self::with_ctx(site, e))?;
        Ok(InstrumentedList::new(inner, self.profiler.allocate(site, DsKind::ArrayList)?))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::collection::Implementation;
    use crate::engine::{PlanEntry, PolicyConfig};
    use crate::value::Value;

    fn factory(entries: &[(&str, DsKind, ReplacementDecision)]) -> SiteFactory {
        let entries: BTreeMap<SiteId, PlanEntry> = entries
            .iter()
            .map(|(c, kind, decision)| (c.parse().unwrap(), PlanEntry { kind: *kind, decision: *decision }))
            .collect();
        let plan = ReplacementPlan { entries, policy: PolicyConfig::default(), provenance: String::new() };
        SiteFactory::with_plan(Arc::new(plan), Arc::new(Heap::default()), Arc::new(Profiler::new()))
    }

    #[test]
    fn dispatches_on_decision() {
        let f = factory(&[("A.a(): 1", DsKind::HashMap, ReplacementDecision::Singleton)]);
        let site: SiteId = "A.a(): 1".parse().unwrap();
        let m = f.new_map(&site, DsKind::HashMap, None).unwrap();
        assert_eq!(m.implementation(), Implementation::SingletonHashMap);
        let other: SiteId = "B.b(): 2".parse().unwrap();
        assert_eq!(f.new_map(&other, DsKind::HashMap, None).unwrap().implementation(), Implementation::HashMap);
        assert!(matches!(f.new_set(&site, None), Err(EngineError::KindMismatch { .. })));
    }

    #[test]
    fn empty_decision_falls_back_like_baseline() {
        let f = factory(&[("A.a(): 1", DsKind::LinkedHashMap, ReplacementDecision::Empty)]);
        let site: SiteId = "A.a(): 1".parse().unwrap();
        let mut m = f.new_map(&site, DsKind::LinkedHashMap, Some(4)).unwrap();
        let mut b = BaselineMap::new_linked(Arc::new(Heap::default()));
        for k in [4, 2, 9, 2] {
            assert_eq!(m.put(Value::Int(k), Value::Int(k)), b.put(Value::Int(k), Value::Int(k)));
        }
        assert!(m.fell_back());
        assert_eq!(m.entries().collect::<Vec<_>>(), b.entries().collect::<Vec<_>>());
        assert_eq!(f.profiler().get(&site).unwrap().fallbacks(), 1);
    }

    #[test]
    fn incompatible_decisions_are_errors() {
        let heap = Arc::new(Heap::default());
        assert!(create_map(heap.clone(), DsKind::HashMap, ReplacementDecision::OpenSet, None).is_err());
        assert!(create_set(heap.clone(), ReplacementDecision::Economic, None).is_err());
        assert!(create_list(heap, ReplacementDecision::OpenSet, None).is_err());
    }
}
