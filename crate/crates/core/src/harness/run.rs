use std::sync::Arc;
use std::thread;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::report::{self, ComparisonReport, RunReport};
use super::spec::{check_scale, SiteSpec, WorkloadSpec};
use super::HarnessError;
use crate::collection::{CollectionError, Implementation, ListOps, MapOps, SetOps};
use crate::cost::{Category, FieldKind, Heap, TypeLayout};
use crate::engine::{build_plan, PolicyConfig, ReplacementPlan, SiteFactory};
use crate::profile::{self, DsKind, ElementTypeTag, ProfileStore, Profiler};
use crate::value::Value;

/// Fresh key, value and element objects: a header plus one long field.
const PAYLOAD_LAYOUT: TypeLayout = TypeLayout::new("Payload", &[FieldKind::Primitive(ElementTypeTag::Long)]);

/// Profile and report of one execution.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub profile: ProfileStore,
    pub report: RunReport,
}

/// Everything the two-phase pipeline produces.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub profile_document: String,
    pub plan: ReplacementPlan,
    pub baseline: RunOutput,
    pub optimized: RunOutput,
    pub comparison: ComparisonReport,
}

/// Outcome of one site's instances, folded into the report.
pub(crate) struct SiteOutcome {
    pub implementation: Implementation,
    pub instances: u64,
    pub fell_back: u64,
    pub digest: [u8; 32],
    pub operations: u64,
}

/// Runs the workload on baseline collections with full instrumentation.
pub fn run_instrumented(spec: &WorkloadSpec, scale: f64) -> Result<RunOutput, HarnessError> {
    execute(spec, None, scale)
}

/// Runs the workload with collections chosen by `plan`. Every planned site
/// must exist in the spec with the same kind.
pub fn run_with_plan(spec: &WorkloadSpec, plan: &ReplacementPlan, scale: f64) -> Result<RunOutput, HarnessError> {
    for (site, entry) in &plan.entries {
        check_site(spec, site, entry.kind)?;
    }
    execute(spec, Some(plan), scale)
}

/// Builds a plan from `profile` and runs the workload with it.
pub fn run_optimized(
    spec: &WorkloadSpec,
    profile: &ProfileStore,
    cfg: &PolicyConfig,
    scale: f64,
) -> Result<(ReplacementPlan, RunOutput), HarnessError> {
    for (site, p) in profile.iter() {
        check_site(spec, site, p.kind)?;
    }
    let plan = build_plan(profile, cfg)?;
    let out = run_with_plan(spec, &plan, scale)?;
    Ok((plan, out))
}

/// Profile at `profile_scale`, plan, then measure baseline and optimized
/// runs at `measure_scale`.
pub fn run_pipeline(
    spec: &WorkloadSpec,
    cfg: &PolicyConfig,
    profile_scale: f64,
    measure_scale: f64,
) -> Result<PipelineOutput, HarnessError> {
    let profiled = run_instrumented(spec, profile_scale)?;
    let profile_document = profile::serialize(&profiled.profile);
    let (plan, optimized) = run_optimized(spec, &profile::parse(&profile_document)?, cfg, measure_scale)?;
    let baseline = run_instrumented(spec, measure_scale)?;
    let comparison = report::compare(&baseline.report, &optimized.report)?;
    Ok(PipelineOutput { profile_document, plan, baseline, optimized, comparison })
}

fn check_site(spec: &WorkloadSpec, site: &profile::SiteId, kind: DsKind) -> Result<(), HarnessError> {
    match spec.site(site) {
        None => Err(HarnessError::Mismatch { ctx: site.ctx(), reason: "not a site of the workload".into() }),
        Some(s) if s.kind != kind => Err(HarnessError::Mismatch {
            ctx: site.ctx(),
            reason: format!("recorded as {kind}, the workload allocates {}", s.kind),
        }),
        Some(_) => Ok(()),
    }
}

fn execute(spec: &WorkloadSpec, plan: Option<&ReplacementPlan>, scale: f64) -> Result<RunOutput, HarnessError> {
    spec.validate()?;
    check_scale(scale)?;
    let heap = Arc::new(Heap::default());
    let profiler = Arc::new(Profiler::new());
    let factory = match plan {
        Some(p) => SiteFactory::with_plan(Arc::new(p.clone()), heap.clone(), profiler.clone()),
        None => SiteFactory::baseline(heap.clone(), profiler.clone()),
    };
    let outcomes: Vec<Result<SiteOutcome, HarnessError>> = thread::scope(|s| {
        let handles: Vec<_> = spec
            .sites
            .iter()
            .enumerate()
            .map(|(i, site)| {
                let factory = &factory;
                s.spawn(move || run_site(factory, spec.seed, i, site, scale))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("workload thread panicked")).collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    let profile = profiler.snapshot();
    let report = RunReport::build(spec, scale, plan, &profile, &heap.ledger().snapshot(), &outcomes);
    Ok(RunOutput { profile, report })
}

/// Deterministic source of distinct object values, each charged as a
/// payload allocation.
struct Objects<'a> {
    heap: &'a Heap,
    next: u64,
    absent: u64,
}

impl<'a> Objects<'a> {
    fn new(heap: &'a Heap, site_index: usize) -> Self {
        let base = (site_index as u64 + 1) << 40;
        Objects { heap, next: base, absent: base | 1 << 39 }
    }

    fn fresh(&mut self) -> Value {
        self.heap.alloc_object(Category::ElementData, &PAYLOAD_LAYOUT);
        self.next += 1;
        Value::Object(self.next)
    }

    /// A key never stored anywhere; probing with it allocates nothing.
    fn absent(&mut self) -> Value {
        self.absent += 1;
        Value::Object(self.absent)
    }

    fn element(&mut self, tag: ElementTypeTag, rng: &mut ChaCha8Rng) -> Value {
        match tag {
            ElementTypeTag::Byte => Value::Byte(rng.gen()),
            ElementTypeTag::Short => Value::Short(rng.gen()),
            ElementTypeTag::Int => Value::Int(rng.gen()),
            ElementTypeTag::Long => Value::Long(rng.gen()),
            ElementTypeTag::Float => Value::float(rng.gen()),
            ElementTypeTag::Double => Value::double(rng.gen()),
            ElementTypeTag::Char => Value::Char(rng.gen()),
            ElementTypeTag::Boolean => Value::Boolean(rng.gen()),
            ElementTypeTag::Object => self.fresh(),
        }
    }
}

/// Hash of every observable result, in operation order.
struct Trace {
    hasher: Sha256,
    operations: u64,
}

impl Trace {
    fn new() -> Self {
        Trace { hasher: Sha256::new(), operations: 0 }
    }

    fn raw(&mut self, v: &Value) {
        let (tag, bits) = match *v {
            Value::Null => (0u8, 0u64),
            Value::Byte(x) => (1, x as u64),
            Value::Short(x) => (2, x as u64),
            Value::Int(x) => (3, x as u64),
            Value::Long(x) => (4, x as u64),
            Value::Float(x) => (5, x as u64),
            Value::Double(x) => (6, x),
            Value::Char(x) => (7, x as u64),
            Value::Boolean(x) => (8, x as u64),
            Value::Object(x) => (9, x),
        };
        self.hasher.update([tag]);
        self.hasher.update(bits.to_le_bytes());
    }

    fn op(&mut self, code: u8) {
        self.operations += 1;
        self.hasher.update([code]);
    }

    fn value(&mut self, code: u8, v: Option<Value>) {
        self.op(code);
        match v {
            Some(v) => self.raw(&v),
            None => self.hasher.update([0xff]),
        }
    }

    fn flag(&mut self, code: u8, b: bool) {
        self.op(code);
        self.hasher.update([b as u8]);
    }

    fn result(&mut self, code: u8, r: Result<Value, CollectionError>) {
        match r {
            Ok(v) => self.value(code, Some(v)),
            Err(CollectionError::IndexOutOfBounds { index, len }) => {
                self.op(code);
                self.hasher.update([0xfe]);
                self.hasher.update((index as u64).to_le_bytes());
                self.hasher.update((len as u64).to_le_bytes());
            }
        }
    }

    fn sequence(&mut self, code: u8, values: impl IntoIterator<Item = Value>) {
        self.op(code);
        let mut n = 0u64;
        for v in values {
            self.raw(&v);
            n += 1;
        }
        self.hasher.update(n.to_le_bytes());
    }

    fn size(&mut self, len: usize) {
        self.op(b'n');
        self.hasher.update((len as u64).to_le_bytes());
    }

    fn finish(self) -> ([u8; 32], u64) {
        (self.hasher.finalize().into(), self.operations)
    }
}

#[derive(Clone, Copy)]
enum Op {
    Get,
    Overwrite,
    Iterate,
}

fn mixed_ops(site: &SiteSpec, rng: &mut ChaCha8Rng) -> Vec<Op> {
    let mut ops = Vec::with_capacity((site.gets + site.overwrites + site.entry_iterations) as usize);
    ops.extend((0..site.gets).map(|_| Op::Get));
    ops.extend((0..site.overwrites).map(|_| Op::Overwrite));
    ops.extend((0..site.entry_iterations).map(|_| Op::Iterate));
    ops.shuffle(rng);
    ops
}

fn run_site(
    factory: &SiteFactory,
    seed: u64,
    index: usize,
    site: &SiteSpec,
    scale: f64,
) -> Result<SiteOutcome, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let n = site.scaled_instances(scale);
    let mut sizes: Vec<u64> =
        site.size_quotas(n).into_iter().flat_map(|(size, count)| std::iter::repeat_n(size, count as usize)).collect();
    sizes.shuffle(&mut rng);

    let implementation = factory
        .decision(&site.ctx, site.kind)?
        .implementation(site.kind)
        .expect("factory decisions are compatible with their kind");
    let mut objects = Objects::new(factory.heap(), index);
    let mut trace = Trace::new();
    let mut fell_back = 0;
    for target in sizes {
        let fb = match site.kind {
            DsKind::HashMap | DsKind::LinkedHashMap => {
                let mut m = factory.new_map(&site.ctx, site.kind, site.initial_capacity)?;
                drive_map(&mut m, target, site, &mut rng, &mut objects, &mut trace);
                m.fell_back()
            }
            DsKind::HashSet => {
                let mut s = factory.new_set(&site.ctx, site.initial_capacity)?;
                drive_set(&mut s, target, site, &mut rng, &mut objects, &mut trace);
                s.fell_back()
            }
            DsKind::ArrayList => {
                let mut l = factory.new_list(&site.ctx, site.initial_capacity)?;
                drive_list(&mut l, target, site, &mut rng, &mut objects, &mut trace);
                l.fell_back()
            }
        };
        fell_back += fb as u64;
    }
    let (digest, operations) = trace.finish();
    Ok(SiteOutcome { implementation, instances: n, fell_back, digest, operations })
}

fn pick<T: Copy>(items: &[T], rng: &mut ChaCha8Rng) -> Option<T> {
    (!items.is_empty()).then(|| items[rng.gen_range(0..items.len())])
}

fn drive_map(
    m: &mut dyn MapOps,
    target: u64,
    site: &SiteSpec,
    rng: &mut ChaCha8Rng,
    objects: &mut Objects<'_>,
    trace: &mut Trace,
) {
    let mut keys = Vec::with_capacity(target as usize);
    for _ in 0..target {
        let (k, v) = (objects.fresh(), objects.fresh());
        trace.value(b'p', m.put(k, v));
        keys.push(k);
    }
    for op in mixed_ops(site, rng) {
        match op {
            Op::Get => {
                let key = match pick(&keys, rng) {
                    Some(k) if rng.gen_ratio(3, 4) => k,
                    _ => objects.absent(),
                };
                trace.value(b'g', m.get(&key));
            }
            Op::Overwrite => match pick(&keys, rng) {
                Some(k) => {
                    let v = objects.fresh();
                    trace.value(b'o', m.put(k, v));
                }
                None => trace.op(b'-'),
            },
            Op::Iterate => {
                let mut pairs: Vec<(Value, Value)> = m.entries().collect();
                if site.kind != DsKind::LinkedHashMap {
                    pairs.sort();
                }
                trace.sequence(b'e', pairs.into_iter().flat_map(|(k, v)| [k, v]));
            }
        }
    }
    for _ in 0..site.removes {
        let key = if keys.is_empty() { objects.absent() } else { keys.swap_remove(rng.gen_range(0..keys.len())) };
        trace.value(b'r', m.remove(&key));
    }
    trace.size(m.len());
}

fn drive_set(
    s: &mut dyn SetOps,
    target: u64,
    site: &SiteSpec,
    rng: &mut ChaCha8Rng,
    objects: &mut Objects<'_>,
    trace: &mut Trace,
) {
    let mut members = Vec::with_capacity(target as usize);
    for _ in 0..target {
        let v = objects.fresh();
        trace.flag(b'a', s.add(v));
        members.push(v);
    }
    for op in mixed_ops(site, rng) {
        match op {
            Op::Get => {
                let v = match pick(&members, rng) {
                    Some(v) if rng.gen_ratio(3, 4) => v,
                    _ => objects.absent(),
                };
                trace.flag(b'c', s.contains(&v));
            }
            Op::Overwrite => match pick(&members, rng) {
                Some(v) => trace.flag(b'o', s.add(v)),
                None => trace.op(b'-'),
            },
            Op::Iterate => {
                let mut values: Vec<Value> = s.iter().collect();
                values.sort();
                trace.sequence(b'i', values);
            }
        }
    }
    for _ in 0..site.removes {
        let v =
            if members.is_empty() { objects.absent() } else { members.swap_remove(rng.gen_range(0..members.len())) };
        trace.flag(b'r', s.remove(&v));
    }
    trace.size(s.len());
}

fn drive_list(
    l: &mut dyn ListOps,
    target: u64,
    site: &SiteSpec,
    rng: &mut ChaCha8Rng,
    objects: &mut Objects<'_>,
    trace: &mut Trace,
) {
    let tags = site.element_tags();
    for _ in 0..target {
        let tag = pick(&tags, rng).expect("at least one tag");
        let v = objects.element(tag, rng);
        l.add(v);
        trace.op(b'a');
    }
    for op in mixed_ops(site, rng) {
        let index = if l.is_empty() { 0 } else { rng.gen_range(0..l.len()) };
        match op {
            Op::Get => trace.result(b'g', l.get_at(index)),
            Op::Overwrite => {
                let tag = pick(&tags, rng).expect("at least one tag");
                let v = objects.element(tag, rng);
                trace.result(b's', l.set_at(index, v));
            }
            Op::Iterate => trace.sequence(b'i', l.iter()),
        }
    }
    for _ in 0..site.removes {
        let index = if l.is_empty() { 0 } else { rng.gen_range(0..l.len()) };
        trace.result(b'r', l.remove_at(index));
    }
    trace.sequence(b'i', l.iter());
}
