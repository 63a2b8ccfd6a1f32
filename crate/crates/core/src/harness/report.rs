use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::run::SiteOutcome;
use super::spec::{SpecIdentity, WorkloadSpec};
use super::HarnessError;
use crate::cost::{Category, LedgerSnapshot};
use crate::engine::ReplacementPlan;
use crate::profile::{DsKind, ProfileStore, SizeClass};

/// `optimized / baseline`, or "n/a" when the baseline is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    Value(f64),
    NotApplicable,
}

impl Ratio {
    pub fn of(numerator: u64, denominator: u64) -> Ratio {
        if denominator == 0 {
            Ratio::NotApplicable
        } else {
            Ratio::Value(numerator as f64 / denominator as f64)
        }
    }

    pub fn percent(part: u64, whole: u64) -> Ratio {
        match Ratio::of(part, whole) {
            Ratio::Value(v) => Ratio::Value(v * 100.0),
            na => na,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            Ratio::NotApplicable => None,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v:.4}"),
            Ratio::NotApplicable => f.write_str("n/a"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Ratio::Value(v) => s.serialize_f64(*v),
            Ratio::NotApplicable => s.serialize_str("n/a"),
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Ratio::Value(v)),
            Raw::Text(t) if t == "n/a" => Ok(Ratio::NotApplicable),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"n/a\", got {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteSummary {
    pub ctx: String,
    pub kind: DsKind,
    pub implementation: String,
    pub allocations: u64,
    pub max_size: u64,
    pub gets: u64,
    pub inserts: u64,
    pub entry_accesses: u64,
    pub fallbacks: u64,
    pub size_classes: Vec<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementCount {
    pub sites: u64,
    pub allocations: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallbackRow {
    pub allocations: u64,
    pub fallbacks: u64,
    pub percent: Ratio,
}

impl FallbackRow {
    fn new(allocations: u64, fallbacks: u64) -> Self {
        FallbackRow { allocations, fallbacks, percent: Ratio::percent(fallbacks, allocations) }
    }
}

/// Fallbacks per replacement type, over instances of replacement types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallbackTable {
    pub rows: BTreeMap<String, FallbackRow>,
    pub total: FallbackRow,
}

/// Instances per kind and largest reached size class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub classes: Vec<String>,
    pub kinds: BTreeMap<DsKind, Vec<u64>>,
}

impl Histogram {
    pub fn allocations(&self, kind: DsKind) -> u64 {
        self.kinds.get(&kind).map_or(0, |row| row.iter().sum())
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut header = vec!["kind".to_string()];
        header.extend(self.classes.iter().cloned());
        header.push("total".into());
        let rows = self
            .kinds
            .iter()
            .map(|(kind, row)| {
                let mut cells = vec![kind.to_string()];
                cells.extend(row.iter().map(u64::to_string));
                cells.push(row.iter().sum::<u64>().to_string());
                cells
            })
            .collect();
        table(header, rows)
    }
}

pub fn histogram(store: &ProfileStore) -> Histogram {
    Histogram {
        classes: SizeClass::ALL.iter().map(|c| c.label()).collect(),
        kinds: store.histogram().into_iter().map(|(k, row)| (k, row.to_vec())).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    /// sha256 over every site's observable results.
    pub digest: String,
    pub operations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: SpecIdentity,
    /// Provenance of the plan the run used; `None` for baseline runs.
    pub plan: Option<String>,
    pub ledger: LedgerSnapshot,
    pub sites: Vec<SiteSummary>,
    pub replacements: BTreeMap<String, ReplacementCount>,
    pub fallbacks: FallbackTable,
    pub histogram: Histogram,
    pub trace: TraceSummary,
}

impl RunReport {
    pub(crate) fn build(
        spec: &WorkloadSpec,
        scale: f64,
        plan: Option<&ReplacementPlan>,
        profile: &ProfileStore,
        ledger: &LedgerSnapshot,
        outcomes: &[SiteOutcome],
    ) -> RunReport {
        use sha2::{Digest, Sha256};

        let mut sites = Vec::new();
        let mut replacements: BTreeMap<String, ReplacementCount> = BTreeMap::new();
        let mut fallback_rows: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        let mut digest = Sha256::new();
        let mut operations = 0;
        for (site, outcome) in spec.sites.iter().zip(outcomes) {
            let p = profile.get(&site.ctx).cloned().unwrap_or_else(|| crate::profile::SiteProfile::new(site.kind));
            let name = outcome.implementation.name();
            if outcome.implementation.is_replacement() && outcome.instances > 0 {
                let r = replacements.entry(name.clone()).or_default();
                r.sites += 1;
                r.allocations += outcome.instances;
                let f = fallback_rows.entry(name.clone()).or_default();
                f.0 += outcome.instances;
                f.1 += outcome.fell_back;
            }
            let ctx = site.ctx.ctx();
            digest.update((ctx.len() as u64).to_le_bytes());
            digest.update(ctx.as_bytes());
            digest.update(outcome.digest);
            operations += outcome.operations;
            sites.push(SiteSummary {
                ctx,
                kind: site.kind,
                implementation: name,
                allocations: p.allocations,
                max_size: p.max_size,
                gets: p.gets,
                inserts: p.inserts,
                entry_accesses: p.entry_accesses,
                fallbacks: outcome.fell_back,
                size_classes: p.size_class_counts.to_vec(),
            });
        }
        let (allocs, fbs) = fallback_rows.values().fold((0, 0), |(a, f), &(x, y)| (a + x, f + y));
        let hex: String = digest.finalize().iter().map(|b| format!("{b:02x}")).collect();
        RunReport {
            spec: spec.identity(scale),
            plan: plan.map(|p| p.provenance.clone()),
            ledger: ledger.clone(),
            sites,
            replacements,
            fallbacks: FallbackTable {
                rows: fallback_rows.into_iter().map(|(k, (a, f))| (k, FallbackRow::new(a, f))).collect(),
                total: FallbackRow::new(allocs, fbs),
            },
            histogram: histogram(profile),
            trace: TraceSummary { digest: format!("sha256:{hex}"), operations },
        }
    }

    pub fn parse(document: &str) -> Result<RunReport, HarnessError> {
        Ok(serde_json::from_str(document)?)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "workload {} (seed {}, scale {}), {}",
            self.spec.name,
            self.spec.seed,
            self.spec.scale,
            self.plan.as_deref().map_or("baseline collections".to_string(), |p| format!("plan {p}"))
        );
        out.push_str("\nallocated bytes\n");
        let mut rows: Vec<Vec<String>> = Category::ALL
            .iter()
            .map(|&c| vec![c.to_string(), self.ledger.count(c).to_string(), self.ledger.bytes(c).to_string()])
            .collect();
        rows.push(vec!["OVERALL".into(), String::new(), self.ledger.overall.to_string()]);
        out.push_str(&table(strings(&["category", "objects", "bytes"]), rows));

        out.push_str("\nsites\n");
        let rows = self
            .sites
            .iter()
            .map(|s| {
                vec![
                    s.ctx.clone(),
                    s.kind.to_string(),
                    s.implementation.clone(),
                    s.allocations.to_string(),
                    s.max_size.to_string(),
                    s.gets.to_string(),
                    s.inserts.to_string(),
                    s.entry_accesses.to_string(),
                    s.fallbacks.to_string(),
                ]
            })
            .collect();
        out.push_str(&table(
            strings(&["ctx", "kind", "type", "allocs", "max", "gets", "inserts", "entries", "fallbacks"]),
            rows,
        ));

        if !self.replacements.is_empty() {
            out.push_str("\nreplacements\n");
            let rows = self
                .replacements
                .iter()
                .map(|(t, r)| vec![t.clone(), r.sites.to_string(), r.allocations.to_string()])
                .collect();
            out.push_str(&table(strings(&["type", "sites", "allocations"]), rows));

            out.push_str("\nfallbacks\n");
            let mut rows: Vec<Vec<String>> = self.fallbacks.rows.iter().map(|(t, r)| fallback_cells(t, r)).collect();
            rows.push(fallback_cells("TOTAL", &self.fallbacks.total));
            out.push_str(&table(strings(&["type", "allocations", "fallbacks", "percent"]), rows));
        }

        out.push_str("\nlargest reached size class\n");
        out.push_str(&self.histogram.to_text());
        let _ = writeln!(out, "\ntrace {} over {} operations", self.trace.digest, self.trace.operations);
        out
    }
}

fn fallback_cells(name: &str, r: &FallbackRow) -> Vec<String> {
    let percent = match r.percent {
        Ratio::Value(v) => format!("{v:.2} %"),
        Ratio::NotApplicable => "n/a".into(),
    };
    vec![name.to_string(), r.allocations.to_string(), r.fallbacks.to_string(), percent]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub category: String,
    pub baseline: u64,
    pub optimized: u64,
    pub ratio: Ratio,
}

impl RatioRow {
    fn new(category: &str, baseline: u64, optimized: u64) -> Self {
        RatioRow { category: category.to_string(), baseline, optimized, ratio: Ratio::of(optimized, baseline) }
    }
}

pub const MAP_SET_ROW: &str = "MAP+SET";
pub const OVERALL_ROW: &str = "OVERALL";

/// Allocated bytes of an optimized run relative to its baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub spec: SpecIdentity,
    /// Both runs produced the same observable results.
    pub behavior_identical: bool,
    /// One row per category, then the combined map and set row, then overall.
    pub rows: Vec<RatioRow>,
    pub baseline: RunReport,
    pub optimized: RunReport,
}

impl ComparisonReport {
    pub fn row(&self, category: &str) -> Option<&RatioRow> {
        self.rows.iter().find(|r| r.category == category)
    }

    pub fn parse(document: &str) -> Result<ComparisonReport, HarnessError> {
        Ok(serde_json::from_str(document)?)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "workload {} (seed {}, scale {}): behavior {}\n\n",
            self.spec.name,
            self.spec.seed,
            self.spec.scale,
            if self.behavior_identical { "identical" } else { "DIFFERS" }
        );
        let rows = self
            .rows
            .iter()
            .map(|r| vec![r.category.clone(), r.baseline.to_string(), r.optimized.to_string(), r.ratio.to_string()])
            .collect();
        out.push_str(&table(strings(&["category", "baseline", "optimized", "ratio"]), rows));
        if !self.optimized.replacements.is_empty() {
            out.push_str("\nreplacements\n");
            let rows = self
                .optimized
                .replacements
                .iter()
                .map(|(t, r)| {
                    let f = self.optimized.fallbacks.rows.get(t);
                    vec![
                        t.clone(),
                        r.sites.to_string(),
                        r.allocations.to_string(),
                        f.map_or(String::new(), |f| fallback_cells(t, f)[3].clone()),
                    ]
                })
                .collect();
            out.push_str(&table(strings(&["type", "sites", "allocations", "fallbacks"]), rows));
        }
        out
    }
}

/// Ratios of `optimized` to `baseline`. Both must come from the same
/// workload, seed and scale.
pub fn compare(baseline: &RunReport, optimized: &RunReport) -> Result<ComparisonReport, HarnessError> {
    if baseline.spec != optimized.spec {
        return Err(HarnessError::Identity(format!(
            "baseline is {} (seed {}, scale {}), optimized is {} (seed {}, scale {})",
            baseline.spec.name,
            baseline.spec.seed,
            baseline.spec.scale,
            optimized.spec.name,
            optimized.spec.seed,
            optimized.spec.scale
        )));
    }
    let (b, o) = (&baseline.ledger, &optimized.ledger);
    let mut rows: Vec<RatioRow> =
        Category::ALL.iter().map(|&c| RatioRow::new(c.name(), b.bytes(c), o.bytes(c))).collect();
    let map_set =
        |l: &LedgerSnapshot| l.bytes(Category::HashMap) + l.bytes(Category::LinkedHashMap) + l.bytes(Category::HashSet);
    rows.push(RatioRow::new(MAP_SET_ROW, map_set(b), map_set(o)));
    rows.push(RatioRow::new(OVERALL_ROW, b.overall, o.overall));
    Ok(ComparisonReport {
        spec: baseline.spec.clone(),
        behavior_identical: baseline.trace == optimized.trace,
        rows,
        baseline: baseline.clone(),
        optimized: optimized.clone(),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports always serialize")
}

fn strings(cells: &[&str]) -> Vec<String> {
    cells.iter().map(|s| s.to_string()).collect()
}

/// Left-aligns the first column, right-aligns the rest.
fn table(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let mut line = String::new();
        for (i, (cell, w)) in row.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(line, "{cell:<w$}");
            } else {
                let _ = write!(line, "  {cell:>w$}");
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::SiteId;

    #[test]
    fn ratio_serializes_as_number_or_na() {
        assert_eq!(serde_json::to_string(&Ratio::of(1, 4)).unwrap(), "0.25");
        assert_eq!(serde_json::to_string(&Ratio::of(3, 0)).unwrap(), "\"n/a\"");
        assert_eq!(serde_json::from_str::<Ratio>("\"n/a\"").unwrap(), Ratio::NotApplicable);
        assert!(serde_json::from_str::<Ratio>("\"x\"").is_err());
    }

    #[test]
    fn histogram_single_class_zero_site() {
        let mut store = ProfileStore::new();
        let site = SiteId::single("A.a()", 1).unwrap();
        for _ in 0..5 {
            store.record_allocation(&site, DsKind::HashSet).unwrap();
        }
        let h = histogram(&store);
        let nonzero: Vec<_> = h.kinds.values().flat_map(|row| row.iter().copied()).filter(|&n| n != 0).collect();
        assert_eq!(nonzero, [5]);
        assert_eq!(h.allocations(DsKind::HashSet), 5);
        assert!(h.to_text().contains("HASH_SET"));
    }

    #[test]
    fn histogram_matches_hand_tally() {
        // Three sites: 3 maps reaching sizes 0, 1, 70; 2 linked maps reaching
        // 2 and 9; one list reaching 300000.
        let mut store = ProfileStore::new();
        let a = SiteId::single("A.a()", 1).unwrap();
        let b = SiteId::single("B.b()", 2).unwrap();
        let c = SiteId::single("C.c()", 3).unwrap();
        for size in [0, 1, 70] {
            store.record_allocation(&a, DsKind::HashMap).unwrap();
            store.record_size_change(&a, 0, size).unwrap();
        }
        for size in [2, 9] {
            store.record_allocation(&b, DsKind::LinkedHashMap).unwrap();
            store.record_size_change(&b, 0, size).unwrap();
        }
        store.record_allocation(&c, DsKind::ArrayList).unwrap();
        store.record_size_change(&c, 0, 300_000).unwrap();
        let h = histogram(&store);
        assert_eq!(h.kinds[&DsKind::HashMap], [1, 1, 0, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(h.kinds[&DsKind::LinkedHashMap], [0, 0, 1, 0, 1, 0, 0, 0, 0, 0]);
        assert_eq!(h.kinds[&DsKind::ArrayList], [0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert!(!h.kinds.contains_key(&DsKind::HashSet));
    }

    #[test]
    fn table_aligns_columns() {
        let t = table(strings(&["a", "bb"]), vec![strings(&["long", "1"])]);
        assert_eq!(t, "a     bb\nlong   1\n");
    }
}
