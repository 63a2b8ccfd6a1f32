//! Built-in workloads, each exercising one family of replacements.

use super::spec::{SiteSpec, WorkloadSpec};
use crate::profile::{DsKind, ElementTypeTag};

pub const FIXTURE_NAMES: [&str; 5] =
    ["mostly-empty-maps", "singleton-with-drift", "large-economic-maps", "int-lists", "set-heavy"];

pub fn fixture(name: &str) -> Option<WorkloadSpec> {
    let sites = match name {
        "mostly-empty-maps" => mostly_empty_maps(),
        "singleton-with-drift" => singleton_with_drift(),
        "large-economic-maps" => large_economic_maps(),
        "int-lists" => int_lists(),
        "set-heavy" => set_heavy(),
        _ => return None,
    };
    let seed = 0x5eed_0000 + FIXTURE_NAMES.iter().position(|n| *n == name).expect("listed above") as u64;
    Some(WorkloadSpec { name: name.to_string(), seed, sites })
}

fn mostly_empty_maps() -> Vec<SiteSpec> {
    let mut headers = SiteSpec::new("Request.headers(): 7", DsKind::HashMap, 400, &[(0, 1)]);
    headers.gets = 2;
    let mut attrs =
        SiteSpec::new("Session.attributes(): 3 > Session.init(): 12", DsKind::LinkedHashMap, 100, &[(0, 96), (1, 4)]);
    attrs.gets = 1;
    vec![headers, attrs]
}

fn singleton_with_drift() -> Vec<SiteSpec> {
    let mut lookups = SiteSpec::new("Cache.lookup(): 21", DsKind::HashMap, 1000, &[(1, 98), (2, 2)]);
    lookups.gets = 3;
    lookups.overwrites = 1;
    vec![lookups]
}

fn large_economic_maps() -> Vec<SiteSpec> {
    let mut index = SiteSpec::new("Index.build(): 40", DsKind::HashMap, 200, &[(12, 2), (30, 2), (100, 1)]);
    index.gets = 10;
    index.overwrites = 2;
    let mut ordered = SiteSpec::new("Config.load(): 8 > Config.section(): 15", DsKind::LinkedHashMap, 100, &[(20, 1)]);
    ordered.gets = 5;
    ordered.removes = 2;
    // iterated heavily, so the entry-access ratio keeps it a HashMap
    let mut scanned = SiteSpec::new("Report.totals(): 55", DsKind::HashMap, 50, &[(40, 1)]);
    scanned.entry_iterations = 2;
    scanned.gets = 4;
    vec![index, ordered, scanned]
}

fn int_lists() -> Vec<SiteSpec> {
    let mut ints = SiteSpec::new("Histogram.buckets(): 17", DsKind::ArrayList, 300, &[(20, 1), (50, 1)]);
    ints.element_tags = vec![ElementTypeTag::Int];
    ints.gets = 10;
    ints.overwrites = 3;
    let mut bytes = SiteSpec::new("Codec.frame(): 4", DsKind::ArrayList, 100, &[(8, 1)]);
    bytes.element_tags = vec![ElementTypeTag::Byte];
    bytes.gets = 4;
    let mut mixed = SiteSpec::new("Parser.tokens(): 31", DsKind::ArrayList, 100, &[(10, 1)]);
    mixed.element_tags = vec![ElementTypeTag::Int, ElementTypeTag::Object];
    let mut pairs = SiteSpec::new("Geometry.point(): 2", DsKind::ArrayList, 200, &[(2, 97), (3, 3)]);
    pairs.element_tags = vec![ElementTypeTag::Double];
    pairs.gets = 2;
    pairs.removes = 1;
    vec![ints, bytes, mixed, pairs]
}

fn set_heavy() -> Vec<SiteSpec> {
    let mut words = SiteSpec::new("Mnemonics.words(): 5", DsKind::HashSet, 200, &[(10, 1), (40, 1)]);
    words.gets = 20;
    words.entry_iterations = 1;
    let mut single = SiteSpec::new("Mnemonics.translate(): 9 > Mnemonics.digit(): 3", DsKind::HashSet, 300, &[(1, 1)]);
    single.gets = 2;
    let unused = SiteSpec::new("Mnemonics.visited(): 2", DsKind::HashSet, 300, &[(0, 1)]);
    vec![words, single, unused]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_is_valid() {
        for name in FIXTURE_NAMES {
            let spec = fixture(name).unwrap();
            spec.validate().unwrap();
            assert_eq!(spec.name, name);
        }
        assert!(fixture("nope").is_none());
    }
}
