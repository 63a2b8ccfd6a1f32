use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::profile::{DsKind, ElementTypeTag, SiteId};

/// Profiling runs use a reduced workload by default.
pub const DEFAULT_PROFILE_SCALE: f64 = 0.5;

/// A declarative workload: per site, how many instances to allocate and
/// what to do with each. Fully determined by the seed and the scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub name: String,
    pub seed: u64,
    pub sites: Vec<SiteSpec>,
}

/// Behavior of every instance allocated at one site. Counts of operations
/// are per instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSpec {
    pub ctx: SiteId,
    pub kind: DsKind,
    /// Instance count at scale 1.
    pub instances: u64,
    /// Target sizes, apportioned exactly by weight.
    pub sizes: Vec<SizeWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_capacity: Option<usize>,
    /// Map `get`, set `contains`, list `get_at` calls.
    #[serde(default)]
    pub gets: u64,
    /// Map puts of present keys, set re-adds, list `set_at` calls.
    #[serde(default)]
    pub overwrites: u64,
    /// Full traversals (the entry set for maps).
    #[serde(default)]
    pub entry_iterations: u64,
    /// Removals after the mixed phase.
    #[serde(default)]
    pub removes: u64,
    /// Tags that list elements are drawn from uniformly; defaults to OBJECT.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub element_tags: Vec<ElementTypeTag>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeWeight {
    pub size: u64,
    pub weight: u64,
}

/// What two reports must share to be comparable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecIdentity {
    pub name: String,
    pub seed: u64,
    pub scale: f64,
}

impl SiteSpec {
    pub fn new(ctx: &str, kind: DsKind, instances: u64, sizes: &[(u64, u64)]) -> Self {
        SiteSpec {
            ctx: ctx.parse().expect("fixture contexts are well-formed"),
            kind,
            instances,
            sizes: sizes.iter().map(|&(size, weight)| SizeWeight { size, weight }).collect(),
            initial_capacity: None,
            gets: 0,
            overwrites: 0,
            entry_iterations: 0,
            removes: 0,
            element_tags: Vec::new(),
        }
    }

    pub fn element_tags(&self) -> Vec<ElementTypeTag> {
        if self.element_tags.is_empty() {
            vec![ElementTypeTag::Object]
        } else {
            self.element_tags.clone()
        }
    }

    /// Instance count after scaling, rounded half away from zero.
    pub fn scaled_instances(&self, scale: f64) -> u64 {
        (self.instances as f64 * scale).round() as u64
    }

    /// Target size of each instance, in allocation order before shuffling:
    /// largest-remainder apportionment of `n` by weight.
    pub fn size_quotas(&self, n: u64) -> Vec<(u64, u64)> {
        let total: u128 = self.sizes.iter().map(|s| s.weight as u128).sum();
        let mut quotas: Vec<(u64, u64, u128)> = self
            .sizes
            .iter()
            .map(|s| {
                let exact = n as u128 * s.weight as u128;
                (s.size, (exact / total) as u64, exact % total)
            })
            .collect();
        let assigned: u64 = quotas.iter().map(|q| q.1).sum();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        // stable: ties go to the earlier entry
        order.sort_by(|&a, &b| quotas[b].2.cmp(&quotas[a].2));
        for &i in order.iter().take((n - assigned) as usize) {
            quotas[i].1 += 1;
        }
        quotas.into_iter().map(|(size, count, _)| (size, count)).collect()
    }
}

impl WorkloadSpec {
    pub fn parse(document: &str) -> Result<Self, HarnessError> {
        let spec: WorkloadSpec = serde_json::from_str(document)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs always serialize")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut seen = BTreeSet::new();
        for s in &self.sites {
            let ctx = s.ctx.ctx();
            if !seen.insert(&s.ctx) {
                return Err(HarnessError::Spec(format!("site {ctx} listed twice")));
            }
            if s.sizes.is_empty() || s.sizes.iter().any(|w| w.weight == 0) {
                return Err(HarnessError::Spec(format!("site {ctx}: sizes need positive weights")));
            }
            if s.kind != DsKind::ArrayList && !s.element_tags.is_empty() {
                return Err(HarnessError::Spec(format!("site {ctx}: element tags apply to lists only")));
            }
        }
        Ok(())
    }

    pub fn site(&self, site: &SiteId) -> Option<&SiteSpec> {
        self.sites.iter().find(|s| s.ctx == *site)
    }

    pub fn identity(&self, scale: f64) -> SpecIdentity {
        SpecIdentity { name: self.name.clone(), seed: self.seed, scale }
    }
}

pub(crate) fn check_scale(scale: f64) -> Result<(), HarnessError> {
    if scale.is_finite() && scale >= 0.0 {
        Ok(())
    } else {
        Err(HarnessError::Spec(format!("scale must be a finite non-negative number, got {scale}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotas_are_exact() {
        let s = SiteSpec::new("A.a(): 1", DsKind::HashMap, 1000, &[(1, 98), (2, 2)]);
        assert_eq!(s.size_quotas(1000), [(1, 980), (2, 20)]);
        assert_eq!(s.size_quotas(500), [(1, 490), (2, 10)]);
        let t = SiteSpec::new("A.a(): 1", DsKind::HashMap, 70, &[(0, 95), (3, 5)]);
        assert_eq!(t.size_quotas(70), [(0, 67), (3, 3)]);
        assert_eq!(t.size_quotas(35), [(0, 33), (3, 2)]);
        let thirds = SiteSpec::new("A.a(): 1", DsKind::HashMap, 10, &[(0, 1), (1, 1), (2, 1)]);
        assert_eq!(thirds.size_quotas(10), [(0, 4), (1, 3), (2, 3)]);
    }

    #[test]
    fn spec_json_round_trips() {
        let mut site = SiteSpec::new("A.a(): 10 > B.b(): 2", DsKind::ArrayList, 5, &[(3, 1)]);
        site.element_tags = vec![ElementTypeTag::Int];
        site.initial_capacity = Some(4);
        let spec = WorkloadSpec { name: "t".into(), seed: 9, sites: vec![site] };
        assert_eq!(WorkloadSpec::parse(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn rejects_invalid_specs() {
        let site = SiteSpec::new("A.a(): 1", DsKind::HashMap, 5, &[(3, 1)]);
        let dup = WorkloadSpec { name: "t".into(), seed: 1, sites: vec![site.clone(), site.clone()] };
        assert!(dup.validate().is_err());
        let mut zero = site.clone();
        zero.sizes[0].weight = 0;
        assert!(WorkloadSpec { name: "t".into(), seed: 1, sites: vec![zero] }.validate().is_err());
        let mut tags = site;
        tags.element_tags = vec![ElementTypeTag::Int];
        assert!(WorkloadSpec { name: "t".into(), seed: 1, sites: vec![tags] }.validate().is_err());
        assert!(check_scale(-1.0).is_err() && check_scale(f64::NAN).is_err() && check_scale(0.0).is_ok());
    }
}
