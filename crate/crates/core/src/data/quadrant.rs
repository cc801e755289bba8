use std::collections::BTreeMap;
use std::fmt;

use super::dataset::{Dataset, Domain};

/// One (domain, group α, label l) cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadrantKey {
    pub domain: Domain,
    pub group: u8,
    pub label: u8,
}

impl QuadrantKey {
    pub const fn new(domain: Domain, group: u8, label: u8) -> Self {
        QuadrantKey {
            domain,
            group,
            label,
        }
    }

    /// All eight keys in a fixed order.
    pub fn all() -> [QuadrantKey; 8] {
        let mut out = [QuadrantKey::new(Domain::Source, 0, 0); 8];
        let mut k = 0;
        for domain in [Domain::Source, Domain::Target] {
            for group in 0..2 {
                for label in 0..2 {
                    out[k] = QuadrantKey::new(domain, group, label);
                    k += 1;
                }
            }
        }
        out
    }
}

impl fmt::Display for QuadrantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(group={}, label={})",
            self.domain, self.group, self.label
        )
    }
}

/// A row in either the source or the target dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExampleRef {
    pub domain: Domain,
    pub index: usize,
}

/// Source and target rows bucketed by quadrant. Indices refer to the dataset
/// of the key's domain.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadrantIndex {
    buckets: BTreeMap<QuadrantKey, Vec<usize>>,
    source_len: usize,
    target_len: usize,
    warnings: Vec<String>,
}

impl QuadrantIndex {
    pub fn bucket(&self, key: QuadrantKey) -> &[usize] {
        &self.buckets[&key]
    }

    pub fn buckets(&self) -> &BTreeMap<QuadrantKey, Vec<usize>> {
        &self.buckets
    }

    pub fn domain_len(&self, domain: Domain) -> usize {
        match domain {
            Domain::Source => self.source_len,
            Domain::Target => self.target_len,
        }
    }

    /// Messages about empty buckets.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn total(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }
}

/// Buckets every source row under `Domain::Source` and every target row under
/// `Domain::Target`, regardless of the rows' own domain tags.
pub fn partition_quadrants(source: &Dataset, target: &Dataset) -> QuadrantIndex {
    let mut buckets: BTreeMap<QuadrantKey, Vec<usize>> = QuadrantKey::all()
        .into_iter()
        .map(|k| (k, Vec::new()))
        .collect();
    for (domain, data) in [(Domain::Source, source), (Domain::Target, target)] {
        for (i, ex) in data.examples().iter().enumerate() {
            let key = QuadrantKey::new(domain, ex.group, ex.label);
            buckets.get_mut(&key).expect("all keys present").push(i);
        }
    }
    let warnings = buckets
        .iter()
        .filter(|(_, v)| v.is_empty())
        .map(|(k, _)| format!("quadrant {k} is empty"))
        .collect();
    QuadrantIndex {
        buckets,
        source_len: source.len(),
        target_len: target.len(),
        warnings,
    }
}
