use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Domain;
use super::quadrant::{ExampleRef, QuadrantIndex, QuadrantKey};
use crate::error::{Error, Result};

/// What a stream of batches is drawn for.
#[derive(Clone, Debug, PartialEq)]
pub enum BatchPurpose {
    /// Source negatives, half from each group.
    FairnessSource,
    /// Target negatives, half from each group.
    FairnessTarget,
    /// Negatives, half source and half target, each half split evenly by group.
    TransferNegatives,
    /// Uniform over every row of one domain.
    Task(Domain),
    /// Arbitrary comparison: side `s` of each batch comes from `sides[s]`, and
    /// every listed quadrant contributes the same number of rows.
    Sides(Vec<Vec<QuadrantKey>>),
}

impl BatchPurpose {
    /// The quadrant lists compared by the purpose, or `None` for task batches.
    pub fn sides(&self) -> Option<Vec<Vec<QuadrantKey>>> {
        use Domain::{Source as S, Target as T};
        let k = QuadrantKey::new;
        match self {
            BatchPurpose::FairnessSource => Some(vec![vec![k(S, 0, 0)], vec![k(S, 1, 0)]]),
            BatchPurpose::FairnessTarget => Some(vec![vec![k(T, 0, 0)], vec![k(T, 1, 0)]]),
            BatchPurpose::TransferNegatives => Some(vec![
                vec![k(S, 0, 0), k(S, 1, 0)],
                vec![k(T, 0, 0), k(T, 1, 0)],
            ]),
            BatchPurpose::Task(_) => None,
            BatchPurpose::Sides(s) => Some(s.clone()),
        }
    }
}

/// Rows of one batch and, for balanced purposes, the side each row belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub rows: Vec<ExampleRef>,
    pub sides: Vec<u8>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Endless walk over a bucket in shuffled order, reshuffling after each pass.
/// Buckets smaller than the draw are revisited, i.e. sampled with replacement
/// across passes.
#[derive(Clone, Debug)]
struct Cycler {
    items: Vec<ExampleRef>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl Cycler {
    fn new(items: Vec<ExampleRef>, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut c = Cycler { items, pos: 0, rng };
        c.items.shuffle(&mut c.rng);
        c
    }

    fn take(&mut self, n: usize, out: &mut Vec<ExampleRef>) {
        for _ in 0..n {
            if self.pos == self.items.len() {
                self.items.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.items[self.pos]);
            self.pos += 1;
        }
    }
}

/// Deterministic batch stream for one purpose.
#[derive(Clone, Debug)]
pub struct BalancedSampler {
    cyclers: Vec<(u8, Cycler)>,
    per_bucket: usize,
}

impl BalancedSampler {
    pub fn next_batch(&mut self) -> Batch {
        let mut rows = Vec::with_capacity(self.per_bucket * self.cyclers.len());
        let mut sides = Vec::with_capacity(rows.capacity());
        for (side, c) in &mut self.cyclers {
            c.take(self.per_bucket, &mut rows);
            sides.resize(rows.len(), *side);
        }
        Batch { rows, sides }
    }
}

impl Iterator for BalancedSampler {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        Some(self.next_batch())
    }
}

/// Uniform batches over rows `0..n` of a standalone dataset, tagged as source rows.
pub fn uniform_batches(n: usize, batch_size: usize, seed: u64) -> Result<BalancedSampler> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    uniform_rows(Domain::Source, n, batch_size, seed)
}

fn uniform_rows(domain: Domain, n: usize, batch_size: usize, seed: u64) -> Result<BalancedSampler> {
    if n == 0 {
        return Err(Error::Sampling {
            bucket: format!("{domain}(all rows)"),
        });
    }
    let items = (0..n).map(|index| ExampleRef { domain, index }).collect();
    Ok(BalancedSampler {
        cyclers: vec![(0, Cycler::new(items, seed, 0))],
        per_bucket: batch_size,
    })
}

/// Builds the batch stream for `purpose`. Balanced purposes need `batch_size`
/// divisible by the number of quadrants involved and every such quadrant
/// non-empty.
pub fn balanced_batches(
    index: &QuadrantIndex,
    purpose: &BatchPurpose,
    batch_size: usize,
    seed: u64,
) -> Result<BalancedSampler> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let Some(sides) = purpose.sides() else {
        let BatchPurpose::Task(domain) = purpose else {
            unreachable!("only task batches have no sides")
        };
        return uniform_rows(*domain, index.domain_len(*domain), batch_size, seed);
    };
    let n_buckets: usize = sides.iter().map(Vec::len).sum();
    if n_buckets == 0 || sides.iter().any(Vec::is_empty) || sides.len() > 256 {
        return Err(Error::Config(
            "every batch side needs at least one quadrant".into(),
        ));
    }
    if !batch_size.is_multiple_of(n_buckets) {
        return Err(Error::Config(format!(
            "batch size {batch_size} is not divisible by the {n_buckets} balanced quadrants"
        )));
    }
    let mut cyclers = Vec::with_capacity(n_buckets);
    for (s, keys) in sides.iter().enumerate() {
        for key in keys {
            let bucket = index.bucket(*key);
            if bucket.is_empty() {
                return Err(Error::Sampling {
                    bucket: key.to_string(),
                });
            }
            let items = bucket
                .iter()
                .map(|&i| ExampleRef {
                    domain: key.domain,
                    index: i,
                })
                .collect();
            let stream = cyclers.len() as u64;
            cyclers.push((s as u8, Cycler::new(items, seed, stream)));
        }
    }
    Ok(BalancedSampler {
        cyclers,
        per_bucket: batch_size / n_buckets,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::data::{gen_synthetic, partition_quadrants, SyntheticSpec};

    fn index() -> (QuadrantIndex, crate::data::Dataset, crate::data::Dataset) {
        let (s, t) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        (partition_quadrants(&s, &t), s, t)
    }

    #[test]
    fn fairness_batches_are_half_per_group() {
        let (q, s, _) = index();
        let mut it = balanced_batches(&q, &BatchPurpose::FairnessSource, 512, 3).unwrap();
        for _ in 0..3 {
            let b = it.next_batch();
            assert_eq!(b.len(), 512);
            let groups: Vec<u8> = b.rows.iter().map(|r| s.examples()[r.index].group).collect();
            assert_eq!(groups.iter().filter(|&&g| g == 0).count(), 256);
            assert!(b.rows.iter().all(|r| r.domain == Domain::Source));
            assert!(b.rows.iter().all(|r| s.examples()[r.index].label == 0));
            for (r, &side) in b.rows.iter().zip(&b.sides) {
                assert_eq!(s.examples()[r.index].group, side);
            }
        }
    }

    #[test]
    fn transfer_batches_balance_domain_and_group() {
        let (q, s, t) = index();
        let b = balanced_batches(&q, &BatchPurpose::TransferNegatives, 512, 1)
            .unwrap()
            .next_batch();
        let mut counts = BTreeMap::new();
        for r in &b.rows {
            let d = if r.domain == Domain::Source { &s } else { &t };
            let e = &d.examples()[r.index];
            assert_eq!(e.label, 0);
            *counts.entry((r.domain, e.group)).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c == 128));
        assert_eq!(b.sides.iter().filter(|&&s| s == 1).count(), 256);
    }

    #[test]
    fn same_seed_same_stream() {
        let (q, _, _) = index();
        let a: Vec<Batch> = balanced_batches(&q, &BatchPurpose::FairnessTarget, 64, 9)
            .unwrap()
            .take(5)
            .collect();
        let b: Vec<Batch> = balanced_batches(&q, &BatchPurpose::FairnessTarget, 64, 9)
            .unwrap()
            .take(5)
            .collect();
        assert_eq!(a, b);
        let c: Vec<Batch> = balanced_batches(&q, &BatchPurpose::FairnessTarget, 64, 10)
            .unwrap()
            .take(5)
            .collect();
        assert_ne!(a, c);
    }

    #[test]
    fn small_bucket_is_covered_within_ceil_batches() {
        let (s, t) = gen_synthetic(&SyntheticSpec {
            n_minor: 50,
            ..Default::default()
        })
        .unwrap();
        let q = partition_quadrants(&s, &t);
        let minority = q.bucket(QuadrantKey::new(Domain::Source, 0, 0)).to_vec();
        let mut it = balanced_batches(&q, &BatchPurpose::FairnessSource, 512, 4).unwrap();
        let rounds = 256usize.div_ceil(50);
        let mut seen = BTreeMap::new();
        for _ in 0..rounds {
            for r in it.next_batch().rows {
                if s.examples()[r.index].group == 0 {
                    *seen.entry(r.index).or_insert(0usize) += 1;
                }
            }
        }
        assert_eq!(seen.len(), minority.len());
        // indices repeat inside a batch once the bucket is smaller than its share
        assert!(seen.values().all(|&c| c >= 5));
    }

    #[test]
    fn empty_bucket_error_names_it() {
        let (s, t) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        let pos: Vec<usize> = (0..t.len())
            .filter(|&i| t.examples()[i].label == 1)
            .collect();
        let q = partition_quadrants(&s, &t.subset(&pos).unwrap());
        match balanced_batches(&q, &BatchPurpose::FairnessTarget, 512, 0) {
            Err(Error::Sampling { bucket }) => assert!(bucket.contains("target")),
            other => panic!("expected sampling error, got {other:?}"),
        }
    }

    #[test]
    fn indivisible_batch_is_config_error() {
        let (q, _, _) = index();
        assert!(matches!(
            balanced_batches(&q, &BatchPurpose::TransferNegatives, 510, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn task_batches_cover_domain() {
        let (q, s, _) = index();
        let b = balanced_batches(&q, &BatchPurpose::Task(Domain::Source), s.len(), 0)
            .unwrap()
            .next_batch();
        let mut idx: Vec<usize> = b.rows.iter().map(|r| r.index).collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..s.len()).collect::<Vec<_>>());
    }
}
