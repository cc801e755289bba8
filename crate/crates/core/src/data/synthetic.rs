//! Two-dimensional Gaussian source/target domains.
//!
//! Source: group 1 (majority) draws `Y=0 ~ N([-1,-1], σ_major)` and
//! `Y=1 ~ N([-1,1], σ_major)`; group 0 (minority) draws `Y=0 ~ N([1,-1], σ_minor)`
//! and `Y=1 ~ N([1,1], σ_minor)`. The target keeps the majority distribution and
//! moves the minority to `Y=0 ~ N([1,c], σ_minor)`, `Y=1 ~ N([1,-c], σ_minor)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{AttributeColumns, Dataset, Domain, FeatureSpec, LabeledExample, Schema};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// Vertical position of the target minority's negative Gaussian.
    pub shift: f64,
    pub sigma_major: f64,
    pub sigma_minor: f64,
    pub n_major: usize,
    pub n_minor: usize,
    /// `true`: counts are per label-Gaussian. `false`: counts are per group and
    /// split evenly across the two labels.
    pub counts_per_gaussian: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            shift: 1.0,
            sigma_major: 0.5,
            sigma_minor: 0.3,
            n_major: 900,
            n_minor: 100,
            counts_per_gaussian: true,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_shift(shift: f64, seed: u64) -> Self {
        SyntheticSpec {
            shift,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let sigmas_ok = self.sigma_major > 0.0 && self.sigma_minor > 0.0;
        let per_label = |n: usize| if self.counts_per_gaussian { n } else { n / 2 };
        if !sigmas_ok || per_label(self.n_major) == 0 || per_label(self.n_minor) == 0 {
            return Err(Error::Argument(
                "synthetic spec needs positive sigmas and sample counts".into(),
            ));
        }
        if !self.shift.is_finite() {
            return Err(Error::Argument("shift must be finite".into()));
        }
        Ok(())
    }

    fn per_label(&self, n: usize) -> usize {
        if self.counts_per_gaussian {
            n
        } else {
            n / 2
        }
    }
}

/// Independent noise stream per named Gaussian.
fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

#[allow(clippy::too_many_arguments)]
fn draw(
    out: &mut Vec<LabeledExample>,
    center: [f64; 2],
    sigma: f64,
    n: usize,
    label: u8,
    group: u8,
    domain: Domain,
    rng: &mut ChaCha8Rng,
) {
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    for _ in 0..n {
        let x = center[0] + noise.sample(rng);
        let y = center[1] + noise.sample(rng);
        out.push(LabeledExample {
            features: vec![x, y],
            label,
            group,
            domain,
        });
    }
}

fn schema() -> Schema {
    Schema {
        features: vec![
            FeatureSpec::numeric("z0", 0.0, 1.0),
            FeatureSpec::numeric("z1", 0.0, 1.0),
        ],
    }
}

fn finish(examples: Vec<LabeledExample>) -> Result<Dataset> {
    let mut attrs = AttributeColumns::new();
    attrs.insert("group".into(), examples.iter().map(|e| e.group).collect());
    Dataset::new(schema(), examples, attrs)
}

/// Generates the source and target domains. Deterministic in `spec.seed`.
///
/// The two target-minority Gaussians take their noise from the stream tied to the
/// sign of their centre's second coordinate, so `c` and `-c` produce the same
/// points with swapped labels.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let n_major = spec.per_label(spec.n_major);
    let n_minor = spec.per_label(spec.n_minor);
    let (sm, sn) = (spec.sigma_major, spec.sigma_minor);

    let mut source = Vec::with_capacity(2 * (n_major + n_minor));
    draw(
        &mut source,
        [-1.0, -1.0],
        sm,
        n_major,
        0,
        1,
        Domain::Source,
        &mut stream(spec.seed, 1),
    );
    draw(
        &mut source,
        [-1.0, 1.0],
        sm,
        n_major,
        1,
        1,
        Domain::Source,
        &mut stream(spec.seed, 2),
    );
    draw(
        &mut source,
        [1.0, -1.0],
        sn,
        n_minor,
        0,
        0,
        Domain::Source,
        &mut stream(spec.seed, 3),
    );
    draw(
        &mut source,
        [1.0, 1.0],
        sn,
        n_minor,
        1,
        0,
        Domain::Source,
        &mut stream(spec.seed, 4),
    );

    let c = spec.shift;
    let (neg_tag, pos_tag) = if c >= 0.0 { (7, 8) } else { (8, 7) };
    let mut target = Vec::with_capacity(2 * (n_major + n_minor));
    draw(
        &mut target,
        [-1.0, -1.0],
        sm,
        n_major,
        0,
        1,
        Domain::Target,
        &mut stream(spec.seed, 5),
    );
    draw(
        &mut target,
        [-1.0, 1.0],
        sm,
        n_major,
        1,
        1,
        Domain::Target,
        &mut stream(spec.seed, 6),
    );
    draw(
        &mut target,
        [1.0, c],
        sn,
        n_minor,
        0,
        0,
        Domain::Target,
        &mut stream(spec.seed, neg_tag),
    );
    draw(
        &mut target,
        [1.0, -c],
        sn,
        n_minor,
        1,
        0,
        Domain::Target,
        &mut stream(spec.seed, pos_tag),
    );

    Ok((finish(source)?, finish(target)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(d: &Dataset, group: u8, label: u8) -> usize {
        d.examples()
            .iter()
            .filter(|e| e.group == group && e.label == label)
            .count()
    }

    fn mean_of(d: &Dataset, group: u8, label: u8) -> [f64; 2] {
        let pts: Vec<_> = d
            .examples()
            .iter()
            .filter(|e| e.group == group && e.label == label)
            .collect();
        let n = pts.len() as f64;
        [
            pts.iter().map(|e| e.features[0]).sum::<f64>() / n,
            pts.iter().map(|e| e.features[1]).sum::<f64>() / n,
        ]
    }

    #[test]
    fn default_counts() {
        let (s, t) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        for d in [&s, &t] {
            assert_eq!(d.len(), 2000);
            assert_eq!(count(d, 1, 0), 900);
            assert_eq!(count(d, 1, 1), 900);
            assert_eq!(count(d, 0, 0), 100);
            assert_eq!(count(d, 0, 1), 100);
        }
        assert!(s.examples().iter().all(|e| e.domain == Domain::Source));
        assert!(t.examples().iter().all(|e| e.domain == Domain::Target));
    }

    #[test]
    fn per_group_counts_option() {
        let spec = SyntheticSpec {
            counts_per_gaussian: false,
            ..Default::default()
        };
        let (s, _) = gen_synthetic(&spec).unwrap();
        assert_eq!(count(&s, 1, 0), 450);
        assert_eq!(count(&s, 0, 1), 50);
    }

    #[test]
    fn sample_means_near_centres() {
        for seed in 0..5 {
            let (s, t) = gen_synthetic(&SyntheticSpec::with_shift(0.4, seed)).unwrap();
            let cases = [
                (&s, 1, 0, [-1.0, -1.0], 0.5, 900.0),
                (&s, 1, 1, [-1.0, 1.0], 0.5, 900.0),
                (&s, 0, 0, [1.0, -1.0], 0.3, 100.0),
                (&s, 0, 1, [1.0, 1.0], 0.3, 100.0),
                (&t, 0, 0, [1.0, 0.4], 0.3, 100.0),
                (&t, 0, 1, [1.0, -0.4], 0.3, 100.0),
            ];
            for (d, g, l, centre, sigma, n) in cases {
                let m = mean_of(d, g, l);
                let tol = 3.0 * sigma / f64::sqrt(n);
                assert!((m[0] - centre[0]).abs() < tol, "{m:?} vs {centre:?}");
                assert!((m[1] - centre[1]).abs() < tol, "{m:?} vs {centre:?}");
            }
        }
    }

    #[test]
    fn negative_shift_aligns_target_minority_with_source() {
        let (s, t) = gen_synthetic(&SyntheticSpec::with_shift(-1.0, 2)).unwrap();
        let (ms, mt) = (mean_of(&s, 0, 0), mean_of(&t, 0, 0));
        assert!((ms[1] - mt[1]).abs() < 0.15);
        assert!((mt[1] + 1.0).abs() < 0.1);
    }

    #[test]
    fn seeded_generation_is_bit_identical() {
        let a = gen_synthetic(&SyntheticSpec::with_shift(0.0, 11)).unwrap();
        let b = gen_synthetic(&SyntheticSpec::with_shift(0.0, 11)).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(&SyntheticSpec::with_shift(0.0, 12)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn opposite_shifts_swap_minority_labels() {
        let (_, tp) = gen_synthetic(&SyntheticSpec::with_shift(0.7, 5)).unwrap();
        let (_, tn) = gen_synthetic(&SyntheticSpec::with_shift(-0.7, 5)).unwrap();
        let pts = |d: &Dataset, label: u8| -> Vec<Vec<f64>> {
            d.examples()
                .iter()
                .filter(|e| e.group == 0 && e.label == label)
                .map(|e| e.features.clone())
                .collect()
        };
        assert_eq!(pts(&tp, 0), pts(&tn, 1));
        assert_eq!(pts(&tp, 1), pts(&tn, 0));
        // majority untouched
        let maj = |d: &Dataset| -> Vec<Vec<f64>> {
            d.examples()
                .iter()
                .filter(|e| e.group == 1)
                .map(|e| e.features.clone())
                .collect()
        };
        assert_eq!(maj(&tp), maj(&tn));
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = SyntheticSpec {
            sigma_minor: 0.0,
            ..Default::default()
        };
        assert!(gen_synthetic(&spec).is_err());
    }
}
