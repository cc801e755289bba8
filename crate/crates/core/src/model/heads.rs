use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mmd::KernelSpec;
use crate::data::{BatchPurpose, Domain, QuadrantKey, Schema};
use crate::error::{Error, Result};
use crate::numcore::{Activation, HeadId, ModelParams, Topology, TASK_HEAD};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeadKind {
    Task,
    FairnessMmd,
    TransferMmd,
    FairnessAdversarial,
    TransferAdversarial,
}

impl HeadKind {
    pub fn is_adversarial(self) -> bool {
        matches!(
            self,
            HeadKind::FairnessAdversarial | HeadKind::TransferAdversarial
        )
    }

    pub fn is_mmd(self) -> bool {
        matches!(self, HeadKind::FairnessMmd | HeadKind::TransferMmd)
    }

    pub fn is_transfer(self) -> bool {
        matches!(self, HeadKind::TransferMmd | HeadKind::TransferAdversarial)
    }
}

/// One loss term. Debiasing heads compare the two sides of their balanced
/// batches; `output` names the network head whose scalar output they read.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadSpec {
    pub name: String,
    pub kind: HeadKind,
    pub weight: f64,
    /// Batches the head draws; `Task(_)` for the task head.
    pub purpose: BatchPurpose,
    pub output: HeadId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arrangement {
    SourceOnly,
    TargetOnly,
    SourceTarget,
    Transfer,
}

impl Arrangement {
    pub const ALL: [Arrangement; 4] = [
        Arrangement::SourceOnly,
        Arrangement::TargetOnly,
        Arrangement::SourceTarget,
        Arrangement::Transfer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Arrangement::SourceOnly => "source-only",
            Arrangement::TargetOnly => "target-only",
            Arrangement::SourceTarget => "source+target",
            Arrangement::Transfer => "transfer",
        }
    }

    fn fairness_domains(self) -> &'static [Domain] {
        match self {
            Arrangement::SourceOnly => &[Domain::Source],
            Arrangement::TargetOnly => &[Domain::Target],
            Arrangement::SourceTarget | Arrangement::Transfer => &[Domain::Source, Domain::Target],
        }
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arrangement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arrangement::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown arrangement {s:?}")))
    }
}

/// Which quadrants a fairness head compares across groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FairnessConditioning {
    /// Negatives only (false-positive rates).
    Negatives,
    /// Both labels pooled per group.
    AllLabels,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub embedding_dim: usize,
    pub hidden: usize,
    /// λ_Fair, applied to every fairness head.
    pub fairness_weight: f64,
    /// λ_DA, applied to every transfer head.
    pub transfer_weight: f64,
    pub seed: u64,
    /// Evaluate every this many steps; the final step is always evaluated.
    pub eval_every: usize,
    pub kernel: KernelSpec,
    pub adversarial: bool,
    /// Compare a dedicated one-dimensional head instead of the task logit.
    pub separate_mmd_head: bool,
    pub fairness_conditioning: FairnessConditioning,
    /// Per-label fairness heads and four per-quadrant transfer heads.
    pub equalized_odds: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 10_000,
            batch_size: 512,
            lr: 0.1,
            embedding_dim: 64,
            hidden: 256,
            fairness_weight: 0.0,
            transfer_weight: 0.0,
            seed: 0,
            eval_every: 10_000,
            kernel: KernelSpec::default(),
            adversarial: false,
            separate_mmd_head: false,
            fairness_conditioning: FairnessConditioning::Negatives,
            equalized_odds: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::Config(
                "steps, batch size and eval interval must be positive".into(),
            ));
        }
        if self.embedding_dim == 0 || self.hidden == 0 {
            return Err(Error::Config(
                "embedding and hidden widths must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        for w in [self.fairness_weight, self.transfer_weight] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!(
                    "head weight {w} must be nonnegative"
                )));
            }
        }
        Ok(())
    }
}

fn fairness_sides(
    domain: Domain,
    conditioning: FairnessConditioning,
    label: Option<u8>,
) -> BatchPurpose {
    let k = QuadrantKey::new;
    let labels: Vec<u8> = match (label, conditioning) {
        (Some(l), _) => vec![l],
        (None, FairnessConditioning::Negatives) => vec![0],
        (None, FairnessConditioning::AllLabels) => vec![0, 1],
    };
    match (domain, labels.as_slice()) {
        (Domain::Source, [0]) => BatchPurpose::FairnessSource,
        (Domain::Target, [0]) => BatchPurpose::FairnessTarget,
        _ => BatchPurpose::Sides(
            (0..2)
                .map(|g| labels.iter().map(|&l| k(domain, g, l)).collect())
                .collect(),
        ),
    }
}

/// Expands an arrangement into its head list (task head first) and initializes
/// the network for `schema`'s inputs.
pub fn build_model(
    arrangement: Arrangement,
    config: &TrainConfig,
    schema: &Schema,
) -> Result<(ModelParams, Vec<HeadSpec>)> {
    config.validate()?;
    let mut heads = vec![HeadSpec {
        name: "task".into(),
        kind: HeadKind::Task,
        weight: 1.0,
        purpose: BatchPurpose::Task(Domain::Source),
        output: TASK_HEAD,
    }];
    let (fair_kind, transfer_kind) = if config.adversarial {
        (HeadKind::FairnessAdversarial, HeadKind::TransferAdversarial)
    } else {
        (HeadKind::FairnessMmd, HeadKind::TransferMmd)
    };
    let labels: Vec<Option<u8>> = if config.equalized_odds {
        vec![Some(0), Some(1)]
    } else {
        vec![None]
    };
    for &domain in arrangement.fairness_domains() {
        for &label in &labels {
            let suffix = label.map_or(String::new(), |l| format!("-l{l}"));
            heads.push(HeadSpec {
                name: format!("fairness-{domain}{suffix}"),
                kind: fair_kind,
                weight: config.fairness_weight,
                purpose: fairness_sides(domain, config.fairness_conditioning, label),
                output: TASK_HEAD,
            });
        }
    }
    if arrangement == Arrangement::Transfer {
        if config.equalized_odds {
            for group in 0..2 {
                for label in 0..2 {
                    heads.push(HeadSpec {
                        name: format!("transfer-a{group}-l{label}"),
                        kind: transfer_kind,
                        weight: config.transfer_weight,
                        purpose: BatchPurpose::Sides(vec![
                            vec![QuadrantKey::new(Domain::Source, group, label)],
                            vec![QuadrantKey::new(Domain::Target, group, label)],
                        ]),
                        output: TASK_HEAD,
                    });
                }
            }
        } else {
            heads.push(HeadSpec {
                name: "transfer".into(),
                kind: transfer_kind,
                weight: config.transfer_weight,
                purpose: BatchPurpose::TransferNegatives,
                output: TASK_HEAD,
            });
        }
    }
    let mut next = 1;
    for h in heads.iter_mut().skip(1) {
        if h.kind.is_adversarial() || config.separate_mmd_head {
            h.output = HeadId(next);
            next += 1;
        }
    }
    let topology = Topology {
        numeric_dim: schema.numeric_columns().len(),
        embeddings: schema.embedding_shapes(config.embedding_dim),
        hidden: Some(config.hidden),
        activation: Activation::Relu,
        heads: next,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "init", 0));
    Ok((ModelParams::glorot(topology, &mut rng), heads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    fn schema() -> Schema {
        Schema {
            features: vec![
                FeatureSpec::numeric("x", 0.0, 1.0),
                FeatureSpec::categorical("c", vec!["a".into(), "b".into()]),
            ],
        }
    }

    fn small() -> TrainConfig {
        TrainConfig {
            embedding_dim: 3,
            hidden: 4,
            ..Default::default()
        }
    }

    #[test]
    fn head_counts_per_arrangement() {
        let counts = [
            (Arrangement::SourceOnly, 2),
            (Arrangement::TargetOnly, 2),
            (Arrangement::SourceTarget, 3),
            (Arrangement::Transfer, 4),
        ];
        for (a, n) in counts {
            let (params, heads) = build_model(a, &small(), &schema()).unwrap();
            assert_eq!(heads.len(), n, "{a}");
            assert_eq!(params.num_heads(), 1);
            assert_eq!(heads.iter().filter(|h| h.kind == HeadKind::Task).count(), 1);
        }
    }

    #[test]
    fn transfer_head_uses_negative_quadrants() {
        let (_, heads) = build_model(Arrangement::Transfer, &small(), &schema()).unwrap();
        let t = heads
            .iter()
            .find(|h| h.kind == HeadKind::TransferMmd)
            .unwrap();
        assert_eq!(t.purpose, BatchPurpose::TransferNegatives);
        let sides = t.purpose.sides().unwrap();
        assert!(sides.iter().flatten().all(|k| k.label == 0));
    }

    #[test]
    fn adversarial_heads_get_their_own_outputs() {
        let cfg = TrainConfig {
            adversarial: true,
            ..small()
        };
        let (params, heads) = build_model(Arrangement::Transfer, &cfg, &schema()).unwrap();
        assert_eq!(params.num_heads(), 4);
        let outs: Vec<usize> = heads.iter().map(|h| h.output.0).collect();
        assert_eq!(outs, vec![0, 1, 2, 3]);
    }

    #[test]
    fn equalized_odds_mode_head_layout() {
        let cfg = TrainConfig {
            equalized_odds: true,
            ..small()
        };
        let (_, heads) = build_model(Arrangement::Transfer, &cfg, &schema()).unwrap();
        assert_eq!(heads.len(), 1 + 4 + 4);
    }

    #[test]
    fn arrangements_share_task_initialization() {
        let (a, _) = build_model(Arrangement::SourceOnly, &small(), &schema()).unwrap();
        let cfg = TrainConfig {
            adversarial: true,
            ..small()
        };
        let (b, _) = build_model(Arrangement::Transfer, &cfg, &schema()).unwrap();
        assert_eq!(a.values.hidden_weight, b.values.hidden_weight);
        assert_eq!(a.head_weight(TASK_HEAD), b.head_weight(TASK_HEAD));
    }

    #[test]
    fn names_parse() {
        for a in Arrangement::ALL {
            assert_eq!(a.as_str().parse::<Arrangement>().unwrap(), a);
        }
        assert!("both".parse::<Arrangement>().is_err());
    }

    #[test]
    fn invalid_config() {
        let cfg = TrainConfig {
            fairness_weight: -1.0,
            ..small()
        };
        assert!(matches!(
            build_model(Arrangement::SourceOnly, &cfg, &schema()),
            Err(Error::Config(_))
        ));
    }
}
