use super::heads::{HeadKind, HeadSpec, TrainConfig};
use super::loss::{total_loss, HeadBatch, LossBreakdown, TaskBatch};
use crate::data::{
    balanced_batches, partition_quadrants, uniform_batches, BalancedSampler, Dataset, Domain,
    ExampleRef,
};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::numcore::{
    adagrad_step, forward_features, DenseMatrix, FeatureBatch, ModelParams, TASK_HEAD,
};
use crate::seed::derive_seed;

/// Everything a training run reads.
#[derive(Clone, Debug)]
pub struct TrainData<'a> {
    /// Rows for the task loss.
    pub task: &'a Dataset,
    /// Pools bucketed into the source and target quadrants for the debiasing heads.
    pub source: &'a Dataset,
    pub target: &'a Dataset,
    /// Named held-out sets scored during training.
    pub eval: Vec<(String, &'a Dataset)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub step: usize,
    pub set: String,
    pub report: MetricsReport,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub params: ModelParams,
    pub history: Vec<EvalRecord>,
    pub last_loss: LossBreakdown,
}

const EVAL_CHUNK: usize = 4096;

/// Task-head probabilities for every row of `data`.
pub fn predict_probs(params: &ModelParams, data: &Dataset) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(data.len());
    let all: Vec<usize> = (0..data.len()).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let batch = data.feature_batch(chunk);
        out.extend(forward_features(params, &batch, TASK_HEAD)?.probs);
    }
    Ok(out)
}

pub fn evaluate(params: &ModelParams, data: &Dataset) -> Result<MetricsReport> {
    MetricsReport::from_probs(&predict_probs(params, data)?, data)
}

fn gather(table: &FeatureBatch, idx: &[usize], out: &mut FeatureBatch) {
    let cols = table.numeric.cols();
    let rows = out.len() + idx.len();
    let mut data = std::mem::take(&mut out.numeric).into_vec();
    for &i in idx {
        data.extend_from_slice(table.numeric.row(i));
    }
    out.numeric = DenseMatrix::from_vec(rows, cols, data).expect("gathered shape");
    for (dst, src) in out.categorical.iter_mut().zip(&table.categorical) {
        dst.extend(idx.iter().map(|&i| src[i]));
    }
}

fn empty_like(table: &FeatureBatch, capacity: usize) -> FeatureBatch {
    let cols = table.numeric.cols();
    FeatureBatch {
        numeric: DenseMatrix::from_vec(0, cols, Vec::with_capacity(capacity * cols))
            .expect("empty"),
        categorical: vec![Vec::with_capacity(capacity); table.categorical.len()],
    }
}

fn gather_refs(source: &FeatureBatch, target: &FeatureBatch, rows: &[ExampleRef]) -> FeatureBatch {
    let mut out = empty_like(source, rows.len());
    for r in rows {
        let table = if r.domain == Domain::Source {
            source
        } else {
            target
        };
        gather(table, &[r.index], &mut out);
    }
    out
}

/// Runs `config.steps` Adagrad updates on [`total_loss`], drawing a fresh batch per
/// enabled head each step. Heads with zero weight draw nothing and contribute
/// nothing. Each head's sampler is seeded from the head's name, so heads shared
/// between arrangements see the same batches.
pub fn train(
    mut params: ModelParams,
    heads: &[HeadSpec],
    data: &TrainData<'_>,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    config.validate()?;
    if heads.iter().filter(|h| h.kind == HeadKind::Task).count() != 1 {
        return Err(Error::Config("exactly one task head is required".into()));
    }
    let task_table = data.task.all_features();
    let src_table = data.source.all_features();
    let tgt_table = data.target.all_features();
    let task_labels = data.task.labels();
    let index = partition_quadrants(data.source, data.target);

    let mut task_sampler = uniform_batches(
        data.task.len(),
        config.batch_size,
        derive_seed(config.seed, "task", 0),
    )?;
    let mut samplers: Vec<Option<BalancedSampler>> = Vec::with_capacity(heads.len());
    for h in heads {
        samplers.push(if h.kind != HeadKind::Task && h.weight > 0.0 {
            Some(balanced_batches(
                &index,
                &h.purpose,
                config.batch_size,
                derive_seed(config.seed, &h.name, 0),
            )?)
        } else {
            None
        });
    }

    let mut history = Vec::new();
    let mut last_loss = None;
    for step in 1..=config.steps {
        let tb = task_sampler.next_batch();
        let mut features = empty_like(&task_table, tb.len());
        let idx: Vec<usize> = tb.rows.iter().map(|r| r.index).collect();
        gather(&task_table, &idx, &mut features);
        let task = TaskBatch {
            features,
            labels: tb.rows.iter().map(|r| task_labels[r.index]).collect(),
        };
        let head_batches: Vec<Option<HeadBatch>> = samplers
            .iter_mut()
            .map(|s| {
                s.as_mut().map(|s| {
                    let b = s.next_batch();
                    HeadBatch {
                        features: gather_refs(&src_table, &tgt_table, &b.rows),
                        sides: b.sides,
                    }
                })
            })
            .collect();
        let (loss, grads) = total_loss(&params, &task, &head_batches, heads, &config.kernel)
            .map_err(|e| diverged(step, e))?;
        if !loss.total.is_finite() {
            return Err(Error::TrainingDiverged {
                step,
                message: format!("loss is {}", loss.total),
            });
        }
        adagrad_step(&mut params, &grads, config.lr).map_err(|e| diverged(step, e))?;
        last_loss = Some(loss);
        if step % config.eval_every == 0 || step == config.steps {
            for (name, set) in &data.eval {
                history.push(EvalRecord {
                    step,
                    set: name.clone(),
                    report: evaluate(&params, set)?,
                });
            }
        }
    }
    Ok(TrainOutput {
        params,
        history,
        last_loss: last_loss.expect("at least one step"),
    })
}

fn diverged(step: usize, e: Error) -> Error {
    match e {
        Error::Numeric(message) => Error::TrainingDiverged { step, message },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticSpec};
    use crate::model::heads::{build_model, Arrangement};

    fn config(weight: f64) -> TrainConfig {
        TrainConfig {
            steps: 30,
            batch_size: 64,
            hidden: 8,
            embedding_dim: 2,
            fairness_weight: weight,
            transfer_weight: weight,
            seed: 11,
            eval_every: 10,
            ..Default::default()
        }
    }

    fn run(arrangement: Arrangement, cfg: &TrainConfig) -> TrainOutput {
        let (s, t) = gen_synthetic(&SyntheticSpec::with_shift(0.0, 3)).unwrap();
        let (params, heads) = build_model(arrangement, cfg, s.schema()).unwrap();
        let data = TrainData {
            task: &s,
            source: &s,
            target: &t,
            eval: vec![("source".into(), &s), ("target".into(), &t)],
        };
        train(params, &heads, &data, cfg).unwrap()
    }

    #[test]
    fn zero_weights_reproduce_plain_training() {
        let erm = run(Arrangement::SourceOnly, &config(0.0));
        for a in Arrangement::ALL {
            let out = run(a, &config(0.0));
            assert_eq!(out.params.values, erm.params.values, "{a}");
            assert_eq!(out.history, erm.history);
        }
    }

    #[test]
    fn same_seed_same_history() {
        let a = run(Arrangement::Transfer, &config(1.0));
        let b = run(Arrangement::Transfer, &config(1.0));
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
        assert_eq!(a.history.len(), 3 * 2);
        assert_ne!(
            a.params.values,
            run(Arrangement::SourceOnly, &config(0.0)).params.values
        );
    }

    #[test]
    fn empty_target_negatives_fail_at_training() {
        let (s, t) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        let pos: Vec<usize> = (0..t.len())
            .filter(|&i| t.examples()[i].label == 1)
            .collect();
        let t = t.subset(&pos).unwrap();
        let cfg = config(1.0);
        let (params, heads) = build_model(Arrangement::TargetOnly, &cfg, s.schema()).unwrap();
        let data = TrainData {
            task: &s,
            source: &s,
            target: &t,
            eval: vec![],
        };
        assert!(matches!(
            train(params, &heads, &data, &cfg),
            Err(Error::Sampling { .. })
        ));
    }

    #[test]
    fn blown_up_learning_rate_reports_the_step() {
        let mut cfg = config(0.0);
        cfg.lr = 1e300;
        cfg.steps = 50;
        let (s, t) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        let (params, heads) = build_model(Arrangement::SourceOnly, &cfg, s.schema()).unwrap();
        let data = TrainData {
            task: &s,
            source: &s,
            target: &t,
            eval: vec![],
        };
        match train(params, &heads, &data, &cfg) {
            Err(Error::TrainingDiverged { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {:?}", other.map(|o| o.last_loss)),
        }
    }
}
