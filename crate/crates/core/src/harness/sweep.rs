use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DatasetKind, ExperimentConfig};
use super::results::{ConfigKey, ResultRow};
use super::synthetic::pool;
use crate::data::{load_adult, load_compas, CompasOptions, Dataset, Domain};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::model::{build_model, predict_probs, train, Arrangement, TrainData};
use crate::seed::derive_seed;

/// Train/test splits of a real dataset.
#[derive(Clone, Debug)]
pub struct RealData {
    pub train: Dataset,
    pub test: Dataset,
}

/// Adult uses its canonical split; COMPAS gets a seeded split of the retained rows.
pub fn load_real(cfg: &ExperimentConfig) -> Result<RealData> {
    match cfg.dataset {
        DatasetKind::Adult => {
            let dir = cfg.data_dir.join("adult");
            let (train, test) = load_adult(&dir.join("adult.data"), &dir.join("adult.test"))?;
            Ok(RealData { train, test })
        }
        DatasetKind::Compas => {
            let path = cfg
                .data_dir
                .join("compas")
                .join("compas-scores-two-years.csv");
            let data = load_compas(
                &path,
                CompasOptions {
                    label_threshold: cfg.compas_threshold,
                },
            )?;
            let (train, test) = data.dataset.split(
                cfg.compas_train_fraction,
                derive_seed(cfg.seed, "compas-split", 0),
            )?;
            Ok(RealData { train, test })
        }
    }
}

/// `per_group` rows of each value of `attribute`, relabelled with that attribute
/// as the group and tagged with `domain`. Shuffles are seeded per group, so a
/// smaller pool is always a prefix of a larger one.
pub fn debias_pool(
    train: &Dataset,
    attribute: &str,
    per_group: usize,
    domain: Domain,
    seed: u64,
) -> Result<Dataset> {
    let mut chosen = Vec::with_capacity(2 * per_group);
    for g in 0..2u8 {
        let mut idx = train.indices_where(attribute, g)?;
        if idx.len() < per_group {
            return Err(Error::Sampling {
                bucket: format!(
                    "{attribute}={g} in the training split ({} rows, {per_group} needed)",
                    idx.len()
                ),
            });
        }
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            attribute,
            u64::from(g),
        )));
        chosen.extend_from_slice(&idx[..per_group]);
    }
    chosen.sort_unstable();
    Ok(train
        .subset(&chosen)?
        .with_group(attribute)?
        .with_domain(domain))
}

/// Seed of one trial; independent of arrangement, weight and target size, so
/// every configuration of a trial shares initialization, task batches and pools.
pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    derive_seed(
        cfg.seed,
        &format!(
            "sweep/{}/{}-{}",
            cfg.dataset, cfg.source_attr, cfg.target_attr
        ),
        trial as u64,
    )
}

#[derive(Clone, Copy, Debug)]
struct SweepTask {
    n_target: usize,
    arrangement: Arrangement,
    weight: f64,
    trial: usize,
}

fn run_one(cfg: &ExperimentConfig, data: &RealData, task: SweepTask) -> Result<ResultRow> {
    let started = Instant::now();
    let seed = trial_seed(cfg, task.trial);
    let pool_seed = derive_seed(seed, "pools", 0);
    let source = debias_pool(
        &data.train,
        &cfg.source_attr,
        cfg.source_per_group,
        Domain::Source,
        pool_seed,
    )?;
    let target = debias_pool(
        &data.train,
        &cfg.target_attr,
        task.n_target,
        Domain::Target,
        pool_seed,
    )?;
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    tc.fairness_weight = task.weight;
    tc.transfer_weight = task.weight;
    tc.eval_every = tc.steps;
    let (params, heads) = build_model(task.arrangement, &tc, data.train.schema())?;
    let td = TrainData {
        task: &data.train,
        source: &source,
        target: &target,
        eval: Vec::new(),
    };
    let out = train(params, &heads, &td, &tc)?;
    let probs = predict_probs(&out.params, &data.test)?;
    let src = MetricsReport::from_probs(&probs, &data.test.with_group(&cfg.source_attr)?)?;
    let tgt = MetricsReport::from_probs(&probs, &data.test.with_group(&cfg.target_attr)?)?;
    Ok(ResultRow {
        key: ConfigKey {
            experiment: "sweep".into(),
            dataset: cfg.dataset.to_string(),
            source_attr: cfg.source_attr.clone(),
            target_attr: cfg.target_attr.clone(),
            arrangement: task.arrangement.to_string(),
            weight: Some(task.weight),
            n_target: Some(task.n_target),
            c: None,
        },
        trial: task.trial,
        seed,
        metrics: [
            src.eop_distance,
            tgt.eop_distance,
            src.eo_distance,
            tgt.eo_distance,
            src.accuracy(),
            tgt.accuracy(),
        ],
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

/// Every arrangement × target size × weight × trial on already loaded data.
pub fn run_transfer_sweep_on(cfg: &ExperimentConfig, data: &RealData) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    for attr in [&cfg.source_attr, &cfg.target_attr] {
        if !data.train.attributes().contains_key(attr.as_str()) {
            return Err(Error::Config(format!(
                "unknown sensitive attribute {attr:?} for {}",
                cfg.dataset
            )));
        }
    }
    let mut tasks = Vec::new();
    for &n_target in &cfg.n_target {
        for &arrangement in &cfg.arrangements {
            for &weight in &cfg.weights {
                for trial in 0..cfg.trials {
                    tasks.push(SweepTask {
                        n_target,
                        arrangement,
                        weight,
                        trial,
                    });
                }
            }
        }
    }
    pool(cfg.jobs)?.install(|| tasks.par_iter().map(|&t| run_one(cfg, data, t)).collect())
}

pub fn run_transfer_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let data = load_real(cfg)?;
    run_transfer_sweep_on(cfg, &data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticSpec};

    #[test]
    fn pools_are_nested_and_balanced() {
        let (s, _) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        let small = debias_pool(&s, "group", 50, Domain::Target, 4).unwrap();
        let large = debias_pool(&s, "group", 100, Domain::Target, 4).unwrap();
        assert_eq!(small.len(), 100);
        assert_eq!(small.groups().iter().filter(|&&g| g == 0).count(), 50);
        assert!(small.examples().iter().all(|e| e.domain == Domain::Target));
        for e in small.examples() {
            assert!(large.examples().contains(e));
        }
    }

    #[test]
    fn short_group_is_named() {
        let (s, _) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        match debias_pool(&s, "group", 500, Domain::Source, 0) {
            Err(Error::Sampling { bucket }) => assert!(bucket.contains("group=0")),
            other => panic!("{other:?}"),
        }
    }
}
