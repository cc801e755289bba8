use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::results::{BoundRow, ConfigKey, ResultRow};
use crate::data::{gen_synthetic, Dataset, SyntheticSpec};
use crate::divergence::{
    compose_bound, estimate_h_divergence, BoundVariant, LambdaPolicy, ProbeConfig,
};
use crate::error::Result;
use crate::metrics::MetricsReport;
use crate::numcore::LogisticRegression;
use crate::seed::derive_seed;

struct SyntheticTrial {
    row: ResultRow,
    source: Dataset,
    target: Dataset,
    data_seed: u64,
}

/// Data for trial `t` is seeded by the trial alone, so every `c` sees the same
/// majority draws and holdout split.
fn synthetic_trial(cfg: &ExperimentConfig, c: f64, trial: usize) -> Result<SyntheticTrial> {
    let started = Instant::now();
    let data_seed = derive_seed(cfg.seed, "synthetic", trial as u64);
    let (source, target) = gen_synthetic(&SyntheticSpec::with_shift(c, data_seed))?;
    let (fit_part, held) = source.split(
        1.0 - cfg.holdout_fraction,
        derive_seed(data_seed, "holdout", 0),
    )?;
    let all = |d: &Dataset| d.feature_matrix(&(0..d.len()).collect::<Vec<_>>());
    let model = LogisticRegression::fit(
        &all(&fit_part),
        &fit_part.labels(),
        cfg.linear_steps,
        cfg.linear_lr,
    )?;
    let src = MetricsReport::from_probs(&model.probs(&all(&held))?, &held)?;
    let tgt = MetricsReport::from_probs(&model.probs(&all(&target))?, &target)?;
    let row = ResultRow {
        key: ConfigKey {
            experiment: "synthetic".into(),
            dataset: "synthetic".into(),
            source_attr: "group".into(),
            target_attr: "group".into(),
            arrangement: "linear".into(),
            weight: None,
            n_target: None,
            c: Some(c),
        },
        trial,
        seed: data_seed,
        metrics: [
            src.eop_distance,
            tgt.eop_distance,
            src.eo_distance,
            tgt.eo_distance,
            src.accuracy(),
            tgt.accuracy(),
        ],
        runtime_secs: started.elapsed().as_secs_f64(),
    };
    Ok(SyntheticTrial {
        row,
        source,
        target,
        data_seed,
    })
}

fn grid(cfg: &ExperimentConfig) -> Vec<(f64, usize)> {
    cfg.c_grid
        .iter()
        .flat_map(|&c| (0..cfg.trials).map(move |t| (c, t)))
        .collect()
}

pub(crate) fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))
}

/// A source-trained linear classifier per `(c, trial)`, scored on held-out source
/// rows and on the whole target domain.
pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let tasks = grid(cfg);
    pool(cfg.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(c, t)| synthetic_trial(cfg, c, t).map(|s| s.row))
            .collect()
    })
}

fn negatives(d: &Dataset, group: u8) -> crate::numcore::DenseMatrix {
    let idx: Vec<usize> = (0..d.len())
        .filter(|&i| d.examples()[i].label == 0 && d.examples()[i].group == group)
        .collect();
    d.feature_matrix(&idx)
}

/// Pairs the observed target Δ_EOP with the composed equal-opportunity bound
/// (λ = 0, complexity term omitted) for every `(c, trial)`.
pub fn run_bound_comparison(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    cfg.validate()?;
    let tasks = grid(cfg);
    pool(cfg.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(c, t)| {
                let s = synthetic_trial(cfg, c, t)?;
                let mut d_hats = [0.0; 2];
                for (g, d) in d_hats.iter_mut().enumerate() {
                    let probe = ProbeConfig {
                        seed: derive_seed(s.data_seed, "probe", g as u64),
                        ..ProbeConfig::default()
                    };
                    let g = g as u8;
                    *d = estimate_h_divergence(
                        &negatives(&s.target, g),
                        &negatives(&s.source, g),
                        &probe,
                    )?
                    .value;
                }
                let report = compose_bound(
                    BoundVariant::EopVc,
                    s.row.metrics[0],
                    &d_hats,
                    None,
                    LambdaPolicy::Zero,
                )?;
                Ok(BoundRow {
                    c,
                    trial: t,
                    delta_s: s.row.metrics[0],
                    d_hat_00: d_hats[0],
                    d_hat_10: d_hats[1],
                    rhs: report.rhs_total,
                    delta_t_observed: s.row.target_delta_eop(),
                })
            })
            .collect()
    })
}
