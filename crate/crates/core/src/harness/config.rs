use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Arrangement, Bandwidth, FairnessConditioning, KernelSpec, TrainConfig};

pub const DESK_STEPS: usize = 2_000;
pub const DESK_TRIALS: usize = 10;
pub const FULL_STEPS: usize = 10_000;
pub const FULL_TRIALS: usize = 30;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; a repeated key is an error so that typos cannot silently shadow.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        if out.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key {key:?}",
                i + 1
            )));
        }
    }
    Ok(out)
}

/// Comma-separated list; empty input yields an error rather than an empty list.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::Config(format!("{what}: empty list")));
    }
    items
        .into_iter()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::Config(format!("{what}: cannot parse {t:?}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| Error::Config(format!("{what}: cannot parse {s:?}")))
}

fn parse_bool(s: &str, what: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{what}: expected true or false, got {s:?}"
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DatasetKind {
    Adult,
    Compas,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Adult => "adult",
            DatasetKind::Compas => "compas",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adult" => Ok(DatasetKind::Adult),
            "compas" => Ok(DatasetKind::Compas),
            _ => Err(Error::Config(format!("unknown dataset {s:?}"))),
        }
    }
}

/// Everything an experiment run reads. Defaults are desk scale.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub c_grid: Vec<f64>,
    /// Full-batch Adagrad steps for the synthetic linear classifier.
    pub linear_steps: usize,
    pub linear_lr: f64,
    /// Share of each synthetic source domain held out for evaluation.
    pub holdout_fraction: f64,
    pub dataset: DatasetKind,
    pub source_attr: String,
    pub target_attr: String,
    pub n_target: Vec<usize>,
    pub source_per_group: usize,
    pub weights: Vec<f64>,
    pub arrangements: Vec<Arrangement>,
    pub data_dir: PathBuf,
    pub compas_threshold: u8,
    /// Train share of the seeded COMPAS split.
    pub compas_train_fraction: f64,
    pub jobs: usize,
    /// Template for every network run; the sweep fills in seed and weights.
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            trials: DESK_TRIALS,
            c_grid: vec![-1.0, 0.0, 1.0],
            linear_steps: 500,
            linear_lr: 0.1,
            holdout_fraction: 0.3,
            dataset: DatasetKind::Adult,
            source_attr: "gender".into(),
            target_attr: "race".into(),
            n_target: vec![50],
            source_per_group: 1000,
            weights: vec![0.1, 0.3, 1.0, 3.0, 10.0],
            arrangements: Arrangement::ALL.to_vec(),
            data_dir: PathBuf::from("data"),
            compas_threshold: 5,
            compas_train_fraction: 0.8,
            jobs: 1,
            train: TrainConfig {
                steps: DESK_STEPS,
                eval_every: DESK_STEPS,
                ..TrainConfig::default()
            },
        }
    }
}

/// Keys accepted by [`ExperimentConfig::apply`].
pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "trials",
    "steps",
    "paper_scale",
    "c_grid",
    "linear_steps",
    "linear_lr",
    "holdout_fraction",
    "dataset",
    "source",
    "target",
    "n_target",
    "source_per_group",
    "weights",
    "arrangements",
    "data_dir",
    "compas_threshold",
    "compas_train_fraction",
    "jobs",
    "batch_size",
    "lr",
    "hidden",
    "embedding_dim",
    "bandwidth",
    "adversarial",
    "separate_mmd_head",
    "conditioning",
    "equalized_odds",
];

impl ExperimentConfig {
    /// Full-scale budget: 10,000 steps and 30 trials.
    pub fn paper_scale(&mut self) {
        self.train.steps = FULL_STEPS;
        self.train.eval_every = FULL_STEPS;
        self.trials = FULL_TRIALS;
    }

    /// Applies key/value settings on top of the current values. `paper_scale`
    /// is applied before the other keys, so explicit `steps`/`trials` win.
    pub fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        if let Some(k) = kv.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown config key {k:?}")));
        }
        if let Some(v) = kv.get("paper_scale") {
            if parse_bool(v, "paper_scale")? {
                self.paper_scale();
            }
        }
        for (k, v) in kv {
            let v = v.as_str();
            match k.as_str() {
                "seed" => self.seed = parse_one(v, k)?,
                "trials" => self.trials = parse_one(v, k)?,
                "steps" => {
                    self.train.steps = parse_one(v, k)?;
                    self.train.eval_every = self.train.steps;
                }
                "paper_scale" => {}
                "c_grid" => self.c_grid = parse_list(v, k)?,
                "linear_steps" => self.linear_steps = parse_one(v, k)?,
                "linear_lr" => self.linear_lr = parse_one(v, k)?,
                "holdout_fraction" => self.holdout_fraction = parse_one(v, k)?,
                "dataset" => self.dataset = v.parse()?,
                "source" => self.source_attr = v.to_string(),
                "target" => self.target_attr = v.to_string(),
                "n_target" => self.n_target = parse_list(v, k)?,
                "source_per_group" => self.source_per_group = parse_one(v, k)?,
                "weights" => self.weights = parse_list(v, k)?,
                "arrangements" => {
                    self.arrangements = v
                        .split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "data_dir" => self.data_dir = PathBuf::from(v),
                "compas_threshold" => self.compas_threshold = parse_one(v, k)?,
                "compas_train_fraction" => self.compas_train_fraction = parse_one(v, k)?,
                "jobs" => self.jobs = parse_one(v, k)?,
                "batch_size" => self.train.batch_size = parse_one(v, k)?,
                "lr" => self.train.lr = parse_one(v, k)?,
                "hidden" => self.train.hidden = parse_one(v, k)?,
                "embedding_dim" => self.train.embedding_dim = parse_one(v, k)?,
                "bandwidth" => {
                    self.train.kernel = if v == "median" {
                        KernelSpec::default()
                    } else {
                        KernelSpec::fixed(parse_one(v, k)?)?
                    }
                }
                "adversarial" => self.train.adversarial = parse_bool(v, k)?,
                "separate_mmd_head" => self.train.separate_mmd_head = parse_bool(v, k)?,
                "conditioning" => {
                    self.train.fairness_conditioning = match v {
                        "negatives" => FairnessConditioning::Negatives,
                        "all" => FairnessConditioning::AllLabels,
                        _ => return Err(Error::Config(format!("conditioning: unknown {v:?}"))),
                    }
                }
                "equalized_odds" => self.train.equalized_odds = parse_bool(v, k)?,
                _ => unreachable!("keys checked above"),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("c grid must be non-empty and finite".into()));
        }
        if self.n_target.is_empty() || self.n_target.contains(&0) {
            return Err(Error::Config("target sample sizes must be positive".into()));
        }
        if self.weights.is_empty() || self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(
                "weight grid must be non-empty and nonnegative".into(),
            ));
        }
        if self.arrangements.is_empty() {
            return Err(Error::Config("at least one arrangement is required".into()));
        }
        if self.source_attr == self.target_attr {
            return Err(Error::Config(format!(
                "source and target attributes must differ (both {:?})",
                self.source_attr
            )));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0)
            || !(self.compas_train_fraction > 0.0 && self.compas_train_fraction < 1.0)
        {
            return Err(Error::Config("split fractions must lie in (0, 1)".into()));
        }
        if self.linear_steps == 0
            || self.linear_lr.is_nan()
            || self.linear_lr <= 0.0
            || self.source_per_group == 0
        {
            return Err(Error::Config(
                "linear steps, rate and source pool size must be positive".into(),
            ));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        self.train.validate()
    }

    /// Settings as sorted `key = value` pairs, suitable for a manifest and
    /// readable back through [`parse_kv`] and [`ExperimentConfig::apply`].
    pub fn to_kv(&self) -> Vec<(String, String)> {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        }
        let t = &self.train;
        let bandwidth = match t.kernel.bandwidth {
            Bandwidth::Median => "median".to_string(),
            Bandwidth::Fixed(s) => s.to_string(),
        };
        let conditioning = match t.fairness_conditioning {
            FairnessConditioning::Negatives => "negatives",
            FairnessConditioning::AllLabels => "all",
        };
        let mut out = vec![
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
            ("steps", t.steps.to_string()),
            ("c_grid", join(&self.c_grid)),
            ("linear_steps", self.linear_steps.to_string()),
            ("linear_lr", self.linear_lr.to_string()),
            ("holdout_fraction", self.holdout_fraction.to_string()),
            ("dataset", self.dataset.to_string()),
            ("source", self.source_attr.clone()),
            ("target", self.target_attr.clone()),
            ("n_target", join(&self.n_target)),
            ("source_per_group", self.source_per_group.to_string()),
            ("weights", join(&self.weights)),
            ("arrangements", join(&self.arrangements)),
            ("compas_threshold", self.compas_threshold.to_string()),
            (
                "compas_train_fraction",
                self.compas_train_fraction.to_string(),
            ),
            ("batch_size", t.batch_size.to_string()),
            ("lr", t.lr.to_string()),
            ("hidden", t.hidden.to_string()),
            ("embedding_dim", t.embedding_dim.to_string()),
            ("bandwidth", bandwidth),
            ("adversarial", t.adversarial.to_string()),
            ("separate_mmd_head", t.separate_mmd_head.to_string()),
            ("conditioning", conditioning.to_string()),
            ("equalized_odds", t.equalized_odds.to_string()),
        ];
        out.sort();
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = parse_kv("# sweep\n seed = 7\n\nweights=0.1, 1\n").unwrap();
        assert_eq!(kv["seed"], "7");
        assert_eq!(kv["weights"], "0.1, 1");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_kv("seed 7").is_err());
        assert!(parse_kv("= 7").is_err());
        assert!(parse_kv("a = 1\na = 2").is_err());
    }

    #[test]
    fn apply_overrides_and_validates() {
        let mut c = ExperimentConfig::default();
        c.apply(
            &parse_kv("trials = 3\nn_target = 50,1000\narrangements = transfer,source-only")
                .unwrap(),
        )
        .unwrap();
        assert_eq!(c.trials, 3);
        assert_eq!(c.n_target, vec![50, 1000]);
        assert_eq!(
            c.arrangements,
            vec![Arrangement::Transfer, Arrangement::SourceOnly]
        );
        assert!(c.apply(&parse_kv("bogus = 1").unwrap()).is_err());
        assert!(c.apply(&parse_kv("trials = 0").unwrap()).is_err());
        let mut c = ExperimentConfig::default();
        assert!(c.apply(&parse_kv("target = gender").unwrap()).is_err());
    }

    #[test]
    fn paper_scale_yields_to_explicit_keys() {
        let mut c = ExperimentConfig::default();
        c.apply(&parse_kv("paper_scale = true\ntrials = 4").unwrap())
            .unwrap();
        assert_eq!((c.train.steps, c.trials), (FULL_STEPS, 4));
    }

    #[test]
    fn kv_roundtrip() {
        let mut c = ExperimentConfig {
            seed: 99,
            weights: vec![0.5, 2.0],
            ..ExperimentConfig::default()
        };
        c.train.kernel = KernelSpec::fixed(0.25).unwrap();
        let text: String = c
            .to_kv()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let mut d = ExperimentConfig::default();
        d.apply(&parse_kv(&text).unwrap()).unwrap();
        assert_eq!(c, d);
    }
}
