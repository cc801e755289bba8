use super::results::{opt, sort_rows, BoundRow, ConfigKey, ResultRow, KEY_COLUMNS, METRIC_COLUMNS};

/// Mean, sample standard deviation and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
}

impl Stat {
    /// Zero spread for a single value.
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat {
            mean,
            std,
            stderr: std / n.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub key: ConfigKey,
    pub trials: usize,
    /// Indexed like [`METRIC_COLUMNS`].
    pub stats: [Stat; 6],
}

impl SummaryRow {
    pub fn stat(&self, metric: &str) -> Option<Stat> {
        METRIC_COLUMNS
            .iter()
            .position(|&m| m == metric)
            .map(|i| self.stats[i])
    }
}

/// Groups rows by configuration and reports per-metric statistics. Output order
/// and values do not depend on input order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let key = &sorted[start].key;
        let end = start
            + sorted[start..]
                .iter()
                .take_while(|r| r.key.total_cmp(key).is_eq())
                .count();
        let group = &sorted[start..end];
        let stats = std::array::from_fn(|m| {
            let values: Vec<f64> = group.iter().map(|r| r.metrics[m]).collect();
            Stat::of(&values)
        });
        out.push(SummaryRow {
            key: key.clone(),
            trials: group.len(),
            stats,
        });
        start = end;
    }
    out
}

/// Smallest mean target FPR difference over the weight grid for one arrangement.
#[derive(Clone, Debug, PartialEq)]
pub struct BestRow {
    /// Key of the winning configuration (its `weight` is the best weight).
    pub key: ConfigKey,
    pub trials: usize,
    pub target_delta_eop: Stat,
    pub target_accuracy: Stat,
}

/// For every weighted configuration family (all key fields but the weight), the
/// weight whose mean target Δ_EOP is smallest. Ties go to the smaller weight.
pub fn best_over_weights(summary: &[SummaryRow]) -> Vec<BestRow> {
    let mut out: Vec<BestRow> = Vec::new();
    for s in summary.iter().filter(|s| s.key.weight.is_some()) {
        let family = |k: &ConfigKey| ConfigKey {
            weight: None,
            ..k.clone()
        };
        let candidate = BestRow {
            key: s.key.clone(),
            trials: s.trials,
            target_delta_eop: s.stats[1],
            target_accuracy: s.stats[5],
        };
        match out.last_mut() {
            Some(b) if family(&b.key) == family(&s.key) => {
                if candidate.target_delta_eop.mean < b.target_delta_eop.mean {
                    *b = candidate;
                }
            }
            _ => out.push(candidate),
        }
    }
    out
}

pub fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.push("trials".into());
    for m in METRIC_COLUMNS {
        for s in ["mean", "std", "stderr"] {
            h.push(format!("{m}_{s}"));
        }
    }
    h
}

fn key_cells(k: &ConfigKey) -> Vec<String> {
    vec![
        k.experiment.clone(),
        k.dataset.clone(),
        k.source_attr.clone(),
        k.target_attr.clone(),
        k.arrangement.clone(),
        opt(k.weight),
        opt(k.n_target),
        opt(k.c),
    ]
}

pub fn summary_cells(s: &SummaryRow) -> Vec<String> {
    let mut cells = key_cells(&s.key);
    cells.push(s.trials.to_string());
    for st in &s.stats {
        cells.extend([
            st.mean.to_string(),
            st.std.to_string(),
            st.stderr.to_string(),
        ]);
    }
    cells
}

pub fn best_header() -> Vec<String> {
    [
        "experiment",
        "dataset",
        "source_attr",
        "target_attr",
        "arrangement",
        "n_target",
        "best_weight",
        "trials",
        "target_delta_eop_mean",
        "target_delta_eop_std",
        "target_delta_eop_stderr",
        "target_accuracy_mean",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn best_cells(b: &BestRow) -> Vec<String> {
    let k = &b.key;
    vec![
        k.experiment.clone(),
        k.dataset.clone(),
        k.source_attr.clone(),
        k.target_attr.clone(),
        k.arrangement.clone(),
        opt(k.n_target),
        opt(k.weight),
        b.trials.to_string(),
        b.target_delta_eop.mean.to_string(),
        b.target_delta_eop.std.to_string(),
        b.target_delta_eop.stderr.to_string(),
        b.target_accuracy.mean.to_string(),
    ]
}

/// One point of a plot series.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub metric: String,
    pub series: String,
    pub x: f64,
    pub stat: Stat,
}

pub const PLOT_COLUMNS: [&str; 6] = ["metric", "series", "x", "mean", "std", "stderr"];

pub fn plot_cells(p: &PlotPoint) -> Vec<String> {
    vec![
        p.metric.clone(),
        p.series.clone(),
        p.x.to_string(),
        p.stat.mean.to_string(),
        p.stat.std.to_string(),
        p.stat.stderr.to_string(),
    ]
}

/// Plot files derived from a summary: one for the synthetic shift experiment
/// (x = c) and one per sweep family (x = head weight, one series per arrangement).
pub fn plot_tables(summary: &[SummaryRow]) -> Vec<(String, Vec<PlotPoint>)> {
    let mut files: Vec<(String, Vec<PlotPoint>)> = Vec::new();
    for s in summary {
        let (name, x, series, metrics): (String, f64, String, &[&str]) =
            match (s.key.c, s.key.weight) {
                (Some(c), _) => (
                    format!("plot_{}.csv", s.key.experiment),
                    c,
                    s.key.arrangement.clone(),
                    &["source_delta_eop", "target_delta_eop"],
                ),
                (None, Some(w)) => (
                    format!(
                        "plot_{}_{}-{}_n{}.csv",
                        s.key.dataset,
                        s.key.source_attr,
                        s.key.target_attr,
                        opt(s.key.n_target)
                    ),
                    w,
                    s.key.arrangement.clone(),
                    &["target_delta_eop", "target_accuracy", "source_delta_eop"],
                ),
                (None, None) => continue,
            };
        let points = metrics.iter().map(|&m| PlotPoint {
            metric: m.to_string(),
            series: series.clone(),
            x,
            stat: s.stat(m).expect("known metric"),
        });
        match files.iter_mut().find(|(n, _)| *n == name) {
            Some((_, pts)) => pts.extend(points),
            None => files.push((name, points.collect())),
        }
    }
    for (_, pts) in &mut files {
        pts.sort_by(|a, b| {
            (&a.metric, &a.series)
                .cmp(&(&b.metric, &b.series))
                .then(a.x.total_cmp(&b.x))
        });
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

/// Mean bound and observed distance per `c`.
pub fn bound_plot(rows: &[BoundRow]) -> Vec<PlotPoint> {
    let mut cs: Vec<f64> = rows.iter().map(|r| r.c).collect();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    let mut out = Vec::new();
    for metric in ["delta_T_observed", "rhs"] {
        for &c in &cs {
            let mut at: Vec<&BoundRow> = rows.iter().filter(|r| r.c == c).collect();
            at.sort_by_key(|r| r.trial);
            let values: Vec<f64> = at
                .iter()
                .map(|r| {
                    if metric == "rhs" {
                        r.rhs
                    } else {
                        r.delta_t_observed
                    }
                })
                .collect();
            out.push(PlotPoint {
                metric: metric.to_string(),
                series: "eop-bound".into(),
                x: c,
                stat: Stat::of(&values),
            });
        }
    }
    out
}
