use std::cmp::Ordering;
use std::io::Read;

use crate::error::{Error, Result};

/// What a row was run under; rows sharing a key are trials of one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigKey {
    pub experiment: String,
    pub dataset: String,
    pub source_attr: String,
    pub target_attr: String,
    pub arrangement: String,
    pub weight: Option<f64>,
    pub n_target: Option<usize>,
    pub c: Option<f64>,
}

fn cmp_opt_f64(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => a.is_some().cmp(&b.is_some()),
    }
}

impl ConfigKey {
    pub fn total_cmp(&self, other: &ConfigKey) -> Ordering {
        (
            &self.experiment,
            &self.dataset,
            &self.source_attr,
            &self.target_attr,
            self.n_target,
        )
            .cmp(&(
                &other.experiment,
                &other.dataset,
                &other.source_attr,
                &other.target_attr,
                other.n_target,
            ))
            .then_with(|| self.arrangement.cmp(&other.arrangement))
            .then_with(|| cmp_opt_f64(self.c, other.c))
            .then_with(|| cmp_opt_f64(self.weight, other.weight))
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.dataset.clone(),
            self.source_attr.clone(),
            self.target_attr.clone(),
            self.arrangement.clone(),
            opt(self.weight),
            opt(self.n_target),
            opt(self.c),
        ]
    }
}

pub(crate) fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub const KEY_COLUMNS: [&str; 8] = [
    "experiment",
    "dataset",
    "source_attr",
    "target_attr",
    "arrangement",
    "weight",
    "n_target",
    "c",
];

/// Per-trial metrics, in column order.
pub const METRIC_COLUMNS: [&str; 6] = [
    "source_delta_eop",
    "target_delta_eop",
    "source_delta_eo",
    "target_delta_eo",
    "source_accuracy",
    "target_accuracy",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub key: ConfigKey,
    pub trial: usize,
    pub seed: u64,
    /// Indexed like [`METRIC_COLUMNS`].
    pub metrics: [f64; 6],
    /// Wall-clock seconds; kept out of `results.csv` so reruns stay byte-identical.
    pub runtime_secs: f64,
}

impl ResultRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        METRIC_COLUMNS
            .iter()
            .position(|&m| m == name)
            .map(|i| self.metrics[i])
    }

    pub fn target_delta_eop(&self) -> f64 {
        self.metrics[1]
    }
}

pub fn results_header() -> Vec<String> {
    KEY_COLUMNS
        .iter()
        .chain(&["trial", "seed"])
        .chain(METRIC_COLUMNS.iter())
        .map(|s| s.to_string())
        .collect()
}

pub fn result_cells(row: &ResultRow) -> Vec<String> {
    let mut cells = row.key.cells();
    cells.push(row.trial.to_string());
    cells.push(row.seed.to_string());
    cells.extend(row.metrics.iter().map(f64::to_string));
    cells
}

/// Sorts rows by configuration key, then trial.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.key
            .total_cmp(&b.key)
            .then(a.trial.cmp(&b.trial))
            .then(a.seed.cmp(&b.seed))
    });
}

/// One `(c, trial)` comparison of the composed bound with the observed distance.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub c: f64,
    pub trial: usize,
    pub delta_s: f64,
    pub d_hat_00: f64,
    pub d_hat_10: f64,
    pub rhs: f64,
    pub delta_t_observed: f64,
}

pub const BOUND_COLUMNS: [&str; 7] = [
    "c",
    "trial",
    "delta_S",
    "d_hat_00",
    "d_hat_10",
    "rhs",
    "delta_T_observed",
];

pub fn bound_cells(row: &BoundRow) -> Vec<String> {
    vec![
        row.c.to_string(),
        row.trial.to_string(),
        row.delta_s.to_string(),
        row.d_hat_00.to_string(),
        row.d_hat_10.to_string(),
        row.rhs.to_string(),
        row.delta_t_observed.to_string(),
    ]
}

pub(crate) fn to_csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

struct Cells<'a> {
    source_name: &'a str,
    line: usize,
    record: &'a csv::StringRecord,
}

impl Cells<'_> {
    fn err(&self, message: String) -> Error {
        Error::Ingestion {
            source_name: self.source_name.to_string(),
            row: self.line,
            message,
        }
    }

    fn get(&self, i: usize) -> &str {
        self.record.get(i).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, i: usize, what: &str) -> Result<T> {
        self.get(i)
            .parse()
            .map_err(|_| self.err(format!("{what}: cannot parse {:?}", self.get(i))))
    }

    fn parse_opt<T: std::str::FromStr>(&self, i: usize, what: &str) -> Result<Option<T>> {
        if self.get(i).is_empty() {
            Ok(None)
        } else {
            self.parse(i, what).map(Some)
        }
    }

    fn finite(&self, i: usize, what: &str) -> Result<f64> {
        let v: f64 = self.parse(i, what)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(format!("{what} must be finite")))
        }
    }
}

fn read_records<R: Read>(
    reader: R,
    source_name: &str,
    expected: &[String],
) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Ingestion {
            source_name: source_name.to_string(),
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            if rec.iter().ne(expected.iter().map(String::as_str)) {
                return Err(Error::Ingestion {
                    source_name: source_name.to_string(),
                    row: line,
                    message: format!("unexpected header {:?}", rec.iter().collect::<Vec<_>>()),
                });
            }
            header_seen = true;
            continue;
        }
        out.push((line, rec));
    }
    if !header_seen {
        return Err(Error::Ingestion {
            source_name: source_name.to_string(),
            row: 0,
            message: "missing header".into(),
        });
    }
    Ok(out)
}

/// Reads a `results.csv` written by the report emitter.
pub fn parse_results_csv<R: Read>(reader: R, source_name: &str) -> Result<Vec<ResultRow>> {
    let header = results_header();
    let mut rows = Vec::new();
    for (line, record) in read_records(reader, source_name, &header)? {
        let c = Cells {
            source_name,
            line,
            record: &record,
        };
        let key = ConfigKey {
            experiment: c.get(0).to_string(),
            dataset: c.get(1).to_string(),
            source_attr: c.get(2).to_string(),
            target_attr: c.get(3).to_string(),
            arrangement: c.get(4).to_string(),
            weight: c.parse_opt(5, "weight")?,
            n_target: c.parse_opt(6, "n_target")?,
            c: c.parse_opt(7, "c")?,
        };
        if key.weight.is_some_and(|w: f64| !w.is_finite())
            || key.c.is_some_and(|v: f64| !v.is_finite())
        {
            return Err(c.err("weight and c must be finite".into()));
        }
        let mut metrics = [0.0; 6];
        for (i, m) in metrics.iter_mut().enumerate() {
            *m = c.finite(10 + i, METRIC_COLUMNS[i])?;
        }
        rows.push(ResultRow {
            key,
            trial: c.parse(8, "trial")?,
            seed: c.parse(9, "seed")?,
            metrics,
            runtime_secs: 0.0,
        });
    }
    Ok(rows)
}

pub fn parse_bound_csv<R: Read>(reader: R, source_name: &str) -> Result<Vec<BoundRow>> {
    let header: Vec<String> = BOUND_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (line, record) in read_records(reader, source_name, &header)? {
        let c = Cells {
            source_name,
            line,
            record: &record,
        };
        rows.push(BoundRow {
            c: c.finite(0, "c")?,
            trial: c.parse(1, "trial")?,
            delta_s: c.finite(2, "delta_S")?,
            d_hat_00: c.finite(3, "d_hat_00")?,
            d_hat_10: c.finite(4, "d_hat_10")?,
            rhs: c.finite(5, "rhs")?,
            delta_t_observed: c.finite(6, "delta_T_observed")?,
        });
    }
    Ok(rows)
}
