//! ProPublica COMPAS ingestion.
//!
//! Features: `age`, `juv_fel_count`, `juv_misd_count`, `juv_other_count`,
//! `priors_count` (numeric) and `sex`, `age_cat`, `race`, `c_charge_degree`,
//! `c_charge_desc` (categorical). The label is `decile_score ≥ threshold`.
//! Sensitive attributes: `gender` (1 = Male) and `race` (1 = Caucasian).
//!
//! Some releases of the file repeat column names; the first occurrence wins.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::dataset::{
    standardization, vocab_index, vocabulary, AttributeColumns, Dataset, Domain, FeatureSpec,
    LabeledExample, Schema,
};
use crate::error::{Error, Result};

const NUMERIC: [&str; 5] = [
    "age",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "priors_count",
];
const CATEGORICAL: [&str; 5] = ["sex", "age_cat", "race", "c_charge_degree", "c_charge_desc"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompasOptions {
    /// Rows with `decile_score >= label_threshold` are positive.
    pub label_threshold: u8,
}

impl Default for CompasOptions {
    fn default() -> Self {
        CompasOptions { label_threshold: 5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompasData {
    pub dataset: Dataset,
    /// Rows dropped because `decile_score` was missing or outside 1..=10.
    pub dropped: usize,
}

struct Row {
    numeric: Vec<f64>,
    categorical: Vec<String>,
    decile: u8,
}

fn column(headers: &csv::StringRecord, name: &str, source_name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Ingestion {
            source_name: source_name.to_string(),
            row: 1,
            message: format!("missing column {name:?}"),
        })
}

pub fn parse_compas<R: Read>(reader: R, options: CompasOptions) -> Result<CompasData> {
    const SOURCE: &str = "compas";
    if !(1..=10).contains(&options.label_threshold) {
        return Err(Error::Config(format!(
            "COMPAS label threshold {} outside 1..=10",
            options.label_threshold
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let ingest = |row: usize, message: String| Error::Ingestion {
        source_name: SOURCE.to_string(),
        row,
        message,
    };
    let headers = rdr.headers().map_err(|e| ingest(1, e.to_string()))?.clone();
    let num_idx: Vec<usize> = NUMERIC
        .iter()
        .map(|n| column(&headers, n, SOURCE))
        .collect::<Result<_>>()?;
    let cat_idx: Vec<usize> = CATEGORICAL
        .iter()
        .map(|n| column(&headers, n, SOURCE))
        .collect::<Result<_>>()?;
    let decile_idx = column(&headers, "decile_score", SOURCE)?;

    let mut rows = Vec::new();
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            ingest(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let decile = match rec[decile_idx].parse::<u8>() {
            Ok(d) if (1..=10).contains(&d) => d,
            _ => {
                dropped += 1;
                continue;
            }
        };
        let mut numeric = Vec::with_capacity(NUMERIC.len());
        for (&j, name) in num_idx.iter().zip(NUMERIC) {
            let v: f64 = rec[j]
                .parse()
                .map_err(|_| ingest(line, format!("{name} is not numeric: {:?}", &rec[j])))?;
            if !v.is_finite() {
                return Err(ingest(line, format!("{name} is not finite")));
            }
            numeric.push(v);
        }
        rows.push(Row {
            numeric,
            categorical: cat_idx.iter().map(|&j| rec[j].to_string()).collect(),
            decile,
        });
    }
    if rows.is_empty() {
        return Err(ingest(0, "no rows with a usable decile_score".into()));
    }

    let mut features = Vec::new();
    let mut stats = Vec::new();
    for (k, name) in NUMERIC.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r.numeric[k]).collect();
        let (mean, std) = standardization(&col);
        stats.push((mean, std));
        features.push(FeatureSpec::numeric(name, mean, std));
    }
    let mut vocabs = Vec::new();
    for (k, name) in CATEGORICAL.iter().enumerate() {
        let vocab = vocabulary(rows.iter().map(|r| r.categorical[k].as_str()));
        features.push(FeatureSpec::categorical(name, vocab.clone()));
        vocabs.push(vocab);
    }
    let schema = Schema { features };

    let mut gender = Vec::with_capacity(rows.len());
    let mut race = Vec::with_capacity(rows.len());
    let examples = rows
        .iter()
        .map(|r| {
            let mut f: Vec<f64> = r
                .numeric
                .iter()
                .zip(&stats)
                .map(|(v, (m, s))| (v - m) / s)
                .collect();
            f.extend(
                r.categorical
                    .iter()
                    .zip(&vocabs)
                    .map(|(v, voc)| vocab_index(voc, v) as f64),
            );
            let g = u8::from(r.categorical[0] == "Male");
            gender.push(g);
            race.push(u8::from(r.categorical[2] == "Caucasian"));
            LabeledExample {
                features: f,
                label: u8::from(r.decile >= options.label_threshold),
                group: g,
                domain: Domain::Source,
            }
        })
        .collect();
    let mut attrs = AttributeColumns::new();
    attrs.insert("gender".into(), gender);
    attrs.insert("race".into(), race);
    Ok(CompasData {
        dataset: Dataset::new(schema, examples, attrs)?,
        dropped,
    })
}

pub fn load_compas(path: &Path, options: CompasOptions) -> Result<CompasData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_compas(std::io::BufReader::new(file), options)
}
