//! UCI Adult (`adult.data` / `adult.test`) ingestion.
//!
//! All 14 attributes are used as features: six numeric columns standardized with
//! training statistics and eight categorical columns mapped to vocabulary indices.
//! `?` is kept as an ordinary category. The label is `income > 50K`. Two binary
//! sensitive attributes are attached: `gender` (1 = Male) and `race` (1 = White).

use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::dataset::{
    standardization, vocab_index, vocabulary, AttributeColumns, Dataset, Domain, FeatureKind,
    FeatureSpec, LabeledExample, Schema,
};
use crate::error::{Error, Result};

pub const ADULT_COLUMNS: [&str; 14] = [
    "age",
    "workclass",
    "fnlwgt",
    "education",
    "education-num",
    "marital-status",
    "occupation",
    "relationship",
    "race",
    "sex",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "native-country",
];

const NUMERIC: [bool; 14] = [
    true, false, true, false, true, false, false, false, false, false, true, true, true, false,
];

const RACE: usize = 8;
const SEX: usize = 9;

/// One parsed line before vocabulary mapping and standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct AdultRecord {
    pub line: usize,
    pub fields: Vec<String>,
    pub numeric: Vec<f64>,
    pub high_income: bool,
}

/// Parses one Adult-format file. Lines starting with `|` and blank lines are
/// skipped; every other line must have 15 comma-separated fields.
pub fn parse_adult_records<R: Read>(reader: R, source_name: &str) -> Result<Vec<AdultRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'|'))
        .from_reader(reader);
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line() as usize;
        let more = rdr.read_record(&mut record).map_err(|e| Error::Ingestion {
            source_name: source_name.to_string(),
            row: e.position().map(|p| p.line() as usize).unwrap_or(line),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line() as usize).unwrap_or(line);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let err = |message: String| Error::Ingestion {
            source_name: source_name.to_string(),
            row: line,
            message,
        };
        if record.len() != 15 {
            return Err(err(format!("expected 15 fields, found {}", record.len())));
        }
        let mut numeric = Vec::with_capacity(6);
        for (j, is_num) in NUMERIC.iter().enumerate() {
            if *is_num {
                let v: f64 = record[j].parse().map_err(|_| {
                    err(format!(
                        "{} is not numeric: {:?}",
                        ADULT_COLUMNS[j], &record[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(err(format!("{} is not finite", ADULT_COLUMNS[j])));
                }
                numeric.push(v);
            }
        }
        let label = record[14].trim_end_matches('.');
        let high_income = match label {
            ">50K" => true,
            "<=50K" => false,
            other => return Err(err(format!("unrecognized income label {other:?}"))),
        };
        out.push(AdultRecord {
            line,
            fields: record.iter().take(14).map(str::to_string).collect(),
            numeric,
            high_income,
        });
    }
    if out.is_empty() {
        return Err(Error::Ingestion {
            source_name: source_name.to_string(),
            row: 0,
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

fn build_schema(train: &[AdultRecord]) -> Schema {
    let mut num_idx = 0;
    let features = ADULT_COLUMNS
        .iter()
        .enumerate()
        .map(|(j, name)| {
            if NUMERIC[j] {
                let col: Vec<f64> = train.iter().map(|r| r.numeric[num_idx]).collect();
                num_idx += 1;
                let (mean, std) = standardization(&col);
                FeatureSpec::numeric(name, mean, std)
            } else {
                FeatureSpec::categorical(
                    name,
                    vocabulary(train.iter().map(|r| r.fields[j].as_str())),
                )
            }
        })
        .collect();
    Schema { features }
}

fn to_dataset(records: &[AdultRecord], schema: &Schema) -> Result<Dataset> {
    let mut examples = Vec::with_capacity(records.len());
    let mut gender = Vec::with_capacity(records.len());
    let mut race = Vec::with_capacity(records.len());
    for r in records {
        let mut num_idx = 0;
        let features = schema
            .features
            .iter()
            .enumerate()
            .map(|(j, spec)| match &spec.kind {
                FeatureKind::Numeric { mean, std } => {
                    let v = (r.numeric[num_idx] - mean) / std;
                    num_idx += 1;
                    v
                }
                FeatureKind::Categorical { vocabulary } => {
                    vocab_index(vocabulary, &r.fields[j]) as f64
                }
            })
            .collect();
        let g = u8::from(r.fields[SEX] == "Male");
        gender.push(g);
        race.push(u8::from(r.fields[RACE] == "White"));
        examples.push(LabeledExample {
            features,
            label: u8::from(r.high_income),
            group: g,
            domain: Domain::Source,
        });
    }
    let mut attrs = AttributeColumns::new();
    attrs.insert("gender".into(), gender);
    attrs.insert("race".into(), race);
    Dataset::new(schema.clone(), examples, attrs)
}

/// Builds train/test datasets from the two Adult files' contents. Vocabularies and
/// standardization come from the training split only; unseen test categories map
/// to the out-of-vocabulary index. The default group is `gender`.
pub fn parse_adult<R1: Read, R2: Read>(train: R1, test: R2) -> Result<(Dataset, Dataset)> {
    let train = parse_adult_records(train, "adult.data")?;
    let test = parse_adult_records(test, "adult.test")?;
    let schema = build_schema(&train);
    Ok((to_dataset(&train, &schema)?, to_dataset(&test, &schema)?))
}

pub fn load_adult(train_path: &Path, test_path: &Path) -> Result<(Dataset, Dataset)> {
    let train = File::open(train_path).map_err(|e| Error::io(train_path, e))?;
    let test = File::open(test_path).map_err(|e| Error::io(test_path, e))?;
    parse_adult(
        std::io::BufReader::new(train),
        std::io::BufReader::new(test),
    )
}
