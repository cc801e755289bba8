use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numcore::{DenseMatrix, EmbeddingShape, FeatureBatch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row. Numeric features are stored standardized; categorical features hold
/// their vocabulary index as a float.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: u8,
    pub group: u8,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureKind {
    /// Standardization statistics applied at load time.
    Numeric { mean: f64, std: f64 },
    /// Index `vocabulary.len()` is reserved for out-of-vocabulary values.
    Categorical { vocabulary: Vec<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: &str, mean: f64, std: f64) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Numeric { mean, std },
        }
    }

    pub fn categorical(name: &str, vocabulary: Vec<String>) -> Self {
        FeatureSpec {
            name: name.to_string(),
            kind: FeatureKind::Categorical { vocabulary },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Schema {
    pub features: Vec<FeatureSpec>,
}

impl Schema {
    pub fn numeric_columns(&self) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f.kind, FeatureKind::Numeric { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn categorical_columns(&self) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f.kind, FeatureKind::Categorical { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Embedding table shapes, one per categorical column (vocabulary + OOV row).
    pub fn embedding_shapes(&self, dim: usize) -> Vec<EmbeddingShape> {
        self.features
            .iter()
            .filter_map(|f| match &f.kind {
                FeatureKind::Categorical { vocabulary } => Some(EmbeddingShape {
                    vocab: vocabulary.len() + 1,
                    dim,
                }),
                FeatureKind::Numeric { .. } => None,
            })
            .collect()
    }
}

/// Binary sensitive attribute columns carried next to the examples, so the group
/// used for fairness can be switched without reloading.
pub type AttributeColumns = BTreeMap<String, Vec<u8>>;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    examples: Vec<LabeledExample>,
    attributes: AttributeColumns,
}

impl Dataset {
    pub fn new(
        schema: Schema,
        examples: Vec<LabeledExample>,
        attributes: AttributeColumns,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Argument("dataset must not be empty".into()));
        }
        let width = schema.features.len();
        for (i, ex) in examples.iter().enumerate() {
            if ex.features.len() != width {
                return Err(Error::Dimension(format!(
                    "example {i} has {} features, schema has {width}",
                    ex.features.len()
                )));
            }
            if ex.label > 1 || ex.group > 1 {
                return Err(Error::Argument(format!(
                    "example {i}: label and group must be 0 or 1"
                )));
            }
            for (j, spec) in schema.features.iter().enumerate() {
                let v = ex.features[j];
                let ok = match &spec.kind {
                    FeatureKind::Numeric { .. } => v.is_finite(),
                    FeatureKind::Categorical { vocabulary } => {
                        v >= 0.0 && v.fract() == 0.0 && v <= vocabulary.len() as f64
                    }
                };
                if !ok {
                    return Err(Error::Argument(format!(
                        "example {i}: invalid value {v} for feature {}",
                        spec.name
                    )));
                }
            }
        }
        for (name, col) in &attributes {
            if col.len() != examples.len() || col.iter().any(|&a| a > 1) {
                return Err(Error::Argument(format!(
                    "attribute column {name} must hold one 0/1 value per example"
                )));
            }
        }
        Ok(Dataset {
            schema,
            examples,
            attributes,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn attributes(&self) -> &AttributeColumns {
        &self.attributes
    }

    pub fn labels(&self) -> Vec<u8> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn groups(&self) -> Vec<u8> {
        self.examples.iter().map(|e| e.group).collect()
    }

    /// Copy whose `group` field is taken from the named attribute column.
    pub fn with_group(&self, attribute: &str) -> Result<Dataset> {
        let col = self.attributes.get(attribute).ok_or_else(|| {
            Error::Config(format!(
                "unknown sensitive attribute {attribute:?} (have {:?})",
                self.attributes.keys().collect::<Vec<_>>()
            ))
        })?;
        let mut out = self.clone();
        for (ex, &g) in out.examples.iter_mut().zip(col) {
            ex.group = g;
        }
        Ok(out)
    }

    pub fn with_domain(&self, domain: Domain) -> Dataset {
        let mut out = self.clone();
        out.examples.iter_mut().for_each(|e| e.domain = domain);
        out
    }

    /// Rows at `indices` in order; errors when the selection is empty.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let examples = indices.iter().map(|&i| self.examples[i].clone()).collect();
        let attributes = self
            .attributes
            .iter()
            .map(|(k, col)| (k.clone(), indices.iter().map(|&i| col[i]).collect()))
            .collect();
        Dataset::new(self.schema.clone(), examples, attributes)
    }

    /// Seeded shuffle split; the first part receives `round(fraction · n)` rows.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Argument(format!(
                "split fraction {fraction} must be in (0,1)"
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = (fraction * self.len() as f64).round() as usize;
        let (a, b) = order.split_at(cut);
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        Ok((self.subset(&a)?, self.subset(&b)?))
    }

    /// Indices of the rows whose attribute `attribute` equals `value`.
    pub fn indices_where(&self, attribute: &str, value: u8) -> Result<Vec<usize>> {
        let col = self
            .attributes
            .get(attribute)
            .ok_or_else(|| Error::Config(format!("unknown sensitive attribute {attribute:?}")))?;
        Ok(col
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == value)
            .map(|(i, _)| i)
            .collect())
    }

    /// Network input for the rows at `indices`.
    pub fn feature_batch(&self, indices: &[usize]) -> FeatureBatch {
        let num_cols = self.schema.numeric_columns();
        let cat_cols = self.schema.categorical_columns();
        let mut numeric = Vec::with_capacity(indices.len() * num_cols.len());
        let mut categorical = vec![Vec::with_capacity(indices.len()); cat_cols.len()];
        for &i in indices {
            let f = &self.examples[i].features;
            numeric.extend(num_cols.iter().map(|&c| f[c]));
            for (dst, &c) in categorical.iter_mut().zip(&cat_cols) {
                dst.push(f[c] as u32);
            }
        }
        FeatureBatch {
            numeric: DenseMatrix::from_vec(indices.len(), num_cols.len(), numeric)
                .expect("numeric batch shape"),
            categorical,
        }
    }

    pub fn all_features(&self) -> FeatureBatch {
        let all: Vec<usize> = (0..self.len()).collect();
        self.feature_batch(&all)
    }

    /// Raw feature vectors as a dense matrix (categorical indices included verbatim).
    pub fn feature_matrix(&self, indices: &[usize]) -> DenseMatrix {
        let rows: Vec<&[f64]> = indices
            .iter()
            .map(|&i| self.examples[i].features.as_slice())
            .collect();
        DenseMatrix::from_rows(&rows).expect("schema-consistent rows")
    }
}

/// Population mean and standard deviation; a zero spread maps to 1.
pub(crate) fn standardization(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 { std } else { 1.0 })
}

/// Sorted vocabulary of the observed values.
pub(crate) fn vocabulary<'a>(values: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().map(str::to_string).collect();
    v.sort();
    v.dedup();
    v
}

/// Vocabulary index of `value`, or the OOV index.
pub(crate) fn vocab_index(vocabulary: &[String], value: &str) -> usize {
    vocabulary
        .binary_search_by(|v| v.as_str().cmp(value))
        .unwrap_or(vocabulary.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let schema = Schema {
            features: vec![
                FeatureSpec::numeric("x", 0.0, 1.0),
                FeatureSpec::categorical("c", vec!["a".into(), "b".into()]),
            ],
        };
        let examples = (0..6)
            .map(|i| LabeledExample {
                features: vec![i as f64, (i % 3) as f64],
                label: (i % 2) as u8,
                group: 0,
                domain: Domain::Source,
            })
            .collect();
        let mut attrs = AttributeColumns::new();
        attrs.insert("g".into(), vec![0, 1, 0, 1, 1, 1]);
        Dataset::new(schema, examples, attrs).unwrap()
    }

    #[test]
    fn regrouping_reads_attribute_column() {
        let d = tiny().with_group("g").unwrap();
        assert_eq!(d.groups(), vec![0, 1, 0, 1, 1, 1]);
        assert!(matches!(tiny().with_group("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn feature_batch_splits_numeric_and_categorical() {
        let b = tiny().feature_batch(&[5, 1]);
        assert_eq!(b.numeric.data(), &[5.0, 1.0]);
        assert_eq!(b.categorical, vec![vec![2, 1]]);
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let d = tiny();
        let (a, b) = d.split(0.5, 7).unwrap();
        assert_eq!(a.len() + b.len(), d.len());
        assert_eq!(d.split(0.5, 7).unwrap().0, a);
    }

    #[test]
    fn rejects_invalid_rows() {
        let schema = Schema {
            features: vec![FeatureSpec::numeric("x", 0.0, 1.0)],
        };
        let bad = LabeledExample {
            features: vec![f64::NAN],
            label: 0,
            group: 0,
            domain: Domain::Source,
        };
        assert!(Dataset::new(schema.clone(), vec![bad], AttributeColumns::new()).is_err());
        assert!(Dataset::new(schema, vec![], AttributeColumns::new()).is_err());
    }

    #[test]
    fn vocabulary_lookup_with_oov() {
        let v = vocabulary(["b", "a", "b", "?"]);
        assert_eq!(v, vec!["?", "a", "b"]);
        assert_eq!(vocab_index(&v, "a"), 1);
        assert_eq!(vocab_index(&v, "zzz"), 3);
    }
}
