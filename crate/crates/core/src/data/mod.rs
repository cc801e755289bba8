//! Datasets: synthetic Gaussian domains, UCI Adult and COMPAS ingestion, quadrant
//! partitioning, and balanced batch sampling.

mod adult;
mod compas;
mod dataset;
mod dump;
mod quadrant;
mod sampler;
mod synthetic;

pub use adult::{load_adult, parse_adult, parse_adult_records, AdultRecord, ADULT_COLUMNS};
pub use compas::{load_compas, parse_compas, CompasData, CompasOptions};
pub use dataset::{
    AttributeColumns, Dataset, Domain, FeatureKind, FeatureSpec, LabeledExample, Schema,
};
pub use dump::write_dataset_csv;
pub use quadrant::{partition_quadrants, ExampleRef, QuadrantIndex, QuadrantKey};
pub use sampler::{balanced_batches, uniform_batches, BalancedSampler, Batch, BatchPurpose};
pub use synthetic::{gen_synthetic, SyntheticSpec};
