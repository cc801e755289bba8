//! Multi-head training: kernel MMD, head construction, the combined loss, the
//! training loop and checkpoints.

mod checkpoint;
mod heads;
mod loss;
mod mmd;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint};
pub use heads::{build_model, Arrangement, FairnessConditioning, HeadKind, HeadSpec, TrainConfig};
pub use loss::{total_loss, HeadBatch, LossBreakdown, TaskBatch};
pub use mmd::{median_pairwise_distance, mmd2, Bandwidth, KernelSpec, Mmd};
pub use train::{evaluate, predict_probs, train, EvalRecord, TrainData, TrainOutput};
