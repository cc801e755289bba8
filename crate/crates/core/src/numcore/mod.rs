//! Dense numeric core: matrices, the two-layer-plus-heads network, Adagrad, and
//! gradient reversal.

mod logistic;
mod matrix;
mod mlp;
mod optim;
mod params;

pub use logistic::{error_rate, LogisticRegression};
pub use matrix::{axpy, dot, DenseMatrix};
pub use mlp::{
    backprop, backprop_features, backward, bce_with_logit, embed, forward_features, head_logits,
    mlp_forward, represent, sigmoid, FeatureBatch, ForwardOutput, HeadUpstream, Input,
    Representation,
};
pub use optim::{adagrad_step, grad_reverse, GradReverse};
pub use params::{
    Activation, EmbeddingShape, GradientSet, HeadId, ModelParams, ParamSet, Topology,
    INITIAL_ACCUMULATOR, TASK_HEAD,
};
