use rand::Rng;

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Starting value of every Adagrad accumulator entry.
pub const INITIAL_ACCUMULATOR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One categorical feature's embedding table shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingShape {
    pub vocab: usize,
    pub dim: usize,
}

/// Fixed network layout: `[numeric | embeddings]` input, an optional shared hidden
/// layer, and `heads` scalar linear heads over the shared representation. Head 0 is
/// the task head.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub numeric_dim: usize,
    pub embeddings: Vec<EmbeddingShape>,
    /// `None` connects the heads straight to the input (a linear model).
    pub hidden: Option<usize>,
    pub activation: Activation,
    pub heads: usize,
}

impl Topology {
    /// Logistic-regression layout over `dim` numeric inputs.
    pub fn linear(dim: usize) -> Self {
        Topology {
            numeric_dim: dim,
            embeddings: Vec::new(),
            hidden: None,
            activation: Activation::Identity,
            heads: 1,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.numeric_dim + self.embeddings.iter().map(|e| e.dim).sum::<usize>()
    }

    /// Width of the representation the heads read.
    pub fn rep_dim(&self) -> usize {
        self.hidden.unwrap_or_else(|| self.input_dim())
    }

    /// Row offset of embedding `f` inside the concatenated input.
    pub fn embedding_offset(&self, f: usize) -> usize {
        self.numeric_dim + self.embeddings[..f].iter().map(|e| e.dim).sum::<usize>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeadId(pub usize);

pub const TASK_HEAD: HeadId = HeadId(0);

/// One value per trainable scalar, grouped into tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub embeddings: Vec<DenseMatrix>,
    /// `input_dim × hidden`; `0 × 0` for the pass-through layout.
    pub hidden_weight: DenseMatrix,
    pub hidden_bias: Vec<f64>,
    /// One row of `rep_dim` weights per head.
    pub head_weights: DenseMatrix,
    pub head_biases: Vec<f64>,
}

impl ParamSet {
    pub fn filled(topology: &Topology, value: f64) -> Self {
        let (hw, hb) = match topology.hidden {
            Some(h) => (
                DenseMatrix::from_vec(
                    topology.input_dim(),
                    h,
                    vec![value; topology.input_dim() * h],
                )
                .expect("shape"),
                vec![value; h],
            ),
            None => (DenseMatrix::zeros(0, 0), Vec::new()),
        };
        let rep = topology.rep_dim();
        ParamSet {
            embeddings: topology
                .embeddings
                .iter()
                .map(|e| {
                    DenseMatrix::from_vec(e.vocab, e.dim, vec![value; e.vocab * e.dim])
                        .expect("shape")
                })
                .collect(),
            hidden_weight: hw,
            hidden_bias: hb,
            head_weights: DenseMatrix::from_vec(
                topology.heads,
                rep,
                vec![value; topology.heads * rep],
            )
            .expect("shape"),
            head_biases: vec![value; topology.heads],
        }
    }

    pub fn zeros(topology: &Topology) -> Self {
        Self::filled(topology, 0.0)
    }

    /// Tensor names in canonical order, matching [`ParamSet::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.embeddings.len())
            .map(|f| format!("embedding.{f}"))
            .collect();
        names.extend(
            ["hidden.weight", "hidden.bias", "heads.weight", "heads.bias"]
                .iter()
                .map(|s| s.to_string()),
        );
        names
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.embeddings.iter().map(|e| e.data()).collect();
        out.push(self.hidden_weight.data());
        out.push(&self.hidden_bias);
        out.push(self.head_weights.data());
        out.push(&self.head_biases);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.embeddings.iter_mut().map(|e| e.data_mut()).collect();
        out.push(self.hidden_weight.data_mut());
        out.push(&mut self.hidden_bias);
        out.push(self.head_weights.data_mut());
        out.push(&mut self.head_biases);
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// True when every tensor has the same length as its counterpart in `other`.
    pub fn congruent(&self, other: &ParamSet) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// `self += other`; shapes must be congruent.
    pub fn add_assign(&mut self, other: &ParamSet) {
        debug_assert!(self.congruent(other));
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
        }
    }

    /// Flattens every scalar in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

/// Gradient of some scalar with respect to every entry of a [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet(pub ParamSet);

impl GradientSet {
    pub fn zeros(topology: &Topology) -> Self {
        GradientSet(ParamSet::zeros(topology))
    }
}

/// Network weights plus their Adagrad accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub topology: Topology,
    pub values: ParamSet,
    pub accumulators: ParamSet,
}

impl ModelParams {
    /// All weights zero, accumulators at [`INITIAL_ACCUMULATOR`].
    pub fn zeros(topology: Topology) -> Self {
        ModelParams {
            values: ParamSet::zeros(&topology),
            accumulators: ParamSet::filled(&topology, INITIAL_ACCUMULATOR),
            topology,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(topology: Topology, rng: &mut R) -> Self {
        let mut params = ModelParams::zeros(topology);
        let topo = params.topology.clone();
        for (table, shape) in params.values.embeddings.iter_mut().zip(&topo.embeddings) {
            glorot_fill(table.data_mut(), shape.vocab, shape.dim, rng);
        }
        if let Some(h) = topo.hidden {
            glorot_fill(
                params.values.hidden_weight.data_mut(),
                topo.input_dim(),
                h,
                rng,
            );
        }
        let rep = topo.rep_dim();
        for head in 0..topo.heads {
            glorot_fill(params.values.head_weights.row_mut(head), rep, 1, rng);
        }
        params
    }

    pub fn num_heads(&self) -> usize {
        self.topology.heads
    }

    pub(crate) fn check_head(&self, head: HeadId) -> Result<()> {
        if head.0 >= self.topology.heads {
            Err(Error::Config(format!(
                "head {} does not exist (model has {} heads)",
                head.0, self.topology.heads
            )))
        } else {
            Ok(())
        }
    }

    pub fn head_weight(&self, head: HeadId) -> &[f64] {
        self.values.head_weights.row(head.0)
    }
}

fn glorot_fill<R: Rng + ?Sized>(dst: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in dst.iter_mut() {
        *v = rng.random_range(-limit..=limit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn topo() -> Topology {
        Topology {
            numeric_dim: 3,
            embeddings: vec![EmbeddingShape { vocab: 5, dim: 4 }],
            hidden: Some(6),
            activation: Activation::Relu,
            heads: 2,
        }
    }

    #[test]
    fn shapes_follow_topology() {
        let p = ModelParams::zeros(topo());
        assert_eq!(p.topology.input_dim(), 7);
        assert_eq!(p.values.hidden_weight.rows(), 7);
        assert_eq!(p.values.hidden_weight.cols(), 6);
        assert_eq!(p.values.head_weights.rows(), 2);
        assert_eq!(p.values.head_weights.cols(), 6);
        assert_eq!(p.values.num_scalars(), 5 * 4 + 7 * 6 + 6 + 2 * 6 + 2);
        assert!(p.values.congruent(&p.accumulators));
        assert_eq!(p.values.tensor_names().len(), p.values.tensors().len());
    }

    #[test]
    fn glorot_respects_limits_and_zero_biases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::glorot(topo(), &mut rng);
        let limit = (6.0f64 / 13.0).sqrt();
        assert!(p
            .values
            .hidden_weight
            .data()
            .iter()
            .all(|v| v.abs() <= limit));
        assert!(p.values.hidden_weight.data().iter().any(|v| *v != 0.0));
        assert!(p.values.hidden_bias.iter().all(|v| *v == 0.0));
        assert!(p.values.head_biases.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unknown_head_is_config_error() {
        let p = ModelParams::zeros(topo());
        assert!(p.check_head(HeadId(1)).is_ok());
        assert!(matches!(p.check_head(HeadId(2)), Err(Error::Config(_))));
    }

    #[test]
    fn pass_through_representation_is_input() {
        let t = Topology::linear(4);
        assert_eq!(t.rep_dim(), 4);
        let p = ModelParams::zeros(t);
        assert_eq!(p.values.hidden_weight.rows(), 0);
        assert_eq!(p.values.head_weights.cols(), 4);
    }
}
