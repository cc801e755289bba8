//! Forward and reverse-mode passes for the fixed `input → hidden → heads` network.
//!
//! Two input forms are accepted. A [`DenseMatrix`] holds the already concatenated
//! `[numeric | embeddings]` rows. A [`FeatureBatch`] carries numeric columns plus raw
//! categorical indices; its first layer is evaluated as
//! `numeric·W_num + Σ_f (E_f·W_f)[idx_f] + b`, which equals the concatenated form
//! but only touches the embedding rows present in the batch.

use super::matrix::{axpy, dot, DenseMatrix};
use super::params::{GradientSet, HeadId, ModelParams, ParamSet};
use crate::error::{Error, Result};

/// Numeric columns plus one categorical index column per embedding table.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBatch {
    pub numeric: DenseMatrix,
    pub categorical: Vec<Vec<u32>>,
}

impl FeatureBatch {
    pub fn dense(numeric: DenseMatrix) -> Self {
        FeatureBatch {
            numeric,
            categorical: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.numeric.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends the rows of `other`.
    pub fn extend(&mut self, other: &FeatureBatch) -> Result<()> {
        if self.categorical.len() != other.categorical.len() {
            return Err(Error::Dimension(format!(
                "cannot append batch with {} categorical columns to one with {}",
                other.categorical.len(),
                self.categorical.len()
            )));
        }
        self.numeric = self.numeric.vstack(&other.numeric)?;
        for (dst, src) in self.categorical.iter_mut().zip(&other.categorical) {
            dst.extend_from_slice(src);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Input<'a> {
    Dense(&'a DenseMatrix),
    Features(&'a FeatureBatch),
}

impl Input<'_> {
    pub fn rows(&self) -> usize {
        match self {
            Input::Dense(m) => m.rows(),
            Input::Features(b) => b.len(),
        }
    }
}

/// Shared representation of a batch, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Representation {
    /// Pre-activation of the hidden layer; empty for the pass-through layout.
    pub pre: DenseMatrix,
    pub hidden: DenseMatrix,
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub hidden: DenseMatrix,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target.
#[inline]
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Concatenates `[numeric | E_1[idx_1] | … ]` into dense rows.
pub fn embed(params: &ModelParams, batch: &FeatureBatch) -> Result<DenseMatrix> {
    check_features(params, batch)?;
    let topo = &params.topology;
    let n = batch.len();
    let mut out = DenseMatrix::zeros(n, topo.input_dim());
    for i in 0..n {
        let row = out.row_mut(i);
        row[..topo.numeric_dim].copy_from_slice(batch.numeric.row(i));
        for (f, col) in batch.categorical.iter().enumerate() {
            let off = topo.embedding_offset(f);
            let dim = topo.embeddings[f].dim;
            row[off..off + dim].copy_from_slice(params.values.embeddings[f].row(col[i] as usize));
        }
    }
    Ok(out)
}

fn check_features(params: &ModelParams, batch: &FeatureBatch) -> Result<()> {
    let topo = &params.topology;
    if batch.numeric.cols() != topo.numeric_dim {
        return Err(Error::Dimension(format!(
            "batch has {} numeric columns, model expects {}",
            batch.numeric.cols(),
            topo.numeric_dim
        )));
    }
    if batch.categorical.len() != topo.embeddings.len() {
        return Err(Error::Dimension(format!(
            "batch has {} categorical columns, model expects {}",
            batch.categorical.len(),
            topo.embeddings.len()
        )));
    }
    for (f, col) in batch.categorical.iter().enumerate() {
        if col.len() != batch.len() {
            return Err(Error::Dimension(format!(
                "categorical column {f} has {} entries for {} rows",
                col.len(),
                batch.len()
            )));
        }
        let vocab = topo.embeddings[f].vocab;
        if let Some(bad) = col.iter().find(|&&v| v as usize >= vocab) {
            return Err(Error::Dimension(format!(
                "categorical column {f} index {bad} outside vocabulary of {vocab}"
            )));
        }
    }
    batch.numeric.ensure_finite("batch")
}

/// Distinct indices of a column and each row's slot among them.
fn unique_slots(col: &[u32], vocab: usize) -> (Vec<u32>, Vec<usize>) {
    let mut slot_of = vec![usize::MAX; vocab];
    let mut uniques = Vec::new();
    let slots = col
        .iter()
        .map(|&v| {
            let s = &mut slot_of[v as usize];
            if *s == usize::MAX {
                *s = uniques.len();
                uniques.push(v);
            }
            *s
        })
        .collect();
    (uniques, slots)
}

/// Computes the shared representation for a batch.
pub fn represent(params: &ModelParams, input: Input<'_>) -> Result<Representation> {
    let topo = &params.topology;
    match input {
        Input::Dense(m) => {
            if m.cols() != topo.input_dim() {
                return Err(Error::Dimension(format!(
                    "batch has {} columns, model input is {}",
                    m.cols(),
                    topo.input_dim()
                )));
            }
            m.ensure_finite("batch")?;
        }
        Input::Features(b) => check_features(params, b)?,
    }
    let n = input.rows();
    let Some(width) = topo.hidden else {
        let hidden = match input {
            Input::Dense(m) => m.clone(),
            Input::Features(b) => embed(params, b)?,
        };
        return Ok(Representation {
            pre: DenseMatrix::zeros(0, 0),
            hidden,
        });
    };

    let w = &params.values.hidden_weight;
    let bias = &params.values.hidden_bias;
    let mut pre = DenseMatrix::from_vec(n, width, bias.repeat(n))?;
    match input {
        Input::Dense(m) => {
            for i in 0..n {
                let dst = pre.row_mut(i);
                for (k, &x) in m.row(i).iter().enumerate() {
                    if x != 0.0 {
                        axpy(x, w.row(k), dst);
                    }
                }
            }
        }
        Input::Features(b) => {
            for i in 0..n {
                let dst = pre.row_mut(i);
                for (k, &x) in b.numeric.row(i).iter().enumerate() {
                    if x != 0.0 {
                        axpy(x, w.row(k), dst);
                    }
                }
            }
            for (f, col) in b.categorical.iter().enumerate() {
                let shape = topo.embeddings[f];
                let off = topo.embedding_offset(f);
                let table = &params.values.embeddings[f];
                let (uniques, slots) = unique_slots(col, shape.vocab);
                // projected[s] = E_f[uniques[s]] · W_f
                let mut projected = DenseMatrix::zeros(uniques.len(), width);
                for (s, &u) in uniques.iter().enumerate() {
                    let dst = projected.row_mut(s);
                    for (k, &e) in table.row(u as usize).iter().enumerate() {
                        axpy(e, w.row(off + k), dst);
                    }
                }
                for (i, &s) in slots.iter().enumerate() {
                    axpy(1.0, projected.row(s), pre.row_mut(i));
                }
            }
        }
    }
    let act = topo.activation;
    let hidden_data = pre.data().iter().map(|&v| act.apply(v)).collect();
    let hidden = DenseMatrix::from_vec(n, width, hidden_data)?;
    Ok(Representation { pre, hidden })
}

/// Scalar outputs of one head over a representation.
pub fn head_logits(params: &ModelParams, hidden: &DenseMatrix, head: HeadId) -> Result<Vec<f64>> {
    params.check_head(head)?;
    let w = params.head_weight(head);
    let b = params.values.head_biases[head.0];
    Ok((0..hidden.rows())
        .map(|i| dot(hidden.row(i), w) + b)
        .collect())
}

fn finish(params: &ModelParams, rep: Representation, head: HeadId) -> Result<ForwardOutput> {
    let logits = head_logits(params, &rep.hidden, head)?;
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logit".into()));
    }
    let probs = logits.iter().map(|&z| sigmoid(z)).collect();
    Ok(ForwardOutput {
        hidden: rep.hidden,
        logits,
        probs,
    })
}

/// Forward pass over already concatenated input rows.
pub fn mlp_forward(
    params: &ModelParams,
    batch: &DenseMatrix,
    head: HeadId,
) -> Result<ForwardOutput> {
    params.check_head(head)?;
    let rep = represent(params, Input::Dense(batch))?;
    finish(params, rep, head)
}

/// Forward pass over numeric columns plus categorical indices.
pub fn forward_features(
    params: &ModelParams,
    batch: &FeatureBatch,
    head: HeadId,
) -> Result<ForwardOutput> {
    params.check_head(head)?;
    let rep = represent(params, Input::Features(batch))?;
    finish(params, rep, head)
}

/// Per-example gradient of the objective with respect to one head's logits.
#[derive(Clone, Copy, Debug)]
pub struct HeadUpstream<'a> {
    pub head: HeadId,
    pub upstream: &'a [f64],
    /// Whether this gradient also flows into the shared representation. Adversarial
    /// heads set this to `false` and route a reversed gradient through `extra_hidden`.
    pub into_hidden: bool,
}

/// Reverse-mode pass. Returns the gradient of
/// `Σ_heads Σ_i upstream_i · logit_i + Σ_i ⟨extra_hidden_i, hidden_i⟩`
/// (with `into_hidden = false` heads contributing only to their own weights).
pub fn backward(
    params: &ModelParams,
    input: Input<'_>,
    rep: &Representation,
    heads: &[HeadUpstream<'_>],
    extra_hidden: Option<&DenseMatrix>,
) -> Result<GradientSet> {
    let topo = &params.topology;
    let n = input.rows();
    let rep_dim = topo.rep_dim();
    let mut grads = ParamSet::zeros(topo);
    let mut d_hidden = DenseMatrix::zeros(n, rep_dim);

    for hu in heads {
        params.check_head(hu.head)?;
        if hu.upstream.len() != n {
            return Err(Error::Dimension(format!(
                "upstream has {} entries for {} rows",
                hu.upstream.len(),
                n
            )));
        }
        let w = params.head_weight(hu.head);
        let gw = grads.head_weights.row_mut(hu.head.0);
        let mut gb = 0.0;
        for (i, &u) in hu.upstream.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            axpy(u, rep.hidden.row(i), gw);
            gb += u;
        }
        grads.head_biases[hu.head.0] += gb;
        if hu.into_hidden {
            for (i, &u) in hu.upstream.iter().enumerate() {
                if u != 0.0 {
                    axpy(u, w, d_hidden.row_mut(i));
                }
            }
        }
    }
    if let Some(extra) = extra_hidden {
        if extra.rows() != n || extra.cols() != rep_dim {
            return Err(Error::Dimension(format!(
                "extra hidden gradient is {}x{}, expected {}x{}",
                extra.rows(),
                extra.cols(),
                n,
                rep_dim
            )));
        }
        axpy(1.0, extra.data(), d_hidden.data_mut());
    }

    if topo.hidden.is_none() {
        // heads read the input directly; only embedding rows can receive gradient
        if let Input::Features(b) = input {
            for (f, col) in b.categorical.iter().enumerate() {
                let off = topo.embedding_offset(f);
                let dim = topo.embeddings[f].dim;
                for (i, &idx) in col.iter().enumerate() {
                    axpy(
                        1.0,
                        &d_hidden.row(i)[off..off + dim],
                        grads.embeddings[f].row_mut(idx as usize),
                    );
                }
            }
        }
        return Ok(GradientSet(grads));
    }

    let act = topo.activation;
    let mut d_pre = d_hidden;
    for (g, &p) in d_pre.data_mut().iter_mut().zip(rep.pre.data()) {
        *g *= act.derivative(p);
    }
    for i in 0..n {
        axpy(1.0, d_pre.row(i), &mut grads.hidden_bias);
    }

    match input {
        Input::Dense(m) => m.add_transpose_matmul_into(&d_pre, &mut grads.hidden_weight),
        Input::Features(b) => {
            let width = d_pre.cols();
            let w = &params.values.hidden_weight;
            for i in 0..n {
                let g = d_pre.row(i);
                for (k, &x) in b.numeric.row(i).iter().enumerate() {
                    if x != 0.0 {
                        axpy(x, g, grads.hidden_weight.row_mut(k));
                    }
                }
            }
            for (f, col) in b.categorical.iter().enumerate() {
                let shape = topo.embeddings[f];
                let off = topo.embedding_offset(f);
                let (uniques, slots) = unique_slots(col, shape.vocab);
                let mut d_projected = DenseMatrix::zeros(uniques.len(), width);
                for (i, &s) in slots.iter().enumerate() {
                    axpy(1.0, d_pre.row(i), d_projected.row_mut(s));
                }
                let table = &params.values.embeddings[f];
                for (s, &u) in uniques.iter().enumerate() {
                    let dp = d_projected.row(s);
                    let e_row = table.row(u as usize);
                    let de_row = grads.embeddings[f].row_mut(u as usize);
                    for (k, de) in de_row.iter_mut().enumerate() {
                        *de += dot(w.row(off + k), dp);
                    }
                    for (k, &e) in e_row.iter().enumerate() {
                        axpy(e, dp, grads.hidden_weight.row_mut(off + k));
                    }
                }
            }
        }
    }
    Ok(GradientSet(grads))
}

/// Gradient of `Σ_i upstream_i · logit_i` over dense input rows.
pub fn backprop(
    params: &ModelParams,
    batch: &DenseMatrix,
    upstream: &[f64],
    head: HeadId,
) -> Result<GradientSet> {
    params.check_head(head)?;
    let rep = represent(params, Input::Dense(batch))?;
    backward(
        params,
        Input::Dense(batch),
        &rep,
        &[HeadUpstream {
            head,
            upstream,
            into_hidden: true,
        }],
        None,
    )
}

/// Same as [`backprop`] over a [`FeatureBatch`]; also yields embedding gradients.
pub fn backprop_features(
    params: &ModelParams,
    batch: &FeatureBatch,
    upstream: &[f64],
    head: HeadId,
) -> Result<GradientSet> {
    params.check_head(head)?;
    let rep = represent(params, Input::Features(batch))?;
    backward(
        params,
        Input::Features(batch),
        &rep,
        &[HeadUpstream {
            head,
            upstream,
            into_hidden: true,
        }],
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::params::{Activation, EmbeddingShape, Topology, TASK_HEAD};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_unit() -> ModelParams {
        let topo = Topology {
            numeric_dim: 1,
            embeddings: vec![],
            hidden: Some(1),
            activation: Activation::Relu,
            heads: 1,
        };
        let mut p = ModelParams::zeros(topo);
        p.values.hidden_weight.set(0, 0, 1.0);
        p.values.hidden_bias[0] = 0.0;
        p.values.head_weights.set(0, 0, 2.0);
        p.values.head_biases[0] = -1.0;
        p
    }

    fn embedded_topology() -> Topology {
        Topology {
            numeric_dim: 2,
            embeddings: vec![
                EmbeddingShape { vocab: 4, dim: 3 },
                EmbeddingShape { vocab: 2, dim: 2 },
            ],
            hidden: Some(5),
            activation: Activation::Relu,
            heads: 2,
        }
    }

    fn feature_batch() -> FeatureBatch {
        FeatureBatch {
            numeric: DenseMatrix::from_rows(&[[0.3, -1.2], [1.5, 0.2], [-0.7, 0.9], [0.1, 0.4]])
                .unwrap(),
            categorical: vec![vec![0, 3, 3, 1], vec![1, 0, 1, 1]],
        }
    }

    #[test]
    fn zero_weights_give_half() {
        let p = ModelParams::zeros(embedded_topology());
        let out = forward_features(&p, &feature_batch(), TASK_HEAD).unwrap();
        assert!(out.probs.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn hand_set_two_layer_composition() {
        let p = one_unit();
        let x = DenseMatrix::from_rows(&[[0.5]]).unwrap();
        let out = mlp_forward(&p, &x, TASK_HEAD).unwrap();
        assert_eq!(out.logits, vec![0.0]);
        assert_eq!(out.probs, vec![0.5]);
    }

    #[test]
    fn shapes_follow_batch_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ModelParams::glorot(embedded_topology(), &mut rng);
        let out = forward_features(&p, &feature_batch(), HeadId(1)).unwrap();
        assert_eq!(out.hidden.rows(), 4);
        assert_eq!(out.hidden.cols(), 5);
        assert_eq!(out.logits.len(), 4);
    }

    #[test]
    fn dimension_and_numeric_errors() {
        let p = one_unit();
        let wide = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            mlp_forward(&p, &wide, TASK_HEAD),
            Err(Error::Dimension(_))
        ));
        let nan = DenseMatrix::from_rows(&[[f64::NAN]]).unwrap();
        assert!(matches!(
            mlp_forward(&p, &nan, TASK_HEAD),
            Err(Error::Numeric(_))
        ));
        let x = DenseMatrix::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(
            mlp_forward(&p, &x, HeadId(4)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            backprop(&p, &x, &[1.0], HeadId(4)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            backprop(&p, &x, &[1.0, 2.0], TASK_HEAD),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn out_of_vocabulary_index_rejected() {
        let p = ModelParams::zeros(embedded_topology());
        let mut b = feature_batch();
        b.categorical[1][0] = 2;
        assert!(matches!(
            forward_features(&p, &b, TASK_HEAD),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn fused_embedding_path_matches_concatenation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = ModelParams::glorot(embedded_topology(), &mut rng);
        let b = feature_batch();
        let dense = embed(&p, &b).unwrap();
        let fused = forward_features(&p, &b, TASK_HEAD).unwrap();
        let plain = mlp_forward(&p, &dense, TASK_HEAD).unwrap();
        for (a, c) in fused.logits.iter().zip(&plain.logits) {
            assert!((a - c).abs() < 1e-12);
        }
        let up = [0.3, -0.5, 1.1, 0.25];
        let gf = backprop_features(&p, &b, &up, TASK_HEAD).unwrap();
        let gd = backprop(&p, &dense, &up, TASK_HEAD).unwrap();
        for (a, c) in
            gf.0.hidden_weight
                .data()
                .iter()
                .zip(gd.0.hidden_weight.data())
        {
            assert!((a - c).abs() < 1e-12);
        }
        assert!(gd
            .0
            .embeddings
            .iter()
            .all(|e| e.data().iter().all(|v| *v == 0.0)));
        assert!(gf.0.embeddings[0].data().iter().any(|v| *v != 0.0));
        // an index absent from the batch gets no gradient
        assert!(gf.0.embeddings[0].row(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = ModelParams::glorot(embedded_topology(), &mut rng);
        let g = backprop_features(&p, &feature_batch(), &[0.0; 4], TASK_HEAD).unwrap();
        assert!(g.0.flatten().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn upstream_scaling_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ModelParams::glorot(embedded_topology(), &mut rng);
        let up = [0.3, -0.5, 1.1, 0.25];
        let up2: Vec<f64> = up.iter().map(|v| v * 2.0).collect();
        let g1 = backprop_features(&p, &feature_batch(), &up, TASK_HEAD).unwrap();
        let g2 = backprop_features(&p, &feature_batch(), &up2, TASK_HEAD).unwrap();
        for (a, b) in g1.0.flatten().iter().zip(g2.0.flatten()) {
            assert_eq!(2.0 * a, b);
        }
    }

    #[test]
    fn bce_matches_naive_formula() {
        for &(z, y) in &[(0.3, 1.0), (-2.0, 0.0), (4.0, 0.0), (-0.1, 1.0)] {
            let p: f64 = sigmoid(z);
            let naive = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            assert!((bce_with_logit(z, y) - naive).abs() < 1e-12);
        }
        assert!(bce_with_logit(800.0, 0.0).is_finite());
    }
}
