#![allow(dead_code)]

use std::path::PathBuf;

use fairshift::data::{BatchPurpose, Domain};
use fairshift::model::{mmd2, total_loss, HeadBatch, HeadKind, HeadSpec, KernelSpec, TaskBatch};
use fairshift::numcore::{
    backward, head_logits, represent, Activation, DenseMatrix, EmbeddingShape, FeatureBatch,
    HeadId, HeadUpstream, Input, ModelParams, ParamSet, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    std::env::var_os("FAIRSHIFT_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn numeric_grad(params: &ModelParams, f: impl Fn(&ModelParams) -> f64) -> ParamSet {
    let h = 1e-6;
    let mut out = ParamSet::zeros(&params.topology);
    let mut probe = params.clone();
    for t in 0..out.tensors().len() {
        for i in 0..out.tensors()[t].len() {
            let orig = probe.values.tensors()[t][i];
            probe.values.tensors_mut()[t][i] = orig + h;
            let up = f(&probe);
            probe.values.tensors_mut()[t][i] = orig - h;
            let down = f(&probe);
            probe.values.tensors_mut()[t][i] = orig;
            out.tensors_mut()[t][i] = (up - down) / (2.0 * h);
        }
    }
    out
}

pub struct TinyCase {
    pub params: ModelParams,
    pub batch: FeatureBatch,
    pub upstream: Vec<Vec<f64>>,
}

pub fn tiny_case(seed: u64) -> TinyCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_emb = rng.random_range(0..3);
    let topo = Topology {
        numeric_dim: rng.random_range(1..4),
        embeddings: (0..n_emb)
            .map(|_| EmbeddingShape {
                vocab: rng.random_range(2..5),
                dim: rng.random_range(1..4),
            })
            .collect(),
        hidden: if rng.random_bool(0.8) {
            Some(rng.random_range(1..6))
        } else {
            None
        },
        activation: if rng.random_bool(0.7) {
            Activation::Relu
        } else {
            Activation::Identity
        },
        heads: rng.random_range(1..4),
    };
    let mut params = ModelParams::glorot(topo.clone(), &mut rng);
    for b in params
        .values
        .hidden_bias
        .iter_mut()
        .chain(params.values.head_biases.iter_mut())
    {
        *b = rng.random_range(-0.5..0.5);
    }
    let n = rng.random_range(1..7);
    let numeric = (0..n * topo.numeric_dim)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let batch = FeatureBatch {
        numeric: DenseMatrix::from_vec(n, topo.numeric_dim, numeric).unwrap(),
        categorical: topo
            .embeddings
            .iter()
            .map(|e| {
                (0..n)
                    .map(|_| rng.random_range(0..e.vocab as u32))
                    .collect()
            })
            .collect(),
    };
    let upstream = (0..topo.heads)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    TinyCase {
        params,
        batch,
        upstream,
    }
}

/// `Σ_h Σ_i upstream_hi · logit_hi`.
pub fn linear_objective(case: &TinyCase, params: &ModelParams) -> f64 {
    let rep = represent(params, Input::Features(&case.batch)).unwrap();
    case.upstream
        .iter()
        .enumerate()
        .map(|(h, u)| {
            let z = head_logits(params, &rep.hidden, HeadId(h)).unwrap();
            z.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}

/// Relative error of the analytic gradient of [`linear_objective`].
pub fn network_grad_error(case: &TinyCase) -> f64 {
    let rep = represent(&case.params, Input::Features(&case.batch)).unwrap();
    let ups: Vec<HeadUpstream<'_>> = case
        .upstream
        .iter()
        .enumerate()
        .map(|(h, u)| HeadUpstream {
            head: HeadId(h),
            upstream: u,
            into_hidden: true,
        })
        .collect();
    let g = backward(&case.params, Input::Features(&case.batch), &rep, &ups, None).unwrap();
    let fd = numeric_grad(&case.params, |p| linear_objective(case, p));
    rel_err(&g.0.flatten(), &fd.flatten())
}

/// Relative error of the full objective (task cross-entropy plus a fixed-bandwidth
/// MMD head on the task logit) against central differences.
pub fn loss_grad_error(case: &TinyCase, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = case.batch.len();
    let task = TaskBatch {
        features: case.batch.clone(),
        labels: (0..n).map(|_| rng.random_range(0..2)).collect(),
    };
    let mut sides: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    sides.reverse();
    let head_batch = if n >= 2 {
        Some(HeadBatch {
            features: case.batch.clone(),
            sides,
        })
    } else {
        None
    };
    let heads = vec![
        HeadSpec {
            name: "task".into(),
            kind: HeadKind::Task,
            weight: 1.0,
            purpose: BatchPurpose::Task(Domain::Source),
            output: HeadId(0),
        },
        HeadSpec {
            name: "fair".into(),
            kind: HeadKind::FairnessMmd,
            weight: if head_batch.is_some() { 0.7 } else { 0.0 },
            purpose: BatchPurpose::FairnessSource,
            output: HeadId(case.params.num_heads() - 1),
        },
    ];
    let batches = vec![None, head_batch];
    let kernel = KernelSpec::fixed(0.8).unwrap();
    let (_, g) = total_loss(&case.params, &task, &batches, &heads, &kernel).unwrap();
    let fd = numeric_grad(&case.params, |p| {
        total_loss(p, &task, &batches, &heads, &kernel)
            .unwrap()
            .0
            .total
    });
    rel_err(&g.0.flatten(), &fd.flatten())
}

/// Gradient error of MMD² on random sets of at most 8 scalars, with the
/// bandwidth held at the value the estimator picked.
pub fn mmd_grad_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..rng.random_range(1..5))
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let y: Vec<f64> = (0..rng.random_range(1..5))
        .map(|_| rng.random_range(-1.0..3.0))
        .collect();
    let m = mmd2(&x, &y, &KernelSpec::default()).unwrap();
    let kernel = KernelSpec::fixed(m.bandwidth).unwrap();
    let h = 1e-6;
    let value = |x: &[f64], y: &[f64]| mmd2(x, y, &kernel).unwrap().value;
    let mut fd = Vec::new();
    for i in 0..x.len() {
        let (mut a, mut b) = (x.clone(), x.clone());
        a[i] += h;
        b[i] -= h;
        fd.push((value(&a, &y) - value(&b, &y)) / (2.0 * h));
    }
    for j in 0..y.len() {
        let (mut a, mut b) = (y.clone(), y.clone());
        a[j] += h;
        b[j] -= h;
        fd.push((value(&x, &a) - value(&x, &b)) / (2.0 * h));
    }
    let analytic: Vec<f64> = m.grad_x.iter().chain(&m.grad_y).copied().collect();
    rel_err(&analytic, &fd)
}
