use super::heads::{HeadKind, HeadSpec};
use super::mmd::{mmd2, KernelSpec};
use crate::error::{Error, Result};
use crate::numcore::{
    backward, bce_with_logit, head_logits, represent, sigmoid, DenseMatrix, FeatureBatch,
    GradientSet, HeadUpstream, Input, ModelParams, TASK_HEAD,
};

/// Rows for the task head with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskBatch {
    pub features: FeatureBatch,
    pub labels: Vec<u8>,
}

/// Rows for one debiasing head; `sides` says which of the two compared
/// distributions each row belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadBatch {
    pub features: FeatureBatch,
    pub sides: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub task: f64,
    /// Unweighted loss per head, parallel to the head list; `None` for the task
    /// head and for heads with zero weight (which are skipped entirely).
    pub heads: Vec<Option<f64>>,
}

fn active(head: &HeadSpec) -> bool {
    head.kind != HeadKind::Task && head.weight > 0.0
}

/// `L_Y + Σ weight·L_head` and its gradient.
///
/// MMD heads compare the head output on the two sides of their batch. Adversarial
/// heads fit the side label with cross-entropy; their own weights descend on it
/// while the shared representation receives the reversed gradient.
pub fn total_loss(
    params: &ModelParams,
    task: &TaskBatch,
    head_batches: &[Option<HeadBatch>],
    heads: &[HeadSpec],
    kernel: &KernelSpec,
) -> Result<(LossBreakdown, GradientSet)> {
    if head_batches.len() != heads.len() {
        return Err(Error::Config(format!(
            "{} head batches for {} heads",
            head_batches.len(),
            heads.len()
        )));
    }
    if task.labels.len() != task.features.len() || task.labels.is_empty() {
        return Err(Error::Dimension(
            "task batch needs one label per row".into(),
        ));
    }
    let mut combined = task.features.clone();
    let mut ranges = vec![None; heads.len()];
    for (k, (head, batch)) in heads.iter().zip(head_batches).enumerate() {
        if !active(head) {
            continue;
        }
        let batch = batch.as_ref().ok_or_else(|| {
            Error::Config(format!("head {} is enabled but has no batch", head.name))
        })?;
        if batch.sides.len() != batch.features.len() || batch.sides.iter().any(|&s| s > 1) {
            return Err(Error::Dimension(format!(
                "head {} batch needs one 0/1 side per row",
                head.name
            )));
        }
        let start = combined.len();
        combined.extend(&batch.features)?;
        ranges[k] = Some(start..combined.len());
    }

    let rep = represent(params, Input::Features(&combined))?;
    let n = combined.len();
    let n_out = params.num_heads();
    let mut outputs: Vec<Option<Vec<f64>>> = vec![None; n_out];
    outputs[0] = Some(head_logits(params, &rep.hidden, TASK_HEAD)?);
    for (head, range) in heads.iter().zip(&ranges) {
        if range.is_some() && outputs[head.output.0].is_none() {
            outputs[head.output.0] = Some(head_logits(params, &rep.hidden, head.output)?);
        }
    }
    let mut upstream = vec![vec![0.0; n]; n_out];
    let mut into_hidden = vec![true; n_out];
    let mut extra_hidden: Option<DenseMatrix> = None;

    let n_task = task.labels.len();
    let task_logits = outputs[0].as_ref().expect("task outputs");
    let mut task_loss = 0.0;
    for (i, &y) in task.labels.iter().enumerate() {
        let z = task_logits[i];
        task_loss += bce_with_logit(z, f64::from(y));
        upstream[0][i] = (sigmoid(z) - f64::from(y)) / n_task as f64;
    }
    task_loss /= n_task as f64;

    let mut head_losses = vec![None; heads.len()];
    let mut total = task_loss;
    for (k, head) in heads.iter().enumerate() {
        let Some(range) = ranges[k].clone() else {
            continue;
        };
        let sides = &head_batches[k].as_ref().expect("checked above").sides;
        let out = outputs[head.output.0].as_ref().expect("computed above");
        let w = head.weight;
        let loss = if head.kind.is_mmd() {
            let (mut x, mut y, mut xi, mut yi) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (r, &s) in range.clone().zip(sides) {
                if s == 0 {
                    x.push(out[r]);
                    xi.push(r);
                } else {
                    y.push(out[r]);
                    yi.push(r);
                }
            }
            let m = mmd2(&x, &y, kernel)?;
            let up = &mut upstream[head.output.0];
            for (&r, g) in xi.iter().zip(&m.grad_x) {
                up[r] += w * g;
            }
            for (&r, g) in yi.iter().zip(&m.grad_y) {
                up[r] += w * g;
            }
            m.value
        } else if head.kind.is_adversarial() {
            into_hidden[head.output.0] = false;
            let len = range.len() as f64;
            let adv_w = params.head_weight(head.output).to_vec();
            let extra =
                extra_hidden.get_or_insert_with(|| DenseMatrix::zeros(n, rep.hidden.cols()));
            let mut ce = 0.0;
            for (r, &s) in range.clone().zip(sides) {
                let z = out[r];
                ce += bce_with_logit(z, f64::from(s));
                let d = (sigmoid(z) - f64::from(s)) / len;
                upstream[head.output.0][r] += w * d;
                // reversed gradient into the shared representation
                let row = extra.row_mut(r);
                for (e, &aw) in row.iter_mut().zip(&adv_w) {
                    *e -= w * d * aw;
                }
            }
            ce / len
        } else {
            unreachable!("task head is never active")
        };
        head_losses[k] = Some(loss);
        total += w * loss;
    }

    let ups: Vec<HeadUpstream<'_>> = upstream
        .iter()
        .enumerate()
        .filter(|(h, _)| outputs[*h].is_some())
        .map(|(h, u)| HeadUpstream {
            head: crate::numcore::HeadId(h),
            upstream: u,
            into_hidden: into_hidden[h],
        })
        .collect();
    let grads = backward(
        params,
        Input::Features(&combined),
        &rep,
        &ups,
        extra_hidden.as_ref(),
    )?;
    Ok((
        LossBreakdown {
            total,
            task: task_loss,
            heads: head_losses,
        },
        grads,
    ))
}
