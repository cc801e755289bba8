use super::matrix::DenseMatrix;
use super::mlp::{backprop, bce_with_logit, mlp_forward};
use super::optim::adagrad_step;
use super::params::{ModelParams, Topology, TASK_HEAD};
use crate::error::{Error, Result};

/// Full-batch logistic regression trained with Adagrad from a zero start.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    pub params: ModelParams,
}

impl LogisticRegression {
    pub fn fit(x: &DenseMatrix, labels: &[u8], steps: usize, lr: f64) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} rows but {} labels",
                x.rows(),
                labels.len()
            )));
        }
        if x.rows() == 0 {
            return Err(Error::Argument("cannot fit on an empty sample".into()));
        }
        let mut params = ModelParams::zeros(Topology::linear(x.cols()));
        let n = x.rows() as f64;
        for _ in 0..steps {
            let out = mlp_forward(&params, x, TASK_HEAD)?;
            let upstream: Vec<f64> = out
                .probs
                .iter()
                .zip(labels)
                .map(|(&p, &y)| (p - f64::from(y)) / n)
                .collect();
            let grads = backprop(&params, x, &upstream, TASK_HEAD)?;
            adagrad_step(&mut params, &grads, lr)?;
        }
        Ok(LogisticRegression { params })
    }

    pub fn probs(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        Ok(mlp_forward(&self.params, x, TASK_HEAD)?.probs)
    }

    /// Hard decisions `[p ≥ 0.5]`.
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<u8>> {
        Ok(self
            .probs(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }

    pub fn mean_loss(&self, x: &DenseMatrix, labels: &[u8]) -> Result<f64> {
        let out = mlp_forward(&self.params, x, TASK_HEAD)?;
        Ok(out
            .logits
            .iter()
            .zip(labels)
            .map(|(&z, &y)| bce_with_logit(z, f64::from(y)))
            .sum::<f64>()
            / labels.len() as f64)
    }

    pub fn weights(&self) -> &[f64] {
        self.params.head_weight(TASK_HEAD)
    }

    pub fn bias(&self) -> f64 {
        self.params.values.head_biases[0]
    }
}

/// Fraction of mismatches between two equally long 0/1 vectors.
pub fn error_rate(pred: &[u8], labels: &[u8]) -> f64 {
    let wrong = pred.iter().zip(labels).filter(|(a, b)| a != b).count();
    wrong as f64 / labels.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_points_and_reduces_loss() {
        let x = DenseMatrix::from_rows(&[[-1.0], [1.0], [-2.0], [2.0]]).unwrap();
        let y = [0, 1, 0, 1];
        let start = LogisticRegression::fit(&x, &y, 0, 0.1).unwrap();
        let fit = LogisticRegression::fit(&x, &y, 100, 0.1).unwrap();
        assert!(fit.mean_loss(&x, &y).unwrap() < start.mean_loss(&x, &y).unwrap());
        assert_eq!(fit.predict(&x).unwrap(), y.to_vec());
        assert!(fit.weights()[0] > 0.0);
    }

    #[test]
    fn flipping_labels_mirrors_the_solution() {
        let x =
            DenseMatrix::from_rows(&[[0.2, 1.0], [1.3, -0.4], [-0.8, 0.3], [0.1, 0.9]]).unwrap();
        let y = [0, 1, 1, 0];
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        let a = LogisticRegression::fit(&x, &y, 50, 0.1).unwrap();
        let b = LogisticRegression::fit(&x, &flipped, 50, 0.1).unwrap();
        for (u, v) in a.weights().iter().zip(b.weights()) {
            assert!((u + v).abs() < 1e-12);
        }
        assert!((a.bias() + b.bias()).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_labels() {
        let x = DenseMatrix::zeros(3, 1);
        assert!(LogisticRegression::fit(&x, &[0, 1], 1, 0.1).is_err());
    }
}
