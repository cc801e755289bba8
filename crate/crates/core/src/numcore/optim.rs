use super::params::{GradientSet, ModelParams};
use crate::error::{Error, Result};

/// One Adagrad update: `acc ← acc + g²`, `θ ← θ − lr·g/√acc`.
///
/// The gradient is validated before anything is written, so a rejected step leaves
/// `params` untouched.
pub fn adagrad_step(params: &mut ModelParams, grads: &GradientSet, lr: f64) -> Result<()> {
    if !params.values.congruent(&grads.0) {
        return Err(Error::Dimension(
            "gradient set is not shape-congruent with the parameters".into(),
        ));
    }
    if !grads.0.is_finite() {
        return Err(Error::Numeric(
            "gradient contains non-finite entries".into(),
        ));
    }
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(Error::Argument(format!(
            "learning rate {lr} must be finite and nonnegative"
        )));
    }
    let values = params.values.tensors_mut();
    let accs = params.accumulators.tensors_mut();
    for ((theta, acc), g) in values.into_iter().zip(accs).zip(grads.0.tensors()) {
        for ((t, a), &gi) in theta.iter_mut().zip(acc.iter_mut()).zip(g) {
            if gi == 0.0 {
                continue;
            }
            *a += gi * gi;
            *t -= lr * gi / a.sqrt();
        }
    }
    Ok(())
}

/// Identity on the forward pass; multiplies the backward gradient by `−lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradReverse {
    pub lambda: f64,
}

impl GradReverse {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!(
                "gradient reversal strength {lambda} must be finite and nonnegative"
            )));
        }
        Ok(GradReverse { lambda })
    }

    pub fn forward<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        x
    }

    pub fn backward(&self, upstream: &[f64]) -> Vec<f64> {
        grad_reverse(upstream, self.lambda)
    }
}

/// Backward rule of the gradient reversal layer: `−lambda · upstream`.
pub fn grad_reverse(upstream: &[f64], lambda: f64) -> Vec<f64> {
    upstream.iter().map(|&u| -lambda * u).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::params::{ParamSet, Topology, INITIAL_ACCUMULATOR};

    fn single() -> ModelParams {
        // linear model with one input: weights [w], bias [b]
        ModelParams::zeros(Topology::linear(1))
    }

    fn grads_of(p: &ModelParams, w: f64, b: f64) -> GradientSet {
        let mut g = ParamSet::zeros(&p.topology);
        g.head_weights.set(0, 0, w);
        g.head_biases[0] = b;
        GradientSet(g)
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = single();
        let before = p.clone();
        adagrad_step(&mut p, &grads_of(&before, 0.0, 0.0), 0.1).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn single_step_arithmetic() {
        let mut p = single();
        let g = grads_of(&p, 1.0, 0.0);
        adagrad_step(&mut p, &g, 0.1).unwrap();
        assert!((p.accumulators.head_weights.get(0, 0) - 1.1).abs() < 1e-15);
        let expected = -0.1 / 1.1f64.sqrt();
        assert!((p.values.head_weights.get(0, 0) - expected).abs() < 1e-15);
        assert!((expected + 0.095346).abs() < 1e-6);
    }

    #[test]
    fn repeated_gradient_shrinks_steps() {
        let mut p = single();
        let g = grads_of(&p, 0.7, -0.2);
        let mut last = f64::INFINITY;
        for _ in 0..20 {
            let before = p.values.head_weights.get(0, 0);
            adagrad_step(&mut p, &g, 0.1).unwrap();
            let step = (p.values.head_weights.get(0, 0) - before).abs();
            assert!(step < last);
            last = step;
        }
        assert!(p.accumulators.head_biases[0] > INITIAL_ACCUMULATOR);
    }

    #[test]
    fn non_finite_gradient_aborts_without_writing() {
        let mut p = single();
        let before = p.clone();
        let err = adagrad_step(&mut p, &grads_of(&before, f64::NAN, 1.0), 0.1);
        assert!(matches!(err, Err(Error::Numeric(_))));
        assert_eq!(p, before);
    }

    #[test]
    fn incongruent_gradient_rejected() {
        let mut p = single();
        let other = GradientSet::zeros(&Topology::linear(3));
        assert!(matches!(
            adagrad_step(&mut p, &other, 0.1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn reversal_examples() {
        assert_eq!(grad_reverse(&[1.0, -2.0], 1.0), vec![-1.0, 2.0]);
        assert!(grad_reverse(&[3.0, -4.0], 0.0).iter().all(|v| *v == 0.0));
        assert_eq!(grad_reverse(&[0.5], 2.0), vec![-1.0]);
        let layer = GradReverse::new(0.3).unwrap();
        let x = [0.25, -7.0];
        assert_eq!(layer.forward(&x), &x);
        assert!(GradReverse::new(-1.0).is_err());
    }
}
