//! Empirical divergence between samples, complexity terms, and the composed
//! right-hand sides of the target-fairness transfer bounds.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numcore::{error_rate, DenseMatrix, LogisticRegression};

pub const DEFAULT_DELTA: f64 = 0.05;

/// Linear probe used by [`estimate_h_divergence`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeConfig {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            steps: 200,
            lr: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceEstimate {
    /// `2·(1 − 2ε̂)` clipped to `[0, 2]`.
    pub value: f64,
    pub probe_train_error: f64,
    pub heldout_error: f64,
    pub n_per_side: usize,
    pub seed: u64,
}

fn select_rows(x: &DenseMatrix, m: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    if x.rows() == m {
        return x.clone();
    }
    let mut idx = sample(rng, x.rows(), m).into_vec();
    idx.sort_unstable();
    x.select_rows(&idx)
}

/// Proxy divergence between two samples. Both sides are cut to the same size
/// `m`, a shared seeded permutation splits each into a training and a held-out
/// half, a logistic probe learns to tell the sides apart on the training halves
/// (features standardized with pooled training statistics), and its held-out
/// error `err` gives `ε̂ = min(err, 1 − err)`.
pub fn estimate_h_divergence(
    u: &DenseMatrix,
    u_prime: &DenseMatrix,
    probe: &ProbeConfig,
) -> Result<DivergenceEstimate> {
    if u.cols() != u_prime.cols() {
        return Err(Error::Dimension(format!(
            "samples have {} and {} features",
            u.cols(),
            u_prime.cols()
        )));
    }
    let m = u.rows().min(u_prime.rows());
    if m < 2 {
        return Err(Error::Argument(
            "divergence estimation needs at least two rows per sample".into(),
        ));
    }
    u.ensure_finite("divergence sample")?;
    u_prime.ensure_finite("divergence sample")?;
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    let a = select_rows(u, m, &mut rng);
    let b = select_rows(u_prime, m, &mut rng);
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng);
    let (train_idx, test_idx) = perm.split_at(m / 2);

    let train = a.select_rows(train_idx).vstack(&b.select_rows(train_idx))?;
    let test = a.select_rows(test_idx).vstack(&b.select_rows(test_idx))?;
    let (mean, std) = column_stats(&train);
    let train = standardize(&train, &mean, &std);
    let test = standardize(&test, &mean, &std);
    let side_labels = |half: usize| -> Vec<u8> {
        std::iter::repeat_n(0, half)
            .chain(std::iter::repeat_n(1, half))
            .collect()
    };
    let y_train = side_labels(train_idx.len());
    let y_test = side_labels(test_idx.len());

    let model = LogisticRegression::fit(&train, &y_train, probe.steps, probe.lr)?;
    let train_err = error_rate(&model.predict(&train)?, &y_train);
    let err = error_rate(&model.predict(&test)?, &y_test);
    let eps = err.min(1.0 - err);
    Ok(DivergenceEstimate {
        value: (2.0 * (1.0 - 2.0 * eps)).clamp(0.0, 2.0),
        probe_train_error: train_err,
        heldout_error: err,
        n_per_side: m,
        seed: probe.seed,
    })
}

fn column_stats(x: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let mut mean = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let std = var
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, std)
}

fn standardize(x: &DenseMatrix, mean: &[f64], std: &[f64]) -> DenseMatrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        for ((v, m), s) in out.row_mut(r).iter_mut().zip(mean).zip(std) {
            *v = (*v - m) / s;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HypothesisClass {
    /// `x ↦ ⟨w, [x, 1]⟩` with `‖w‖₂ ≤ 1`.
    LinearUnitNorm,
    /// The two constant functions ±1.
    Constants,
}

impl FromStr for HypothesisClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear-unit-norm" => Ok(HypothesisClass::LinearUnitNorm),
            "constants" => Ok(HypothesisClass::Constants),
            other => Err(Error::Config(format!(
                "unsupported hypothesis class {other:?} (expected linear-unit-norm or constants)"
            ))),
        }
    }
}

impl fmt::Display for HypothesisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HypothesisClass::LinearUnitNorm => "linear-unit-norm",
            HypothesisClass::Constants => "constants",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ComplexityKind {
    Vc {
        d: usize,
        m_prime: u64,
        delta: f64,
        multiplier: f64,
    },
    /// A single empirical Rademacher estimate.
    Rademacher {
        class: HypothesisClass,
        draws: usize,
        m: usize,
        seed: u64,
    },
    /// `2·Σ R̂ + tail_multiplier·√(ln(2/δ)/(2m))`.
    RademacherBound {
        r_hats: Vec<f64>,
        m: u64,
        delta: f64,
        tail_multiplier: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityTerm {
    pub kind: ComplexityKind,
    pub value: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("delta {delta} must lie in (0,1)")))
    }
}

/// `multiplier·√((2d·ln(2m′) + ln(2/δ))/m′)`.
pub fn vc_term(d: usize, m_prime: u64, delta: f64, multiplier: f64) -> Result<ComplexityTerm> {
    if d == 0 || m_prime == 0 {
        return Err(Error::Argument("VC term needs d ≥ 1 and m′ ≥ 1".into()));
    }
    check_delta(delta)?;
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::Argument("VC multiplier must be positive".into()));
    }
    let mp = m_prime as f64;
    let inner = (2.0 * d as f64 * (2.0 * mp).ln() + (2.0 / delta).ln()) / mp;
    Ok(ComplexityTerm {
        kind: ComplexityKind::Vc {
            d,
            m_prime,
            delta,
            multiplier,
        },
        value: multiplier * inner.sqrt(),
    })
}

/// Monte Carlo estimate of `(2/m)·E_σ[sup_h |Σ σᵢ h(xᵢ)|]` with the supremum in
/// closed form.
pub fn rademacher_estimate(
    sample: &DenseMatrix,
    class: HypothesisClass,
    draws: usize,
    seed: u64,
) -> Result<ComplexityTerm> {
    if draws == 0 || sample.rows() == 0 {
        return Err(Error::Argument(
            "Rademacher estimate needs a non-empty sample and at least one draw".into(),
        ));
    }
    sample.ensure_finite("Rademacher sample")?;
    let m = sample.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut acc = vec![0.0; sample.cols() + 1];
    for _ in 0..draws {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..m {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            if class == HypothesisClass::LinearUnitNorm {
                for (a, x) in acc.iter_mut().zip(sample.row(r)) {
                    *a += s * x;
                }
            }
            acc[sample.cols()] += s;
        }
        total += sup_of(class, &acc);
    }
    Ok(ComplexityTerm {
        kind: ComplexityKind::Rademacher {
            class,
            draws,
            m,
            seed,
        },
        value: 2.0 / m as f64 * total / draws as f64,
    })
}

fn sup_of(class: HypothesisClass, sums: &[f64]) -> f64 {
    match class {
        HypothesisClass::LinearUnitNorm => sums.iter().map(|v| v * v).sum::<f64>().sqrt(),
        HypothesisClass::Constants => sums[sums.len() - 1].abs(),
    }
}

/// `multiplier·√(ln(2/δ)/(2m))`.
pub fn rademacher_tail(m: u64, delta: f64, multiplier: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Argument("tail term needs m ≥ 1".into()));
    }
    check_delta(delta)?;
    Ok(multiplier * ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundVariant {
    EopVc,
    EoVc,
    EopRademacher,
    EoRademacher,
}

impl BoundVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundVariant::EopVc => "eop-vc",
            BoundVariant::EoVc => "eo-vc",
            BoundVariant::EopRademacher => "eop-rademacher",
            BoundVariant::EoRademacher => "eo-rademacher",
        }
    }

    pub fn is_equalized_odds(self) -> bool {
        matches!(self, BoundVariant::EoVc | BoundVariant::EoRademacher)
    }

    pub fn uses_rademacher(self) -> bool {
        matches!(
            self,
            BoundVariant::EopRademacher | BoundVariant::EoRademacher
        )
    }

    /// Number of quadrant pairs compared: negatives only, or all four quadrants.
    pub fn quadrant_pairs(self) -> usize {
        if self.is_equalized_odds() {
            4
        } else {
            2
        }
    }

    pub fn vc_multiplier(self) -> f64 {
        if self.is_equalized_odds() {
            16.0
        } else {
            8.0
        }
    }

    pub fn tail_multiplier(self) -> f64 {
        if self.is_equalized_odds() {
            12.0
        } else {
            6.0
        }
    }

    /// Per-sample Rademacher terms (one per source and target quadrant).
    pub fn rademacher_terms(self) -> usize {
        2 * self.quadrant_pairs()
    }
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            BoundVariant::EopVc,
            BoundVariant::EoVc,
            BoundVariant::EopRademacher,
            BoundVariant::EoRademacher,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown bound variant {s:?}")))
    }
}

/// Combines per-sample Rademacher estimates into the complexity part of a
/// Rademacher bound variant.
pub fn rademacher_bound_term(
    variant: BoundVariant,
    r_hats: &[f64],
    m: u64,
    delta: f64,
) -> Result<ComplexityTerm> {
    if !variant.uses_rademacher() {
        return Err(Error::Argument(format!(
            "{} is a VC variant",
            variant.as_str()
        )));
    }
    if r_hats.len() != variant.rademacher_terms() {
        return Err(Error::Argument(format!(
            "{} needs {} Rademacher terms, got {}",
            variant.as_str(),
            variant.rademacher_terms(),
            r_hats.len()
        )));
    }
    if r_hats.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::Argument(
            "Rademacher terms must be finite and nonnegative".into(),
        ));
    }
    let tail_multiplier = variant.tail_multiplier();
    let value = 2.0 * r_hats.iter().sum::<f64>() + rademacher_tail(m, delta, tail_multiplier)?;
    Ok(ComplexityTerm {
        kind: ComplexityKind::RademacherBound {
            r_hats: r_hats.to_vec(),
            m,
            delta,
            tail_multiplier,
        },
        value,
    })
}

/// How the `λ` terms of a bound are filled in.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaPolicy {
    /// All `λ = 0`: justified for equal opportunity by the all-negative joint
    /// hypothesis; for equalized odds the bound is then reported incomplete.
    Zero,
    /// One value per quadrant pair, in quadrant order.
    UserSupplied(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub source_distance: f64,
    pub d_hats: Vec<f64>,
    pub complexity: Option<ComplexityTerm>,
    pub lambda: LambdaPolicy,
    pub lambda_total: f64,
    /// `false` when an equalized-odds bound is built with zero-mode λ.
    pub complete: bool,
    pub rhs_total: f64,
}

impl BoundReport {
    pub fn include_complexity_term(&self) -> bool {
        self.complexity.is_some()
    }

    pub fn complexity_value(&self) -> f64 {
        self.complexity.as_ref().map_or(0.0, |c| c.value)
    }

    pub fn csv_header(variant: BoundVariant) -> Vec<String> {
        let mut h = vec!["variant".to_string(), "source_distance".into()];
        h.extend((0..variant.quadrant_pairs()).map(|i| format!("d_hat_{i}")));
        h.extend(
            [
                "complexity",
                "include_complexity",
                "lambda_total",
                "complete",
                "rhs_total",
            ]
            .map(String::from),
        );
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r = vec![
            self.variant.as_str().to_string(),
            self.source_distance.to_string(),
        ];
        r.extend(self.d_hats.iter().map(f64::to_string));
        r.push(self.complexity_value().to_string());
        r.push(self.include_complexity_term().to_string());
        r.push(self.lambda_total.to_string());
        r.push(self.complete.to_string());
        r.push(self.rhs_total.to_string());
        r
    }
}

/// `Δ_S + ½·Σ d̂ + complexity + Σ λ`, with every term itemized.
pub fn compose_bound(
    variant: BoundVariant,
    source_distance: f64,
    d_hats: &[f64],
    complexity: Option<ComplexityTerm>,
    lambda: LambdaPolicy,
) -> Result<BoundReport> {
    let pairs = variant.quadrant_pairs();
    if d_hats.len() != pairs {
        return Err(Error::Argument(format!(
            "{} needs {pairs} divergence terms, got {}",
            variant.as_str(),
            d_hats.len()
        )));
    }
    if !source_distance.is_finite() || source_distance < 0.0 {
        return Err(Error::Argument(
            "source distance must be finite and nonnegative".into(),
        ));
    }
    if d_hats.iter().any(|d| !(0.0..=2.0).contains(d)) {
        return Err(Error::Argument(
            "divergence terms must lie in [0, 2]".into(),
        ));
    }
    if let Some(c) = &complexity {
        match (&c.kind, variant.uses_rademacher()) {
            (ComplexityKind::Vc { multiplier, .. }, false)
                if *multiplier == variant.vc_multiplier() => {}
            (
                ComplexityKind::RademacherBound {
                    r_hats,
                    tail_multiplier,
                    ..
                },
                true,
            ) if r_hats.len() == variant.rademacher_terms()
                && *tail_multiplier == variant.tail_multiplier() => {}
            _ => {
                return Err(Error::Argument(format!(
                    "complexity term does not match variant {}",
                    variant.as_str()
                )))
            }
        }
    }
    let (lambda_total, complete) = match &lambda {
        LambdaPolicy::Zero => (0.0, !variant.is_equalized_odds()),
        LambdaPolicy::UserSupplied(values) => {
            if values.len() != pairs {
                return Err(Error::Argument(format!(
                    "{} needs {pairs} λ values, got {}",
                    variant.as_str(),
                    values.len()
                )));
            }
            if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::Argument(
                    "λ values must be finite and nonnegative".into(),
                ));
            }
            (values.iter().sum(), true)
        }
    };
    let half_d: f64 = 0.5 * d_hats.iter().sum::<f64>();
    let complexity_value = complexity.as_ref().map_or(0.0, |c| c.value);
    let rhs_total = source_distance + half_d + complexity_value + lambda_total;
    Ok(BoundReport {
        variant,
        source_distance,
        d_hats: d_hats.to_vec(),
        complexity,
        lambda,
        lambda_total,
        complete,
        rhs_total,
    })
}
