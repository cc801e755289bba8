//! Group error rates and the equal-opportunity / equalized-odds distances over
//! hard 0/1 decisions.

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Decision threshold applied to probabilities: `ŷ = [p ≥ 0.5]`.
pub const THRESHOLD: f64 = 0.5;

pub fn hard_decisions(probs: &[f64]) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p >= THRESHOLD)).collect()
}

/// Confusion counts and rates for one group. A rate is `None` when its
/// conditioning cell is empty.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GroupCell {
    /// Support `n[l]` of label `l` within the group.
    pub n: [usize; 2],
    pub false_pos: usize,
    pub false_neg: usize,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupRates {
    pub groups: [GroupCell; 2],
    pub accuracy: f64,
    pub n: usize,
}

impl GroupRates {
    fn rate(&self, group: usize, which: &str) -> Result<f64> {
        let cell = &self.groups[group];
        let r = if which == "FPR" { cell.fpr } else { cell.fnr };
        r.ok_or_else(|| {
            let label = if which == "FPR" { 0 } else { 1 };
            Error::MetricUndefined(format!(
                "{which} of group {group}: no examples with label {label}"
            ))
        })
    }

    pub fn fpr(&self, group: usize) -> Result<f64> {
        self.rate(group, "FPR")
    }

    pub fn fnr(&self, group: usize) -> Result<f64> {
        self.rate(group, "FNR")
    }

    /// Same rates with the two groups exchanged.
    pub fn swapped(&self) -> GroupRates {
        GroupRates {
            groups: [self.groups[1], self.groups[0]],
            ..*self
        }
    }
}

/// Rates from parallel prediction / label / group vectors.
pub fn rates_from_parts(pred: &[u8], labels: &[u8], groups: &[u8]) -> Result<GroupRates> {
    if pred.len() != labels.len() || pred.len() != groups.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels and {} groups",
            pred.len(),
            labels.len(),
            groups.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Argument("no predictions to score".into()));
    }
    let mut cells = [GroupCell::default(); 2];
    let mut correct = 0;
    for ((&p, &y), &a) in pred.iter().zip(labels).zip(groups) {
        if p > 1 || y > 1 || a > 1 {
            return Err(Error::Argument(
                "predictions, labels and groups must be 0 or 1".into(),
            ));
        }
        let cell = &mut cells[a as usize];
        cell.n[y as usize] += 1;
        match (y, p) {
            (0, 1) => cell.false_pos += 1,
            (1, 0) => cell.false_neg += 1,
            _ => correct += 1,
        }
    }
    for cell in &mut cells {
        cell.fpr = (cell.n[0] > 0).then(|| cell.false_pos as f64 / cell.n[0] as f64);
        cell.fnr = (cell.n[1] > 0).then(|| cell.false_neg as f64 / cell.n[1] as f64);
    }
    Ok(GroupRates {
        groups: cells,
        accuracy: correct as f64 / pred.len() as f64,
        n: pred.len(),
    })
}

pub fn group_rates(pred: &[u8], data: &Dataset) -> Result<GroupRates> {
    rates_from_parts(pred, &data.labels(), &data.groups())
}

/// `|FPR₀ − FPR₁|`.
pub fn eop_distance(rates: &GroupRates) -> Result<f64> {
    Ok((rates.fpr(0)? - rates.fpr(1)?).abs())
}

/// `|FPR₀ − FPR₁| + |FNR₀ − FNR₁|`.
pub fn eo_distance(rates: &GroupRates) -> Result<f64> {
    let eop = eop_distance(rates)?;
    Ok(eop + (rates.fnr(0)? - rates.fnr(1)?).abs())
}

/// Equal-opportunity distance in the {−1,+1} label convention: the gap between
/// groups of `E[(1 + g(z)) / 2]` over examples with label −1.
pub fn eop_distance_signed(pred: &[i8], labels: &[i8], groups: &[u8]) -> Result<f64> {
    if pred.len() != labels.len() || pred.len() != groups.len() {
        return Err(Error::Dimension("signed inputs differ in length".into()));
    }
    let mut sum = [0.0; 2];
    let mut n = [0usize; 2];
    for ((&g, &y), &a) in pred.iter().zip(labels).zip(groups) {
        if !matches!(g, -1 | 1) || !matches!(y, -1 | 1) || a > 1 {
            return Err(Error::Argument(
                "signed predictions and labels must be ±1".into(),
            ));
        }
        if y == -1 {
            sum[a as usize] += (1.0 + f64::from(g)) / 2.0;
            n[a as usize] += 1;
        }
    }
    if n.contains(&0) {
        return Err(Error::MetricUndefined(
            "a group has no label −1 examples".into(),
        ));
    }
    Ok((sum[0] / n[0] as f64 - sum[1] / n[1] as f64).abs())
}

/// {0,1} → {−1,+1}.
pub fn to_signed(v: u8) -> i8 {
    if v == 0 {
        -1
    } else {
        1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub rates: GroupRates,
    pub eop_distance: f64,
    pub eo_distance: f64,
}

impl MetricsReport {
    pub fn from_rates(rates: GroupRates) -> Result<Self> {
        Ok(MetricsReport {
            eop_distance: eop_distance(&rates)?,
            eo_distance: eo_distance(&rates)?,
            rates,
        })
    }

    pub fn from_probs(probs: &[f64], data: &Dataset) -> Result<Self> {
        Self::from_rates(group_rates(&hard_decisions(probs), data)?)
    }

    pub fn accuracy(&self) -> f64 {
        self.rates.accuracy
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn hand() -> GroupRates {
        rates_from_parts(
            &[1, 0, 1, 0, 1, 0],
            &[0, 0, 1, 0, 1, 1],
            &[0, 0, 0, 1, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn hand_case() {
        let r = hand();
        assert_eq!(r.fpr(0).unwrap(), 0.5);
        assert_eq!(r.fnr(0).unwrap(), 0.0);
        assert_eq!(r.fpr(1).unwrap(), 0.0);
        assert_eq!(r.fnr(1).unwrap(), 0.5);
        assert_eq!(eop_distance(&r).unwrap(), 0.5);
        assert_eq!(eo_distance(&r).unwrap(), 1.0);
        assert_eq!(r.accuracy, 4.0 / 6.0);
    }

    #[test]
    fn perfect_and_constant_predictions() {
        let labels = [0, 1, 0, 1, 1, 0];
        let groups = [0, 0, 0, 1, 1, 1];
        let r = rates_from_parts(&labels, &labels, &groups).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(eo_distance(&r).unwrap(), 0.0);
        let ones = rates_from_parts(&[1; 6], &labels, &groups).unwrap();
        for g in 0..2 {
            assert_eq!(ones.fpr(g).unwrap(), 1.0);
            assert_eq!(ones.fnr(g).unwrap(), 0.0);
        }
        assert_eq!(eop_distance(&ones).unwrap(), 0.0);
    }

    #[test]
    fn empty_cell_is_undefined_not_zero() {
        let r = rates_from_parts(&[0, 1, 0], &[1, 1, 0], &[0, 0, 1]).unwrap();
        assert_eq!(r.groups[0].fpr, None);
        assert!(matches!(eop_distance(&r), Err(Error::MetricUndefined(_))));
        assert!(matches!(eo_distance(&r), Err(Error::MetricUndefined(_))));
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        assert!(matches!(
            rates_from_parts(&[0, 1], &[0], &[0, 1]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn signed_convention_agrees_with_binary() {
        let pred = [1u8, 0, 1, 0, 1, 0, 1, 1];
        let labels = [0u8, 0, 1, 0, 1, 1, 0, 0];
        let groups = [0u8, 0, 0, 1, 1, 1, 1, 0];
        let binary = eop_distance(&rates_from_parts(&pred, &labels, &groups).unwrap()).unwrap();
        let sp: Vec<i8> = pred.iter().map(|&v| to_signed(v)).collect();
        let sl: Vec<i8> = labels.iter().map(|&v| to_signed(v)).collect();
        let signed = eop_distance_signed(&sp, &sl, &groups).unwrap();
        assert_eq!(binary, signed);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(hard_decisions(&[0.5, 0.4999999, 0.9]), vec![1, 0, 1]);
    }

    proptest! {
        #[test]
        fn distances_symmetric_and_in_range(
            rows in proptest::collection::vec((0u8..2, 0u8..2, 0u8..2), 1..200)
        ) {
            let pred: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let groups: Vec<u8> = rows.iter().map(|r| r.2).collect();
            let flipped: Vec<u8> = groups.iter().map(|g| 1 - g).collect();
            let r = rates_from_parts(&pred, &labels, &groups).unwrap();
            let s = rates_from_parts(&pred, &labels, &flipped).unwrap();
            prop_assert_eq!(s, r.swapped());
            if let Ok(d) = eop_distance(&r) {
                prop_assert!((0.0..=1.0).contains(&d));
                prop_assert_eq!(d, eop_distance(&s).unwrap());
            }
            if let Ok(d) = eo_distance(&r) {
                prop_assert!((0.0..=2.0).contains(&d));
                prop_assert_eq!(d, eo_distance(&s).unwrap());
            }
        }

        #[test]
        fn equal_probs_equal_reports(probs in proptest::collection::vec(0.0f64..1.0, 4..50)) {
            let a = hard_decisions(&probs);
            let b = hard_decisions(&probs.clone());
            prop_assert_eq!(a, b);
        }
    }
}
