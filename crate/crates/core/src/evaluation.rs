//! Attribute-prediction and classification metrics.

use std::fmt::Write as _;

use crate::error::check_dim;
use crate::{Error, Matrix, Result};

/// Area under the ROC curve via the Mann–Whitney rank statistic. Tied
/// scores contribute ½. Errors with [`Error::DegenerateLabels`] unless both
/// label values occur.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_dim("roc_auc: labels", scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("roc_auc scores"));
    }
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Doubled mid-ranks keep the statistic in exact integer arithmetic.
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let doubled_mid_rank = (start + 1 + end) as u64;
        let tied_positives = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        doubled_rank_sum += doubled_mid_rank * tied_positives;
        start = end;
    }
    let doubled_u = doubled_rank_sum - positives * (positives + 1);
    Ok(doubled_u as f64 / (2 * positives * negatives) as f64)
}

/// One ROC point per distinct score threshold, from the strictest
/// (nothing predicted positive) to the loosest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    check_dim("roc_curve: labels", scores.len(), labels.len())?;
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        false_positive_rate: 0.0,
        true_positive_rate: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            false_positive_rate: fp as f64 / negatives as f64,
            true_positive_rate: tp as f64 / positives as f64,
        });
    }
    Ok(points)
}

/// Mean over true classes of the per-class hit rate.
pub fn class_averaged_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_dim("class_averaged_accuracy: predictions", truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::EmptyInput("class_averaged_accuracy"));
    }
    let mut per_class: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    for (p, t) in pred.iter().zip(truth) {
        let entry = per_class.entry(*t).or_default();
        entry.1 += 1;
        if p == t {
            entry.0 += 1;
        }
    }
    let sum: f64 = per_class.values().map(|&(hit, total)| hit as f64 / total as f64).sum();
    Ok(sum / per_class.len() as f64)
}

/// Fraction of exact matches.
pub fn absolute_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_dim("absolute_accuracy: predictions", truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::EmptyInput("absolute_accuracy"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// `None` for attributes whose test labels are all 0 or all 1.
    pub per_attribute_auc: Vec<Option<f64>>,
    /// Mean over attributes with a defined AUC.
    pub mean_auc: Option<f64>,
    pub class_averaged_accuracy: Option<f64>,
    pub absolute_accuracy: Option<f64>,
}

impl MetricReport {
    pub fn excluded_attributes(&self) -> Vec<usize> {
        self.per_attribute_auc
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(|(j, _)| j)
            .collect()
    }

    pub fn with_classification(mut self, pred: &[usize], truth: &[usize]) -> Result<Self> {
        self.class_averaged_accuracy = Some(class_averaged_accuracy(pred, truth)?);
        self.absolute_accuracy = Some(absolute_accuracy(pred, truth)?);
        Ok(self)
    }

    /// Plain `key = value` report, one line per item.
    pub fn to_text(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| v.to_string());
        let mut out = String::new();
        writeln!(out, "mean_auc = {}", fmt_opt(self.mean_auc)).unwrap();
        writeln!(out, "class_averaged_accuracy = {}", fmt_opt(self.class_averaged_accuracy)).unwrap();
        writeln!(out, "absolute_accuracy = {}", fmt_opt(self.absolute_accuracy)).unwrap();
        let excluded: Vec<String> = self.excluded_attributes().iter().map(|j| j.to_string()).collect();
        writeln!(out, "excluded_attributes = {}", excluded.join(",")).unwrap();
        for (j, auc) in self.per_attribute_auc.iter().enumerate() {
            writeln!(out, "auc[{j}] = {}", fmt_opt(*auc)).unwrap();
        }
        out
    }
}

/// Per-attribute AUC of raw scores (k×m) against binary labels (k×m).
pub fn attribute_report(scores: &Matrix, labels: &Matrix) -> Result<MetricReport> {
    check_dim("attribute_report: rows", scores.nrows(), labels.nrows())?;
    check_dim("attribute_report: attributes", scores.ncols(), labels.ncols())?;
    let mut per_attribute_auc = Vec::with_capacity(scores.ncols());
    for j in 0..scores.ncols() {
        let s: Vec<f64> = scores.column(j).iter().copied().collect();
        let l: Vec<bool> = labels.column(j).iter().map(|&v| v > 0.0).collect();
        per_attribute_auc.push(match roc_auc(&s, &l) {
            Ok(a) => Some(a),
            Err(Error::DegenerateLabels) => None,
            Err(e) => return Err(e),
        });
    }
    let defined: Vec<f64> = per_attribute_auc.iter().flatten().copied().collect();
    let mean_auc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(MetricReport {
        per_attribute_auc,
        mean_auc,
        class_averaged_accuracy: None,
        absolute_accuracy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn auc_examples() {
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5; 4], &labels).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &labels).unwrap(), 0.75);
    }

    #[test]
    fn auc_needs_both_labels() {
        assert!(matches!(roc_auc(&[1.0, 2.0], &[true, true]), Err(Error::DegenerateLabels)));
        assert!(matches!(roc_auc(&[1.0, 2.0], &[false, false]), Err(Error::DegenerateLabels)));
        assert!(roc_auc(&[1.0], &[true, false]).is_err());
    }

    #[test]
    fn roc_curve_endpoints() {
        let pts = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(pts.first().unwrap().false_positive_rate, 0.0);
        let last = pts.last().unwrap();
        assert_eq!((last.false_positive_rate, last.true_positive_rate), (1.0, 1.0));
        // trapezoid area matches the rank statistic
        let area: f64 = pts
            .windows(2)
            .map(|w| (w[1].false_positive_rate - w[0].false_positive_rate) * (w[1].true_positive_rate + w[0].true_positive_rate) / 2.0)
            .sum();
        assert!((area - 0.75).abs() < 1e-15);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(class_averaged_accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        let truth: Vec<usize> = [vec![0; 9], vec![1]].concat();
        assert_eq!(class_averaged_accuracy(&[0; 10], &truth).unwrap(), 0.5);
        assert_eq!(class_averaged_accuracy(&[5, 5], &[0, 1]).unwrap(), 0.0);
        assert!(matches!(class_averaged_accuracy(&[], &[]), Err(Error::EmptyInput(_))));

        assert_eq!(absolute_accuracy(&[1, 2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(absolute_accuracy(&[1, 0, 3, 0], &[1, 2, 3, 4]).unwrap(), 0.5);
        assert_eq!(absolute_accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert!(absolute_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn report_excludes_single_valued_attributes() {
        let scores = Matrix::from_row_slice(3, 2, &[0.1, 0.3, 0.7, 0.2, 0.4, 0.9]);
        let labels = Matrix::from_row_slice(3, 2, &[0., 1., 1., 1., 0., 1.]);
        let report = attribute_report(&scores, &labels).unwrap();
        assert_eq!(report.per_attribute_auc, vec![Some(1.0), None]);
        assert_eq!(report.mean_auc, Some(1.0));
        assert_eq!(report.excluded_attributes(), vec![1]);
        let report = report.with_classification(&[0, 1], &[0, 0]).unwrap();
        assert!(report.to_text().contains("absolute_accuracy = 0.5"));
    }

    fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
        (2usize..200).prop_flat_map(|k| {
            (
                proptest::collection::vec(prop_oneof![(-5i32..5).prop_map(f64::from), -5.0f64..5.0], k),
                proptest::collection::vec(proptest::bool::ANY, k),
            )
        })
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_count((s, l) in scored_labels()) {
            prop_assume!(l.iter().any(|&b| b) && l.iter().any(|&b| !b));
            let auc = roc_auc(&s, &l).unwrap();
            prop_assert!((auc - brute_force_auc(&s, &l)).abs() <= 1e-12);
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert!((auc + roc_auc(&neg, &l).unwrap() - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn auc_invariant_to_increasing_maps((s, l) in scored_labels(), a in 0.1f64..3.0, b in -2.0f64..2.0) {
            prop_assume!(l.iter().any(|&b| b) && l.iter().any(|&b| !b));
            let mapped: Vec<f64> = s.iter().map(|v| (a * v + b).exp()).collect();
            prop_assert_eq!(roc_auc(&s, &l).unwrap(), roc_auc(&mapped, &l).unwrap());
        }

        #[test]
        fn balanced_classes_make_accuracies_agree(pred in proptest::collection::vec(0usize..4, 12)) {
            let truth: Vec<usize> = (0..12).map(|i| i % 4).collect();
            let a = class_averaged_accuracy(&pred, &truth).unwrap();
            let b = absolute_accuracy(&pred, &truth).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
        }
    }
}
