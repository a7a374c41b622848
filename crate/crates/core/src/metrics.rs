//! Per-class precision / recall / F1.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::sentiment::SentimentClass;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("{predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: SentimentClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Set when nothing was predicted as this class (precision reported as 0).
    pub precision_undefined: bool,
    /// Set when the class never occurs in the labels (recall reported as 0).
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub total: usize,
    /// `confusion[true][predicted]`, indexed Negative, Neutral, Positive.
    pub confusion: [[usize; 3]; 3],
}

impl ClassificationReport {
    pub fn class(&self, class: SentimentClass) -> &ClassMetrics {
        &self.classes[class.index()]
    }
}

pub fn classification_report(
    predictions: &[SentimentClass],
    labels: &[SentimentClass],
) -> Result<ClassificationReport, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut confusion = [[0usize; 3]; 3];
    for (p, l) in predictions.iter().zip(labels) {
        confusion[l.index()][p.index()] += 1;
    }
    Ok(report_from_confusion(confusion))
}

/// Builds the report from a confusion matrix `confusion[true][predicted]`.
pub fn report_from_confusion(confusion: [[usize; 3]; 3]) -> ClassificationReport {
    let total: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    let classes = SentimentClass::ALL
        .iter()
        .map(|&class| {
            let k = class.index();
            let tp = confusion[k][k];
            let support: usize = confusion[k].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[k]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class,
                precision,
                recall,
                f1,
                support,
                precision_undefined: predicted == 0,
                recall_undefined: support == 0,
            }
        })
        .collect();
    ClassificationReport {
        classes,
        accuracy: ratio(correct, total),
        total,
        confusion,
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentClass::*;

    #[test]
    fn perfect_predictor() {
        let labels = [Negative, Neutral, Positive, Negative, Positive];
        let r = classification_report(&labels, &labels).unwrap();
        for m in &r.classes {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn all_neutral_against_all_negative() {
        let r = classification_report(&[Neutral; 4], &[Negative; 4]).unwrap();
        assert_eq!(r.class(Negative).recall, 0.0);
        assert_eq!(r.class(Negative).support, 4);
        assert!(r.class(Negative).precision_undefined);
        assert_eq!(r.class(Neutral).precision, 0.0);
        assert!(!r.class(Neutral).precision_undefined);
        assert!(r.class(Neutral).recall_undefined);
        assert_eq!(r.class(Neutral).f1, 0.0);
    }

    #[test]
    fn errors() {
        assert_eq!(classification_report(&[], &[]), Err(MetricsError::Empty));
        assert!(matches!(
            classification_report(&[Negative], &[]),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }
}
