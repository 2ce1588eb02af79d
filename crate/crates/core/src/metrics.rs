//! Classification quality measures and dataset geometry. All scores come
//! from integer confusion counts; a score whose denominator is zero is
//! reported as 0.0 and flagged undefined rather than being NaN or an error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ModelParams, Record, FEATURE_COUNT};

/// Errors from evaluation and dataset geometry.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("evaluation requires a non-empty record set")]
    EmptyDataset,
    #[error("decision threshold must lie strictly between 0 and 1, got {got}")]
    InvalidThreshold { got: f64 },
    #[error("record set has no examples of class {label}")]
    MissingClass { label: u8 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outcome tallies of binary predictions against true labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

/// A score in [0, 1]; `undefined` marks a zero denominator, with value 0.0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub undefined: bool,
}

impl MetricValue {
    fn ratio(numerator: u64, denominator: u64) -> MetricValue {
        if denominator == 0 {
            MetricValue { value: 0.0, undefined: true }
        } else {
            MetricValue { value: numerator as f64 / denominator as f64, undefined: false }
        }
    }
}

/// The four standard scores for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: MetricValue,
    pub precision: MetricValue,
    pub recall: MetricValue,
    pub f1: MetricValue,
}

impl MetricSet {
    /// Names of the undefined scores, pipe-separated; empty when all defined.
    pub fn undefined_flags(&self) -> String {
        let mut names = Vec::new();
        for (name, m) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ] {
            if m.undefined {
                names.push(name);
            }
        }
        names.join("|")
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    /// (TP + TN) / total.
    pub fn accuracy(&self) -> MetricValue {
        MetricValue::ratio(self.true_positives + self.true_negatives, self.total())
    }

    /// TP / (TP + FP).
    pub fn precision(&self) -> MetricValue {
        MetricValue::ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    /// TP / (TP + FN).
    pub fn recall(&self) -> MetricValue {
        MetricValue::ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    /// 2·TP / (2·TP + FP + FN), the harmonic mean of precision and recall.
    pub fn f1(&self) -> MetricValue {
        MetricValue::ratio(
            2 * self.true_positives,
            2 * self.true_positives + self.false_positives + self.false_negatives,
        )
    }

    pub fn metrics(&self) -> MetricSet {
        MetricSet {
            accuracy: self.accuracy(),
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
        }
    }
}

/// Tallies model predictions on `records`: predicted positive (failure) iff
/// the failure probability is at least `threshold`, which must lie strictly
/// inside (0, 1).
pub fn confusion(
    params: &ModelParams,
    records: &[Record],
    threshold: f64,
) -> Result<ConfusionCounts, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricsError::InvalidThreshold { got: threshold });
    }
    let mut counts = ConfusionCounts::default();
    for record in records {
        let predicted_positive = params.failure_probability(record.features())? >= threshold;
        match (predicted_positive, record.is_failure()) {
            (true, true) => counts.true_positives += 1,
            (true, false) => counts.false_positives += 1,
            (false, false) => counts.true_negatives += 1,
            (false, true) => counts.false_negatives += 1,
        }
    }
    Ok(counts)
}

/// Euclidean distance between the per-class feature means. Both classes must
/// be present; the result is translation-invariant and symmetric in labels.
pub fn centroid_distance(records: &[Record]) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let mut sums = [[0.0f64; FEATURE_COUNT]; 2];
    let mut counts = [0u64; 2];
    for record in records {
        let class = record.label() as usize;
        counts[class] += 1;
        for (s, x) in sums[class].iter_mut().zip(record.features()) {
            *s += x;
        }
    }
    for label in 0..2u8 {
        if counts[label as usize] == 0 {
            return Err(MetricsError::MissingClass { label });
        }
    }
    let mut sq = 0.0;
    for i in 0..FEATURE_COUNT {
        let d = sums[1][i] / counts[1] as f64 - sums[0][i] / counts[0] as f64;
        sq += d * d;
    }
    Ok(sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    fn record(first: f64, second: f64, label: u8) -> Record {
        let mut x = [0.0; FEATURE_COUNT];
        x[0] = first;
        x[1] = second;
        Record::new(x, label).unwrap()
    }

    #[test]
    fn perfect_counts_give_unit_scores() {
        let c = ConfusionCounts {
            true_positives: 5,
            true_negatives: 5,
            false_positives: 0,
            false_negatives: 0,
        };
        let m = c.metrics();
        assert_eq!(m.accuracy.value, 1.0);
        assert_eq!(m.precision.value, 1.0);
        assert_eq!(m.recall.value, 1.0);
        assert_eq!(m.f1.value, 1.0);
        assert_eq!(m.undefined_flags(), "");
    }

    #[test]
    fn worked_confusion_example() {
        let c = ConfusionCounts {
            true_positives: 3,
            false_positives: 1,
            false_negatives: 2,
            true_negatives: 4,
        };
        let m = c.metrics();
        assert_eq!(m.accuracy.value, 0.7);
        assert_eq!(m.precision.value, 0.75);
        assert_eq!(m.recall.value, 0.6);
        assert_eq!(m.f1.value, 6.0 / 9.0);
        assert!(!m.f1.undefined);
    }

    #[test]
    fn zero_denominators_flag_undefined_and_report_zero() {
        // No predicted positives: precision undefined, recall and f1 defined.
        let c = ConfusionCounts {
            true_positives: 0,
            false_positives: 0,
            false_negatives: 3,
            true_negatives: 7,
        };
        let m = c.metrics();
        assert!(m.precision.undefined);
        assert_eq!(m.precision.value, 0.0);
        assert!(!m.recall.undefined);
        assert_eq!(m.recall.value, 0.0);
        assert!(!m.f1.undefined);
        assert_eq!(m.undefined_flags(), "precision");

        // No actual positives and none predicted: recall undefined too.
        let c = ConfusionCounts {
            true_positives: 0,
            false_positives: 2,
            false_negatives: 0,
            true_negatives: 8,
        };
        let m = c.metrics();
        assert!(m.recall.undefined);
        assert!(!m.precision.undefined);
        assert_eq!(m.undefined_flags(), "recall");

        let all_zero = ConfusionCounts::default().metrics();
        assert_eq!(all_zero.undefined_flags(), "accuracy|precision|recall|f1");
    }

    #[test]
    fn probability_at_threshold_counts_as_positive() {
        // Zero regression weights give exactly p = 0.5 everywhere.
        let params = ModelParams::init(ModelKind::Lr, 0);
        let data = [record(1.0, 0.0, 1), record(-1.0, 0.0, 0)];
        let c = confusion(&params, &data, 0.5).unwrap();
        assert_eq!(c.true_positives, 1);
        assert_eq!(c.false_positives, 1);
        assert_eq!(c.true_negatives, 0);
        assert_eq!(c.false_negatives, 0);
    }

    #[test]
    fn confusion_rejects_bad_inputs() {
        let params = ModelParams::init(ModelKind::Lr, 0);
        let data = [record(1.0, 0.0, 1)];
        assert!(matches!(confusion(&params, &[], 0.5), Err(MetricsError::EmptyDataset)));
        for t in [0.0, 1.0, -0.3, 1.7, f64::NAN] {
            assert!(matches!(
                confusion(&params, &data, t),
                Err(MetricsError::InvalidThreshold { .. })
            ));
        }
    }

    #[test]
    fn centroid_distance_hand_example() {
        let data = [
            record(1.0, 0.0, 1),
            record(3.0, 0.0, 1),
            record(-2.0, 0.0, 0),
        ];
        // Class-1 mean (2, 0, ...), class-0 mean (-2, 0, ...): distance 4.
        assert_eq!(centroid_distance(&data).unwrap(), 4.0);
    }

    #[test]
    fn centroid_distance_is_translation_invariant_and_label_symmetric() {
        let data = [
            record(1.5, -2.0, 1),
            record(0.5, 1.0, 1),
            record(-1.0, 0.25, 0),
            record(2.0, 3.0, 0),
        ];
        let base = centroid_distance(&data).unwrap();

        let shifted: Vec<Record> = data
            .iter()
            .map(|r| {
                let mut x = *r.features();
                for v in &mut x {
                    *v += 10.0;
                }
                Record::new(x, r.label()).unwrap()
            })
            .collect();
        assert!((centroid_distance(&shifted).unwrap() - base).abs() < 1e-12);

        let swapped: Vec<Record> = data
            .iter()
            .map(|r| Record::new(*r.features(), 1 - r.label()).unwrap())
            .collect();
        assert_eq!(centroid_distance(&swapped).unwrap(), base);
    }

    #[test]
    fn centroid_distance_requires_both_classes() {
        let data = [record(1.0, 0.0, 1), record(2.0, 0.0, 1)];
        assert!(matches!(
            centroid_distance(&data),
            Err(MetricsError::MissingClass { label: 0 })
        ));
        assert!(matches!(centroid_distance(&[]), Err(MetricsError::EmptyDataset)));
    }
}
