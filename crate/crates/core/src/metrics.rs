//! Confusion matrices and classification reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelSpace;

/// `counts[true][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub runtime_ms: f64,
}

/// Count predictions against labels. Empty rows or columns give 0 recall or
/// precision rather than a division error.
pub fn confusion_and_metrics(preds: &[usize], labels: &[usize], space: &LabelSpace) -> Result<EvalReport> {
    if preds.len() != labels.len() {
        return Err(Error::Structure(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let n = space.len();
    if let Some(&bad) = preds.iter().chain(labels).find(|&&c| c >= n) {
        return Err(Error::LabelSpace(format!("class index {bad} outside {n} classes")));
    }
    let mut counts = vec![vec![0u64; n]; n];
    for (&p, &t) in preds.iter().zip(labels) {
        counts[t][p] += 1;
    }
    let confusion = ConfusionMatrix {
        labels: space.labels().iter().map(ToString::to_string).collect(),
        counts,
    };
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let recall = (0..n)
        .map(|i| ratio(confusion.counts[i][i], confusion.row_sum(i)))
        .collect();
    let precision = (0..n)
        .map(|j| ratio(confusion.counts[j][j], confusion.col_sum(j)))
        .collect();
    Ok(EvalReport {
        accuracy: ratio(confusion.trace(), confusion.total()),
        precision,
        recall,
        confusion,
        runtime_ms: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Label;

    fn ab() -> LabelSpace {
        LabelSpace::new(vec![Label::Letter(0), Label::Letter(1)]).unwrap()
    }

    #[test]
    fn all_correct() {
        let r = confusion_and_metrics(&[0, 1, 1], &[0, 1, 1], &ab()).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion.counts, vec![vec![1, 0], vec![0, 2]]);
    }

    #[test]
    fn half_right() {
        let r = confusion_and_metrics(&[0, 1], &[0, 0], &ab()).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.confusion.counts[0][0], 1);
        assert_eq!(r.confusion.counts[0][1], 1);
        // class B has no true samples
        assert_eq!(r.recall, vec![0.5, 0.0]);
        assert_eq!(r.precision, vec![1.0, 0.0]);
    }

    #[test]
    fn errors() {
        assert!(confusion_and_metrics(&[0], &[0, 1], &ab()).is_err());
        assert!(confusion_and_metrics(&[], &[], &ab()).is_err());
        assert!(confusion_and_metrics(&[2], &[0], &ab()).is_err());
    }
}
