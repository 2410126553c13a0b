use serde::Serialize;

use super::Corrector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectorMetrics {
    pub samples: usize,
    pub top1_accuracy: f64,
    pub top3_accuracy: f64,
    /// Samples where the corrector returned an error; they count as misses.
    pub failures: usize,
}

/// Top-1 and top-3 exact-match accuracy over `(corrupted, clean)` pairs.
pub fn evaluate_corrector<C: Corrector + ?Sized, S: AsRef<str>>(
    corrector: &C,
    pairs: &[(S, S)],
) -> Result<CorrectorMetrics> {
    if pairs.is_empty() {
        return Err(Error::Empty("evaluation pairs"));
    }
    let (mut top1, mut top3, mut failures) = (0, 0, 0);
    for (corrupted, clean) in pairs {
        match corrector.correct(corrupted.as_ref()) {
            Ok(r) => match r.rank_of(clean.as_ref()) {
                Some(1) => {
                    top1 += 1;
                    top3 += 1;
                }
                Some(_) => top3 += 1,
                None => {}
            },
            Err(_) => failures += 1,
        }
    }
    let n = pairs.len() as f64;
    Ok(CorrectorMetrics {
        samples: pairs.len(),
        top1_accuracy: top1 as f64 / n,
        top3_accuracy: top3 as f64 / n,
        failures,
    })
}
