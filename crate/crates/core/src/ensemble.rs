//! Weighted soft voting between the landmark and silhouette recognizers, and
//! decoding of per-frame predictions into raw text.

use crate::error::{Error, Result};
use crate::forest::argmax_first;
use crate::labels::{Label, LabelSpace};
use crate::scalar::Real;

/// A distribution over a label space.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassProbabilities<T> {
    space: LabelSpace,
    values: Vec<T>,
}

fn sum_tolerance<T: Real>(n: usize) -> T {
    (T::epsilon() * T::of(16.0 * n as f64)).max(T::of(1e-9))
}

impl<T: Real> ClassProbabilities<T> {
    pub fn new(space: LabelSpace, values: Vec<T>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Structure(format!(
                "{} probabilities for {} classes",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| *v < T::zero() || !v.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be finite and >= 0".into()));
        }
        let sum: T = values.iter().copied().sum();
        if (sum - T::one()).abs() > sum_tolerance(values.len()) {
            return Err(Error::InvalidArgument(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ClassProbabilities { space, values })
    }

    pub(crate) fn new_unchecked(space: LabelSpace, values: Vec<T>) -> Self {
        debug_assert_eq!(space.len(), values.len());
        ClassProbabilities { space, values }
    }

    pub fn one_hot(space: LabelSpace, index: usize) -> Self {
        let mut values = vec![T::zero(); space.len()];
        values[index] = T::one();
        ClassProbabilities { space, values }
    }

    /// Same distribution in another precision, without re-validating the sum.
    pub fn cast<U: Real>(&self) -> ClassProbabilities<U> {
        ClassProbabilities {
            space: self.space.clone(),
            values: self.values.iter().map(|v| U::of(v.f64())).collect(),
        }
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn prob(&self, label: Label) -> T {
        self.space
            .index_of(label)
            .map_or(T::zero(), |i| self.values[i])
    }

    /// Index of the most probable class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax_first(&self.values)
    }

    pub fn top_label(&self) -> Label {
        self.space.label(self.argmax())
    }

    /// Re-express over `target`, giving classes this model lacks probability
    /// 0. Nothing is renormalized.
    pub fn embed(&self, target: &LabelSpace) -> Result<Self> {
        let mut values = vec![T::zero(); target.len()];
        for (label, &p) in self.space.labels().iter().zip(&self.values) {
            values[target.require_index(*label)?] = p;
        }
        Ok(ClassProbabilities {
            space: target.clone(),
            values,
        })
    }
}

/// Convex weights for the two recognizers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleWeights<T> {
    pub w_rfc: T,
    pub w_cnn: T,
}

impl<T: Real> EnsembleWeights<T> {
    /// `w_cnn = 1 - w_rfc`.
    pub fn new(w_rfc: T) -> Result<Self> {
        if !(w_rfc >= T::zero() && w_rfc <= T::one()) {
            return Err(Error::InvalidArgument(format!("w_rfc = {w_rfc} outside [0, 1]")));
        }
        Ok(EnsembleWeights {
            w_rfc,
            w_cnn: T::one() - w_rfc,
        })
    }
}

/// `P(y|x) = w_rfc * P_rfc(y|x) + w_cnn * P_cnn(y|x)`, elementwise.
pub fn combine<T: Real>(
    p_rfc: &ClassProbabilities<T>,
    p_cnn: &ClassProbabilities<T>,
    w: EnsembleWeights<T>,
) -> Result<ClassProbabilities<T>> {
    if p_rfc.space != p_cnn.space {
        return Err(Error::LabelSpace(
            "ensemble inputs are over different label spaces; embed them first".into(),
        ));
    }
    let values = p_rfc
        .values
        .iter()
        .zip(&p_cnn.values)
        .map(|(&a, &b)| w.w_rfc * a + w.w_cnn * b)
        .collect();
    Ok(ClassProbabilities {
        space: p_rfc.space.clone(),
        values,
    })
}

/// One validation observation for weight fitting.
#[derive(Clone, Debug)]
pub struct ValidationPair<T> {
    pub p_rfc: ClassProbabilities<T>,
    pub p_cnn: ClassProbabilities<T>,
    pub truth: Label,
}

pub const WEIGHT_GRID_STEPS: usize = 20;

/// Top-1 accuracy of `combine` under `w`.
pub fn ensemble_accuracy<T: Real>(pairs: &[ValidationPair<T>], w: EnsembleWeights<T>) -> Result<f64> {
    let mut correct = 0usize;
    for p in pairs {
        if combine(&p.p_rfc, &p.p_cnn, w)?.top_label() == p.truth {
            correct += 1;
        }
    }
    Ok(correct as f64 / pairs.len().max(1) as f64)
}

/// Search `w_rfc` over `0, 0.05, ..., 1` for the best top-1 accuracy. Ties go
/// to the larger `w_rfc`. Returns the weights and their accuracy.
pub fn optimize_weights<T: Real>(pairs: &[ValidationPair<T>]) -> Result<(EnsembleWeights<T>, f64)> {
    if pairs.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut best: Option<(EnsembleWeights<T>, f64)> = None;
    for step in (0..=WEIGHT_GRID_STEPS).rev() {
        let w = EnsembleWeights::new(T::of(step as f64 / WEIGHT_GRID_STEPS as f64))?;
        let acc = ensemble_accuracy(pairs, w)?;
        if best.is_none_or(|(_, b)| acc > b) {
            best = Some((w, acc));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamDecodeConfig {
    /// Consecutive identical frames required before a class takes effect.
    pub debounce: usize,
}

impl Default for StreamDecodeConfig {
    fn default() -> Self {
        StreamDecodeConfig { debounce: 3 }
    }
}

/// Fold per-frame predictions into text.
///
/// A class takes effect once per run, on its `debounce`-th consecutive frame.
/// Letters are appended unless the previous effective class was the same
/// letter; SPACE appends a space; DELETE removes the last character; BLANK
/// emits nothing but lets the next letter repeat.
pub fn decode_stream(frames: &[Label], cfg: StreamDecodeConfig) -> Result<String> {
    if cfg.debounce == 0 {
        return Err(Error::InvalidArgument("debounce must be >= 1".into()));
    }
    let mut out = String::new();
    let mut run: Option<(Label, usize)> = None;
    let mut last: Option<Label> = None;
    for &frame in frames {
        let count = match run {
            Some((l, n)) if l == frame => n + 1,
            _ => 1,
        };
        run = Some((frame, count));
        if count != cfg.debounce {
            continue;
        }
        match frame {
            Label::Letter(_) => {
                if last != Some(frame) {
                    out.push(frame.as_char().expect("letters map to chars"));
                }
                last = Some(frame);
            }
            Label::Space => {
                out.push(' ');
                last = Some(frame);
            }
            Label::Delete => {
                out.pop();
                last = Some(frame);
            }
            Label::Blank => last = None,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn probs(values: &[f64]) -> ClassProbabilities<f64> {
        let labels = (0..values.len() as u8).map(Label::Letter).collect();
        ClassProbabilities::new(LabelSpace::new(labels).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn combine_examples() {
        let a = probs(&[0.5, 0.5]);
        let b = probs(&[0.25, 0.75]);
        let w10 = EnsembleWeights::new(1.0).unwrap();
        assert_eq!(combine(&a, &b, w10).unwrap(), a);
        let w = EnsembleWeights { w_rfc: 0.6, w_cnn: 0.4 };
        let c = combine(&a, &b, w).unwrap();
        assert!((c.values()[0] - 0.40).abs() < 1e-15);
        for r in [0.0, 0.3, 0.77, 1.0] {
            let w = EnsembleWeights::new(r).unwrap();
            let same = combine(&a, &a, w).unwrap();
            for (x, y) in same.values().iter().zip(a.values()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let rfc = ClassProbabilities::<f64>::one_hot(LabelSpace::landmark(), 0);
        let cnn = ClassProbabilities::<f64>::one_hot(LabelSpace::silhouette(), 0);
        let w = EnsembleWeights::new(0.5).unwrap();
        assert!(matches!(combine(&rfc, &cnn, w), Err(Error::LabelSpace(_))));
        let shared = LabelSpace::shared();
        let c = combine(&rfc.embed(&shared).unwrap(), &cnn.embed(&shared).unwrap(), w).unwrap();
        assert_eq!(c.values().len(), 29);
        assert_eq!(c.prob(Label::Letter(0)), 1.0);
    }

    #[test]
    fn embedding_pads_with_zero() {
        let cnn = ClassProbabilities::<f64>::one_hot(LabelSpace::silhouette(), 26);
        let e = cnn.embed(&LabelSpace::shared()).unwrap();
        assert_eq!(e.prob(Label::Blank), 1.0);
        assert_eq!(e.prob(Label::Space), 0.0);
        assert!(e.embed(&LabelSpace::landmark()).is_err());
    }

    #[test]
    fn validation_of_distributions() {
        let s = LabelSpace::new(vec![Label::Space, Label::Blank]).unwrap();
        assert!(ClassProbabilities::new(s.clone(), vec![0.5, 0.6]).is_err());
        assert!(ClassProbabilities::new(s.clone(), vec![-0.1, 1.1]).is_err());
        assert!(ClassProbabilities::new(s.clone(), vec![1.0]).is_err());
        assert!(ClassProbabilities::new(s, vec![0.3f32, 0.7]).is_ok());
        assert!(EnsembleWeights::new(1.5).is_err());
    }

    fn pair(rfc: &[f64], cnn: &[f64], truth: u8) -> ValidationPair<f64> {
        ValidationPair {
            p_rfc: probs(rfc),
            p_cnn: probs(cnn),
            truth: Label::Letter(truth),
        }
    }

    #[test]
    fn optimize_prefers_dominant_model() {
        // rfc always right, cnn always wrong
        let pairs: Vec<_> = (0..10)
            .map(|i| {
                let t = (i % 2) as u8;
                let mut r = [0.1, 0.1];
                r[t as usize] = 0.9;
                let mut c = [0.8, 0.8];
                c[t as usize] = 0.2;
                pair(&r, &c, t)
            })
            .collect();
        let (w, acc) = optimize_weights(&pairs).unwrap();
        assert_eq!(w.w_rfc, 1.0);
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn optimize_tie_goes_to_rfc() {
        let pairs = vec![pair(&[0.7, 0.3], &[0.7, 0.3], 0), pair(&[0.4, 0.6], &[0.4, 0.6], 0)];
        let (w, acc) = optimize_weights(&pairs).unwrap();
        assert_eq!(w.w_rfc, 1.0);
        assert_eq!(acc, 0.5);
        assert!(optimize_weights::<f64>(&[]).is_err());
    }

    #[test]
    fn decode_examples() {
        use Label::*;
        let a = Letter(0);
        let b = Letter(1);
        let k3 = StreamDecodeConfig::default();
        assert_eq!(decode_stream(&[a, a, a], k3).unwrap(), "A");
        assert_eq!(decode_stream(&[a, a, a, Space, Space, Space, b, b, b], k3).unwrap(), "A B");
        assert_eq!(decode_stream(&[a, a, a, b, b, b, Delete, Delete, Delete], k3).unwrap(), "A");
        // held gesture emits once; a glitch does not repeat it; BLANK does
        assert_eq!(decode_stream(&[a; 9], k3).unwrap(), "A");
        assert_eq!(decode_stream(&[a, a, a, b, a, a, a], k3).unwrap(), "A");
        assert_eq!(decode_stream(&[a, a, a, Blank, Blank, Blank, a, a, a], k3).unwrap(), "AA");
        assert_eq!(decode_stream(&[Delete; 3], k3).unwrap(), "");
        assert_eq!(decode_stream(&[a, a], k3).unwrap(), "");
        assert!(decode_stream(&[a], StreamDecodeConfig { debounce: 0 }).is_err());
    }

    fn label_strategy() -> impl Strategy<Value = Label> {
        prop_oneof![
            (0u8..3).prop_map(Label::Letter),
            Just(Label::Space),
            Just(Label::Delete),
            Just(Label::Blank),
        ]
    }

    fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn decode_length_bound(frames in prop::collection::vec(label_strategy(), 0..80), k in 1usize..5) {
            let out = decode_stream(&frames, StreamDecodeConfig { debounce: k }).unwrap();
            prop_assert!(out.len() <= frames.len() / k);
        }

        #[test]
        fn combine_normalized_and_symmetric(a in dist(5), b in dist(5), w in 0.0f64..=1.0) {
            let (pa, pb) = (probs(&a), probs(&b));
            let wt = EnsembleWeights::new(w).unwrap();
            let c = combine(&pa, &pb, wt).unwrap();
            prop_assert!(c.values().iter().all(|&v| v >= 0.0));
            prop_assert!((c.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let swapped = combine(&pb, &pa, EnsembleWeights { w_rfc: wt.w_cnn, w_cnn: wt.w_rfc }).unwrap();
            prop_assert_eq!(c.argmax(), swapped.argmax());
        }

        #[test]
        fn optimized_accuracy_dominates_endpoints(
            raw in prop::collection::vec((dist(3), dist(3), 0u8..3), 1..30)
        ) {
            let pairs: Vec<_> = raw.iter().map(|(a, b, t)| pair(a, b, *t)).collect();
            let (_, acc) = optimize_weights(&pairs).unwrap();
            let rfc_only = ensemble_accuracy(&pairs, EnsembleWeights::new(1.0).unwrap()).unwrap();
            let cnn_only = ensemble_accuracy(&pairs, EnsembleWeights::new(0.0).unwrap()).unwrap();
            prop_assert!(acc >= rfc_only.max(cnn_only));
        }
    }
}
