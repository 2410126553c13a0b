//! Hand landmarks, their flattened feature form, and standard scaling.

use crate::error::{Error, Result};
use crate::labels::Label;
use crate::scalar::Real;

pub const NUM_LANDMARKS: usize = 42;
pub const NUM_FEATURES: usize = NUM_LANDMARKS * 3;

/// One observation of 42 ordered `(x, y, z)` hand landmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkFrame<T> {
    points: Vec<[T; 3]>,
    pub label: Option<Label>,
}

impl<T: Real> LandmarkFrame<T> {
    pub fn new(points: Vec<[T; 3]>, label: Option<Label>) -> Result<Self> {
        if points.len() != NUM_LANDMARKS {
            return Err(Error::Structure(format!(
                "expected {NUM_LANDMARKS} landmarks, got {}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Structure("non-finite landmark coordinate".into()));
        }
        Ok(LandmarkFrame { points, label })
    }

    pub fn points(&self) -> &[[T; 3]] {
        &self.points
    }

    /// Lay the points out as `x1, y1, z1, x2, ...`.
    pub fn flatten(&self) -> FeatureVector<T> {
        FeatureVector(self.points.iter().flatten().copied().collect())
    }

    /// Inverse of [`LandmarkFrame::flatten`].
    pub fn unflatten(v: &FeatureVector<T>, label: Option<Label>) -> Self {
        let points = v.0.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        LandmarkFrame { points, label }
    }
}

/// 126 classifier-ready features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T>(Vec<T>);

impl<T: Real> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() != NUM_FEATURES {
            return Err(Error::Structure(format!(
                "expected {NUM_FEATURES} features, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structure("non-finite feature".into()));
        }
        Ok(FeatureVector(values))
    }

    /// Vector of arbitrary length, for models trained on non-landmark data.
    pub fn from_raw(values: Vec<T>) -> Self {
        FeatureVector(values)
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> std::ops::Index<usize> for FeatureVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Per-feature mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalerParams<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Real> ScalerParams<T> {
    /// Fit column statistics. Constant columns get `sigma = 1`.
    pub fn fit(dataset: &[FeatureVector<T>]) -> Result<Self> {
        let first = dataset.first().ok_or(Error::Empty("scaler dataset"))?;
        let dim = first.len();
        if dataset.iter().any(|v| v.len() != dim) {
            return Err(Error::Structure("feature vectors differ in length".into()));
        }
        let n = T::of(dataset.len() as f64);
        let mut mu = vec![T::zero(); dim];
        for v in dataset {
            for (m, &x) in mu.iter_mut().zip(v.values()) {
                *m += x;
            }
        }
        mu.iter_mut().for_each(|m| *m /= n);

        let mut var = vec![T::zero(); dim];
        for v in dataset {
            for ((s, &x), &m) in var.iter_mut().zip(v.values()).zip(&mu) {
                *s += (x - m) * (x - m);
            }
        }
        let sigma = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::zero() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(ScalerParams { mu, sigma })
    }

    pub fn apply(&self, v: &FeatureVector<T>) -> Result<FeatureVector<T>> {
        if v.len() != self.mu.len() {
            return Err(Error::Structure(format!(
                "scaler fitted on {} features, got {}",
                self.mu.len(),
                v.len()
            )));
        }
        let out = v
            .values()
            .iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((&x, &m), &s)| (x - m) / s)
            .collect();
        Ok(FeatureVector(out))
    }

    pub fn apply_all(&self, vs: &[FeatureVector<T>]) -> Result<Vec<FeatureVector<T>>> {
        vs.iter().map(|v| self.apply(v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero_frame() -> LandmarkFrame<f64> {
        LandmarkFrame::new(vec![[0.0; 3]; NUM_LANDMARKS], None).unwrap()
    }

    #[test]
    fn flatten_zero_frame() {
        let v = zero_frame().flatten();
        assert_eq!(v.len(), 126);
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn flatten_places_first_point() {
        let mut pts = vec![[0.0; 3]; NUM_LANDMARKS];
        pts[0] = [0.5, 0.2, 0.0];
        let v = LandmarkFrame::new(pts, None).unwrap().flatten();
        assert_eq!(&v.values()[0..3], &[0.5, 0.2, 0.0]);
    }

    #[test]
    fn wrong_point_count_rejected() {
        let r = LandmarkFrame::<f64>::new(vec![[0.0; 3]; 41], None);
        assert!(matches!(r, Err(Error::Structure(_))));
        let r = LandmarkFrame::<f64>::new(vec![[f64::NAN, 0.0, 0.0]; 42], None);
        assert!(r.is_err());
    }

    fn column(values: &[f64]) -> Vec<FeatureVector<f64>> {
        values
            .iter()
            .map(|&x| FeatureVector::from_raw(vec![x]))
            .collect()
    }

    #[test]
    fn fit_two_point_column() {
        // population std of {0, 2} is 1
        let data = column(&[0.0, 2.0]);
        let p = ScalerParams::fit(&data).unwrap();
        assert_eq!(p.mu, vec![1.0]);
        assert_eq!(p.sigma, vec![1.0]);
        let out: Vec<f64> = data.iter().map(|v| p.apply(v).unwrap()[0]).collect();
        assert_eq!(out, vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_column_guard() {
        let p = ScalerParams::fit(&column(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(p.mu, vec![5.0]);
        assert_eq!(p.sigma, vec![1.0]);
        assert_eq!(p.apply(&FeatureVector::from_raw(vec![5.0])).unwrap()[0], 0.0);
    }

    #[test]
    fn single_vector_fit() {
        let v = FeatureVector::from_raw(vec![3.0, -1.0, 0.25]);
        let p = ScalerParams::fit(std::slice::from_ref(&v)).unwrap();
        assert_eq!(p.mu, v.values());
        assert_eq!(p.sigma, vec![1.0; 3]);
        assert!(p.apply(&v).unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(ScalerParams::<f64>::fit(&[]).is_err());
    }

    fn dataset_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6).prop_flat_map(|dim| {
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, dim), 1..40)
        })
    }

    proptest! {
        #[test]
        fn flatten_unflatten_identity(vals in prop::collection::vec(-1.0f64..1.0, NUM_FEATURES)) {
            let v = FeatureVector::new(vals).unwrap();
            let f = LandmarkFrame::unflatten(&v, None);
            prop_assert_eq!(f.flatten(), v);
        }

        #[test]
        fn scaled_training_columns_are_standard(rows in dataset_strategy()) {
            let data: Vec<_> = rows.into_iter().map(FeatureVector::from_raw).collect();
            let p = ScalerParams::fit(&data).unwrap();
            let scaled = p.apply_all(&data).unwrap();
            let n = scaled.len() as f64;
            for j in 0..data[0].len() {
                let mean = scaled.iter().map(|v| v[j]).sum::<f64>() / n;
                let var = scaled.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                let sd = var.sqrt();
                prop_assert!((sd - 1.0).abs() < 1e-9 || sd == 0.0, "sd = {}", sd);
            }
        }

        #[test]
        fn scaler_is_affine(
            rows in dataset_strategy(),
            a in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let data: Vec<_> = rows.into_iter().map(FeatureVector::from_raw).collect();
            let p = ScalerParams::fit(&data).unwrap();
            let i = (seed as usize) % data.len();
            let j = (seed as usize / 7) % data.len();
            let (v1, v2) = (&data[i], &data[j]);
            let mix = FeatureVector::from_raw(
                v1.values().iter().zip(v2.values()).map(|(x, y)| a * x + (1.0 - a) * y).collect(),
            );
            let lhs = p.apply(&mix).unwrap();
            let (s1, s2) = (p.apply(v1).unwrap(), p.apply(v2).unwrap());
            for k in 0..lhs.len() {
                let rhs = a * s1[k] + (1.0 - a) * s2[k];
                prop_assert!((lhs[k] - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
            }
        }
    }
}
