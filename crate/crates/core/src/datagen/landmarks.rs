use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::features::{LandmarkFrame, NUM_LANDMARKS};
use crate::labels::LabelSpace;
use crate::rng;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkDatasetSpec {
    pub num_classes: usize,
    pub per_class: usize,
    /// Standard deviation of each coordinate around its class centroid.
    pub spread: f64,
    pub seed: u64,
}

impl Default for LandmarkDatasetSpec {
    fn default() -> Self {
        LandmarkDatasetSpec {
            num_classes: 28,
            per_class: 100,
            spread: 0.05,
            seed: 0,
        }
    }
}

impl LandmarkDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidArgument("num_classes must be >= 2".into()));
        }
        if self.per_class < 1 {
            return Err(Error::InvalidArgument("per_class must be >= 1".into()));
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return Err(Error::InvalidArgument("spread must be > 0".into()));
        }
        Ok(())
    }
}

/// Gaussian clusters, one per class, ordered class by class. Frames of the
/// first 28 classes carry the matching landmark-space label.
pub fn synth_landmarks<T: Real>(spec: &LandmarkDatasetSpec) -> Result<Vec<(LandmarkFrame<T>, usize)>> {
    spec.validate()?;
    let space = LabelSpace::landmark();
    let noise = Normal::new(0.0, spec.spread).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = Vec::with_capacity(spec.num_classes * spec.per_class);
    for class in 0..spec.num_classes {
        let mut crng = rng::stream(spec.seed, "landmark-centroid", class as u64);
        let centroid: Vec<[f64; 3]> = (0..NUM_LANDMARKS)
            .map(|_| std::array::from_fn(|_| crng.random_range(0.05..0.95)))
            .collect();
        let label = (class < space.len()).then(|| space.label(class));
        for i in 0..spec.per_class {
            let index = (class * spec.per_class + i) as u64;
            let mut srng = rng::stream(spec.seed, "landmark-sample", index);
            let points = centroid
                .iter()
                .map(|c| c.map(|v| T::of(v + noise.sample(&mut srng))))
                .collect();
            out.push((LandmarkFrame::new(points, label)?, class));
        }
    }
    Ok(out)
}
