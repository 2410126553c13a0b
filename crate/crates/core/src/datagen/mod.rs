//! Seed-deterministic synthetic datasets standing in for captured data.

mod landmarks;
mod shapes;
mod text;

pub use landmarks::{synth_landmarks, LandmarkDatasetSpec};
pub use shapes::{render_class_shape, synth_silhouettes, ShapeJitter, SilhouetteDatasetSpec};
pub use text::{corrupt_corpus, corrupt_text, Corruption, ErrorKind, ErrorMix};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Per-class shuffled hold-out: `round(count * test_fraction)` samples of
/// every class go to the test side. Returns `(train, test)` indices, each
/// in ascending order.
pub fn stratified_split(labels: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} must lie in [0, 1)")));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (c, mut idx) in by_class.into_iter().enumerate() {
        idx.shuffle(&mut rng::stream(seed, "split", c as u64));
        let k = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
