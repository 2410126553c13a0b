//! Random forest of CART trees grown on Gini impurity.

mod grid;
mod persist;
mod tree;

use rayon::prelude::*;

pub use grid::{grid_search, kfold_indices, GridRow, GridSearchResult, SearchSpace};
pub use persist::{decode_forest, encode_forest, FOREST_FORMAT_VERSION};
pub use tree::{Node, Tree};

use crate::ensemble::ClassProbabilities;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::labels::LabelSpace;
use crate::rng;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ForestHyperparams {
    pub n_estimators: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    /// Features examined per node; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
}

impl Default for ForestHyperparams {
    /// The tuned configuration: 200 trees, depth 20, split 5, leaf 2, bootstrap.
    fn default() -> Self {
        ForestHyperparams {
            n_estimators: 200,
            max_depth: Some(20),
            min_samples_split: 5,
            min_samples_leaf: 2,
            bootstrap: true,
            max_features: None,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::InvalidArgument("n_estimators must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument("min_samples_split must be >= 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidArgument("min_samples_leaf must be >= 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::InvalidArgument("max_features must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn features_per_node(&self, dim: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize)
            .clamp(1, dim)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel<T> {
    trees: Vec<Tree<T>>,
    params: ForestHyperparams,
    classes: LabelSpace,
    n_features: usize,
}

impl<T: Real> ForestModel<T> {
    /// Grow `n_estimators` trees. Tree `t` draws from its own random stream,
    /// so the result does not depend on how trees are scheduled.
    pub fn train(
        x: &[FeatureVector<T>],
        y: &[usize],
        classes: &LabelSpace,
        params: &ForestHyperparams,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        if x.is_empty() {
            return Err(Error::Empty("forest training data"));
        }
        if x.len() != y.len() {
            return Err(Error::Structure(format!("{} samples but {} labels", x.len(), y.len())));
        }
        if x.len() < params.min_samples_split {
            return Err(Error::InvalidArgument(format!(
                "{} samples is fewer than min_samples_split = {}",
                x.len(),
                params.min_samples_split
            )));
        }
        let n_features = x[0].len();
        if n_features == 0 || x.iter().any(|v| v.len() != n_features) {
            return Err(Error::Structure("feature vectors must share a non-zero length".into()));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= classes.len()) {
            return Err(Error::LabelSpace(format!("label index {bad} outside {} classes", classes.len())));
        }
        if y.iter().all(|&c| c == y[0]) {
            return Err(Error::InvalidArgument("training data contains a single class".into()));
        }

        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::stream(seed, "forest-tree", t as u64);
                Tree::grow(x, y, classes.len(), params, &mut rng)
            })
            .collect();
        Ok(ForestModel {
            trees,
            params: params.clone(),
            classes: classes.clone(),
            n_features,
        })
    }

    pub fn trees(&self) -> &[Tree<T>] {
        &self.trees
    }

    pub fn params(&self) -> &ForestHyperparams {
        &self.params
    }

    pub fn classes(&self) -> &LabelSpace {
        &self.classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn votes(&self, x: &FeatureVector<T>) -> Vec<usize> {
        let mut votes = vec![0usize; self.classes.len()];
        for tree in &self.trees {
            votes[tree.predict(x)] += 1;
        }
        votes
    }

    /// Mode of the per-tree predictions, lowest class index on ties.
    pub fn predict_class(&self, x: &FeatureVector<T>) -> usize {
        argmax_first(&self.votes(x))
    }

    /// Fraction of trees voting for each class.
    pub fn predict_proba(&self, x: &FeatureVector<T>) -> ClassProbabilities<T> {
        let total = T::of(self.trees.len() as f64);
        let values = self
            .votes(x)
            .into_iter()
            .map(|v| T::of(v as f64) / total)
            .collect();
        ClassProbabilities::new_unchecked(self.classes.clone(), values)
    }

    pub fn accuracy(&self, x: &[FeatureVector<T>], y: &[usize]) -> f64 {
        let correct = x
            .par_iter()
            .zip(y)
            .filter(|(v, &c)| self.predict_class(v) == c)
            .count();
        correct as f64 / x.len().max(1) as f64
    }
}

/// Index of the first maximum.
pub fn argmax_first<V: PartialOrd + Copy>(values: &[V]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
