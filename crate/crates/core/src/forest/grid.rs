use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{ForestHyperparams, ForestModel};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::labels::LabelSpace;
use crate::rng;
use crate::scalar::Real;

/// Candidate values per hyperparameter; the grid is their cross product.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub bootstrap: Vec<bool>,
}

impl Default for SearchSpace {
    /// 3 x 4 x 3 x 3 x 2 = 216 configurations.
    fn default() -> Self {
        SearchSpace {
            n_estimators: vec![100, 200, 300],
            max_depth: vec![None, Some(10), Some(20), Some(30)],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 2, 4],
            bootstrap: vec![true, false],
        }
    }
}

impl SearchSpace {
    pub fn single(params: &ForestHyperparams) -> Self {
        SearchSpace {
            n_estimators: vec![params.n_estimators],
            max_depth: vec![params.max_depth],
            min_samples_split: vec![params.min_samples_split],
            min_samples_leaf: vec![params.min_samples_leaf],
            bootstrap: vec![params.bootstrap],
        }
    }

    pub fn len(&self) -> usize {
        self.n_estimators.len()
            * self.max_depth.len()
            * self.min_samples_split.len()
            * self.min_samples_leaf.len()
            * self.bootstrap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Configurations in enumeration order: `n_estimators` varies slowest,
    /// `bootstrap` fastest.
    pub fn configs(&self) -> Vec<ForestHyperparams> {
        let mut out = Vec::with_capacity(self.len());
        for &n_estimators in &self.n_estimators {
            for &max_depth in &self.max_depth {
                for &min_samples_split in &self.min_samples_split {
                    for &min_samples_leaf in &self.min_samples_leaf {
                        for &bootstrap in &self.bootstrap {
                            out.push(ForestHyperparams {
                                n_estimators,
                                max_depth,
                                min_samples_split,
                                min_samples_leaf,
                                bootstrap,
                                max_features: None,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub params: ForestHyperparams,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    pub best: ForestHyperparams,
    pub best_accuracy: f64,
    pub rows: Vec<GridRow>,
}

/// Shuffle `0..n` with the seed and cut it into `k` contiguous folds whose
/// sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument("k-fold needs k >= 2".into()));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!("{n} samples cannot fill {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, "cv-folds", 0));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Exhaustive k-fold search. Every configuration sees the same folds and the
/// same forest seed; the earliest configuration wins ties.
pub fn grid_search<T: Real>(
    x: &[FeatureVector<T>],
    y: &[usize],
    classes: &LabelSpace,
    space: &SearchSpace,
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if space.is_empty() {
        return Err(Error::Empty("search space"));
    }
    if x.len() != y.len() {
        return Err(Error::Structure(format!("{} samples but {} labels", x.len(), y.len())));
    }
    let folds = kfold_indices(x.len(), k, seed)?;
    let forest_seed = rng::substream(seed, "grid-forest");
    let splits: Vec<_> = folds
        .iter()
        .enumerate()
        .map(|(f, test)| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            let pick = |ids: &[usize]| -> (Vec<FeatureVector<T>>, Vec<usize>) {
                ids.iter().map(|&i| (x[i].clone(), y[i])).unzip()
            };
            (pick(&train), pick(test))
        })
        .collect();

    let rows = space
        .configs()
        .into_par_iter()
        .map(|params| {
            let fold_accuracy = splits
                .iter()
                .map(|((tx, ty), (vx, vy))| {
                    ForestModel::train(tx, ty, classes, &params, forest_seed).map(|m| m.accuracy(vx, vy))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
            Ok(GridRow {
                params,
                fold_accuracy,
                mean_accuracy,
            })
        })
        .collect::<Result<Vec<GridRow>>>()?;

    let mut best = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.mean_accuracy > rows[best].mean_accuracy {
            best = i;
        }
    }
    Ok(GridSearchResult {
        best: rows[best].params.clone(),
        best_accuracy: rows[best].mean_accuracy,
        rows,
    })
}
