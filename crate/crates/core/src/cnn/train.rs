use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{cross_entropy, CnnModel, Tensor3};
use crate::error::{Error, Result};
use crate::forest::argmax_first;
use crate::rng;
use crate::scalar::Real;
use crate::vision::GrayImage;

pub type LabeledImage = (GrayImage, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be > 0".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidArgument(
                "batch size, epochs and patience must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's mini-batches, dropout active.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    /// Epoch (1-based) whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Per-sample gradients are summed in fixed groups of this size, then the
/// group sums in order, so results do not depend on the thread count.
const REDUCE_CHUNK: usize = 4;

struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: i32,
    lr: T,
}

impl<T: Real> Adam<T> {
    fn new(model: &CnnModel<T>, lr: f64) -> Self {
        Adam {
            m: model.zero_grads(),
            v: model.zero_grads(),
            step: 0,
            lr: T::of(lr),
        }
    }

    fn update(&mut self, model: &mut CnnModel<T>, grads: &[Vec<T>]) {
        self.step += 1;
        let (b1, b2, eps) = (T::of(BETA1), T::of(BETA2), T::of(ADAM_EPS));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        for (((p, g), m), v) in model
            .param_slices_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

fn add_into<T: Real>(acc: &mut [Vec<T>], other: &[Vec<T>]) {
    for (a, b) in acc.iter_mut().zip(other) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += *y;
        }
    }
}

/// Mean loss and accuracy with dropout off.
pub fn evaluate<T: Real>(model: &CnnModel<T>, inputs: &[(Tensor3<T>, usize)]) -> Result<(f64, f64)> {
    if inputs.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let results = inputs
        .par_iter()
        .map(|(x, y)| {
            let p = model.forward_tensor(x.clone(), None)?;
            Ok((cross_entropy(&p, *y).f64(), argmax_first(&p) == *y))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = results.len() as f64;
    let loss = results.iter().map(|r| r.0).sum::<f64>() / n;
    let acc = results.iter().filter(|r| r.1).count() as f64 / n;
    Ok((loss, acc))
}

/// Mini-batch Adam on mean cross-entropy with early stopping on validation
/// loss. The model ends up holding the best-validation weights. With an
/// empty validation set the training loss drives early stopping.
pub fn train<T: Real>(
    model: &mut CnnModel<T>,
    train_set: &[LabeledImage],
    val_set: &[LabeledImage],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let n_classes = model.classes().len();
    let to_inputs = |set: &[LabeledImage]| -> Result<Vec<(Tensor3<T>, usize)>> {
        set.iter()
            .map(|(img, y)| {
                if *y >= n_classes {
                    return Err(Error::LabelSpace(format!("label {y} outside {n_classes} classes")));
                }
                Ok((model.input_tensor(img)?, *y))
            })
            .collect()
    };
    let train_inputs = to_inputs(train_set)?;
    let val_inputs = to_inputs(val_set)?;

    let mut adam = Adam::new(model, config.learning_rate);
    let mut order: Vec<usize> = (0..train_inputs.len()).collect();
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, model.clone(), 0usize);
    let mut since_best = 0;
    let mut sample_counter = 0u64;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng::stream(config.seed, "cnn-shuffle", epoch as u64));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let base = sample_counter;
            sample_counter += batch.len() as u64;
            let frozen = &*model;
            let partials = batch
                .par_chunks(REDUCE_CHUNK)
                .enumerate()
                .map(|(chunk_no, chunk)| {
                    let mut grads = frozen.zero_grads();
                    let (mut loss, mut hits) = (0.0, 0usize);
                    for (j, &i) in chunk.iter().enumerate() {
                        let (x, y) = &train_inputs[i];
                        let sample = base + (chunk_no * REDUCE_CHUNK + j) as u64;
                        let mut drop_rng = rng::stream(config.seed, "cnn-dropout", sample);
                        let trace = frozen.forward_trace(x.clone(), Some(&mut drop_rng))?;
                        if argmax_first(&trace.output().values) == *y {
                            hits += 1;
                        }
                        loss += frozen.backward(&trace, *y, &mut grads).f64();
                    }
                    Ok((grads, loss, hits))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grads = model.zero_grads();
            for (g, l, h) in &partials {
                add_into(&mut grads, g);
                loss_sum += l;
                correct += h;
            }
            let scale = T::of(1.0 / batch.len() as f64);
            grads.iter_mut().flatten().for_each(|g| *g *= scale);
            adam.update(model, &grads);
        }
        let n = train_inputs.len() as f64;
        let (val_loss, val_accuracy) = evaluate(model, &val_inputs)?;
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            val_loss,
            val_accuracy,
        };
        let monitored = if val_inputs.is_empty() { stats.train_loss } else { val_loss };
        history.push(stats);
        if monitored < best.0 {
            best = (monitored, model.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }
    *model = best.1;
    Ok(TrainReport {
        history,
        best_epoch: best.2,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{Architecture, LayerSpec, Padding};
    use crate::labels::{Label, LabelSpace};

    fn ab() -> LabelSpace {
        LabelSpace::new(vec![Label::Letter(0), Label::Letter(1)]).unwrap()
    }

    fn toy_images() -> Vec<LabeledImage> {
        // class 0: bright left half, class 1: bright right half, shifted per sample
        (0..10)
            .map(|i| {
                let class = i % 2;
                let shift = i / 2;
                let img = GrayImage::from_fn(32, 32, |x, _| {
                    let left = x < 14 + shift;
                    if (class == 0) == left { 230 } else { 10 }
                });
                (img, class)
            })
            .collect()
    }

    #[test]
    fn one_step_reduces_loss() {
        let mut m = CnnModel::<f64>::build(&ab(), 3).unwrap();
        let sample = vec![(GrayImage::from_fn(32, 32, |x, y| ((x + y) * 4) as u8), 1)];
        let inputs: Vec<_> = sample.iter().map(|(i, y)| (m.input_tensor(i).unwrap(), *y)).collect();
        let (before, _) = evaluate(&m, &inputs).unwrap();
        let cfg = TrainConfig { max_epochs: 1, batch_size: 1, ..Default::default() };
        // one sample, one epoch = one Adam step; dropout may perturb, so use
        // a dropout-free copy of the architecture
        let mut arch = Architecture::silhouette(2);
        arch.layers.retain(|l| !matches!(l, LayerSpec::Dropout { .. }));
        let mut m2 = CnnModel::<f64>::with_architecture(arch, &ab(), 3).unwrap();
        let (before2, _) = evaluate(&m2, &inputs).unwrap();
        train(&mut m2, &sample, &[], &cfg).unwrap();
        let (after2, _) = evaluate(&m2, &inputs).unwrap();
        assert!(after2 < before2, "{after2} !< {before2}");
        // with dropout the step still descends on this sample
        train(&mut m, &sample, &[], &cfg).unwrap();
        let (after, _) = evaluate(&m, &inputs).unwrap();
        assert!(after < before);
    }

    #[test]
    fn overfits_two_class_toy_set() {
        let data = toy_images();
        let mut m = CnnModel::<f32>::build(&ab(), 7).unwrap();
        let cfg = TrainConfig {
            max_epochs: 50,
            batch_size: 4,
            patience: 50,
            ..Default::default()
        };
        let report = train(&mut m, &data, &data, &cfg).unwrap();
        let reached = report.history.iter().position(|e| e.val_accuracy == 1.0);
        assert!(reached.is_some(), "history: {:?}", report.history.last());
        assert!(report.history.len() <= 50);
    }

    #[test]
    fn deterministic_training() {
        let data = toy_images();
        let cfg = TrainConfig { max_epochs: 2, batch_size: 3, seed: 9, ..Default::default() };
        let mut a = CnnModel::<f32>::build(&ab(), 1).unwrap();
        let mut b = CnnModel::<f32>::build(&ab(), 1).unwrap();
        let ra = train(&mut a, &data, &data[..4], &cfg).unwrap();
        let rb = train(&mut b, &data, &data[..4], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.history, rb.history);
    }

    #[test]
    fn early_stopping_and_errors() {
        let data = toy_images();
        let tiny = Architecture {
            input: [32, 32, 1],
            layers: vec![
                LayerSpec::Conv { filters: 2, kernel: 3, padding: Padding::Valid },
                LayerSpec::MaxPool { size: 10, stride: 10, ceil: true },
                LayerSpec::Dense { units: 2 },
            ],
        };
        let mut m = CnnModel::<f32>::with_architecture(tiny, &ab(), 2).unwrap();
        // a huge learning rate makes validation loss blow up and stall
        let cfg = TrainConfig { learning_rate: 5.0, max_epochs: 100, patience: 2, ..Default::default() };
        let r = train(&mut m, &data, &data, &cfg).unwrap();
        assert!(r.history.len() < 100);
        assert!(r.stopped_early);
        assert_eq!(r.history.len(), r.best_epoch + 2);
        assert!(train(&mut m, &[], &data, &cfg).is_err());
        let bad = TrainConfig { batch_size: 0, ..cfg };
        assert!(train(&mut m, &data, &data, &bad).is_err());
        let bad_label = vec![(GrayImage::filled(32, 32, 0), 5)];
        assert!(train(&mut m, &bad_label, &[], &TrainConfig::default()).is_err());
    }
}
