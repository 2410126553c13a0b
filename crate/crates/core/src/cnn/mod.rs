//! A small convolutional classifier for 32x32 silhouettes, trained with
//! backpropagation and Adam.
//!
//! The default architecture:
//!
//! | layer   | configuration           | output      | params      |
//! |---------|-------------------------|-------------|-------------|
//! | conv    | 16 x 2x2, valid         | 31 x 31 x 16| 80          |
//! | maxpool | 2x2, stride 2           | 15 x 15 x 16| 0           |
//! | conv    | 32 x 3x3, valid         | 13 x 13 x 32| 4,640       |
//! | maxpool | 3x3, stride 3           | 4 x 4 x 32  | 0           |
//! | conv    | 64 x 5x5, same          | 4 x 4 x 64  | 51,264      |
//! | maxpool | 5x5, stride 5, ceil     | 1 x 1 x 64  | 0           |
//! | dense   | 128                     | 128         | 8,320       |
//! | dropout | 0.2                     | 128         | 0           |
//! | dense   | C, softmax              | C           | 128 C + C   |

mod gradcheck;
mod layers;
mod persist;
mod tensor;
mod train;

pub use gradcheck::{gradient_check, gradient_check_params, relative_error};
pub use layers::{Cache, Conv2d, Dense, Dropout, Layer, LayerSpec, MaxPool, Padding};
pub use persist::{decode_cnn, encode_cnn, CNN_FORMAT_VERSION};
pub use tensor::Tensor3;
pub use train::{train, EpochStats, LabeledImage, TrainConfig, TrainReport};

use crate::ensemble::ClassProbabilities;
use crate::error::{Error, Result};
use crate::labels::LabelSpace;
use crate::rng::{self, Rng};
use crate::scalar::Real;
use crate::vision::GrayImage;

/// Probabilities below this are clamped before taking the log.
pub const LOSS_EPSILON: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    /// `(height, width, channels)` of the input tensor.
    pub input: [usize; 3],
    /// Hidden layers followed by the output dense layer; every conv and
    /// dense layer except the last applies ReLU.
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    /// The 32x32 single-channel network described in the module docs.
    pub fn silhouette(num_classes: usize) -> Self {
        use LayerSpec::*;
        Architecture {
            input: [32, 32, 1],
            layers: vec![
                Conv { filters: 16, kernel: 2, padding: Padding::Valid },
                MaxPool { size: 2, stride: 2, ceil: false },
                Conv { filters: 32, kernel: 3, padding: Padding::Valid },
                MaxPool { size: 3, stride: 3, ceil: false },
                Conv { filters: 64, kernel: 5, padding: Padding::Same },
                MaxPool { size: 5, stride: 5, ceil: true },
                Dense { units: 128 },
                Dropout { rate: 0.2 },
                Dense { units: num_classes },
            ],
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self.layers.last() {
            Some(LayerSpec::Dense { units }) => Some(*units),
            _ => None,
        }
    }
}

/// Shape and parameter count of one layer, for inspection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSummary {
    pub kind: &'static str,
    pub output: Vec<usize>,
    pub params: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnModel<T> {
    arch: Architecture,
    layers: Vec<Layer<T>>,
    classes: LabelSpace,
}

/// Activations recorded by a training-mode forward pass.
pub struct Trace<T> {
    activations: Vec<Tensor3<T>>,
    caches: Vec<Cache>,
}

impl<T> Trace<T> {
    pub fn output(&self) -> &Tensor3<T> {
        self.activations.last().expect("trace has the input at least")
    }
}

/// Numerically stable softmax.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln(max(p[true], eps))`.
pub fn cross_entropy<T: Real>(probs: &[T], truth: usize) -> T {
    -probs[truth].max(T::of(LOSS_EPSILON)).ln()
}

impl<T: Real> CnnModel<T> {
    /// The default silhouette network for `classes`.
    pub fn build(classes: &LabelSpace, seed: u64) -> Result<Self> {
        Self::with_architecture(Architecture::silhouette(classes.len()), classes, seed)
    }

    pub fn with_architecture(arch: Architecture, classes: &LabelSpace, seed: u64) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::InvalidArgument("need at least two classes".into()));
        }
        if arch.num_classes() != Some(classes.len()) {
            return Err(Error::Structure(format!(
                "architecture must end in a dense layer of {} units",
                classes.len()
            )));
        }
        let [mut h, mut w, mut c] = arch.input;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::Structure("input extents must be >= 1".into()));
        }
        let last = arch.layers.len() - 1;
        let mut layers = Vec::with_capacity(arch.layers.len());
        for (i, spec) in arch.layers.iter().enumerate() {
            let mut rng = rng::stream(seed, "cnn-init", i as u64);
            let layer = match *spec {
                LayerSpec::Conv { filters, kernel, padding } => {
                    let conv = Conv2d::new(c, filters, kernel, padding, i != last, &mut rng);
                    if padding == Padding::Valid && (kernel > h || kernel > w) {
                        return Err(Error::Structure(format!("layer {i}: kernel larger than input")));
                    }
                    if padding == Padding::Same && kernel % 2 == 0 {
                        return Err(Error::Structure(format!("layer {i}: same padding needs an odd kernel")));
                    }
                    (h, w) = conv.output_hw(h, w);
                    c = filters;
                    Layer::Conv(conv)
                }
                LayerSpec::MaxPool { size, stride, ceil } => {
                    if size == 0 || stride == 0 {
                        return Err(Error::Structure(format!("layer {i}: zero pool size or stride")));
                    }
                    let pool = MaxPool { size, stride, ceil };
                    (h, w) = pool.output_hw(h, w);
                    Layer::Pool(pool)
                }
                LayerSpec::Dense { units } => {
                    let dense = Dense::new(h * w * c, units, i != last, &mut rng);
                    (h, w, c) = (1, 1, units);
                    Layer::Dense(dense)
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(Error::Structure(format!("layer {i}: dropout rate {rate}")));
                    }
                    Layer::Dropout(Dropout { rate })
                }
            };
            layers.push(layer);
        }
        Ok(CnnModel {
            arch,
            layers,
            classes: classes.clone(),
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn classes(&self) -> &LabelSpace {
        &self.classes
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// Output shape and parameter count of every layer.
    pub fn summary(&self) -> Vec<LayerSummary> {
        let [mut h, mut w, mut c] = self.arch.input;
        self.layers
            .iter()
            .map(|layer| match layer {
                Layer::Conv(conv) => {
                    (h, w) = conv.output_hw(h, w);
                    c = conv.filters;
                    LayerSummary {
                        kind: "conv2d",
                        output: vec![h, w, c],
                        params: conv.weights.len() + conv.bias.len(),
                    }
                }
                Layer::Pool(pool) => {
                    (h, w) = pool.output_hw(h, w);
                    LayerSummary {
                        kind: "maxpool2d",
                        output: vec![h, w, c],
                        params: 0,
                    }
                }
                Layer::Dense(d) => {
                    (h, w, c) = (1, 1, d.units);
                    LayerSummary {
                        kind: "dense",
                        output: vec![d.units],
                        params: d.weights.len() + d.bias.len(),
                    }
                }
                Layer::Dropout(_) => LayerSummary {
                    kind: "dropout",
                    output: if h * w == 1 { vec![c] } else { vec![h, w, c] },
                    params: 0,
                },
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Weights then bias of every parametrized layer, in layer order.
    pub fn param_slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => out.extend([&c.weights[..], &c.bias[..]]),
                Layer::Dense(d) => out.extend([&d.weights[..], &d.bias[..]]),
                _ => {}
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => out.extend([&mut c.weights[..], &mut c.bias[..]]),
                Layer::Dense(d) => out.extend([&mut d.weights[..], &mut d.bias[..]]),
                _ => {}
            }
        }
        out
    }

    /// Zeroed buffers shaped like [`CnnModel::param_slices`].
    pub fn zero_grads(&self) -> Vec<Vec<T>> {
        self.param_slices()
            .iter()
            .map(|s| vec![T::zero(); s.len()])
            .collect()
    }

    pub fn input_tensor(&self, img: &GrayImage) -> Result<Tensor3<T>> {
        let [h, w, c] = self.arch.input;
        if c != 1 || img.dims() != (w, h) {
            return Err(Error::Structure(format!(
                "model expects {w}x{h}x{c} input, got {}x{} grayscale",
                img.width(),
                img.height()
            )));
        }
        Ok(Tensor3::from_image(img))
    }

    /// Forward pass recording every activation. Dropout is active only when
    /// `dropout_rng` is given.
    pub fn forward_trace(&self, input: Tensor3<T>, mut dropout_rng: Option<&mut Rng>) -> Result<Trace<T>> {
        if input.shape() != self.arch.input {
            return Err(Error::Structure(format!(
                "input shape {:?} does not match {:?}",
                input.shape(),
                self.arch.input
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut caches = Vec::with_capacity(self.layers.len());
        activations.push(input);
        for layer in &self.layers {
            let x = activations.last().expect("non-empty");
            let (y, cache) = match layer {
                Layer::Conv(c) => (c.forward(x), Cache::None),
                Layer::Pool(p) => p.forward(x),
                Layer::Dense(d) => (d.forward(x), Cache::None),
                Layer::Dropout(d) => d.forward(x, dropout_rng.as_deref_mut()),
            };
            activations.push(y);
            caches.push(cache);
        }
        Ok(Trace { activations, caches })
    }

    /// Class probabilities for an input tensor.
    pub fn forward_tensor(&self, input: Tensor3<T>, dropout_rng: Option<&mut Rng>) -> Result<Vec<T>> {
        let trace = self.forward_trace(input, dropout_rng)?;
        Ok(softmax(&trace.output().values))
    }

    /// Class probabilities for an image. `train_mode` enables dropout using a
    /// stream derived from `seed`.
    pub fn forward(&self, img: &GrayImage, train_mode: bool, seed: u64) -> Result<ClassProbabilities<T>> {
        let input = self.input_tensor(img)?;
        let mut rng = rng::stream(seed, "cnn-forward-dropout", 0);
        let probs = self.forward_tensor(input, train_mode.then_some(&mut rng))?;
        Ok(ClassProbabilities::new_unchecked(self.classes.clone(), probs))
    }

    pub fn predict(&self, img: &GrayImage) -> Result<ClassProbabilities<T>> {
        self.forward(img, false, 0)
    }

    /// Backpropagate softmax cross-entropy for `truth` through a recorded
    /// trace, adding parameter gradients into `grads`. Returns the loss.
    pub fn backward(&self, trace: &Trace<T>, truth: usize, grads: &mut [Vec<T>]) -> T {
        let probs = softmax(&trace.output().values);
        let loss = cross_entropy(&probs, truth);
        let mut grad = trace.output().clone();
        for (g, &p) in grad.values.iter_mut().zip(&probs) {
            *g = p;
        }
        grad.values[truth] -= T::one();

        let mut slot = grads.len();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.activations[i];
            let output = &trace.activations[i + 1];
            let need_input = i > 0;
            grad = match layer {
                Layer::Conv(c) => {
                    slot -= 2;
                    let (gw, gb) = split_pair(grads, slot);
                    match c.backward(input, output, grad, gw, gb, need_input) {
                        Some(g) => g,
                        None => break,
                    }
                }
                Layer::Dense(d) => {
                    slot -= 2;
                    let (gw, gb) = split_pair(grads, slot);
                    match d.backward(input, output, grad, gw, gb, need_input) {
                        Some(g) => g,
                        None => break,
                    }
                }
                Layer::Pool(p) => match &trace.caches[i] {
                    Cache::Argmax(idx) => p.backward(input.shape(), &grad, idx),
                    _ => unreachable!("pool layers cache argmax"),
                },
                Layer::Dropout(d) => d.backward(grad, &trace.caches[i]),
            };
        }
        loss
    }

    /// Same weights in another precision.
    pub fn cast<U: Real>(&self) -> CnnModel<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::of(x.f64())).collect::<Vec<U>>();
        let layers = self
            .layers
            .iter()
            .map(|layer| match layer {
                Layer::Conv(c) => Layer::Conv(Conv2d {
                    in_channels: c.in_channels,
                    filters: c.filters,
                    kernel: c.kernel,
                    padding: c.padding,
                    weights: conv(&c.weights),
                    bias: conv(&c.bias),
                    relu: c.relu,
                }),
                Layer::Dense(d) => Layer::Dense(Dense {
                    inputs: d.inputs,
                    units: d.units,
                    weights: conv(&d.weights),
                    bias: conv(&d.bias),
                    relu: d.relu,
                }),
                Layer::Pool(p) => Layer::Pool(p.clone()),
                Layer::Dropout(d) => Layer::Dropout(d.clone()),
            })
            .collect();
        CnnModel {
            arch: self.arch.clone(),
            layers,
            classes: self.classes.clone(),
        }
    }
}

fn split_pair<T>(grads: &mut [Vec<T>], at: usize) -> (&mut [T], &mut [T]) {
    let (a, b) = grads[at..at + 2].split_at_mut(1);
    (&mut a[0], &mut b[0])
}
