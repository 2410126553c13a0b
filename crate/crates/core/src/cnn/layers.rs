//! Layer definitions with hand-written forward and backward passes.

use rand::Rng as _;

use super::tensor::Tensor3;
use crate::rng::Rng;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    Valid,
    /// Zero padding that keeps the spatial size (odd kernels).
    Same,
}

/// Layer shape description, independent of parameter values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel: usize,
        padding: Padding,
    },
    MaxPool {
        size: usize,
        stride: usize,
        /// Keep partial windows at the border instead of dropping them.
        ceil: bool,
    },
    Dense {
        units: usize,
    },
    Dropout {
        rate: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T> {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub padding: Padding,
    /// `[filter][ky][kx][in_channel]`
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub relu: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxPool {
    pub size: usize,
    pub stride: usize,
    pub ceil: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub units: usize,
    /// `[unit][input]`
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub relu: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dropout {
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    Conv(Conv2d<T>),
    Pool(MaxPool),
    Dense(Dense<T>),
    Dropout(Dropout),
}

/// What a layer remembers from its forward pass for the backward pass.
pub enum Cache {
    None,
    /// Flat input index chosen by each pooled output.
    Argmax(Vec<usize>),
    /// Per-element multiplier (0 or 1/(1-rate)).
    Mask(Vec<f64>),
}

pub fn pool_extent(input: usize, size: usize, stride: usize, ceil: bool) -> usize {
    if input <= size {
        1
    } else if ceil {
        (input - size).div_ceil(stride) + 1
    } else {
        (input - size) / stride + 1
    }
}

fn glorot<T: Real>(n: usize, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Vec<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| T::of(rng.random_range(-limit..=limit))).collect()
}

impl<T: Real> Conv2d<T> {
    pub fn new(in_channels: usize, filters: usize, kernel: usize, padding: Padding, relu: bool, rng: &mut Rng) -> Self {
        let n = filters * kernel * kernel * in_channels;
        Conv2d {
            in_channels,
            filters,
            kernel,
            padding,
            weights: glorot(n, kernel * kernel * in_channels, kernel * kernel * filters, rng),
            bias: vec![T::zero(); filters],
            relu,
        }
    }

    fn pad(&self) -> usize {
        match self.padding {
            Padding::Valid => 0,
            Padding::Same => (self.kernel - 1) / 2,
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        match self.padding {
            Padding::Valid => (h + 1 - self.kernel, w + 1 - self.kernel),
            Padding::Same => (h, w),
        }
    }

    pub fn forward(&self, input: &Tensor3<T>) -> Tensor3<T> {
        let (oh, ow) = self.output_hw(input.height, input.width);
        let (k, ic, pad) = (self.kernel, self.in_channels, self.pad());
        let mut out = Tensor3::zeros(oh, ow, self.filters);
        for oy in 0..oh {
            for ox in 0..ow {
                let o_off = out.offset(oy, ox);
                out.values[o_off..o_off + self.filters].copy_from_slice(&self.bias);
                for ky in 0..k {
                    let Some(iy) = (oy + ky).checked_sub(pad).filter(|&v| v < input.height) else {
                        continue;
                    };
                    for kx in 0..k {
                        let Some(ix) = (ox + kx).checked_sub(pad).filter(|&v| v < input.width) else {
                            continue;
                        };
                        let i_off = input.offset(iy, ix);
                        let patch = &input.values[i_off..i_off + ic];
                        for f in 0..self.filters {
                            let w_off = ((f * k + ky) * k + kx) * ic;
                            let w = &self.weights[w_off..w_off + ic];
                            let mut acc = T::zero();
                            for c in 0..ic {
                                acc += w[c] * patch[c];
                            }
                            out.values[o_off + f] += acc;
                        }
                    }
                }
            }
        }
        if self.relu {
            relu_inplace(&mut out.values);
        }
        out
    }

    /// `grad` is with respect to this layer's (post-activation) output and is
    /// consumed. Accumulates into `gw`/`gb`; returns the input gradient.
    pub fn backward(
        &self,
        input: &Tensor3<T>,
        output: &Tensor3<T>,
        mut grad: Tensor3<T>,
        gw: &mut [T],
        gb: &mut [T],
        need_input_grad: bool,
    ) -> Option<Tensor3<T>> {
        if self.relu {
            relu_backward(&mut grad.values, &output.values);
        }
        let (k, ic, pad) = (self.kernel, self.in_channels, self.pad());
        let mut gin = need_input_grad.then(|| Tensor3::zeros(input.height, input.width, ic));
        for oy in 0..grad.height {
            for ox in 0..grad.width {
                let o_off = grad.offset(oy, ox);
                let g = &grad.values[o_off..o_off + self.filters];
                for (b, &gv) in gb.iter_mut().zip(g) {
                    *b += gv;
                }
                for ky in 0..k {
                    let Some(iy) = (oy + ky).checked_sub(pad).filter(|&v| v < input.height) else {
                        continue;
                    };
                    for kx in 0..k {
                        let Some(ix) = (ox + kx).checked_sub(pad).filter(|&v| v < input.width) else {
                            continue;
                        };
                        let i_off = input.offset(iy, ix);
                        let patch = &input.values[i_off..i_off + ic];
                        for (f, &gv) in g.iter().enumerate() {
                            if gv == T::zero() {
                                continue;
                            }
                            let w_off = ((f * k + ky) * k + kx) * ic;
                            for c in 0..ic {
                                gw[w_off + c] += gv * patch[c];
                            }
                            if let Some(gin) = gin.as_mut() {
                                let w = &self.weights[w_off..w_off + ic];
                                let gi = &mut gin.values[i_off..i_off + ic];
                                for c in 0..ic {
                                    gi[c] += gv * w[c];
                                }
                            }
                        }
                    }
                }
            }
        }
        gin
    }
}

impl MaxPool {
    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            pool_extent(h, self.size, self.stride, self.ceil),
            pool_extent(w, self.size, self.stride, self.ceil),
        )
    }

    pub fn forward<T: Real>(&self, input: &Tensor3<T>) -> (Tensor3<T>, Cache) {
        let (oh, ow) = self.output_hw(input.height, input.width);
        let c = input.channels;
        let mut out = Tensor3::zeros(oh, ow, c);
        let mut argmax = vec![0usize; oh * ow * c];
        for oy in 0..oh {
            let y0 = oy * self.stride;
            let y1 = (y0 + self.size).min(input.height);
            for ox in 0..ow {
                let x0 = ox * self.stride;
                let x1 = (x0 + self.size).min(input.width);
                let o_off = out.offset(oy, ox);
                for ch in 0..c {
                    let mut best = input.offset(y0, x0) + ch;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            let i = input.offset(y, x) + ch;
                            // first maximum in row-major window order
                            if input.values[i] > input.values[best] {
                                best = i;
                            }
                        }
                    }
                    out.values[o_off + ch] = input.values[best];
                    argmax[o_off + ch] = best;
                }
            }
        }
        (out, Cache::Argmax(argmax))
    }

    pub fn backward<T: Real>(&self, input_shape: [usize; 3], grad: &Tensor3<T>, argmax: &[usize]) -> Tensor3<T> {
        let [h, w, c] = input_shape;
        let mut gin = Tensor3::zeros(h, w, c);
        for (&src, &g) in argmax.iter().zip(&grad.values) {
            gin.values[src] += g;
        }
        gin
    }
}

impl<T: Real> Dense<T> {
    pub fn new(inputs: usize, units: usize, relu: bool, rng: &mut Rng) -> Self {
        Dense {
            inputs,
            units,
            weights: glorot(inputs * units, inputs, units, rng),
            bias: vec![T::zero(); units],
            relu,
        }
    }

    pub fn forward(&self, input: &Tensor3<T>) -> Tensor3<T> {
        let x = &input.values;
        let mut out: Vec<T> = self
            .weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| {
                let mut acc = b;
                for (w, v) in row.iter().zip(x) {
                    acc += *w * *v;
                }
                acc
            })
            .collect();
        if self.relu {
            relu_inplace(&mut out);
        }
        Tensor3 {
            height: 1,
            width: 1,
            channels: self.units,
            values: out,
        }
    }

    pub fn backward(
        &self,
        input: &Tensor3<T>,
        output: &Tensor3<T>,
        mut grad: Tensor3<T>,
        gw: &mut [T],
        gb: &mut [T],
        need_input_grad: bool,
    ) -> Option<Tensor3<T>> {
        if self.relu {
            relu_backward(&mut grad.values, &output.values);
        }
        let x = &input.values;
        let mut gin = need_input_grad.then(|| Tensor3::zeros(input.height, input.width, input.channels));
        for (u, &g) in grad.values.iter().enumerate() {
            gb[u] += g;
            if g == T::zero() {
                continue;
            }
            let row = u * self.inputs;
            for (gw, &v) in gw[row..row + self.inputs].iter_mut().zip(x) {
                *gw += g * v;
            }
            if let Some(gin) = gin.as_mut() {
                for (gi, &w) in gin.values.iter_mut().zip(&self.weights[row..row + self.inputs]) {
                    *gi += g * w;
                }
            }
        }
        gin
    }
}

impl Dropout {
    /// Inverted dropout: kept activations are scaled by `1 / (1 - rate)`.
    pub fn forward<T: Real>(&self, input: &Tensor3<T>, rng: Option<&mut Rng>) -> (Tensor3<T>, Cache) {
        let Some(rng) = rng.filter(|_| self.rate > 0.0) else {
            return (input.clone(), Cache::None);
        };
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..input.len())
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        let mut out = input.clone();
        for (v, &m) in out.values.iter_mut().zip(&mask) {
            *v *= T::of(m);
        }
        (out, Cache::Mask(mask))
    }

    pub fn backward<T: Real>(&self, mut grad: Tensor3<T>, cache: &Cache) -> Tensor3<T> {
        if let Cache::Mask(mask) = cache {
            for (g, &m) in grad.values.iter_mut().zip(mask) {
                *g *= T::of(m);
            }
        }
        grad
    }
}

fn relu_inplace<T: Real>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

fn relu_backward<T: Real>(grad: &mut [T], output: &[T]) {
    for (g, &o) in grad.iter_mut().zip(output) {
        if o <= T::zero() {
            *g = T::zero();
        }
    }
}
