//! Differentiable layers.
//!
//! Shapes exclude the batch axis. Convolution and pooling inputs are
//! channels-first: `[C, L]` for 1-D and `[C, H, W]` for 2-D. Convolutions use
//! stride 1 and "same" zero padding; for even kernels the extra pad goes on
//! the right/bottom. Pooling uses non-overlapping windows and floors the
//! output size (trailing positions that do not fill a window are dropped).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lstm::{self, LstmCache};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const BATCHNORM_MOMENTUM: f64 = 0.9;
pub const BATCHNORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// U(-l, l) with l = sqrt(6 / fan_in); used ahead of relu.
    HeUniform,
    /// U(-l, l) with l = sqrt(6 / (fan_in + fan_out)); used ahead of softmax.
    GlorotUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d { filters: usize, kernel: usize },
    Conv2d { filters: usize, kernel: [usize; 2] },
    Dense { units: usize, init: Init },
    #[serde(rename = "batchnorm")]
    BatchNorm,
    #[serde(rename = "maxpool1d")]
    MaxPool1d { pool: usize },
    #[serde(rename = "maxpool2d")]
    MaxPool2d { pool: usize },
    Dropout { rate: f64 },
    Flatten,
    Relu,
    Softmax,
    Lstm { units: usize },
    Concat,
    AttentionMultiply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::BatchNorm => "batchnorm",
            LayerSpec::MaxPool1d { .. } => "maxpool1d",
            LayerSpec::MaxPool2d { .. } => "maxpool2d",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Relu => "relu",
            LayerSpec::Softmax => "softmax",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::Concat => "concat",
            LayerSpec::AttentionMultiply => "attention_multiply",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::param(format!("{}: {msg}", self.kind())));
        match *self {
            LayerSpec::Conv1d { filters, kernel } if filters == 0 || kernel == 0 => {
                bad("filters and kernel must be positive")
            }
            LayerSpec::Conv2d { filters, kernel } if filters == 0 || kernel.contains(&0) => {
                bad("filters and kernel must be positive")
            }
            LayerSpec::Dense { units, .. } | LayerSpec::Lstm { units } if units == 0 => {
                bad("units must be positive")
            }
            LayerSpec::MaxPool1d { pool } | LayerSpec::MaxPool2d { pool } if pool == 0 => {
                bad("pool must be positive")
            }
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                bad("rate must lie in [0, 1)")
            }
            _ => Ok(()),
        }
    }

    fn arity(&self) -> std::ops::RangeInclusive<usize> {
        match self {
            LayerSpec::Concat => 1..=usize::MAX,
            LayerSpec::AttentionMultiply => 2..=2,
            _ => 1..=1,
        }
    }

    /// Per-sample output shape for the given per-sample input shapes.
    pub fn output_shape(&self, inputs: &[Vec<usize>]) -> Result<Vec<usize>> {
        self.validate()?;
        if !self.arity().contains(&inputs.len()) {
            return Err(Error::shape(format!(
                "{} takes {:?} inputs, got {}",
                self.kind(),
                self.arity(),
                inputs.len()
            )));
        }
        let s = &inputs[0];
        let rank_err = |want: usize| {
            Error::shape(format!(
                "{} expects rank-{want} input, got {s:?}",
                self.kind()
            ))
        };
        if s.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!("{} got empty input {s:?}", self.kind())));
        }
        match *self {
            LayerSpec::Conv1d { filters, .. } => {
                if s.len() != 2 {
                    return Err(rank_err(2));
                }
                Ok(vec![filters, s[1]])
            }
            LayerSpec::Conv2d { filters, .. } => {
                if s.len() != 3 {
                    return Err(rank_err(3));
                }
                Ok(vec![filters, s[1], s[2]])
            }
            LayerSpec::Dense { units, .. } => {
                if s.len() != 1 {
                    return Err(rank_err(1));
                }
                Ok(vec![units])
            }
            LayerSpec::MaxPool1d { pool } => {
                if s.len() != 2 {
                    return Err(rank_err(2));
                }
                if s[1] / pool == 0 {
                    return Err(Error::shape(format!(
                        "maxpool1d of size {pool} cannot pool length {}",
                        s[1]
                    )));
                }
                Ok(vec![s[0], s[1] / pool])
            }
            LayerSpec::MaxPool2d { pool } => {
                if s.len() != 3 {
                    return Err(rank_err(3));
                }
                if s[1] / pool == 0 || s[2] / pool == 0 {
                    return Err(Error::shape(format!(
                        "maxpool2d of size {pool} cannot pool {}x{}",
                        s[1], s[2]
                    )));
                }
                Ok(vec![s[0], s[1] / pool, s[2] / pool])
            }
            LayerSpec::BatchNorm | LayerSpec::Dropout { .. } | LayerSpec::Relu => Ok(s.clone()),
            LayerSpec::Softmax => {
                if s.len() != 1 {
                    return Err(rank_err(1));
                }
                Ok(s.clone())
            }
            LayerSpec::Flatten => Ok(vec![s.iter().product()]),
            LayerSpec::Lstm { units } => {
                if s.len() != 2 {
                    return Err(rank_err(2));
                }
                Ok(vec![units])
            }
            LayerSpec::Concat => {
                if inputs.iter().any(|i| i.len() != 1) {
                    return Err(Error::shape("concat joins rank-1 inputs only"));
                }
                Ok(vec![inputs.iter().map(|i| i[0]).sum()])
            }
            LayerSpec::AttentionMultiply => {
                let (w, x) = (&inputs[0], &inputs[1]);
                if w.len() != 1 || x.len() != 1 {
                    return Err(Error::shape("attention_multiply takes rank-1 inputs"));
                }
                if x[0] % w[0] != 0 {
                    return Err(Error::param(format!(
                        "{} attention weights do not divide {} features",
                        w[0], x[0]
                    )));
                }
                Ok(x.clone())
            }
        }
    }
}

/// Values saved by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    Inputs(Vec<Tensor>),
    Pool {
        argmax: Vec<usize>,
        in_shape: Vec<usize>,
    },
    Dropout(Option<Vec<f64>>),
    BatchNorm {
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        batch_stats: Option<(Vec<f64>, Vec<f64>)>,
    },
    Output(Tensor),
    Lstm(Box<LstmCache>),
    Shape(Vec<usize>),
}

/// A layer instance: spec, resolved shapes, parameters and their gradients.
#[derive(Debug, Clone)]
pub struct Layer {
    spec: LayerSpec,
    input_shapes: Vec<Vec<usize>>,
    output_shape: Vec<usize>,
    pub(crate) params: Vec<Tensor>,
    pub(crate) grads: Vec<Tensor>,
    /// Non-trainable state (batchnorm running statistics).
    pub(crate) buffers: Vec<Tensor>,
}

fn uniform(rng: &mut SplitMix64, shape: &[usize], limit: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.uniform(-limit, limit))
}

fn init_limit(init: Init, fan_in: usize, fan_out: usize) -> f64 {
    match init {
        Init::HeUniform => (6.0 / fan_in as f64).sqrt(),
        Init::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
    }
}

impl Layer {
    pub fn new(spec: LayerSpec, input_shapes: &[Vec<usize>], rng: &mut SplitMix64) -> Result<Self> {
        let output_shape = spec.output_shape(input_shapes)?;
        let s = &input_shapes[0];
        let (params, buffers) = match spec {
            LayerSpec::Conv1d { filters, kernel } => {
                let (c, k) = (s[0], kernel);
                let lim = init_limit(Init::HeUniform, c * k, filters * k);
                (
                    vec![uniform(rng, &[filters, c, k], lim), Tensor::zeros(&[filters])],
                    vec![],
                )
            }
            LayerSpec::Conv2d { filters, kernel } => {
                let (c, [kh, kw]) = (s[0], kernel);
                let lim = init_limit(Init::HeUniform, c * kh * kw, filters * kh * kw);
                (
                    vec![
                        uniform(rng, &[filters, c, kh, kw], lim),
                        Tensor::zeros(&[filters]),
                    ],
                    vec![],
                )
            }
            LayerSpec::Dense { units, init } => {
                let lim = init_limit(init, s[0], units);
                (
                    vec![uniform(rng, &[s[0], units], lim), Tensor::zeros(&[units])],
                    vec![],
                )
            }
            LayerSpec::BatchNorm => {
                let c = s[0];
                (
                    vec![Tensor::filled(&[c], 1.0), Tensor::zeros(&[c])],
                    vec![Tensor::zeros(&[c]), Tensor::filled(&[c], 1.0)],
                )
            }
            LayerSpec::Lstm { units } => {
                let f = s[1];
                let h4 = 4 * units;
                let wi = uniform(rng, &[f, h4], init_limit(Init::GlorotUniform, f, h4));
                let wh = uniform(rng, &[units, h4], init_limit(Init::GlorotUniform, units, h4));
                let mut b = Tensor::zeros(&[h4]);
                // forget-gate bias starts at 1
                b.data_mut()[units..2 * units].fill(1.0);
                (vec![wi, wh, b], vec![])
            }
            _ => (vec![], vec![]),
        };
        let grads = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Ok(Self {
            spec,
            input_shapes: input_shapes.to_vec(),
            output_shape,
            params,
            grads,
            buffers,
        })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn input_shapes(&self) -> &[Vec<usize>] {
        &self.input_shapes
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn grads(&self) -> &[Tensor] {
        &self.grads
    }

    pub fn buffers(&self) -> &[Tensor] {
        &self.buffers
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self.spec {
            LayerSpec::Conv1d { .. } | LayerSpec::Conv2d { .. } | LayerSpec::Dense { .. } => {
                &["weight", "bias"]
            }
            LayerSpec::BatchNorm => &["gamma", "beta"],
            LayerSpec::Lstm { .. } => &["w_input", "w_hidden", "bias"],
            _ => &[],
        }
    }

    pub fn buffer_names(&self) -> &'static [&'static str] {
        match self.spec {
            LayerSpec::BatchNorm => &["running_mean", "running_var"],
            _ => &[],
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    fn check_inputs(&self, inputs: &[&Tensor]) -> Result<usize> {
        if inputs.len() != self.input_shapes.len() {
            return Err(Error::shape(format!(
                "{} expected {} inputs, got {}",
                self.spec.kind(),
                self.input_shapes.len(),
                inputs.len()
            )));
        }
        let n = inputs[0].batch();
        for (t, want) in inputs.iter().zip(&self.input_shapes) {
            if t.shape().len() != want.len() + 1 || &t.shape()[1..] != want.as_slice() || t.batch() != n {
                return Err(Error::shape(format!(
                    "{} expected per-sample shape {want:?} (batch {n}), got {:?}",
                    self.spec.kind(),
                    t.shape()
                )));
            }
        }
        Ok(n)
    }

    fn out_tensor(&self, n: usize, data: Vec<f64>) -> Tensor {
        let mut shape = vec![n];
        shape.extend_from_slice(&self.output_shape);
        Tensor::new(shape, data).expect("layer output shape")
    }

    pub fn forward(&self, inputs: &[&Tensor], mode: Mode, rng: &mut SplitMix64) -> Result<(Tensor, Cache)> {
        let n = self.check_inputs(inputs)?;
        let x = inputs[0];
        let s = &self.input_shapes[0];
        let out_len = n * self.output_shape.iter().product::<usize>();
        match self.spec {
            LayerSpec::Conv1d { filters, kernel } => {
                let (c, l) = (s[0], s[1]);
                let geo = ConvGeom::one_d(c, l, filters, kernel);
                let y = conv_forward(&geo, x.data(), self.params[0].data(), self.params[1].data(), n);
                Ok((self.out_tensor(n, y), Cache::Inputs(vec![x.clone()])))
            }
            LayerSpec::Conv2d { filters, kernel } => {
                let geo = ConvGeom::two_d(s[0], s[1], s[2], filters, kernel);
                let y = conv_forward(&geo, x.data(), self.params[0].data(), self.params[1].data(), n);
                Ok((self.out_tensor(n, y), Cache::Inputs(vec![x.clone()])))
            }
            LayerSpec::Dense { units, .. } => {
                let y = dense_forward(x.data(), self.params[0].data(), self.params[1].data(), n, s[0], units);
                Ok((self.out_tensor(n, y), Cache::Inputs(vec![x.clone()])))
            }
            LayerSpec::BatchNorm => Ok(self.batchnorm_forward(x, n, mode)),
            LayerSpec::MaxPool1d { pool } => {
                let (c, l) = (s[0], s[1]);
                let lo = l / pool;
                let mut y = Vec::with_capacity(out_len);
                let mut argmax = Vec::with_capacity(out_len);
                for base in (0..n * c).map(|r| r * l) {
                    for t in 0..lo {
                        let start = base + t * pool;
                        let mut best = start;
                        for i in start + 1..start + pool {
                            if x.data()[i] > x.data()[best] {
                                best = i;
                            }
                        }
                        y.push(x.data()[best]);
                        argmax.push(best);
                    }
                }
                Ok((
                    self.out_tensor(n, y),
                    Cache::Pool {
                        argmax,
                        in_shape: x.shape().to_vec(),
                    },
                ))
            }
            LayerSpec::MaxPool2d { pool } => {
                let (c, h, w) = (s[0], s[1], s[2]);
                let (ho, wo) = (h / pool, w / pool);
                let mut y = Vec::with_capacity(out_len);
                let mut argmax = Vec::with_capacity(out_len);
                let xd = x.data();
                for base in (0..n * c).map(|r| r * h * w) {
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let mut best = base + oy * pool * w + ox * pool;
                            for dy in 0..pool {
                                for dx in 0..pool {
                                    let i = base + (oy * pool + dy) * w + ox * pool + dx;
                                    if xd[i] > xd[best] {
                                        best = i;
                                    }
                                }
                            }
                            y.push(xd[best]);
                            argmax.push(best);
                        }
                    }
                }
                Ok((
                    self.out_tensor(n, y),
                    Cache::Pool {
                        argmax,
                        in_shape: x.shape().to_vec(),
                    },
                ))
            }
            LayerSpec::Dropout { rate } => {
                if mode == Mode::Inference || rate == 0.0 {
                    return Ok((x.clone(), Cache::Dropout(None)));
                }
                let keep = 1.0 / (1.0 - rate);
                let mask: Vec<f64> = (0..x.len())
                    .map(|_| if rng.next_f64() >= rate { keep } else { 0.0 })
                    .collect();
                let y = x.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
                Ok((self.out_tensor(n, y), Cache::Dropout(Some(mask))))
            }
            LayerSpec::Flatten => Ok((
                self.out_tensor(n, x.data().to_vec()),
                Cache::Shape(x.shape().to_vec()),
            )),
            LayerSpec::Relu => {
                let y = x.data().iter().map(|&v| v.max(0.0)).collect();
                Ok((self.out_tensor(n, y), Cache::Inputs(vec![x.clone()])))
            }
            LayerSpec::Softmax => {
                let y = softmax_rows(x.data(), s[0]);
                let out = self.out_tensor(n, y);
                Ok((out.clone(), Cache::Output(out)))
            }
            LayerSpec::Lstm { units } => {
                let (h, cache) = lstm::sequence_forward(x, &self.params, units)?;
                Ok((h, Cache::Lstm(Box::new(cache))))
            }
            LayerSpec::Concat => {
                let mut y = Vec::with_capacity(out_len);
                for i in 0..n {
                    for t in inputs {
                        y.extend_from_slice(t.row(i));
                    }
                }
                Ok((self.out_tensor(n, y), Cache::Inputs(inputs.iter().map(|t| (*t).clone()).collect())))
            }
            LayerSpec::AttentionMultiply => {
                let (wts, feats) = (inputs[0], inputs[1]);
                let (k, d) = (self.input_shapes[0][0], self.input_shapes[1][0]);
                let seg = d / k;
                let mut y = Vec::with_capacity(out_len);
                for i in 0..n {
                    let w = wts.row(i);
                    y.extend(feats.row(i).iter().enumerate().map(|(j, &v)| v * w[j / seg]));
                }
                Ok((
                    self.out_tensor(n, y),
                    Cache::Inputs(vec![wts.clone(), feats.clone()]),
                ))
            }
        }
    }

    fn batchnorm_forward(&self, x: &Tensor, n: usize, mode: Mode) -> (Tensor, Cache) {
        let s = &self.input_shapes[0];
        let c = s[0];
        let inner: usize = s[1..].iter().product();
        let m = (n * inner) as f64;
        let xd = x.data();
        let idx = |i: usize, ch: usize, j: usize| (i * c + ch) * inner + j;
        let (mean, var, batch_stats) = match mode {
            Mode::Train => {
                let mut mean = vec![0.0; c];
                let mut var = vec![0.0; c];
                for ch in 0..c {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..inner {
                            acc += xd[idx(i, ch, j)];
                        }
                    }
                    mean[ch] = acc / m;
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..inner {
                            let d = xd[idx(i, ch, j)] - mean[ch];
                            acc += d * d;
                        }
                    }
                    var[ch] = acc / m;
                }
                (mean.clone(), var.clone(), Some((mean, var)))
            }
            Mode::Inference => (
                self.buffers[0].data().to_vec(),
                self.buffers[1].data().to_vec(),
                None,
            ),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BATCHNORM_EPS).sqrt()).collect();
        let (gamma, beta) = (self.params[0].data(), self.params[1].data());
        let mut xhat = vec![0.0; xd.len()];
        let mut y = vec![0.0; xd.len()];
        for i in 0..n {
            for ch in 0..c {
                for j in 0..inner {
                    let k = idx(i, ch, j);
                    xhat[k] = (xd[k] - mean[ch]) * inv_std[ch];
                    y[k] = gamma[ch] * xhat[k] + beta[ch];
                }
            }
        }
        (
            self.out_tensor(n, y),
            Cache::BatchNorm {
                xhat,
                inv_std,
                batch_stats,
            },
        )
    }

    /// Folds train-mode batch statistics into the running estimates.
    pub(crate) fn commit(&mut self, cache: &Cache) {
        if let Cache::BatchNorm {
            batch_stats: Some((mean, var)),
            ..
        } = cache
        {
            for (r, b) in self.buffers[0].data_mut().iter_mut().zip(mean) {
                *r = BATCHNORM_MOMENTUM * *r + (1.0 - BATCHNORM_MOMENTUM) * b;
            }
            for (r, b) in self.buffers[1].data_mut().iter_mut().zip(var) {
                *r = BATCHNORM_MOMENTUM * *r + (1.0 - BATCHNORM_MOMENTUM) * b;
            }
        }
    }

    /// Overwrites parameter gradients and returns the gradient for each input.
    pub fn backward(&mut self, cache: &Cache, grad_out: &Tensor) -> Result<Vec<Tensor>> {
        let mut expect = vec![grad_out.batch()];
        expect.extend_from_slice(&self.output_shape);
        if grad_out.shape() != expect.as_slice() {
            return Err(Error::shape(format!(
                "{} upstream gradient shape {:?} does not match output {expect:?}",
                self.spec.kind(),
                grad_out.shape()
            )));
        }
        let n = grad_out.batch();
        let dy = grad_out.data();
        let s = self.input_shapes[0].clone();
        let mismatch = || Error::State(format!("{}: cache does not match layer", self.spec.kind()));
        match (&self.spec, cache) {
            (LayerSpec::Conv1d { filters, kernel }, Cache::Inputs(xs)) => {
                let geo = ConvGeom::one_d(s[0], s[1], *filters, *kernel);
                let (dx, dw, db) = conv_backward(&geo, xs[0].data(), self.params[0].data(), dy, n);
                self.grads = vec![Tensor::new(self.params[0].shape().to_vec(), dw)?, Tensor::new(vec![*filters], db)?];
                Ok(vec![Tensor::new(xs[0].shape().to_vec(), dx)?])
            }
            (LayerSpec::Conv2d { filters, kernel }, Cache::Inputs(xs)) => {
                let geo = ConvGeom::two_d(s[0], s[1], s[2], *filters, *kernel);
                let (dx, dw, db) = conv_backward(&geo, xs[0].data(), self.params[0].data(), dy, n);
                self.grads = vec![Tensor::new(self.params[0].shape().to_vec(), dw)?, Tensor::new(vec![*filters], db)?];
                Ok(vec![Tensor::new(xs[0].shape().to_vec(), dx)?])
            }
            (LayerSpec::Dense { units, .. }, Cache::Inputs(xs)) => {
                let (dx, dw, db) = dense_backward(xs[0].data(), self.params[0].data(), dy, n, s[0], *units);
                self.grads = vec![Tensor::new(vec![s[0], *units], dw)?, Tensor::new(vec![*units], db)?];
                Ok(vec![Tensor::new(xs[0].shape().to_vec(), dx)?])
            }
            (LayerSpec::BatchNorm, Cache::BatchNorm { xhat, inv_std, batch_stats }) => {
                let c = s[0];
                let inner: usize = s[1..].iter().product();
                let m = (n * inner) as f64;
                let idx = |i: usize, ch: usize, j: usize| (i * c + ch) * inner + j;
                let gamma = self.params[0].data().to_vec();
                let mut dgamma = vec![0.0; c];
                let mut dbeta = vec![0.0; c];
                let mut dx = vec![0.0; dy.len()];
                for ch in 0..c {
                    let (mut sum_dy, mut sum_dy_xhat) = (0.0, 0.0);
                    for i in 0..n {
                        for j in 0..inner {
                            let k = idx(i, ch, j);
                            sum_dy += dy[k];
                            sum_dy_xhat += dy[k] * xhat[k];
                        }
                    }
                    dgamma[ch] = sum_dy_xhat;
                    dbeta[ch] = sum_dy;
                    let g = gamma[ch] * inv_std[ch];
                    for i in 0..n {
                        for j in 0..inner {
                            let k = idx(i, ch, j);
                            dx[k] = if batch_stats.is_some() {
                                g * (dy[k] - sum_dy / m - xhat[k] * sum_dy_xhat / m)
                            } else {
                                g * dy[k]
                            };
                        }
                    }
                }
                self.grads = vec![Tensor::new(vec![c], dgamma)?, Tensor::new(vec![c], dbeta)?];
                let mut shape = vec![n];
                shape.extend_from_slice(&s);
                Ok(vec![Tensor::new(shape, dx)?])
            }
            (LayerSpec::MaxPool1d { .. } | LayerSpec::MaxPool2d { .. }, Cache::Pool { argmax, in_shape }) => {
                let mut dx = Tensor::zeros(in_shape);
                let d = dx.data_mut();
                for (g, &i) in dy.iter().zip(argmax) {
                    d[i] += g;
                }
                Ok(vec![dx])
            }
            (LayerSpec::Dropout { .. }, Cache::Dropout(mask)) => Ok(vec![match mask {
                None => grad_out.clone(),
                Some(m) => Tensor::new(
                    grad_out.shape().to_vec(),
                    dy.iter().zip(m).map(|(g, k)| g * k).collect(),
                )?,
            }]),
            (LayerSpec::Flatten, Cache::Shape(shape)) => Ok(vec![grad_out.clone().reshape(shape)?]),
            (LayerSpec::Relu, Cache::Inputs(xs)) => Ok(vec![Tensor::new(
                xs[0].shape().to_vec(),
                dy.iter()
                    .zip(xs[0].data())
                    .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                    .collect(),
            )?]),
            (LayerSpec::Softmax, Cache::Output(y)) => {
                let k = s[0];
                let mut dx = vec![0.0; dy.len()];
                for i in 0..n {
                    let yr = &y.data()[i * k..(i + 1) * k];
                    let gr = &dy[i * k..(i + 1) * k];
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..k {
                        dx[i * k + j] = yr[j] * (gr[j] - dot);
                    }
                }
                Ok(vec![Tensor::new(y.shape().to_vec(), dx)?])
            }
            (LayerSpec::Lstm { units }, Cache::Lstm(c)) => {
                let (dx, grads) = lstm::sequence_backward(c, &self.params, grad_out, *units)?;
                self.grads = grads;
                Ok(vec![dx])
            }
            (LayerSpec::Concat, Cache::Inputs(xs)) => {
                let widths: Vec<usize> = self.input_shapes.iter().map(|s| s[0]).collect();
                let total: usize = widths.iter().sum();
                let mut outs: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(w * n)).collect();
                for i in 0..n {
                    let mut off = i * total;
                    for (o, w) in outs.iter_mut().zip(&widths) {
                        o.extend_from_slice(&dy[off..off + w]);
                        off += w;
                    }
                }
                outs.into_iter()
                    .zip(xs)
                    .map(|(o, x)| Tensor::new(x.shape().to_vec(), o))
                    .collect()
            }
            (LayerSpec::AttentionMultiply, Cache::Inputs(xs)) => {
                let (k, d) = (self.input_shapes[0][0], self.input_shapes[1][0]);
                let seg = d / k;
                let (wts, feats) = (&xs[0], &xs[1]);
                let mut dw = vec![0.0; n * k];
                let mut dx = vec![0.0; n * d];
                for i in 0..n {
                    let w = wts.row(i);
                    let f = feats.row(i);
                    for j in 0..d {
                        let g = dy[i * d + j];
                        dx[i * d + j] = g * w[j / seg];
                        dw[i * k + j / seg] += g * f[j];
                    }
                }
                Ok(vec![
                    Tensor::new(wts.shape().to_vec(), dw)?,
                    Tensor::new(feats.shape().to_vec(), dx)?,
                ])
            }
            _ => Err(mismatch()),
        }
    }
}

pub(crate) fn softmax_rows(x: &[f64], k: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    for row in x.chunks(k) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = y.len();
        let mut sum = 0.0;
        for &v in row {
            let e = (v - m).exp();
            sum += e;
            y.push(e);
        }
        for v in &mut y[start..] {
            *v /= sum;
        }
    }
    y
}

/// Geometry shared by the 1-D and 2-D convolution kernels (1-D uses h = 1).
struct ConvGeom {
    c: usize,
    h: usize,
    w: usize,
    f: usize,
    kh: usize,
    kw: usize,
}

impl ConvGeom {
    fn one_d(c: usize, l: usize, f: usize, k: usize) -> Self {
        Self { c, h: 1, w: l, f, kh: 1, kw: k }
    }

    fn two_d(c: usize, h: usize, w: usize, f: usize, k: [usize; 2]) -> Self {
        Self { c, h, w, f, kh: k[0], kw: k[1] }
    }

    fn plane(&self) -> usize {
        self.h * self.w
    }

    /// Output index range `[lo, hi)` along an axis of `len` for kernel tap
    /// `tap`, plus the signed input offset.
    fn span(len: usize, k: usize, tap: usize) -> (usize, usize, isize) {
        let pad = (k - 1) / 2;
        let off = tap as isize - pad as isize;
        let lo = ((-off).max(0) as usize).min(len);
        let hi = (len as isize - off).clamp(0, len as isize) as usize;
        (lo, hi.max(lo), off)
    }

    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, usize, usize, usize)) {
        // (tap index, y lo, y hi, x lo, x hi) for the pair of axis spans;
        // taps that fall entirely in the padding are skipped
        for i in 0..self.kh {
            let (ylo, yhi, _) = Self::span(self.h, self.kh, i);
            for j in 0..self.kw {
                let (xlo, xhi, _) = Self::span(self.w, self.kw, j);
                if ylo < yhi && xlo < xhi {
                    f(i * self.kw + j, ylo, yhi, xlo, xhi);
                }
            }
        }
    }

    fn tap_offsets(&self, tap: usize) -> (isize, isize) {
        let (i, j) = (tap / self.kw, tap % self.kw);
        (Self::span(self.h, self.kh, i).2, Self::span(self.w, self.kw, j).2)
    }
}

fn conv_forward(g: &ConvGeom, x: &[f64], w: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let (plane, taps) = (g.plane(), g.kh * g.kw);
    let mut y = vec![0.0; n * g.f * plane];
    y.par_chunks_mut(g.f * plane).enumerate().for_each(|(s, ys)| {
        let xs = &x[s * g.c * plane..(s + 1) * g.c * plane];
        for fo in 0..g.f {
            let out = &mut ys[fo * plane..(fo + 1) * plane];
            out.fill(b[fo]);
            for ci in 0..g.c {
                let xin = &xs[ci * plane..(ci + 1) * plane];
                let wk = &w[(fo * g.c + ci) * taps..(fo * g.c + ci + 1) * taps];
                g.for_each_tap(|tap, ylo, yhi, xlo, xhi| {
                    let wv = wk[tap];
                    let (oy, ox) = g.tap_offsets(tap);
                    for yy in ylo..yhi {
                        let src = ((yy as isize + oy) as usize) * g.w;
                        let o = &mut out[yy * g.w + xlo..yy * g.w + xhi];
                        let i = &xin[(src as isize + xlo as isize + ox) as usize..];
                        for (a, v) in o.iter_mut().zip(i) {
                            *a += wv * v;
                        }
                    }
                });
            }
        }
    });
    y
}

/// Returns (dx, dw, db).
fn conv_backward(g: &ConvGeom, x: &[f64], w: &[f64], dy: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (plane, taps) = (g.plane(), g.kh * g.kw);
    let mut dx = vec![0.0; n * g.c * plane];
    dx.par_chunks_mut(g.c * plane).enumerate().for_each(|(s, dxs)| {
        let dys = &dy[s * g.f * plane..(s + 1) * g.f * plane];
        for fo in 0..g.f {
            let gout = &dys[fo * plane..(fo + 1) * plane];
            for ci in 0..g.c {
                let din = &mut dxs[ci * plane..(ci + 1) * plane];
                let wk = &w[(fo * g.c + ci) * taps..(fo * g.c + ci + 1) * taps];
                g.for_each_tap(|tap, ylo, yhi, xlo, xhi| {
                    let wv = wk[tap];
                    let (oy, ox) = g.tap_offsets(tap);
                    for yy in ylo..yhi {
                        let dst = ((yy as isize + oy) as usize) * g.w;
                        let gr = &gout[yy * g.w + xlo..yy * g.w + xhi];
                        let d = &mut din[(dst as isize + xlo as isize + ox) as usize..];
                        for (a, v) in d.iter_mut().zip(gr) {
                            *a += wv * v;
                        }
                    }
                });
            }
        }
    });
    let mut dw = vec![0.0; g.f * g.c * taps];
    dw.par_chunks_mut(g.c * taps).enumerate().for_each(|(fo, dwf)| {
        for s in 0..n {
            let gout = &dy[(s * g.f + fo) * plane..(s * g.f + fo + 1) * plane];
            for ci in 0..g.c {
                let xin = &x[(s * g.c + ci) * plane..(s * g.c + ci + 1) * plane];
                g.for_each_tap(|tap, ylo, yhi, xlo, xhi| {
                    let (oy, ox) = g.tap_offsets(tap);
                    let mut acc = 0.0;
                    for yy in ylo..yhi {
                        let src = ((yy as isize + oy) as usize) * g.w;
                        let gr = &gout[yy * g.w + xlo..yy * g.w + xhi];
                        let i = &x_slice(xin, src, xlo, ox);
                        acc += gr.iter().zip(i.iter()).map(|(a, b)| a * b).sum::<f64>();
                    }
                    dwf[ci * taps + tap] += acc;
                });
            }
        }
    });
    let mut db = vec![0.0; g.f];
    for s in 0..n {
        for (fo, d) in db.iter_mut().enumerate() {
            *d += dy[(s * g.f + fo) * plane..(s * g.f + fo + 1) * plane].iter().sum::<f64>();
        }
    }
    (dx, dw, db)
}

fn x_slice(xin: &[f64], row: usize, xlo: usize, ox: isize) -> &[f64] {
    &xin[(row as isize + xlo as isize + ox) as usize..]
}

fn dense_forward(x: &[f64], w: &[f64], b: &[f64], n: usize, fin: usize, units: usize) -> Vec<f64> {
    let mut y = vec![0.0; n * units];
    y.par_chunks_mut(units).enumerate().for_each(|(i, yr)| {
        yr.copy_from_slice(b);
        for (k, &xv) in x[i * fin..(i + 1) * fin].iter().enumerate() {
            if xv != 0.0 {
                for (a, wv) in yr.iter_mut().zip(&w[k * units..(k + 1) * units]) {
                    *a += xv * wv;
                }
            }
        }
    });
    y
}

fn dense_backward(x: &[f64], w: &[f64], dy: &[f64], n: usize, fin: usize, units: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut dw = vec![0.0; fin * units];
    dw.par_chunks_mut(units).enumerate().for_each(|(k, dwr)| {
        for i in 0..n {
            let xv = x[i * fin + k];
            for (a, g) in dwr.iter_mut().zip(&dy[i * units..(i + 1) * units]) {
                *a += xv * g;
            }
        }
    });
    let mut db = vec![0.0; units];
    for row in dy.chunks(units) {
        for (a, g) in db.iter_mut().zip(row) {
            *a += g;
        }
    }
    let mut dx = vec![0.0; n * fin];
    dx.par_chunks_mut(fin).enumerate().for_each(|(i, dxr)| {
        let g = &dy[i * units..(i + 1) * units];
        for (k, d) in dxr.iter_mut().enumerate() {
            *d = w[k * units..(k + 1) * units].iter().zip(g).map(|(a, b)| a * b).sum();
        }
    });
    (dx, dw, db)
}
