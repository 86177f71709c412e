//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use hivesense::evalx::{iou, DetectionRecord, GroundTruth};
use hivesense::ingest::BoxCorners;
use hivesense::nn::{NetworkGraph, Outputs, Tensor};
use hivesense::SplitMix64;

// ---------------------------------------------------------------- spectra

/// `|X_k|²` of one windowed frame by the O(N²) definition. Twiddles are
/// indexed by `(k·n) mod N` so large products stay exact.
pub fn naive_dft(frame: &[f64]) -> Vec<(f64, f64)> {
    let n = frame.len();
    let cos: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).sin()).collect();
    (0..n / 2 + 1)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, x) in frame.iter().enumerate() {
                let j = (k * t) % n;
                re += x * cos[j];
                im -= x * sin[j];
            }
            (re, im)
        })
        .collect()
}

pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Bin-major `bins × frames` power grid from the naive DFT.
pub fn naive_power(x: &[f64], n_fft: usize, hop: usize) -> (Vec<f64>, usize) {
    let w = hann(n_fft);
    let frames = 1 + (x.len() - n_fft) / hop;
    let bins = n_fft / 2 + 1;
    let mut out = vec![0.0; bins * frames];
    for t in 0..frames {
        let frame: Vec<f64> = (0..n_fft).map(|i| x[t * hop + i] * w[i]).collect();
        for (k, (re, im)) in naive_dft(&frame).into_iter().enumerate() {
            out[k * frames + t] = re * re + im * im;
        }
    }
    (out, frames)
}

/// `c_i = Σ_n S_n cos(i (n − ½) π / N)`, n and i one-based.
pub fn cosine_sum(s: &[f64], n_coeffs: usize) -> Vec<f64> {
    let nf = s.len() as f64;
    (1..=n_coeffs)
        .map(|i| {
            let mut acc = 0.0;
            for n in 1..=s.len() {
                acc += s[n - 1] * (i as f64 * (n as f64 - 0.5) * PI / nf).cos();
            }
            acc
        })
        .collect()
}

pub fn sine(freq: f64, rate: u32, n: usize) -> Vec<f64> {
    (0..n).map(|i| (2.0 * PI * freq * i as f64 / rate as f64).sin()).collect()
}

pub fn noise(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

// ---------------------------------------------------------------- gradients

pub const FD_EPS: f64 = 1e-5;
/// Denominator floor for relative errors of near-zero gradients.
pub const REL_FLOOR: f64 = 1e-6;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

pub type Objective<'a> = dyn Fn(&Outputs) -> (f64, Vec<(String, Tensor)>) + 'a;

/// `Σ w ⊙ out` over every output, with fixed random weights.
pub fn linear_objective(net: &NetworkGraph, batch: usize, seed: u64) -> impl Fn(&Outputs) -> (f64, Vec<(String, Tensor)>) {
    let mut rng = SplitMix64::new(seed);
    let weights: Vec<(String, Tensor)> = net
        .output_names()
        .into_iter()
        .map(|n| {
            let mut shape = vec![batch];
            shape.extend_from_slice(net.output_shape(n).unwrap());
            (n.to_string(), Tensor::from_fn(&shape, |_| rng.uniform(-1.0, 1.0)))
        })
        .collect();
    move |out: &Outputs| {
        let mut v = 0.0;
        for (n, w) in &weights {
            let o = out.get(n).unwrap();
            v += o.data().iter().zip(w.data()).map(|(a, b)| a * b).sum::<f64>();
        }
        (v, weights.clone())
    }
}

fn value(net: &mut NetworkGraph, inputs: &[(String, Tensor)], obj: &Objective, seed: u64) -> f64 {
    net.reseed(seed);
    let refs: Vec<(&str, &Tensor)> = inputs.iter().map(|(n, t)| (n.as_str(), t)).collect();
    obj(&net.forward(&refs).unwrap()).0
}

/// Evenly spaced element indices, at most `cap` of them.
fn probe(len: usize, cap: usize) -> Vec<usize> {
    if len <= cap {
        (0..len).collect()
    } else {
        (0..cap).map(|i| i * len / cap).collect()
    }
}

#[derive(Debug, Default)]
pub struct GradReport {
    pub max_rel: f64,
    pub worst: String,
    pub checked: usize,
}

/// Central differences on every parameter and input element (capped per
/// tensor) against the analytic gradients of `obj`.
pub fn gradient_check(net: &mut NetworkGraph, inputs: &[(String, Tensor)], obj: &Objective, cap: usize) -> GradReport {
    let seed = 99;
    net.set_mode(hivesense::nn::Mode::Train);
    net.reseed(seed);
    let refs: Vec<(&str, &Tensor)> = inputs.iter().map(|(n, t)| (n.as_str(), t)).collect();
    let out = net.forward(&refs).unwrap();
    let (_, ups) = obj(&out);
    let up_refs: Vec<(&str, &Tensor)> = ups.iter().map(|(n, t)| (n.as_str(), t)).collect();
    let input_grads = net.backward(&up_refs).unwrap();
    let param_grads: Vec<(String, Tensor)> = net.named_grads().into_iter().map(|(n, g)| (n, g.clone())).collect();

    let mut rep = GradReport::default();
    let note = |rep: &mut GradReport, what: String, a: f64, n: f64| {
        let e = rel_err(a, n);
        rep.checked += 1;
        if e > rep.max_rel {
            rep.max_rel = e;
            rep.worst = format!("{what}: analytic {a:e} numeric {n:e}");
        }
    };
    for (name, g) in &param_grads {
        for i in probe(g.len(), cap) {
            let orig = net.state_record_mut(name).unwrap().data()[i];
            net.state_record_mut(name).unwrap().data_mut()[i] = orig + FD_EPS;
            let up = value(net, inputs, obj, seed);
            net.state_record_mut(name).unwrap().data_mut()[i] = orig - FD_EPS;
            let down = value(net, inputs, obj, seed);
            net.state_record_mut(name).unwrap().data_mut()[i] = orig;
            note(&mut rep, format!("{name}[{i}]"), g.data()[i], (up - down) / (2.0 * FD_EPS));
        }
    }
    for (k, (name, g)) in input_grads.iter().enumerate() {
        for i in probe(g.len(), cap) {
            let mut moved = inputs.to_vec();
            let orig = moved[k].1.data()[i];
            moved[k].1.data_mut()[i] = orig + FD_EPS;
            let up = value(net, &moved, obj, seed);
            moved[k].1.data_mut()[i] = orig - FD_EPS;
            let down = value(net, &moved, obj, seed);
            note(&mut rep, format!("input {name}[{i}]"), g.data()[i], (up - down) / (2.0 * FD_EPS));
        }
    }
    rep
}

pub fn random_tensor(rng: &mut SplitMix64, shape: &[usize]) -> Tensor {
    Tensor::from_fn(shape, |_| rng.uniform(-1.0, 1.0))
}

// ---------------------------------------------------------------- detection

/// IoU of integer-cornered boxes by counting covered unit cells.
pub fn pixel_iou(a: [i64; 4], b: [i64; 4]) -> f64 {
    let lo_x = a[0].min(b[0]);
    let hi_x = a[2].max(b[2]);
    let lo_y = a[1].min(b[1]);
    let hi_y = a[3].max(b[3]);
    let inside = |r: [i64; 4], x: i64, y: i64| x >= r[0] && x < r[2] && y >= r[1] && y < r[3];
    let (mut inter, mut union) = (0u64, 0u64);
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += (ia && ib) as u64;
            union += (ia || ib) as u64;
        }
    }
    inter as f64 / union as f64
}

/// Greedy matching of the top-`r` predictions recomputed from scratch for
/// each cutoff, then `Σ ΔR · max_{j ≥ i} P_j`.
pub fn brute_force_ap(preds: &[DetectionRecord], truths: &[GroundTruth], thr: f64) -> f64 {
    if truths.is_empty() || preds.is_empty() {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.partial_cmp(&preds[a].score).unwrap().then(a.cmp(&b)));
    let mut pr = Vec::new();
    for r in 1..=order.len() {
        let mut used = vec![false; truths.len()];
        let mut tp = 0usize;
        for &p in &order[..r] {
            let mut best: Option<(usize, f64)> = None;
            for (t, g) in truths.iter().enumerate() {
                if used[t] || g.image_id != preds[p].image_id {
                    continue;
                }
                let v = iou(&preds[p].bbox, &g.bbox).unwrap();
                if v >= thr && best.map_or(true, |(_, bv)| v > bv) {
                    best = Some((t, v));
                }
            }
            if let Some((t, _)) = best {
                used[t] = true;
                tp += 1;
            }
        }
        pr.push((tp as f64 / r as f64, tp as f64 / truths.len() as f64));
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for i in 0..pr.len() {
        let best_p = pr[i..].iter().map(|x| x.0).fold(0.0, f64::max);
        ap += (pr[i].1 - prev_recall) * best_p;
        prev_recall = pr[i].1;
    }
    ap
}

pub fn corners(x1: f64, y1: f64, x2: f64, y2: f64) -> BoxCorners {
    BoxCorners::new(x1, y1, x2, y2)
}

// ---------------------------------------------------------------- gradient cases

use hivesense::nn::{one_hot, GraphBuilder, Init, LayerSpec, LossSpec, AUDIO_HEAD, IMAGE_HEAD, PRIMARY_OUTPUT};

pub enum Loss {
    Linear,
    Spec(LossSpec),
}

pub struct GradCase {
    pub label: String,
    pub net: NetworkGraph,
    pub inputs: Vec<(String, Tensor)>,
    pub loss: Loss,
    pub batch: usize,
}

impl GradCase {
    pub fn run(mut self) -> GradReport {
        let batch = self.batch;
        match self.loss {
            Loss::Linear => {
                let obj = linear_objective(&self.net, batch, 17);
                gradient_check(&mut self.net, &self.inputs, &obj, 60)
            }
            Loss::Spec(spec) => {
                let classes = self.net.output_shape(PRIMARY_OUTPUT).unwrap()[0];
                let labels: Vec<usize> = (0..batch).map(|i| (i * 7 + 1) % classes).collect();
                let target = one_hot(&labels, classes);
                let obj = move |o: &Outputs| spec.objective(o, &target).unwrap();
                gradient_check(&mut self.net, &self.inputs, &obj, 60)
            }
        }
    }
}

fn chain(label: String, shape: &[usize], specs: Vec<LayerSpec>, batch: usize, seed: u64) -> GradCase {
    let mut b = GraphBuilder::new().input("x", shape);
    for s in specs {
        b.push("", s);
    }
    let last = b.last().to_string();
    b.output("out", &last);
    let net = b.build(seed).unwrap();
    let mut full = vec![batch];
    full.extend_from_slice(shape);
    let mut rng = SplitMix64::new(seed ^ 0x5eed);
    GradCase {
        label,
        net,
        inputs: vec![("x".into(), random_tensor(&mut rng, &full))],
        loss: Loss::Linear,
        batch,
    }
}

fn dense(units: usize) -> LayerSpec {
    LayerSpec::Dense { units, init: Init::GlorotUniform }
}

/// Layer kinds covered by the finite-difference suite.
pub const GRAD_KINDS: [&str; 13] = [
    "conv1d",
    "conv2d",
    "dense",
    "batchnorm",
    "maxpool1d",
    "maxpool2d",
    "lstm",
    "attention_multiply",
    "relu",
    "softmax",
    "flatten",
    "concat",
    "dropout",
];

/// At least three shapes per kind.
pub fn grad_cases(kind: &str) -> Vec<GradCase> {
    let c = |shape: &[usize], specs: Vec<LayerSpec>, batch: usize, seed: u64| {
        chain(format!("{kind} {shape:?}"), shape, specs, batch, seed)
    };
    match kind {
        "conv1d" => vec![
            c(&[2, 7], vec![LayerSpec::Conv1d { filters: 3, kernel: 3 }], 2, 1),
            c(&[1, 9], vec![LayerSpec::Conv1d { filters: 2, kernel: 8 }], 3, 2),
            c(&[3, 5], vec![LayerSpec::Conv1d { filters: 4, kernel: 2 }], 2, 3),
            // shorter than the kernel
            c(&[2, 3], vec![LayerSpec::Conv1d { filters: 2, kernel: 8 }], 2, 31),
        ],
        "conv2d" => vec![
            c(&[2, 5, 5], vec![LayerSpec::Conv2d { filters: 3, kernel: [3, 3] }], 2, 4),
            c(&[1, 6, 4], vec![LayerSpec::Conv2d { filters: 2, kernel: [2, 3] }], 2, 5),
            c(&[3, 3, 7], vec![LayerSpec::Conv2d { filters: 2, kernel: [1, 4] }], 3, 6),
            c(&[1, 2, 1], vec![LayerSpec::Conv2d { filters: 2, kernel: [5, 5] }], 2, 32),
        ],
        "dense" => vec![
            c(&[5], vec![dense(3)], 3, 7),
            c(&[1], vec![dense(4)], 2, 8),
            c(&[8], vec![LayerSpec::Dense { units: 2, init: Init::HeUniform }], 4, 9),
        ],
        "batchnorm" => vec![
            c(&[3, 4], vec![LayerSpec::BatchNorm], 4, 10),
            c(&[5], vec![LayerSpec::BatchNorm], 6, 11),
            c(&[2, 3, 3], vec![LayerSpec::BatchNorm], 3, 12),
        ],
        "maxpool1d" => vec![
            c(&[2, 8], vec![LayerSpec::MaxPool1d { pool: 2 }], 2, 13),
            c(&[1, 7], vec![LayerSpec::MaxPool1d { pool: 3 }], 3, 14),
            c(&[3, 5], vec![LayerSpec::MaxPool1d { pool: 2 }], 2, 15),
        ],
        "maxpool2d" => vec![
            c(&[2, 4, 4], vec![LayerSpec::MaxPool2d { pool: 2 }], 2, 16),
            c(&[1, 5, 7], vec![LayerSpec::MaxPool2d { pool: 2 }], 2, 17),
            c(&[3, 6, 6], vec![LayerSpec::MaxPool2d { pool: 3 }], 2, 18),
        ],
        "lstm" => vec![
            c(&[3, 2], vec![LayerSpec::Lstm { units: 4 }], 2, 19),
            c(&[5, 3], vec![LayerSpec::Lstm { units: 2 }], 2, 20),
            c(&[1, 4], vec![LayerSpec::Lstm { units: 3 }], 3, 21),
        ],
        "attention_multiply" => [(2usize, 6usize, 22u64), (4, 4, 23), (1, 3, 24), (3, 12, 25)]
            .into_iter()
            .map(|(k, n, seed)| attention_case(k, n, seed))
            .collect(),
        "relu" => vec![
            c(&[6], vec![LayerSpec::Relu], 3, 26),
            c(&[2, 5], vec![LayerSpec::Relu], 2, 27),
            c(&[2, 2, 3], vec![LayerSpec::Relu], 2, 28),
        ],
        "softmax" => vec![
            c(&[4], vec![LayerSpec::Softmax], 3, 29),
            c(&[2], vec![LayerSpec::Softmax], 2, 30),
            c(&[7], vec![LayerSpec::Softmax], 2, 31),
        ],
        "flatten" => vec![
            c(&[2, 3], vec![LayerSpec::Flatten, dense(2)], 2, 32),
            c(&[2, 2, 2], vec![LayerSpec::Flatten, dense(3)], 2, 33),
            c(&[5], vec![LayerSpec::Flatten, dense(2)], 3, 34),
        ],
        "concat" => [(3usize, 2usize, 35u64), (1, 4, 36), (5, 5, 37)]
            .into_iter()
            .map(|(a, b, seed)| concat_case(a, b, seed))
            .collect(),
        "dropout" => vec![
            c(&[8], vec![LayerSpec::Dropout { rate: 0.25 }], 3, 38),
            c(&[2, 6], vec![LayerSpec::Dropout { rate: 0.5 }], 2, 39),
            c(&[2, 3, 3], vec![LayerSpec::Dropout { rate: 0.1 }], 2, 40),
        ],
        other => panic!("no gradient cases for {other}"),
    }
}

fn two_inputs(label: String, net: NetworkGraph, a: (&str, Vec<usize>), b: (&str, Vec<usize>), seed: u64) -> GradCase {
    let batch = 2;
    let mut rng = SplitMix64::new(seed);
    let mk = |rng: &mut SplitMix64, shape: &[usize]| {
        let mut full = vec![batch];
        full.extend_from_slice(shape);
        random_tensor(rng, &full)
    };
    let ta = mk(&mut rng, &a.1);
    let tb = mk(&mut rng, &b.1);
    GradCase {
        label,
        net,
        inputs: vec![(a.0.into(), ta), (b.0.into(), tb)],
        loss: Loss::Linear,
        batch,
    }
}

fn attention_case(k: usize, n: usize, seed: u64) -> GradCase {
    let mut b = GraphBuilder::new().input("w", &[k]).input("x", &[n]);
    b.add("att", LayerSpec::AttentionMultiply, &["w", "x"]);
    b.output("out", "att");
    let net = b.build(seed).unwrap();
    two_inputs(format!("attention_multiply k={k} n={n}"), net, ("w", vec![k]), ("x", vec![n]), seed)
}

fn concat_case(a: usize, c: usize, seed: u64) -> GradCase {
    let mut b = GraphBuilder::new().input("a", &[a]).input("b", &[c]);
    b.add("cat", LayerSpec::Concat, &["a", "b"]);
    b.push("", dense(3));
    let last = b.last().to_string();
    b.output("out", &last);
    let net = b.build(seed).unwrap();
    two_inputs(format!("concat {a}+{c}"), net, ("a", vec![a]), ("b", vec![c]), seed)
}

/// Softmax classifier trained by plain cross-entropy.
pub fn cross_entropy_cases() -> Vec<GradCase> {
    [(5usize, 3usize, 3usize, 41u64), (2, 4, 4, 42), (6, 2, 5, 43)]
        .into_iter()
        .map(|(d, classes, batch, seed)| {
            let mut case = chain(format!("cross_entropy d={d} c={classes}"), &[d], vec![dense(classes), LayerSpec::Softmax], batch, seed);
            let mut b = GraphBuilder::new().input("x", &[d]);
            b.push("", dense(classes));
            let s = b.push("", LayerSpec::Softmax);
            b.output(PRIMARY_OUTPUT, &s);
            case.net = b.build(seed).unwrap();
            case.loss = Loss::Spec(LossSpec::CrossEntropy);
            case
        })
        .collect()
}

/// Fused head plus image and audio heads, each a dense softmax.
pub fn multimodal_net(d_img: usize, d_aud: usize, classes: usize, seed: u64) -> NetworkGraph {
    let mut b = GraphBuilder::new().input("image", &[d_img]).input("audio", &[d_aud]);
    b.add("img_dense", dense(classes), &["image"]);
    b.add("img_soft", LayerSpec::Softmax, &["img_dense"]);
    b.add("aud_dense", dense(classes), &["audio"]);
    b.add("aud_soft", LayerSpec::Softmax, &["aud_dense"]);
    b.add("cat", LayerSpec::Concat, &["image", "audio"]);
    b.add("fused_dense", dense(classes), &["cat"]);
    b.add("fused_soft", LayerSpec::Softmax, &["fused_dense"]);
    b.output(PRIMARY_OUTPUT, "fused_soft");
    b.output(IMAGE_HEAD, "img_soft");
    b.output(AUDIO_HEAD, "aud_soft");
    b.build(seed).unwrap()
}

pub fn multimodal_cases() -> Vec<GradCase> {
    [(3usize, 2usize, 4usize, 0.5, 0.5, 44u64), (2, 5, 2, 0.3, 0.9, 45), (4, 4, 3, 1.0, 0.0, 46)]
        .into_iter()
        .map(|(di, da, classes, li, ls, seed)| {
            let net = multimodal_net(di, da, classes, seed);
            let mut case = two_inputs(format!("multimodal λ=({li},{ls})"), net, ("image", vec![di]), ("audio", vec![da]), seed);
            case.loss = Loss::Spec(LossSpec::multimodal(li, ls).unwrap());
            case
        })
        .collect()
}

// ---------------------------------------------------------------- fusion

use hivesense::evalx::{predict_labels, FitConfig};
use hivesense::models::{RecipeConfig, RecipeKind, AUDIO_INPUT, IMAGE_INPUT, INPUT};
use hivesense::nn::{Dataset, OptimizerKind};

#[derive(Debug, Clone, Copy)]
pub struct FusionScores {
    pub amnn: f64,
    pub image_only: f64,
    pub audio_only: f64,
}

pub const FUSION_SIDE: usize = 32;

fn only(data: &Dataset, name: &str) -> Dataset {
    Dataset::new(vec![(INPUT.into(), data.input(name).unwrap().clone())], data.labels().to_vec(), 4).unwrap()
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

pub fn fusion_fit(seed: u64, epochs: usize) -> FitConfig {
    let mut fit = FitConfig::default();
    fit.learning_rate = 3e-3;
    fit.optimizer = OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 };
    fit.train.epochs = epochs;
    fit.train.batch_size = 16;
    fit.train.patience = epochs;
    fit.train.seed = seed;
    fit.train.stop_at_train_accuracy = Some(1.0);
    fit
}

/// Test accuracy of the fused network and of each single-modality network
/// on the complementary-signal task for one seed. The visual network is
/// narrowed further than the others since its unpooled 1024-filter stage
/// dominates runtime and capacity is not what limits it here.
pub fn fusion_trial(seed: u64, n_train: usize, n_test: usize, epochs: usize) -> FusionScores {
    let train = hivesense::synthetic::complementary_dataset(n_train, FUSION_SIDE, FUSION_SIDE, 0.3, seed).unwrap();
    let test = hivesense::synthetic::complementary_dataset(n_test, FUSION_SIDE, FUSION_SIDE, 0.3, seed ^ 0xdead_beef).unwrap();
    let fit = fusion_fit(seed, epochs);
    let run = |kind: RecipeKind, tr: &Dataset, te: &Dataset| {
        let mut cfg = RecipeConfig::new(kind);
        cfg.image_size = FUSION_SIDE;
        cfg.spectrogram_size = FUSION_SIDE;
        cfg.width_divisor = if kind == RecipeKind::VisualCnn { 32 } else { 2 };
        cfg.seed = seed;
        let mut model = cfg.build().unwrap();
        fit.fit(&mut model, tr, None).unwrap();
        accuracy(&predict_labels(&model, te, 64).unwrap(), te.labels())
    };
    FusionScores {
        amnn: run(RecipeKind::Amnn, &train, &test),
        image_only: run(RecipeKind::VisualCnn, &only(&train, IMAGE_INPUT), &only(&test, IMAGE_INPUT)),
        audio_only: run(RecipeKind::AudioCnn2d, &only(&train, AUDIO_INPUT), &only(&test, AUDIO_INPUT)),
    }
}

// ---------------------------------------------------------------- fixture smoke

use hivesense::dsp::FeatureExtractor;
use hivesense::ingest::DatasetManifest;
use hivesense::nn::write_model;
use hivesense::pipeline::load_dataset;

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("tiny")
}

/// Recipe settings sized for the 16-pixel bundled fixture.
pub fn fixture_recipe(kind: RecipeKind) -> RecipeConfig {
    let mut cfg = RecipeConfig::new(kind);
    cfg.image_size = 16;
    cfg.spectrogram_size = 16;
    cfg.width_divisor = match kind {
        RecipeKind::VisualCnn => 8,
        RecipeKind::AudioDetector1d => 1,
        _ => 2,
    };
    cfg.seed = 5;
    cfg
}

#[derive(Debug)]
pub struct SmokeRun {
    pub epochs: usize,
    pub train_accuracy: f64,
    pub model_bytes: Vec<u8>,
}

/// Trains `kind` on every sample of a bundled fixture manifest until it
/// fits the training set or 200 epochs pass.
pub fn smoke_train(kind: RecipeKind, manifest: &str) -> SmokeRun {
    let m = DatasetManifest::load(&fixture_dir().join(manifest)).unwrap();
    let cfg = fixture_recipe(kind);
    let data = load_dataset(&m, &cfg, &FeatureExtractor::default()).unwrap();
    let mut model = cfg.build().unwrap();
    let mut fit = fusion_fit(11, 200);
    fit.learning_rate = 1e-3;
    fit.train.batch_size = 8;
    let h = fit.fit(&mut model, &data.dataset, None).unwrap();
    let mut model_bytes = Vec::new();
    write_model(&model.graph, &mut model_bytes).unwrap();
    let last = h.epochs.last().unwrap();
    SmokeRun {
        epochs: last.epoch,
        train_accuracy: last.train_accuracy,
        model_bytes,
    }
}
