mod common;

use common::*;
use hivesense::nn::{one_hot, Mode, LossSpec, Outputs, Tensor, AUDIO_HEAD, IMAGE_HEAD};
use hivesense::SplitMix64;

const TOL: f64 = 1e-4;

fn check_all(cases: Vec<GradCase>) {
    assert!(cases.len() >= 3);
    for case in cases {
        let label = case.label.clone();
        let rep = case.run();
        assert!(rep.checked > 0, "{label}: nothing checked");
        assert!(rep.max_rel < TOL, "{label}: {} ({})", rep.max_rel, rep.worst);
    }
}

macro_rules! kind_tests {
    ($($name:ident => $kind:expr),* $(,)?) => {
        $(#[test] fn $name() { check_all(grad_cases($kind)); })*
    };
}

kind_tests! {
    conv1d => "conv1d",
    conv2d => "conv2d",
    dense => "dense",
    batchnorm => "batchnorm",
    maxpool1d => "maxpool1d",
    maxpool2d => "maxpool2d",
    lstm_sequence => "lstm",
    attention_multiply => "attention_multiply",
    relu => "relu",
    softmax => "softmax",
    flatten => "flatten",
    concat => "concat",
    dropout_with_fixed_mask => "dropout",
}

#[test]
fn cross_entropy_through_softmax() {
    check_all(cross_entropy_cases());
}

#[test]
fn weighted_multimodal_objective() {
    check_all(multimodal_cases());
}

#[test]
fn head_gradients_scale_linearly_with_lambda() {
    let mut net = multimodal_net(3, 3, 4, 50);
    let mut rng = SplitMix64::new(51);
    let image = random_tensor(&mut rng, &[4, 3]);
    let audio = random_tensor(&mut rng, &[4, 3]);
    let target = one_hot(&[0, 1, 2, 3], 4);
    net.set_mode(Mode::Train);
    let out: Outputs = net.forward(&[("image", &image), ("audio", &audio)]).unwrap();
    let grads = |li: f64, ls: f64| -> (Tensor, Tensor) {
        let (_, ups) = LossSpec::multimodal(li, ls).unwrap().objective(&out, &target).unwrap();
        let get = |n: &str| ups.iter().find(|(k, _)| k == n).unwrap().1.clone();
        (get(IMAGE_HEAD), get(AUDIO_HEAD))
    };
    let (gi, ga) = grads(0.3, 0.2);
    let (gi2, ga2) = grads(0.6, 0.4);
    for (a, b) in gi.data().iter().zip(gi2.data()).chain(ga.data().iter().zip(ga2.data())) {
        assert!((2.0 * a - b).abs() < 1e-12);
    }
}
