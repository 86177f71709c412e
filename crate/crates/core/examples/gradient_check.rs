//! Central finite differences against backpropagation for a small
//! conv → batchnorm → dense → softmax network under cross-entropy.

use hivesense::nn::{one_hot, GraphBuilder, Init, LayerSpec, LossSpec, Mode, Tensor, PRIMARY_OUTPUT};
use hivesense::SplitMix64;

fn main() -> hivesense::Result<()> {
    let mut b = GraphBuilder::new().input("x", &[2, 12]);
    b.push("", LayerSpec::Conv1d { filters: 3, kernel: 3 });
    b.push("", LayerSpec::BatchNorm);
    b.push("", LayerSpec::Relu);
    b.push("", LayerSpec::MaxPool1d { pool: 2 });
    b.push("", LayerSpec::Flatten);
    b.push("", LayerSpec::Dense { units: 4, init: Init::GlorotUniform });
    let out = b.push("", LayerSpec::Softmax);
    b.output(PRIMARY_OUTPUT, &out);
    let mut net = b.build(1)?;
    net.set_mode(Mode::Train);

    let mut rng = SplitMix64::new(2);
    let x = Tensor::from_fn(&[5, 2, 12], |_| rng.normal());
    let target = one_hot(&[0, 1, 2, 3, 1], 4);
    let loss = LossSpec::CrossEntropy;
    let value = |net: &mut hivesense::nn::NetworkGraph| -> hivesense::Result<f64> {
        let o = net.forward(&[("x", &x)])?;
        Ok(loss.objective(&o, &target)?.0)
    };

    let o = net.forward(&[("x", &x)])?;
    let (_, upstream) = loss.objective(&o, &target)?;
    let up: Vec<(&str, &Tensor)> = upstream.iter().map(|(n, t)| (n.as_str(), t)).collect();
    net.backward(&up)?;
    let grads: Vec<(String, Tensor)> = net.named_grads().into_iter().map(|(n, g)| (n, g.clone())).collect();

    let eps = 1e-5;
    let mut worst = 0.0f64;
    for (name, g) in grads {
        let n = g.data().len();
        for i in 0..n {
            let orig = net.state_record_mut(&name).unwrap().data()[i];
            net.state_record_mut(&name).unwrap().data_mut()[i] = orig + eps;
            let up = value(&mut net)?;
            net.state_record_mut(&name).unwrap().data_mut()[i] = orig - eps;
            let down = value(&mut net)?;
            net.state_record_mut(&name).unwrap().data_mut()[i] = orig;
            let fd = (up - down) / (2.0 * eps);
            let rel = (fd - g.data()[i]).abs() / fd.abs().max(g.data()[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        println!("{name:<24} {n:>4} entries checked");
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}
