//! Attention fusion on a task where half the classes are visible only in
//! the image and half only in the audio. Prints test accuracy and the mean
//! attention weight on each modality's features.

use hivesense::evalx::{predict_labels, FitConfig};
use hivesense::models::{RecipeConfig, RecipeKind, ATTENTION_OUTPUT, AUDIO_INPUT, IMAGE_INPUT};
use hivesense::synthetic::complementary_dataset;

fn main() -> hivesense::Result<()> {
    let side = 32;
    let train = complementary_dataset(128, side, side, 0.3, 1)?;
    let test = complementary_dataset(64, side, side, 0.3, 2)?;
    let recipe = RecipeConfig {
        image_size: side,
        spectrogram_size: side,
        width_divisor: 2,
        seed: 1,
        ..RecipeConfig::new(RecipeKind::Amnn)
    };
    let mut model = recipe.build()?;
    let mut fit = FitConfig::default();
    fit.learning_rate = 3e-3;
    fit.train.epochs = 30;
    fit.train.batch_size = 16;
    fit.train.patience = 30;
    fit.train.stop_at_train_accuracy = Some(1.0);
    let h = fit.fit(&mut model, &train, None)?;
    println!("trained {} epochs", h.epochs.len());

    let pred = predict_labels(&model, &test, 64)?;
    let hits = pred.iter().zip(test.labels()).filter(|(p, t)| p == t).count();
    println!("test accuracy {:.1}%", 100.0 * hits as f64 / test.len() as f64);

    let image = test.input(IMAGE_INPUT).unwrap();
    let audio = test.input(AUDIO_INPUT).unwrap();
    let out = model.graph.predict(&[(IMAGE_INPUT, image), (AUDIO_INPUT, audio)])?;
    let att = out.get(ATTENTION_OUTPUT).unwrap();
    // the first half of the weights covers image features, the rest audio
    let k = att.shape()[1];
    let mut share = [0.0; 2];
    for r in 0..att.batch() {
        let row = att.row(r);
        share[0] += row[..k / 2].iter().sum::<f64>();
        share[1] += row[k / 2..].iter().sum::<f64>();
    }
    let n = att.batch() as f64;
    println!("mean attention: image {:.3}, audio {:.3}", share[0] / n, share[1] / n);
    Ok(())
}
