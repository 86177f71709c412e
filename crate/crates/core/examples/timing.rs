//! Training and inference wall-clock times for the image, audio and fused
//! health models at a reduced size.

use hivesense::evalx::{measure_times, TimingConfig, TimingReport};
use hivesense::models::{RecipeConfig, RecipeKind, AUDIO_INPUT, IMAGE_INPUT, INPUT};
use hivesense::nn::Dataset;
use hivesense::synthetic::complementary_dataset;

fn main() -> hivesense::Result<()> {
    let side = 32;
    let data = complementary_dataset(32, side, side, 0.3, 1)?;
    let only = |name: &str| Dataset::new(vec![(INPUT.into(), data.input(name).unwrap().clone())], data.labels().to_vec(), 4);
    let cfg = TimingConfig::default();
    let mut entries = Vec::new();
    for (kind, set) in [
        (RecipeKind::VisualCnn, only(IMAGE_INPUT)?),
        (RecipeKind::AudioCnn2d, only(AUDIO_INPUT)?),
        (RecipeKind::Amnn, data.clone()),
    ] {
        let recipe = RecipeConfig {
            image_size: side,
            spectrogram_size: side,
            width_divisor: 4,
            ..RecipeConfig::new(kind)
        };
        entries.push(measure_times(&recipe.build()?, &set, &cfg)?);
    }
    print!("{}", TimingReport::new(entries).to_text());
    Ok(())
}
