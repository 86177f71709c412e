//! Saves an LSTM health model and reloads it; predictions are identical.

use hivesense::models::{RecipeConfig, RecipeKind, INPUT};
use hivesense::nn::{load_model, save_model, Tensor};
use hivesense::SplitMix64;

fn main() -> hivesense::Result<()> {
    let recipe = RecipeConfig { seq_len: 16, seed: 4, ..RecipeConfig::new(RecipeKind::AudioLstm) };
    let model = recipe.build()?;
    let path = std::env::temp_dir().join("hivesense-lstm.hnet");
    save_model(&model.graph, &path)?;
    let back = load_model(&path)?;
    std::fs::remove_file(&path).ok();

    let mut rng = SplitMix64::new(1);
    let x = Tensor::from_fn(&[3, 16, recipe.feature_rows()], |_| rng.next_f64());
    let a = model.graph.predict(&[(INPUT, &x)])?;
    let b = back.predict(&[(INPUT, &x)])?;
    println!("{} parameters", back.param_count());
    for r in 0..3 {
        println!("{:?}", a.primary().row(r));
    }
    println!("identical: {}", a.primary().data() == b.primary().data());
    Ok(())
}
