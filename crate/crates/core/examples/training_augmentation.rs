//! Draws training augmentations, computes class-balancing loss weights and prints the
//! optimiser schedule for an external trainer.

use std::collections::BTreeMap;

use distortion_lab::harness::{class_weights, sample_augmentation, training_config_preset, AugmentationPolicy};
use distortion_lab::rng::StreamKey;
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let policy = AugmentationPolicy::all_distortions().without("salt_pepper")?;
    let mut rng = StreamKey(17).chacha();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..9_000 {
        *counts.entry(sample_augmentation(&policy, &mut rng)?.manipulation).or_default() += 1;
    }
    for (name, n) in &counts {
        println!("{name:<14} {n}");
    }
    let example = sample_augmentation(&policy, &mut rng)?;
    println!("one draw: {}", serde_json::to_string(&example)?);

    let per_class = [1300, 650, 900, 2600];
    println!("class weights for {per_class:?}: {:?}", class_weights(&per_class)?);

    for epochs in [100, 200] {
        let preset = training_config_preset(epochs).expect("preset exists");
        println!("{epochs} epochs: decay at {:?}, lr in final epoch {:.2e}", preset.decay_epochs, preset.learning_rate_at(epochs - 1));
    }
    Ok(())
}

fn main() {
    run_example().expect("augmentation example failed");
}
