//! Evaluates a model from precomputed scores on a toy corpus, first with every image
//! under every condition and then as seven disjoint observer-sized runs.

use std::path::PathBuf;

use distortion_lab::distortions::DistortionSpec;
use distortion_lab::harness::{run_model_experiment, Corpus, CorpusImage, ExperimentConfig, ModelRunOptions, PrecomputedAdapter, Sampling};
use distortion_lab::metrics::{accuracy, analyze, Range};
use distortion_lab::rng::StreamKey;
use distortion_lab::taxonomy::{Category, CategoryMap};
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let images: Vec<CorpusImage> = Category::ALL
        .iter()
        .flat_map(|c| (0..14).map(move |i| CorpusImage { image_id: format!("{}_{i:02}", c.name()), category: *c, path: PathBuf::from("not-rendered.png") }))
        .collect();
    let corpus = Corpus::new(images, 0.45)?;
    let config = ExperimentConfig {
        name: "contrast_toy".into(),
        family: "contrast".into(),
        conditions: vec![DistortionSpec::Contrast { c: 1.0 }, DistortionSpec::Contrast { c: 0.05 }],
        trials_per_cell: 1,
        block_size: 16,
        practice_trials: 0,
        practice_blocks: 0,
        seed: 11,
        side: 224,
        expected_main_total: None,
    };

    let map = CategoryMap::bundled();
    let mut adapter = PrecomputedAdapter::default();
    for (k, img) in corpus.images().iter().enumerate() {
        for (j, label) in config.condition_labels().iter().enumerate() {
            let mut s = vec![1e-4; 1000];
            let correct = StreamKey(k as u64).uniform_at(j as u64, 0) < if j == 0 { 0.9 } else { 0.3 };
            let guess = if correct { img.category } else { Category::ALL[(img.category.index() + 1 + k) % 16] };
            s[map.members(guess)[0]] = 0.9;
            adapter.insert(img.image_id.clone(), label.clone(), s)?;
        }
    }

    let crossed = run_model_experiment(&config, &mut adapter, &corpus, &ModelRunOptions::default())?;
    println!("crossed design: {} trials", crossed.rows.len());
    for label in config.condition_labels() {
        println!("  contrast {label}: accuracy {:?}", accuracy(crossed.rows.iter().filter(|r| r.condition == label)));
    }

    let options = ModelRunOptions { sampling: Sampling::Runs(7), ..ModelRunOptions::default() };
    let runs = run_model_experiment(&config, &mut adapter, &corpus, &options)?;
    let report = analyze(&runs.rows)?;
    for c in &report.conditions {
        let Range { min, max } = c.accuracy_range.expect("every run has trials");
        println!("seven runs, contrast {}: mean accuracy {:.3}, range {min:.3}..{max:.3}", c.condition, c.accuracy_mean.unwrap_or(f64::NAN));
    }
    Ok(())
}

fn main() {
    run_example().expect("model evaluation example failed");
}
