//! Runs every example's `run_example` as a test.

#[allow(dead_code)]
#[path = "../examples/analyze_trials.rs"]
mod analyze_trials;

#[test]
fn analyze_trials_runs() {
    analyze_trials::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/category_decisions.rs"]
mod category_decisions;

#[test]
fn category_decisions_runs() {
    category_decisions::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/distortion_sweep.rs"]
mod distortion_sweep;

#[test]
fn distortion_sweep_runs() {
    distortion_sweep::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/ingest_corpus.rs"]
mod ingest_corpus;

#[test]
fn ingest_corpus_runs() {
    ingest_corpus::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/model_evaluation.rs"]
mod model_evaluation;

#[test]
fn model_evaluation_runs() {
    model_evaluation::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/noise_mask.rs"]
mod noise_mask;

#[test]
fn noise_mask_runs() {
    noise_mask::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/opponent_colour.rs"]
mod opponent_colour;

#[test]
fn opponent_colour_runs() {
    opponent_colour::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/session_plan.rs"]
mod session_plan;

#[test]
fn session_plan_runs() {
    session_plan::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/session_server.rs"]
mod session_server;

#[test]
fn session_server_runs() {
    session_server::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/spectral_scrambling.rs"]
mod spectral_scrambling;

#[test]
fn spectral_scrambling_runs() {
    spectral_scrambling::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/temperature_tradeoff.rs"]
mod temperature_tradeoff;

#[test]
fn temperature_tradeoff_runs() {
    temperature_tradeoff::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/training_augmentation.rs"]
mod training_augmentation;

#[test]
fn training_augmentation_runs() {
    training_augmentation::run_example().unwrap();
}

#[allow(dead_code)]
#[path = "../examples/uniform_noise_clipping.rs"]
mod uniform_noise_clipping;

#[test]
fn uniform_noise_clipping_runs() {
    uniform_noise_clipping::run_example().unwrap();
}
