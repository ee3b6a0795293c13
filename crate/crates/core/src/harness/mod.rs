//! Experiment configuration, model evaluation and training-augmentation sampling.

mod adapter;
mod augment;
mod config;
mod corpus;
mod run;
mod training;

pub use adapter::{
    validate_scores, write_precomputed, AdapterSpec, ModelAdapter, PrecomputedAdapter, ProcessAdapter, StimulusRequest, PROTOCOL_NAME,
    PROTOCOL_VERSION,
};
pub use augment::{class_weights, sample_augmentation, AugmentationEntry, AugmentationPolicy, AugmentationSample, UNPERTURBED};
pub use config::{ExperimentConfig, STIMULUS_SIDES};
pub use corpus::{Corpus, CorpusImage, CorpusStats};
pub use run::{run_model_experiment, DecisionRule, ModelRun, ModelRunOptions, Sampling};
pub use training::{training_config_preset, TrainingPreset};
