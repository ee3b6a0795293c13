use serde::{Deserialize, Serialize};

use crate::distortions::{grids, DistortionSpec};
use crate::error::{Error, Result};
use crate::taxonomy::NUM_CATEGORIES;

/// Stimulus sides accepted by experiment configs.
pub const STIMULUS_SIDES: [usize; 2] = [224, 256];

/// Structure of one experiment: which conditions, how many trials per cell and how
/// trials are grouped into blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub family: String,
    pub conditions: Vec<DistortionSpec>,
    /// Main trials per (category, condition).
    pub trials_per_cell: usize,
    /// Main trials between breaks.
    pub block_size: usize,
    #[serde(default)]
    pub practice_trials: usize,
    #[serde(default)]
    pub practice_blocks: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_side")]
    pub side: usize,
    /// Main-trial total from the published trial-count table, when the preset has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_main_total: Option<usize>,
}

fn default_side() -> usize {
    224
}

/// (name, family, conditions, per cell, practice total, practice blocks, main blocks, table total)
type PresetRow = (&'static str, &'static str, fn() -> Vec<DistortionSpec>, usize, usize, usize, usize, Option<usize>);

fn eidolon_grid(coherence: f64) -> Vec<DistortionSpec> {
    grids::EIDOLON_REACH.iter().map(|&r| DistortionSpec::eidolon(r, coherence)).collect()
}

const PRESETS: [PresetRow; 13] = [
    ("colour", "colour", || vec![DistortionSpec::Colour, DistortionSpec::Greyscale], 40, 320, 2, 5, Some(1280)),
    ("uniform_noise", "uniform_noise", || grids::UNIFORM_NOISE_W.iter().map(|&w| DistortionSpec::uniform_noise(w)).collect(), 10, 256, 2, 5, Some(1280)),
    ("contrast", "contrast", || grids::CONTRAST_C.iter().map(|&c| DistortionSpec::Contrast { c }).collect(), 10, 256, 2, 10, Some(1280)),
    ("eidolon_i", "eidolon", || eidolon_grid(1.0), 10, 384, 4, 5, Some(1280)),
    ("eidolon_ii", "eidolon", || eidolon_grid(0.3), 10, 384, 4, 5, Some(1280)),
    ("eidolon_iii", "eidolon", || eidolon_grid(0.0), 10, 384, 4, 5, Some(1280)),
    ("opponent_colour", "opponent_colour", || vec![DistortionSpec::Colour, DistortionSpec::OpponentColour], 35, 224, 2, 7, Some(1120)),
    ("low_pass", "low_pass", || grids::LOW_PASS_SIGMA.iter().map(|&sigma| DistortionSpec::LowPass { sigma }).collect(), 10, 256, 2, 8, Some(1280)),
    ("high_pass", "high_pass", || grids::HIGH_PASS_SIGMA.iter().map(|&sigma| DistortionSpec::HighPass { sigma }).collect(), 10, 256, 2, 8, Some(1280)),
    ("phase_noise", "phase_noise", || grids::PHASE_NOISE_W.iter().map(|&w_degrees| DistortionSpec::PhaseNoise { w_degrees }).collect(), 10, 224, 2, 7, Some(1120)),
    ("power_equalise", "power_equalise", || vec![DistortionSpec::Greyscale, DistortionSpec::PowerEqualise], 35, 224, 2, 7, Some(1120)),
    ("rotation", "rotation", || grids::ROTATION_ANGLE.iter().map(|&angle| DistortionSpec::Rotation { angle }).collect(), 20, 256, 2, 8, Some(1280)),
    ("salt_pepper", "salt_pepper", || grids::SALT_PEPPER_P.iter().map(|&p| DistortionSpec::salt_pepper(p)).collect(), 10, 0, 0, 5, None),
];

/// Families each experiment family may draw conditions from.
fn allowed_families(family: &str) -> &[&'static str] {
    match family {
        "colour" => &["colour", "greyscale"],
        "opponent_colour" => &["colour", "opponent_colour"],
        "power_equalise" => &["greyscale", "power_equalise"],
        "uniform_noise" => &["uniform_noise"],
        "salt_pepper" => &["salt_pepper"],
        "contrast" => &["contrast"],
        "low_pass" => &["low_pass"],
        "high_pass" => &["high_pass"],
        "phase_noise" => &["phase_noise"],
        "rotation" => &["rotation"],
        "eidolon" => &["eidolon"],
        "greyscale" => &["greyscale"],
        _ => &[],
    }
}

impl ExperimentConfig {
    pub fn preset_names() -> Vec<&'static str> {
        PRESETS.iter().map(|p| p.0).collect()
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (name, family, conditions, per_cell, practice, practice_blocks, main_blocks, total) = *PRESETS
            .iter()
            .find(|p| p.0 == name)
            .ok_or_else(|| Error::invalid(format!("unknown preset {name:?}; known: {}", Self::preset_names().join(", "))))?;
        let conditions = conditions();
        let main_total = per_cell * NUM_CATEGORIES * conditions.len();
        Ok(ExperimentConfig {
            name: name.into(),
            family: family.into(),
            conditions,
            trials_per_cell: per_cell,
            block_size: main_total / main_blocks,
            practice_trials: practice,
            practice_blocks,
            seed: 0,
            side: default_side(),
            expected_main_total: total,
        })
    }

    pub fn main_total(&self) -> usize {
        self.trials_per_cell * NUM_CATEGORIES * self.conditions.len()
    }

    pub fn main_blocks(&self) -> usize {
        self.main_total().div_ceil(self.block_size.max(1))
    }

    pub fn practice_block_size(&self) -> usize {
        if self.practice_blocks == 0 { 0 } else { self.practice_trials.div_ceil(self.practice_blocks) }
    }

    pub fn condition_labels(&self) -> Vec<String> {
        self.conditions.iter().map(DistortionSpec::condition_label).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !STIMULUS_SIDES.contains(&self.side) {
            return Err(Error::invalid(format!("stimulus side must be 224 or 256, got {}", self.side)));
        }
        if self.conditions.is_empty() || self.trials_per_cell == 0 || self.block_size == 0 {
            return Err(Error::invalid("config needs conditions, trials_per_cell > 0 and block_size > 0"));
        }
        let allowed = allowed_families(&self.family);
        for spec in &self.conditions {
            if !allowed.contains(&spec.family()) {
                return Err(Error::invalid(format!("condition {} does not belong to family {}", spec.family(), self.family)));
            }
            spec.validate(true)?;
        }
        let mut labels = self.condition_labels();
        labels.sort();
        labels.dedup();
        if labels.len() != self.conditions.len() {
            return Err(Error::invalid("duplicate conditions"));
        }
        if let Some(expected) = self.expected_main_total {
            if expected != self.main_total() {
                return Err(Error::invalid(format!(
                    "{} per cell x 16 x {} conditions = {} main trials, expected {expected}",
                    self.trials_per_cell,
                    self.conditions.len(),
                    self.main_total()
                )));
            }
        }
        if self.practice_trials > 0 && self.practice_blocks == 0 {
            return Err(Error::invalid("practice trials need at least one practice block"));
        }
        Ok(())
    }
}
