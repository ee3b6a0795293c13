use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::distortions::DistortionSpec;
use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;
use crate::rng::StreamKey;
use crate::taxonomy::Category;

/// Phase durations of one trial in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub fixation_ms: u32,
    pub stimulus_ms: u32,
    pub mask_ms: u32,
    pub response_ms: u32,
}

impl Default for PhaseTimings {
    fn default() -> Self {
        PhaseTimings { fixation_ms: 300, stimulus_ms: 200, mask_ms: 200, response_ms: 1500 }
    }
}

impl PhaseTimings {
    pub fn trial_ms(&self) -> u32 {
        self.fixation_ms + self.stimulus_ms + self.mask_ms + self.response_ms
    }

    /// Time from fixation onset to response-screen onset.
    pub fn response_onset_ms(&self) -> u32 {
        self.fixation_ms + self.stimulus_ms + self.mask_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrial {
    /// 0-based position in the session.
    pub index: usize,
    pub image_id: String,
    pub category: Category,
    pub condition: String,
    pub spec: DistortionSpec,
    pub is_practice: bool,
    /// 1-based block number; practice blocks come first.
    pub block: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub experiment: String,
    pub seed: u64,
    pub trials: Vec<PlannedTrial>,
    pub practice_count: usize,
    pub timing: PhaseTimings,
}

impl SessionPlan {
    pub fn main_trials(&self) -> &[PlannedTrial] {
        &self.trials[self.practice_count..]
    }

    pub fn practice_trials(&self) -> &[PlannedTrial] {
        &self.trials[..self.practice_count]
    }

    /// Indices of the trials after which a break is offered.
    pub fn break_after(&self) -> Vec<usize> {
        self.trials.windows(2).filter(|w| w[0].block != w[1].block).map(|w| w[0].index).collect()
    }

    pub fn block_count(&self) -> u32 {
        self.trials.last().map_or(0, |t| t.block)
    }

    /// Main-trial counts per (category, condition).
    pub fn cell_counts(&self) -> BTreeMap<(Category, String), usize> {
        let mut m = BTreeMap::new();
        for t in self.main_trials() {
            *m.entry((t.category, t.condition.clone())).or_default() += 1;
        }
        m
    }
}

/// Builds one observer's session: stimuli drawn per category without replacement,
/// counterbalanced conditions, seeded trial order, practice before main trials and
/// block boundaries at the configured block sizes.
pub fn build_plan(config: &ExperimentConfig, corpus: &[(String, Category)], seed: u64) -> Result<SessionPlan> {
    config.validate()?;
    let labels = config.condition_labels();
    let key = StreamKey(seed);
    let n_cond = labels.len();

    let mut cells: Vec<(Category, usize)> = Category::ALL.iter().flat_map(|&c| (0..n_cond).map(move |j| (c, j))).collect();
    cells.shuffle(&mut key.child(1).chacha());
    let mut practice_cells = vec![Vec::new(); Category::ALL.len()];
    for j in 0..config.practice_trials {
        let (c, cond) = cells[j % cells.len()];
        practice_cells[c.index()].push(cond);
    }

    let mut by_category: BTreeMap<Category, Vec<&str>> = BTreeMap::new();
    for (id, c) in corpus {
        by_category.entry(*c).or_default().push(id);
    }
    let mut main = Vec::new();
    let mut practice = Vec::new();
    for cat in Category::ALL {
        let mut ids = by_category.remove(&cat).unwrap_or_default();
        ids.sort_unstable();
        ids.dedup();
        let main_needed = n_cond * config.trials_per_cell;
        if ids.len() < main_needed {
            let j = ids.len() / config.trials_per_cell;
            return Err(Error::InsufficientImages {
                category: cat.name().into(),
                condition: labels[j].clone(),
                needed: config.trials_per_cell,
                available: ids.len() - j * config.trials_per_cell,
            });
        }
        let p = &practice_cells[cat.index()];
        if ids.len() < main_needed + p.len() {
            return Err(Error::InsufficientImages {
                category: cat.name().into(),
                condition: "practice".into(),
                needed: p.len(),
                available: ids.len() - main_needed,
            });
        }
        ids.shuffle(&mut key.child(100 + cat.index() as u64).chacha());
        for (k, id) in ids[..main_needed].iter().enumerate() {
            main.push((id.to_string(), cat, k / config.trials_per_cell));
        }
        for (id, &cond) in ids[main_needed..].iter().zip(p) {
            practice.push((id.to_string(), cat, cond));
        }
    }
    practice.sort();
    main.sort();
    practice.shuffle(&mut key.child(2).chacha());
    main.shuffle(&mut key.child(3).chacha());

    let practice_block = config.practice_block_size().max(1);
    let practice_blocks = config.practice_trials.div_ceil(practice_block) as u32;
    let practice_count = practice.len();
    let trials = practice
        .into_iter()
        .enumerate()
        .map(|(k, t)| (t, true, (k / practice_block) as u32 + 1))
        .chain(main.into_iter().enumerate().map(|(k, t)| (t, false, practice_blocks + (k / config.block_size) as u32 + 1)))
        .enumerate()
        .map(|(index, ((image_id, category, cond), is_practice, block))| PlannedTrial {
            index,
            image_id,
            category,
            condition: labels[cond].clone(),
            spec: config.conditions[cond].clone(),
            is_practice,
            block,
        })
        .collect();
    Ok(SessionPlan { experiment: config.name.clone(), seed, trials, practice_count, timing: PhaseTimings::default() })
}
