use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::taxonomy::Category;

pub const SEVEN_RUNS: usize = 7;

/// Images each run needs: `per_cell` for every (category, condition) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellCounts {
    pub conditions: Vec<String>,
    pub per_cell: usize,
}

impl CellCounts {
    pub fn per_run(&self) -> usize {
        self.conditions.len() * self.per_cell * Category::ALL.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunAssignment {
    pub image_id: String,
    pub category: Category,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionRun {
    pub run: usize,
    pub assignments: Vec<RunAssignment>,
}

/// Splits a corpus into `runs` pairwise-disjoint runs, each with `per_cell` images for
/// every (category, condition). The corpus is sorted by id before sampling.
pub fn partition_runs(corpus: &[(String, Category)], counts: &CellCounts, runs: usize, seed: u64) -> Result<Vec<PartitionRun>> {
    if counts.conditions.is_empty() || counts.per_cell == 0 || runs == 0 {
        return Err(Error::invalid("partition needs at least one run, one condition and per_cell > 0"));
    }
    let mut by_category: BTreeMap<Category, Vec<&str>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (id, cat) in corpus {
        if !seen.insert(id.as_str()) {
            return Err(Error::invalid(format!("duplicate image id {id}")));
        }
        by_category.entry(*cat).or_default().push(id);
    }
    let block = runs * counts.per_cell;
    let mut out: Vec<PartitionRun> = (0..runs).map(|run| PartitionRun { run, assignments: Vec::new() }).collect();
    let key = StreamKey(seed);
    for cat in Category::ALL {
        let mut ids = by_category.remove(&cat).unwrap_or_default();
        let needed = block * counts.conditions.len();
        if ids.len() < needed {
            let j = ids.len() / block;
            return Err(Error::InsufficientImages {
                category: cat.name().into(),
                condition: counts.conditions[j].clone(),
                needed: block,
                available: ids.len() - j * block,
            });
        }
        ids.sort_unstable();
        ids.shuffle(&mut key.child(cat.index() as u64).chacha());
        for (j, condition) in counts.conditions.iter().enumerate() {
            for (r, run) in out.iter_mut().enumerate() {
                let start = j * block + r * counts.per_cell;
                for id in &ids[start..start + counts.per_cell] {
                    run.assignments.push(RunAssignment { image_id: id.to_string(), category: cat, condition: condition.clone() });
                }
            }
        }
    }
    Ok(out)
}

/// [`partition_runs`] with the seven runs used for model error bars.
pub fn seven_run_partition(corpus: &[(String, Category)], counts: &CellCounts, seed: u64) -> Result<Vec<PartitionRun>> {
    partition_runs(corpus, counts, SEVEN_RUNS, seed)
}
