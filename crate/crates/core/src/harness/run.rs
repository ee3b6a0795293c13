use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::adapter::{ModelAdapter, StimulusRequest};
use super::config::ExperimentConfig;
use super::corpus::{Corpus, CorpusImage};
use crate::error::{Error, Result};
use crate::metrics::{partition_runs, CellCounts, SEVEN_RUNS};
use crate::rng::StreamKey;
use crate::taxonomy::{decide, sample_decision_at, Category, CategoryMap};
use crate::trial::{read_csv, Response, TrialRow, CSV_HEADER};

/// Which stimuli a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sampling {
    /// `trials_per_cell` images per category, each shown under every condition.
    Crossed,
    /// Up to seven disjoint runs, each with the per-cell counts of one observer.
    Runs(usize),
}

/// How category scores become a decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DecisionRule {
    Argmax,
    Temperature(f64),
}

#[derive(Debug, Clone)]
pub struct ModelRunOptions {
    pub sampling: Sampling,
    pub decision: DecisionRule,
    pub map: CategoryMap,
    /// Raw-trial CSV appended after every batch; an existing file is resumed.
    pub journal: Option<PathBuf>,
    pub batch_size: usize,
}

impl Default for ModelRunOptions {
    fn default() -> Self {
        ModelRunOptions { sampling: Sampling::Crossed, decision: DecisionRule::Argmax, map: CategoryMap::bundled(), journal: None, batch_size: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRun {
    pub rows: Vec<TrialRow>,
    pub adapter_errors: usize,
    /// Trials whose scores put no mass on any category; decided by the tie rule.
    pub no_evidence: usize,
    pub resumed_rows: usize,
}

struct Planned<'a> {
    run: String,
    trial: u32,
    image: &'a CorpusImage,
    condition: usize,
}

fn plan<'a>(config: &ExperimentConfig, corpus: &'a Corpus, sampling: Sampling) -> Result<Vec<Planned<'a>>> {
    let labels = config.condition_labels();
    let mut out = Vec::new();
    match sampling {
        Sampling::Crossed => {
            let key = StreamKey(config.seed).child(0xc0);
            let mut chosen = Vec::new();
            for cat in Category::ALL {
                let mut ids: Vec<&CorpusImage> = corpus.images().iter().filter(|i| i.category == cat).collect();
                if ids.len() < config.trials_per_cell {
                    return Err(Error::InsufficientImages {
                        category: cat.name().into(),
                        condition: "all".into(),
                        needed: config.trials_per_cell,
                        available: ids.len(),
                    });
                }
                ids.shuffle(&mut key.child(cat.index() as u64).chacha());
                ids.truncate(config.trials_per_cell);
                ids.sort_by(|a, b| a.image_id.cmp(&b.image_id));
                chosen.extend(ids);
            }
            for condition in 0..labels.len() {
                for image in &chosen {
                    out.push(Planned { run: "run-1".into(), trial: out.len() as u32 + 1, image, condition });
                }
            }
        }
        Sampling::Runs(n) => {
            if n == 0 || n > SEVEN_RUNS {
                return Err(Error::invalid(format!("runs must be between 1 and {SEVEN_RUNS}")));
            }
            let counts = CellCounts { conditions: labels.clone(), per_cell: config.trials_per_cell };
            for run in partition_runs(&corpus.labelled(), &counts, n, config.seed)? {
                let mut trial = 0;
                for a in run.assignments {
                    trial += 1;
                    let image = corpus.get(&a.image_id).expect("partition draws from the corpus");
                    let condition = labels.iter().position(|l| *l == a.condition).expect("known condition");
                    out.push(Planned { run: format!("run-{}", run.run + 1), trial, image, condition });
                }
            }
        }
    }
    Ok(out)
}

fn read_journal(path: &PathBuf) -> Result<Vec<TrialRow>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let complete = match text.rfind('\n') {
        Some(k) => &text[..=k],
        None => "",
    };
    if complete.len() != text.len() {
        std::fs::write(path, complete).map_err(|e| Error::io(path, e))?;
    }
    if complete.is_empty() {
        return Ok(Vec::new());
    }
    read_csv(complete.as_bytes())
}

/// Evaluates a model on distorted stimuli and returns raw-trial rows.
///
/// Rows depend only on the config (including its seed), the corpus and the adapter's
/// scores. Adapter failures are recorded as `adapter_error` trials.
pub fn run_model_experiment(config: &ExperimentConfig, adapter: &mut dyn ModelAdapter, corpus: &Corpus, options: &ModelRunOptions) -> Result<ModelRun> {
    config.validate()?;
    let planned = plan(config, corpus, options.sampling)?;
    let labels = config.condition_labels();
    let row_for = |p: &Planned, response: Response| TrialRow {
        experiment: config.name.clone(),
        subject_or_run: p.run.clone(),
        session: 1,
        block: (p.trial - 1) / config.block_size as u32 + 1,
        trial: p.trial,
        image_id: p.image.image_id.clone(),
        condition: labels[p.condition].clone(),
        true_category: p.image.category,
        response,
        rt_ms: None,
        is_practice: false,
    };

    let mut rows = match &options.journal {
        Some(path) => read_journal(path)?,
        None => Vec::new(),
    };
    let resumed_rows = rows.len();
    if rows.len() > planned.len() {
        return Err(Error::Session("journal has more rows than the plan".into()));
    }
    for (row, p) in rows.iter().zip(&planned) {
        let expected = row_for(p, row.response);
        if row.subject_or_run != expected.subject_or_run || row.trial != expected.trial || row.image_id != expected.image_id || row.condition != expected.condition {
            return Err(Error::Session(format!("journal row {} does not match the plan", row.trial)));
        }
    }
    let mut journal = match &options.journal {
        Some(path) => {
            let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
            if resumed_rows == 0 {
                writeln!(f, "{CSV_HEADER}").map_err(|e| Error::io(path, e))?;
            }
            Some((path.clone(), f))
        }
        None => None,
    };

    let decision_key = StreamKey(config.seed).child(0xdec1);
    let mut adapter_errors = rows.iter().filter(|r| r.response == Response::AdapterError).count();
    let mut no_evidence = 0;
    for batch in planned[resumed_rows..].chunks(options.batch_size.max(1)) {
        let pngs: Vec<Option<Vec<u8>>> = if adapter.needs_pixels() {
            batch
                .par_iter()
                .map(|p| corpus.render(p.image, &config.conditions[p.condition], config.side, config.seed).map(|(png, _)| Some(png)))
                .collect::<Result<_>>()?
        } else {
            vec![None; batch.len()]
        };
        let requests: Vec<StimulusRequest> = batch
            .iter()
            .zip(pngs)
            .map(|(p, png)| StimulusRequest {
                trial_id: format!("{}:{}", p.run, p.trial),
                image_id: p.image.image_id.clone(),
                condition: labels[p.condition].clone(),
                png,
            })
            .collect();
        let results = adapter.classify(&requests);
        if results.len() != batch.len() {
            return Err(Error::Adapter(format!("adapter returned {} results for {} requests", results.len(), batch.len())));
        }
        let mut new_rows = Vec::with_capacity(batch.len());
        for (p, result) in batch.iter().zip(results) {
            let response = match result.and_then(|s| options.map.aggregate(&s)) {
                Err(e) => {
                    log::warn!("{}:{} {}: {e}", p.run, p.trial, p.image.image_id);
                    adapter_errors += 1;
                    Response::AdapterError
                }
                Ok(agg) => {
                    let run_index = p.run.trim_start_matches("run-").parse::<u64>().unwrap_or(0);
                    let decided = match options.decision {
                        DecisionRule::Argmax => decide(&agg),
                        DecisionRule::Temperature(t) => sample_decision_at(&agg, t, decision_key.uniform_at(run_index, p.trial as u64)),
                    };
                    match decided {
                        Ok(c) => Response::Category(c),
                        Err(Error::NoEvidence) => {
                            no_evidence += 1;
                            Response::Category(Category::ALL[0])
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            new_rows.push(row_for(p, response));
        }
        if let Some((path, f)) = journal.as_mut() {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            for r in &new_rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::io(path.clone(), e.into_error()))?;
            f.write_all(&bytes).and_then(|_| f.flush()).map_err(|e| Error::io(path.clone(), e))?;
        }
        rows.extend(new_rows);
    }
    Ok(ModelRun { rows, adapter_errors, no_evidence, resumed_rows })
}
