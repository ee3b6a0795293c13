use rayon::prelude::*;
use serde::Serialize;

use super::{response_entropy, ResponseDistribution};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::taxonomy::{sample_decision_at, Category, CategoryScores};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub temperature: f64,
    pub accuracy: f64,
    pub entropy: f64,
    pub trials: usize,
}

/// Samples one decision per trial at each temperature and reports accuracy and
/// response entropy. Trial `i` uses the same uniform draw at every temperature.
pub fn tradeoff_sweep(trials: &[(CategoryScores, Category)], temperatures: &[f64], seed: u64) -> Result<Vec<TradeoffPoint>> {
    if trials.is_empty() {
        return Err(Error::invalid("tradeoff sweep needs at least one trial"));
    }
    if let Some(t) = temperatures.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::invalid(format!("temperatures must be finite and > 0, got {t}")));
    }
    let key = StreamKey(seed);
    temperatures
        .par_iter()
        .map(|&temperature| {
            let decisions = trials
                .iter()
                .enumerate()
                .map(|(i, (agg, _))| sample_decision_at(agg, temperature, key.uniform_at(0, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            let correct = decisions.iter().zip(trials).filter(|(d, (_, truth))| *d == truth).count();
            Ok(TradeoffPoint {
                temperature,
                accuracy: correct as f64 / trials.len() as f64,
                entropy: response_entropy(&ResponseDistribution::from_decisions(decisions)),
                trials: trials.len(),
            })
        })
        .collect()
}
