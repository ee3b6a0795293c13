//! Accuracy, entropy and confusion metrics over raw trials.

mod partition;
mod report;
mod tradeoff;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::taxonomy::{Category, ClassScores, NUM_CATEGORIES};
use crate::trial::{Response, TrialRow};

pub use partition::{partition_runs, seven_run_partition, CellCounts, PartitionRun, RunAssignment, SEVEN_RUNS};
pub use report::{analyze, AnalysisReport, ConditionReport, LongRow, ObserverSummary, ENTROPY_RULE};
pub use tradeoff::{tradeoff_sweep, TradeoffPoint};

/// Bin index of the no-response count in a [`ResponseDistribution`].
pub const NO_RESPONSE_BIN: usize = NUM_CATEGORIES;

/// Shannon entropy in bits of a histogram or unnormalised weight vector; `0·log 0 = 0`.
pub fn entropy_bits(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let h: f64 = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Fraction of correct trials; `None` when there are no trials.
pub fn accuracy<'a>(trials: impl IntoIterator<Item = &'a TrialRow>) -> Option<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for t in trials.into_iter().filter(|t| t.counts_for_analysis()) {
        total += 1;
        correct += t.is_correct() as usize;
    }
    (total > 0).then(|| correct as f64 / total as f64)
}

/// Accuracy for each listed condition, absent where a condition has no trials.
pub fn accuracy_by_condition(trials: &[TrialRow], conditions: &[String]) -> BTreeMap<String, Option<f64>> {
    conditions
        .iter()
        .map(|c| (c.clone(), accuracy(trials.iter().filter(|t| &t.condition == c))))
        .collect()
}

/// 16 category bins followed by a no-response bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ResponseDistribution {
    pub counts: [u64; NUM_CATEGORIES + 1],
}

impl ResponseDistribution {
    pub fn from_trials<'a>(trials: impl IntoIterator<Item = &'a TrialRow>) -> Self {
        let mut d = Self::default();
        for t in trials.into_iter().filter(|t| t.counts_for_analysis()) {
            d.record(t.response);
        }
        d
    }

    pub fn from_decisions(decisions: impl IntoIterator<Item = Category>) -> Self {
        let mut d = Self::default();
        for c in decisions {
            d.record(Response::Category(c));
        }
        d
    }

    pub fn record(&mut self, response: Response) {
        match response {
            Response::Category(c) => self.counts[c.index()] += 1,
            Response::NoResponse => self.counts[NO_RESPONSE_BIN] += 1,
            Response::AdapterError => {}
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn no_response(&self) -> u64 {
        self.counts[NO_RESPONSE_BIN]
    }

    pub fn category_counts(&self) -> &[u64] {
        &self.counts[..NUM_CATEGORIES]
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

/// Entropy in bits over the 16 category bins; the no-response bin is excluded.
pub fn response_entropy(dist: &ResponseDistribution) -> f64 {
    let w: Vec<f64> = dist.category_counts().iter().map(|&c| c as f64).collect();
    entropy_bits(&w)
}

/// Mean of the per-observer response entropies.
pub fn mean_observer_entropy(dists: &[ResponseDistribution]) -> Result<f64> {
    if dists.is_empty() {
        return Err(Error::invalid("mean observer entropy needs at least one observer"));
    }
    Ok(dists.iter().map(response_entropy).sum::<f64>() / dists.len() as f64)
}

/// Entropy in bits of a normalised 1000-class score vector.
pub fn prediction_entropy(scores: &ClassScores) -> Result<f64> {
    if !scores.is_normalized() {
        return Err(Error::invalid("prediction entropy needs scores summing to 1"));
    }
    Ok(entropy_bits(scores.as_slice()))
}

/// Response (rows, no-response first) by true category (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CATEGORIES]; NUM_CATEGORIES + 1],
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self { counts: [[0; NUM_CATEGORIES]; NUM_CATEGORIES + 1] }
    }
}

impl ConfusionMatrix {
    pub fn from_trials<'a>(trials: impl IntoIterator<Item = &'a TrialRow>) -> Self {
        let mut m = Self::default();
        for t in trials.into_iter().filter(|t| t.counts_for_analysis()) {
            let row = match t.response {
                Response::NoResponse => 0,
                Response::Category(c) => c.index() + 1,
                Response::AdapterError => continue,
            };
            m.counts[row][t.true_category.index()] += 1;
        }
        m
    }

    pub fn get(&self, response: Response, truth: Category) -> u64 {
        match response {
            Response::NoResponse => self.counts[0][truth.index()],
            Response::Category(c) => self.counts[c.index() + 1][truth.index()],
            Response::AdapterError => 0,
        }
    }

    pub fn column_sums(&self) -> [u64; NUM_CATEGORIES] {
        let mut s = [0; NUM_CATEGORIES];
        for row in &self.counts {
            for (acc, v) in s.iter_mut().zip(row) {
                *acc += v;
            }
        }
        s
    }

    pub fn total(&self) -> u64 {
        self.column_sums().iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CATEGORIES).map(|i| self.counts[i + 1][i]).sum()
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }

    /// CSV with a `response` column followed by one column per true category.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("response");
        for c in Category::ALL {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(if i == 0 { "na" } else { Category::ALL[i - 1].name() });
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Min-max range of a per-observer quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(Range { min: v, max: v }),
            Some(r) => Some(Range { min: r.min.min(v), max: r.max.max(v) }),
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    pub(crate) fn trial(subject: &str, condition: &str, truth: Category, response: Response) -> TrialRow {
        TrialRow {
            experiment: "toy".into(),
            subject_or_run: subject.into(),
            session: 1,
            block: 1,
            trial: 1,
            image_id: format!("{}-{}", truth.name(), condition),
            condition: condition.into(),
            true_category: truth,
            response,
            rt_ms: None,
            is_practice: false,
        }
    }

    fn toy_set() -> Vec<TrialRow> {
        let mut v = Vec::new();
        for (i, c) in Category::ALL.iter().enumerate() {
            let response = match i {
                0..=3 => Response::NoResponse,
                4..=11 => Response::Category(*c),
                _ => Response::Category(Category::ALL[(i + 1) % 16]),
            };
            v.push(trial("s1", "c0", *c, response));
        }
        v
    }

    #[test]
    fn accuracy_counts_no_response_as_wrong() {
        let t = toy_set();
        assert_eq!(accuracy(&t), Some(0.5));
        assert_eq!(ConfusionMatrix::from_trials(&t).accuracy(), Some(0.5));
    }

    #[test]
    fn accuracy_absent_for_empty_condition() {
        let t = toy_set();
        let by = accuracy_by_condition(&t, &["c0".into(), "c1".into()]);
        assert_eq!(by["c0"], Some(0.5));
        assert_eq!(by["c1"], None);
    }

    #[test]
    fn practice_and_adapter_errors_are_excluded() {
        let mut t = toy_set();
        let mut p = trial("s1", "c0", Category::Dog, Response::Category(Category::Dog));
        p.is_practice = true;
        t.push(p);
        t.push(trial("s1", "c0", Category::Dog, Response::AdapterError));
        assert_eq!(accuracy(&t), Some(0.5));
        assert_eq!(ResponseDistribution::from_trials(&t).total(), 16);
    }

    #[test]
    fn entropy_anchors() {
        let uniform = ResponseDistribution::from_decisions(Category::ALL);
        assert_eq!(response_entropy(&uniform), 4.0);
        let one = ResponseDistribution::from_decisions([Category::Cat; 5]);
        assert_eq!(response_entropy(&one), 0.0);
        let two = ResponseDistribution::from_decisions([Category::Cat, Category::Dog]);
        assert_eq!(response_entropy(&two), 1.0);

        let mut with_na = uniform;
        with_na.record(Response::NoResponse);
        assert_eq!(response_entropy(&with_na), 4.0);
    }

    #[test]
    fn prediction_entropy_anchors() {
        let uniform = ClassScores::new(vec![1e-3; 1000]).unwrap();
        assert_abs_diff_eq!(prediction_entropy(&uniform).unwrap(), 1000f64.log2(), epsilon = 1e-9);
        let mut one = vec![0.0; 1000];
        one[7] = 1.0;
        assert_eq!(prediction_entropy(&ClassScores::new(one.clone()).unwrap()).unwrap(), 0.0);
        one[7] = 0.5;
        one[8] = 0.5;
        assert_eq!(prediction_entropy(&ClassScores::new(one.clone()).unwrap()).unwrap(), 1.0);
        one[8] = 0.7;
        assert!(prediction_entropy(&ClassScores::new(one).unwrap()).is_err());
    }

    #[test]
    fn mean_observer_entropy_is_not_pooled() {
        let a = ResponseDistribution::from_decisions([Category::Dog; 10]);
        let b = ResponseDistribution::from_decisions([Category::Cat; 10]);
        assert_eq!(mean_observer_entropy(&[a, b]).unwrap(), 0.0);
        let mut pooled = a;
        pooled.merge(&b);
        assert_eq!(response_entropy(&pooled), 1.0);
        assert_eq!(mean_observer_entropy(&[a, a]).unwrap(), response_entropy(&a));
        let four = ResponseDistribution::from_decisions(Category::ALL);
        let two = ResponseDistribution::from_decisions(Category::ALL[..4].iter().copied());
        assert_eq!(mean_observer_entropy(&[four, two]).unwrap(), 3.0);
        assert!(mean_observer_entropy(&[]).is_err());
    }

    #[test]
    fn confusion_layout() {
        let t = toy_set();
        let m = ConfusionMatrix::from_trials(&t);
        assert_eq!(m.column_sums(), [1; 16]);
        assert_eq!(m.get(Response::NoResponse, Category::Airplane), 1);
        assert_eq!(m.get(Response::Category(Category::Bird), Category::Bird), 1);
        assert_eq!(m.trace(), 8);
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 18);
        assert!(lines[0].starts_with("response,airplane,bicycle,boat,"));
        assert!(lines[1].starts_with("na,1,1,1,1,0"));
    }

    #[test]
    fn range_is_min_max() {
        assert_eq!(Range::of([0.3, 0.9, 0.5]), Some(Range { min: 0.3, max: 0.9 }));
        assert_eq!(Range::of(std::iter::empty()), None);
    }

    fn arb_dist() -> impl Strategy<Value = ResponseDistribution> {
        proptest::array::uniform17(0u64..50).prop_map(|counts| ResponseDistribution { counts })
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_jensen(dists in proptest::collection::vec(arb_dist(), 1..6)) {
            let mut pooled = ResponseDistribution::default();
            for d in &dists {
                let h = response_entropy(d);
                prop_assert!((0.0..=4.0 + 1e-12).contains(&h));
                pooled.merge(d);
            }
            let mean = mean_observer_entropy(&dists).unwrap();
            prop_assert!(mean <= response_entropy(&pooled) + 1e-9);
        }

        #[test]
        fn confusion_columns_match_presented(truths in proptest::collection::vec((0usize..16, 0usize..17), 1..200)) {
            let rows: Vec<TrialRow> = truths.iter().map(|&(t, r)| {
                let response = if r == 16 { Response::NoResponse } else { Response::Category(Category::ALL[r]) };
                trial("s", "c", Category::ALL[t], response)
            }).collect();
            let m = ConfusionMatrix::from_trials(&rows);
            let mut presented = [0u64; 16];
            for &(t, _) in &truths { presented[t] += 1; }
            prop_assert_eq!(m.column_sums(), presented);
            let acc = accuracy(&rows).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
            prop_assert_eq!(m.accuracy().unwrap(), acc);
        }
    }
}
