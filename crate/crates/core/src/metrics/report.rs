use std::collections::BTreeMap;

use serde::Serialize;

use super::{accuracy, mean_observer_entropy, response_entropy, ConfusionMatrix, Range, ResponseDistribution};
use crate::error::{Error, Result};
use crate::trial::{Response, TrialRow};

/// How no-response trials enter the metrics; copied into every report.
pub const ENTROPY_RULE: &str = "response entropy is computed over the 16 category bins and excludes no-response trials; no-response trials count as incorrect and occupy the top confusion row";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverSummary {
    pub subject_or_run: String,
    pub trials: u64,
    pub no_response: u64,
    pub accuracy: Option<f64>,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub trials: u64,
    pub no_response: u64,
    pub adapter_errors: u64,
    pub accuracy_mean: Option<f64>,
    pub accuracy_range: Option<Range>,
    pub mean_observer_entropy: Option<f64>,
    pub entropy_range: Option<Range>,
    pub observers: Vec<ObserverSummary>,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub experiment: String,
    pub entropy_rule: &'static str,
    pub error_bars: &'static str,
    pub conditions: Vec<ConditionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRow {
    pub condition: String,
    pub metric: &'static str,
    pub subject_or_run: String,
    pub value: f64,
}

fn condition_order(conditions: &mut [String]) {
    let numeric = |s: &str| match s {
        "inf" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok(),
    };
    if conditions.iter().all(|c| numeric(c).is_some()) {
        conditions.sort_by(|a, b| numeric(a).unwrap().total_cmp(&numeric(b).unwrap()));
    } else {
        conditions.sort();
    }
}

/// Per-condition accuracy, entropy and confusion summary of one experiment's raw trials.
/// Practice trials are ignored.
pub fn analyze(rows: &[TrialRow]) -> Result<AnalysisReport> {
    let main: Vec<&TrialRow> = rows.iter().filter(|r| !r.is_practice).collect();
    let Some(first) = main.first() else {
        return Err(Error::invalid("no main-experiment trials to analyse"));
    };
    if let Some(other) = main.iter().find(|r| r.experiment != first.experiment) {
        return Err(Error::invalid(format!("mixed experiments {} and {}; analyse them separately", first.experiment, other.experiment)));
    }
    let mut by_condition: BTreeMap<&str, Vec<&TrialRow>> = BTreeMap::new();
    for r in &main {
        by_condition.entry(&r.condition).or_default().push(r);
    }
    let mut names: Vec<String> = by_condition.keys().map(|s| s.to_string()).collect();
    condition_order(&mut names);

    let conditions = names
        .iter()
        .map(|name| {
            let trials = &by_condition[name.as_str()];
            let mut by_observer: BTreeMap<&str, Vec<&TrialRow>> = BTreeMap::new();
            for t in trials {
                by_observer.entry(&t.subject_or_run).or_default().push(t);
            }
            let mut dists = Vec::new();
            let observers: Vec<ObserverSummary> = by_observer
                .iter()
                .map(|(subject, ts)| {
                    let dist = ResponseDistribution::from_trials(ts.iter().copied());
                    dists.push(dist);
                    ObserverSummary {
                        subject_or_run: subject.to_string(),
                        trials: dist.total(),
                        no_response: dist.no_response(),
                        accuracy: accuracy(ts.iter().copied()),
                        entropy: response_entropy(&dist),
                    }
                })
                .collect();
            let accs: Vec<f64> = observers.iter().filter_map(|o| o.accuracy).collect();
            let counted: Vec<(ResponseDistribution, &ObserverSummary)> =
                dists.into_iter().zip(&observers).filter(|(d, _)| d.total() > 0).collect();
            let dists: Vec<ResponseDistribution> = counted.iter().map(|(d, _)| *d).collect();
            let mut pooled = ResponseDistribution::default();
            dists.iter().for_each(|d| pooled.merge(d));
            ConditionReport {
                condition: name.clone(),
                trials: pooled.total(),
                no_response: pooled.no_response(),
                adapter_errors: trials.iter().filter(|t| t.response == Response::AdapterError).count() as u64,
                accuracy_mean: (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64),
                accuracy_range: Range::of(accs.iter().copied()),
                mean_observer_entropy: mean_observer_entropy(&dists).ok(),
                entropy_range: Range::of(counted.iter().map(|(_, o)| o.entropy)),
                observers,
                confusion: ConfusionMatrix::from_trials(trials.iter().copied()),
            }
        })
        .collect();

    Ok(AnalysisReport {
        experiment: first.experiment.clone(),
        entropy_rule: ENTROPY_RULE,
        error_bars: "range",
        conditions,
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One `(file name, csv text)` pair per condition.
    pub fn confusion_csvs(&self) -> Vec<(String, String)> {
        self.conditions
            .iter()
            .map(|c| {
                let safe: String = c.condition.chars().map(|ch| if ch.is_ascii_alphanumeric() || ch == '.' || ch == '-' { ch } else { '_' }).collect();
                (format!("confusion_{}_{safe}.csv", self.experiment), c.confusion.to_csv())
            })
            .collect()
    }

    pub fn long_rows(&self) -> Vec<LongRow> {
        let mut out = Vec::new();
        for c in &self.conditions {
            let mut push = |metric, subject: &str, value: Option<f64>| {
                if let Some(value) = value {
                    out.push(LongRow { condition: c.condition.clone(), metric, subject_or_run: subject.to_string(), value });
                }
            };
            for o in &c.observers {
                push("accuracy", &o.subject_or_run, o.accuracy);
                if o.trials > 0 {
                    push("entropy", &o.subject_or_run, Some(o.entropy));
                }
            }
            push("accuracy_mean", "all", c.accuracy_mean);
            push("accuracy_min", "all", c.accuracy_range.map(|r| r.min));
            push("accuracy_max", "all", c.accuracy_range.map(|r| r.max));
            push("mean_observer_entropy", "all", c.mean_observer_entropy);
            push("entropy_min", "all", c.entropy_range.map(|r| r.min));
            push("entropy_max", "all", c.entropy_range.map(|r| r.max));
        }
        out
    }

    pub fn long_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.long_rows() {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tests::trial;
    use crate::taxonomy::Category;

    #[test]
    fn ranges_and_observer_entropy() {
        let mut rows = Vec::new();
        for c in Category::ALL {
            rows.push(trial("a", "0.1", c, Response::Category(c)));
            rows.push(trial("b", "0.1", c, Response::Category(Category::Dog)));
            rows.push(trial("a", "0.05", c, Response::NoResponse));
        }
        let mut p = trial("a", "0.1", Category::Cat, Response::Category(Category::Bird));
        p.is_practice = true;
        rows.push(p);

        let report = analyze(&rows).unwrap();
        assert_eq!(report.error_bars, "range");
        let conds: Vec<&str> = report.conditions.iter().map(|c| c.condition.as_str()).collect();
        assert_eq!(conds, ["0.05", "0.1"]);

        let c = &report.conditions[1];
        assert_eq!(c.trials, 32);
        assert_eq!(c.accuracy_range, Some(Range { min: 1.0 / 16.0, max: 1.0 }));
        assert_eq!(c.accuracy_mean, Some((1.0 + 1.0 / 16.0) / 2.0));
        assert_eq!(c.mean_observer_entropy, Some(2.0));
        assert_eq!(c.confusion.column_sums(), [2; 16]);

        let c = &report.conditions[0];
        assert_eq!(c.accuracy_mean, Some(0.0));
        assert_eq!(c.no_response, 16);
        assert_eq!(c.mean_observer_entropy, Some(0.0));

        let long = report.long_csv().unwrap();
        assert!(long.starts_with("condition,metric,subject_or_run,value\n"));
        assert!(long.contains("0.1,accuracy,b,0.0625\n"));
        assert!(long.contains("0.1,mean_observer_entropy,all,2.0\n"));
        assert_eq!(report.confusion_csvs()[1].0, "confusion_toy_0.1.csv");
        assert!(report.to_json().unwrap().contains("excludes no-response"));
    }

    #[test]
    fn mixed_experiments_rejected() {
        let mut b = trial("a", "1", Category::Cat, Response::NoResponse);
        b.experiment = "other".into();
        assert!(analyze(&[trial("a", "1", Category::Cat, Response::NoResponse), b]).is_err());
        assert!(analyze(&[]).is_err());
    }
}
