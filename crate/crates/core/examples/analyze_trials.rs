//! Summarises raw trials from two simulated observers: accuracy ranges, mean observer
//! entropy, confusion matrices and the long-format table.

use distortion_lab::metrics::{analyze, response_entropy, ConfusionMatrix, ResponseDistribution};
use distortion_lab::rng::StreamKey;
use distortion_lab::taxonomy::Category;
use distortion_lab::trial::{Response, TrialRow};
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let mut rows = Vec::new();
    for (s, subject) in ["observer-a", "observer-b"].iter().enumerate() {
        let key = StreamKey(s as u64);
        for (j, condition) in ["0.0", "0.35", "0.9"].iter().enumerate() {
            for t in 0..160u64 {
                let truth = Category::ALL[(t % 16) as usize];
                let u = key.uniform_at(j as u64, t);
                let response = if u < 0.05 {
                    Response::NoResponse
                } else if u < 0.95 - 0.3 * j as f64 {
                    Response::Category(truth)
                } else {
                    Response::Category(if s == 0 { Category::Bottle } else { Category::ALL[(t * 7 % 16) as usize] })
                };
                rows.push(TrialRow {
                    experiment: "uniform_noise".into(),
                    subject_or_run: subject.to_string(),
                    session: 1,
                    block: 1,
                    trial: rows.len() as u32 + 1,
                    image_id: format!("img-{s}-{j}-{t}"),
                    condition: condition.to_string(),
                    true_category: truth,
                    response,
                    rt_ms: response.category().map(|_| 500 + (u * 900.0) as u32),
                    is_practice: false,
                });
            }
        }
    }
    let report = analyze(&rows)?;
    for c in &report.conditions {
        let r = c.accuracy_range.expect("two observers");
        println!(
            "w = {:<5} accuracy {:.3} (range {:.3}..{:.3}), mean observer entropy {:.3} bits, {} no-response",
            c.condition,
            c.accuracy_mean.unwrap_or(f64::NAN),
            r.min,
            r.max,
            c.mean_observer_entropy.unwrap_or(f64::NAN),
            c.no_response
        );
    }
    let hardest: Vec<&TrialRow> = rows.iter().filter(|r| r.condition == "0.9").collect();
    let pooled = ResponseDistribution::from_trials(hardest.iter().copied());
    println!("pooled entropy at w = 0.9: {:.3} bits", response_entropy(&pooled));
    let m = ConfusionMatrix::from_trials(hardest.iter().copied());
    println!("{}", m.to_csv().lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("{}", report.long_csv()?.lines().take(5).collect::<Vec<_>>().join("\n"));
    Ok(())
}

fn main() {
    run_example().expect("analysis example failed");
}
