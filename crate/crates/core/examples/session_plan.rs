//! Builds a counterbalanced session plan for one observer and drives the timed trial
//! state machine with simulated ticks and clicks.

use distortion_lab::harness::ExperimentConfig;
use distortion_lab::rng::StreamKey;
use distortion_lab::session::{build_plan, Event, SessionState, Status};
use distortion_lab::taxonomy::Category;
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let corpus: Vec<(String, Category)> =
        Category::ALL.iter().flat_map(|c| (0..100).map(move |i| (format!("{}_{i:03}", c.name()), *c))).collect();
    let config = ExperimentConfig::preset("uniform_noise")?;
    let plan = build_plan(&config, &corpus, 4)?;
    println!(
        "{} practice + {} main trials in {} blocks; breaks after trials {:?}",
        plan.practice_count,
        plan.main_trials().len(),
        plan.block_count(),
        plan.break_after()
    );
    let counts = plan.cell_counts();
    println!("{} cells, between {} and {} trials each", counts.len(), counts.values().min().unwrap(), counts.values().max().unwrap());

    let key = StreamKey(8);
    let mut state = SessionState::new(plan.clone());
    let mut feedback = Vec::new();
    while !state.is_finished() {
        if state.status() == Status::Break {
            feedback.push(state.block_feedback().unwrap_or(0.0));
            state.advance(Event::Continue)?;
        }
        let i = state.cursor() as u64;
        let truth = plan.trials[state.cursor()].category;
        state.advance(Event::Tick { ms: 700 })?;
        if key.uniform_at(i, 0) < 0.9 {
            let guess = if key.uniform_at(i, 1) < 0.7 { truth } else { Category::ALL[(key.uniform_at(i, 2) * 16.0) as usize] };
            state.advance(Event::Click { category: guess, t_ms: 300 + (key.uniform_at(i, 3) * 1000.0) as i64 })?;
        }
        state.advance(Event::Tick { ms: 1500 })?;
    }
    feedback.push(state.block_feedback().unwrap_or(0.0));
    let pct: Vec<String> = feedback.iter().map(|f| format!("{:.0}%", 100.0 * f)).collect();
    println!("block feedback: {}", pct.join(" "));
    let replay = SessionState::replay(plan, state.events())?;
    println!("replayed {} events, identical records: {}", state.events().len(), replay.records() == state.records());
    Ok(())
}

fn main() {
    run_example().expect("session plan example failed");
}
