//! Sweeps the softmax temperature of decision sampling and prints how accuracy trades
//! against response entropy.

use distortion_lab::metrics::tradeoff_sweep;
use distortion_lab::rng::StreamKey;
use distortion_lab::taxonomy::{Category, CategoryScores};
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let key = StreamKey(99);
    let trials: Vec<(CategoryScores, Category)> = (0..10_000u64)
        .map(|i| {
            let truth = Category::ALL[(i % 16) as usize];
            let mut s = [0.0; 16];
            for (k, v) in s.iter_mut().enumerate() {
                *v = 0.01 + 0.02 * key.uniform_at(i, k as u64);
            }
            let biased = if key.uniform_at(i, 99) < 0.6 { truth } else { Category::ALL[(key.uniform_at(i, 98) * 3.0) as usize] };
            s[biased.index()] += 0.5;
            (CategoryScores(s), truth)
        })
        .collect();
    let temps = [1e-3, 0.1, 0.3, 1.0, 3.0, 10.0, 1e6];
    println!("{:>10} {:>9} {:>12}", "T", "accuracy", "entropy/bit");
    for p in tradeoff_sweep(&trials, &temps, 5)? {
        println!("{:>10} {:>9.4} {:>12.4}", p.temperature, p.accuracy, p.entropy);
    }
    Ok(())
}

fn main() {
    run_example().expect("tradeoff example failed");
}
