//! Maps 1000-class scores to the 16 entry-level categories and turns them into
//! decisions, by argmax and by temperature sampling.

use distortion_lab::metrics::prediction_entropy;
use distortion_lab::taxonomy::{decide, sample_decision, tempered_distribution, Category, CategoryMap, ClassScores};
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let map = CategoryMap::bundled();
    let coverage = map.coverage();
    println!("bundled map: {coverage:?}");
    for cat in [Category::Dog, Category::Bird, Category::Knife] {
        println!("{cat:>8}: {} fine labels", map.members(cat).len());
    }

    let mut scores = vec![0.0; 1000];
    for (k, &i) in map.members(Category::Cat).iter().enumerate() {
        scores[i] = 0.05 / (k + 1) as f64;
    }
    let dogs = map.members(Category::Dog);
    scores[dogs[0]] = 0.08;
    let rest = 1.0 - scores.iter().sum::<f64>();
    let free: Vec<usize> = (0..1000).filter(|&i| scores[i] == 0.0).collect();
    for &i in &free {
        scores[i] = rest / free.len() as f64;
    }
    let scores = ClassScores::new(scores)?;
    println!("prediction entropy {:.3} bits (max {:.3})", prediction_entropy(&scores)?, 1000f64.log2());

    let agg = map.aggregate(scores.as_slice())?;
    println!("argmax decision: {}", decide(&agg)?);
    for t in [0.5, 1.0, 4.0] {
        let p = tempered_distribution(&agg, t)?;
        let draws: Vec<String> = (0..8).map(|s| sample_decision(&agg, t, s).map(|c| c.to_string())).collect::<Result<_>>()?;
        println!("T = {t}: p(cat) = {:.3}, p(dog) = {:.3}, draws {}", p[Category::Cat.index()], p[Category::Dog.index()], draws.join(" "));
    }
    Ok(())
}

fn main() {
    run_example().expect("decision example failed");
}
