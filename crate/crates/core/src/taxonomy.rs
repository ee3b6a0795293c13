//! Entry-level categories, the 1000 → 16 label map and decision rules.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamKey;

pub const NUM_CATEGORIES: usize = 16;
pub const NUM_FINE_LABELS: usize = 1000;

/// The 16 entry-level categories, in canonical order (also the argmax tie-break order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Airplane,
    Bicycle,
    Boat,
    Car,
    Chair,
    Dog,
    Keyboard,
    Oven,
    Bear,
    Bird,
    Bottle,
    Cat,
    Clock,
    Elephant,
    Knife,
    Truck,
}

impl Category {
    pub const ALL: [Category; NUM_CATEGORIES] = [
        Category::Airplane,
        Category::Bicycle,
        Category::Boat,
        Category::Car,
        Category::Chair,
        Category::Dog,
        Category::Keyboard,
        Category::Oven,
        Category::Bear,
        Category::Bird,
        Category::Bottle,
        Category::Cat,
        Category::Clock,
        Category::Elephant,
        Category::Knife,
        Category::Truck,
    ];

    /// Row-wise order of the response-screen icons.
    pub const RESPONSE_GRID: [Category; NUM_CATEGORIES] = [
        Category::Knife,
        Category::Bicycle,
        Category::Bear,
        Category::Truck,
        Category::Airplane,
        Category::Clock,
        Category::Boat,
        Category::Car,
        Category::Keyboard,
        Category::Oven,
        Category::Cat,
        Category::Bird,
        Category::Elephant,
        Category::Chair,
        Category::Bottle,
        Category::Dog,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Category> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Airplane => "airplane",
            Category::Bicycle => "bicycle",
            Category::Boat => "boat",
            Category::Car => "car",
            Category::Chair => "chair",
            Category::Dog => "dog",
            Category::Keyboard => "keyboard",
            Category::Oven => "oven",
            Category::Bear => "bear",
            Category::Bird => "bird",
            Category::Bottle => "bottle",
            Category::Cat => "cat",
            Category::Clock => "clock",
            Category::Elephant => "elephant",
            Category::Knife => "knife",
            Category::Truck => "truck",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::parse("category", format!("unknown entry-level category {s:?}")))
    }
}

/// Summed evidence per entry-level category, indexed by [`Category::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores(pub [f64; NUM_CATEGORIES]);

impl CategoryScores {
    pub fn get(&self, c: Category) -> f64 {
        self.0[c.index()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn one_hot(c: Category) -> Self {
        let mut v = [0.0; NUM_CATEGORIES];
        v[c.index()] = 1.0;
        CategoryScores(v)
    }
}

/// Marker used in map files for fine labels that belong to no entry-level category.
pub const DISREGARDED: &str = "disregarded";

/// The map shipped with the crate: ILSVRC-2012 class indices `0..1000` as fine labels.
pub const BUNDLED_MAP: &str = include_str!("../data/imagenet_16class_map.tsv");

/// Assignment of the 1000 classifier outputs to entry-level categories.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMap {
    labels: Vec<String>,
    assignment: Vec<Option<Category>>,
}

/// Loader summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCoverage {
    pub mapped: usize,
    pub disregarded: usize,
    pub per_category: Vec<(Category, usize)>,
}

impl CategoryMap {
    /// Parses `fine_label<TAB>entry_category` lines.
    ///
    /// With `label_order = None` the fine labels must be the class indices `0..1000`.
    /// Otherwise `label_order` lists the classifier's labels by output index and every map
    /// line must name one of them; labels absent from the file are disregarded.
    pub fn parse(text: &str, label_order: Option<&[String]>) -> Result<Self> {
        let labels: Vec<String> = match label_order {
            Some(order) => order.to_vec(),
            None => (0..NUM_FINE_LABELS).map(|i| i.to_string()).collect(),
        };
        if labels.len() != NUM_FINE_LABELS {
            return Err(Error::parse("category map", format!("label order has {} entries, expected 1000", labels.len())));
        }
        let index: std::collections::HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut assignment: Vec<Option<Category>> = vec![None; NUM_FINE_LABELS];
        let mut seen = vec![false; NUM_FINE_LABELS];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (fine, entry) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("category map", format!("line {}: expected fine_label<TAB>entry_category", lineno + 1)))?;
            let &i = index
                .get(fine)
                .ok_or_else(|| Error::parse("category map", format!("line {}: unknown fine label {fine:?}", lineno + 1)))?;
            if seen[i] {
                return Err(Error::parse("category map", format!("line {}: fine label {fine:?} listed twice", lineno + 1)));
            }
            seen[i] = true;
            assignment[i] = if entry == DISREGARDED { None } else { Some(entry.parse()?) };
        }
        let map = CategoryMap { labels, assignment };
        let coverage = map.coverage();
        if let Some((c, _)) = coverage.per_category.iter().find(|(_, n)| *n == 0) {
            return Err(Error::parse("category map", format!("no fine label maps to {c}")));
        }
        Ok(map)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_MAP, None).expect("bundled map is valid")
    }

    pub fn load(path: &Path, label_order: Option<&[String]>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, label_order)
    }

    pub fn category_of(&self, fine_index: usize) -> Option<Category> {
        self.assignment.get(fine_index).copied().flatten()
    }

    pub fn label(&self, fine_index: usize) -> &str {
        &self.labels[fine_index]
    }

    /// Output indices mapped to `category`.
    pub fn members(&self, category: Category) -> Vec<usize> {
        (0..NUM_FINE_LABELS).filter(|&i| self.assignment[i] == Some(category)).collect()
    }

    pub fn disregarded(&self) -> Vec<&str> {
        (0..NUM_FINE_LABELS).filter(|&i| self.assignment[i].is_none()).map(|i| self.labels[i].as_str()).collect()
    }

    pub fn coverage(&self) -> MapCoverage {
        let per_category: Vec<(Category, usize)> = Category::ALL
            .iter()
            .map(|&c| (c, self.assignment.iter().filter(|a| **a == Some(c)).count()))
            .collect();
        let mapped = per_category.iter().map(|(_, n)| n).sum();
        MapCoverage { mapped, disregarded: NUM_FINE_LABELS - mapped, per_category }
    }

    /// Sums scores over the fine labels of each category; disregarded labels are dropped.
    pub fn aggregate(&self, scores: &[f64]) -> Result<CategoryScores> {
        if scores.len() != NUM_FINE_LABELS {
            return Err(Error::ShapeMismatch(format!("expected {NUM_FINE_LABELS} class scores, got {}", scores.len())));
        }
        let mut out = [0.0; NUM_CATEGORIES];
        for (s, a) in scores.iter().zip(&self.assignment) {
            if let Some(c) = a {
                out[c.index()] += s;
            }
        }
        Ok(CategoryScores(out))
    }
}

/// Validated classifier output over the 1000 fine labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores(Vec<f64>);

impl ClassScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.len() != NUM_FINE_LABELS {
            return Err(Error::ShapeMismatch(format!("expected {NUM_FINE_LABELS} class scores, got {}", scores.len())));
        }
        if scores.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::invalid("class scores must be finite and nonnegative"));
        }
        Ok(ClassScores(scores))
    }

    pub fn is_normalized(&self) -> bool {
        (self.0.iter().sum::<f64>() - 1.0).abs() <= 1e-6
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Entry-level category with the largest summed score; ties go to the earliest category
/// in canonical order.
pub fn decide(agg: &CategoryScores) -> Result<Category> {
    let max = agg.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::NoEvidence);
    }
    let winners: Vec<usize> = (0..NUM_CATEGORIES).filter(|&i| agg.0[i] == max).collect();
    if winners.len() > 1 {
        log::debug!("argmax tie between {:?}; taking the first", winners.iter().map(|&i| Category::ALL[i]).collect::<Vec<_>>());
    }
    Ok(Category::ALL[winners[0]])
}

/// Probabilities proportional to `agg^(1/T)`, i.e. `softmax(log(agg) / T)`.
pub fn tempered_distribution(agg: &CategoryScores, temperature: f64) -> Result<[f64; NUM_CATEGORIES]> {
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!("temperature must be > 0, got {temperature}")));
    }
    if agg.0.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("category scores must be nonnegative"));
    }
    if !(agg.0.iter().copied().fold(0.0, f64::max) > 0.0) {
        return Err(Error::NoEvidence);
    }
    let logits: Vec<f64> = agg.0.iter().map(|&v| if v > 0.0 { v.ln() / temperature } else { f64::NEG_INFINITY }).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; NUM_CATEGORIES];
    for (pi, l) in p.iter_mut().zip(&logits) {
        *pi = (l - max).exp();
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    Ok(p)
}

/// Draws a category from [`tempered_distribution`] by inverse CDF at `uniform ∈ [0, 1)`.
pub fn sample_decision_at(agg: &CategoryScores, temperature: f64, uniform: f64) -> Result<Category> {
    let p = tempered_distribution(agg, temperature)?;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, pi) in p.iter().enumerate() {
        if *pi > 0.0 {
            last_positive = i;
        }
        acc += pi;
        if uniform < acc && *pi > 0.0 {
            return Ok(Category::ALL[i]);
        }
    }
    Ok(Category::ALL[last_positive])
}

/// Seeded draw from the tempered distribution.
pub fn sample_decision(agg: &CategoryScores, temperature: f64, seed: u64) -> Result<Category> {
    sample_decision_at(agg, temperature, StreamKey(seed).uniform_at(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts_from_file() -> std::collections::HashMap<String, usize> {
        let mut counts = std::collections::HashMap::new();
        for line in BUNDLED_MAP.lines() {
            let entry = line.split('\t').nth(1).unwrap();
            *counts.entry(entry.to_string()).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn bundled_map_covers_all_categories() {
        let map = CategoryMap::bundled();
        let cov = map.coverage();
        assert!(cov.per_category.iter().all(|(_, n)| *n > 0));
        assert_eq!(cov.mapped + cov.disregarded, 1000);
        assert_eq!(map.disregarded().len(), cov.disregarded);
    }

    #[test]
    fn one_hot_on_a_dog_label() {
        let map = CategoryMap::bundled();
        let dog = map.members(Category::Dog)[0];
        let mut s = vec![0.0; 1000];
        s[dog] = 1.0;
        let agg = map.aggregate(&s).unwrap();
        assert_eq!(agg, CategoryScores::one_hot(Category::Dog));
    }

    #[test]
    fn uniform_scores_follow_label_counts() {
        let map = CategoryMap::bundled();
        let agg = map.aggregate(&vec![1.0 / 1000.0; 1000]).unwrap();
        let counts = counts_from_file();
        for c in Category::ALL {
            assert!((agg.get(c) - counts[c.name()] as f64 / 1000.0).abs() < 1e-12);
        }
        let most = Category::ALL.iter().copied().max_by_key(|c| (counts[c.name()], std::cmp::Reverse(c.index()))).unwrap();
        assert_eq!(decide(&agg).unwrap(), most);
    }

    #[test]
    fn disregarded_mass_gives_no_evidence() {
        let map = CategoryMap::bundled();
        let mut s = vec![0.0; 1000];
        for i in 0..1000 {
            if map.category_of(i).is_none() {
                s[i] = 1.0;
            }
        }
        let agg = map.aggregate(&s).unwrap();
        assert_eq!(agg.sum(), 0.0);
        assert!(matches!(decide(&agg), Err(Error::NoEvidence)));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(CategoryMap::bundled().aggregate(&[0.0; 999]).is_err());
        assert!(ClassScores::new(vec![0.0; 10]).is_err());
        assert!(ClassScores::new(vec![-1.0; 1000]).is_err());
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(&CategoryScores::one_hot(Category::Bottle)).unwrap(), Category::Bottle);
        let mut tie = [0.0; 16];
        tie[Category::Truck.index()] = 0.4;
        tie[Category::Cat.index()] = 0.4;
        assert_eq!(decide(&CategoryScores(tie)).unwrap(), Category::Cat);
    }

    #[test]
    fn map_parser_errors() {
        assert!(CategoryMap::parse("0\tdog\n", None).is_err(), "missing categories");
        let dup = format!("{BUNDLED_MAP}0\tdog\n");
        assert!(CategoryMap::parse(&dup, None).is_err());
        let bad = BUNDLED_MAP.replacen("\tknife", "\tspoon", 1);
        assert!(CategoryMap::parse(&bad, None).is_err());
    }

    #[test]
    fn custom_label_order() {
        let labels: Vec<String> = (0..1000).map(|i| format!("n{i:08}")).collect();
        let text: String = BUNDLED_MAP
            .lines()
            .map(|l| {
                let (i, c) = l.split_once('\t').unwrap();
                format!("n{:08}\t{c}\n", i.parse::<usize>().unwrap())
            })
            .collect();
        let map = CategoryMap::parse(&text, Some(&labels)).unwrap();
        assert_eq!(map, CategoryMap { labels, assignment: CategoryMap::bundled().assignment });
    }

    #[test]
    fn temperature_limits() {
        let mut v = [0.01; 16];
        v[Category::Elephant.index()] = 0.6;
        let agg = CategoryScores(v);
        for s in 0..10_000 {
            assert_eq!(sample_decision(&agg, 1e-6, s).unwrap(), Category::Elephant);
        }
        assert!(sample_decision(&agg, 0.0, 1).is_err());
        assert!(sample_decision(&agg, -1.0, 1).is_err());
    }

    #[test]
    fn two_way_split_at_unit_temperature() {
        let mut v = [0.0; 16];
        v[0] = 0.5;
        v[1] = 0.5;
        let agg = CategoryScores(v);
        let n = 10_000;
        let first = (0..n).filter(|&s| sample_decision(&agg, 1.0, s).unwrap() == Category::Airplane).count();
        let others = (0..n).filter(|&s| !matches!(sample_decision(&agg, 1.0, s).unwrap(), Category::Airplane | Category::Bicycle)).count();
        assert_eq!(others, 0);
        assert!((first as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn huge_temperature_is_uniform() {
        let mut v = [0.001; 16];
        v[5] = 0.9;
        let agg = CategoryScores(v);
        let n = 100_000u64;
        let mut counts = [0usize; 16];
        for s in 0..n {
            counts[sample_decision(&agg, 1e6, s).unwrap().index()] += 1;
        }
        let e = n as f64 / 16.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // chi-square critical value, 15 degrees of freedom, alpha = 0.01
        assert!(chi2 < 30.578, "{chi2}");
    }

    #[test]
    fn empirical_distribution_converges() {
        let v: [f64; 16] = std::array::from_fn(|i| 0.02 + i as f64 * 0.01);
        let agg = CategoryScores(v);
        let t = 0.7;
        let p = tempered_distribution(&agg, t).unwrap();
        let n = 100_000u64;
        let mut counts = [0usize; 16];
        for s in 0..n {
            counts[sample_decision(&agg, t, s).unwrap().index()] += 1;
        }
        let (mut ce, mut cp, mut ks) = (0.0, 0.0, 0.0f64);
        for i in 0..16 {
            ce += counts[i] as f64 / n as f64;
            cp += p[i];
            ks = ks.max((ce - cp).abs());
        }
        assert!(ks < 0.02, "{ks}");
    }

    proptest! {
        #[test]
        fn aggregate_is_linear(a in 0.0f64..3.0, b in 0.0f64..3.0, seed in any::<u64>()) {
            let map = CategoryMap::bundled();
            let k = StreamKey(seed);
            let s1: Vec<f64> = (0..1000).map(|i| k.uniform_at(1, i)).collect();
            let s2: Vec<f64> = (0..1000).map(|i| k.uniform_at(2, i)).collect();
            let mix: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect();
            let lhs = map.aggregate(&mix).unwrap();
            let (g1, g2) = (map.aggregate(&s1).unwrap(), map.aggregate(&s2).unwrap());
            for i in 0..16 {
                prop_assert!((lhs.0[i] - (a * g1.0[i] + b * g2.0[i])).abs() < 1e-9);
            }
            let mapped: f64 = (0..1000).filter(|&i| map.category_of(i).is_some()).map(|i| s1[i]).sum();
            prop_assert!((g1.sum() - mapped).abs() < 1e-9);
        }

        #[test]
        fn decide_is_scale_invariant(scale in 1e-6f64..1e6, seed in any::<u64>()) {
            let k = StreamKey(seed);
            let v: [f64; 16] = std::array::from_fn(|i| k.uniform_at(0, i as u64));
            let scaled: [f64; 16] = std::array::from_fn(|i| v[i] * scale);
            prop_assert_eq!(decide(&CategoryScores(v)).unwrap(), decide(&CategoryScores(scaled)).unwrap());
        }
    }
}
