//! Builds a small on-disk corpus, ingests it and shows which images the exclusion
//! rules drop and why.

use distortion_lab::harness::Corpus;
use distortion_lab::pixel::ingest::{read_manifest, write_jsonl, ManifestEntry};
use distortion_lab::pixel::{io, IngestRules, ImageBuffer};
use distortion_lab::taxonomy::Category;
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let dir = tempfile::tempdir().map_err(|e| distortion_lab::Error::io("<tempdir>", e))?;
    let mut entries = Vec::new();
    for (i, cat) in Category::ALL.iter().enumerate() {
        let level = 0.35 + 0.01 * (i % 5) as f32;
        let (w, h, channels) = match i {
            3 => (180, 320, 3),
            7 => (300, 300, 1),
            _ => (320, 288, 3),
        };
        let level = if i == 11 { 0.95 } else { level };
        let img = ImageBuffer::from_fn(w, h, channels, |c, r, col| (level + 0.05 * c as f32 + 0.1 * (((r / 8 + col / 8) % 2) as f32 - 0.5)).clamp(0.0, 1.0))?;
        let name = format!("{}_{i:02}.png", cat.name());
        io::save_png(&img, &dir.path().join(&name))?;
        entries.push(ManifestEntry { image_id: name.clone(), path: name.into(), category: cat.name().into() });
    }
    let manifest = dir.path().join("manifest.jsonl");
    write_jsonl(&manifest, &entries)?;

    let (corpus, outcome, stats) = Corpus::ingest(&read_manifest(&manifest)?, &IngestRules::default(), 224)?;
    for e in &outcome.excluded {
        println!("excluded {:<16} {:?}", e.image_id, e.reason);
    }
    println!(
        "retained {} of {}; per-image means {:.4} ± {:.4}; background grey {:.4}",
        corpus.images().len(),
        entries.len(),
        stats.mean_of_means,
        stats.sd_of_means,
        corpus.mean_grey
    );
    Ok(())
}

fn main() {
    run_example().expect("ingest example failed");
}
