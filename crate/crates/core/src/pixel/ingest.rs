//! Corpus manifests, exclusion rules and dataset statistics.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::{io, preprocess, to_greyscale, ImageBuffer};
use crate::spectral::MeanAmplitudeSpectrum;

/// One line of a corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub path: PathBuf,
    pub category: String,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut entry: ManifestEntry = serde_json::from_str(&line)
            .map_err(|e| Error::parse("manifest", format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for row in rows {
        serde_json::to_writer(&mut f, row)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    Greyscale,
    TooSmall,
    MeanOutlier,
    DecodeError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub image_id: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRules {
    /// Minimum width and height before cropping.
    pub min_side: usize,
    /// Outlier threshold in population standard deviations of the per-image means.
    pub max_sd: f64,
    pub exclude_greyscale: bool,
}

impl Default for IngestRules {
    fn default() -> Self {
        IngestRules {
            min_side: 256,
            max_sd: 2.0,
            exclude_greyscale: true,
        }
    }
}

/// What the exclusion rules need to know about one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub greyscale: bool,
    /// Mean grey level of the preprocessed (cropped, resampled, greyscale) image.
    pub mean: f64,
}

impl ImageSummary {
    /// Summarises a decoded image; 3-channel images whose channels agree everywhere
    /// count as greyscale.
    pub fn of(image_id: impl Into<String>, img: &ImageBuffer, source_channels: usize, side: usize) -> Result<Self> {
        let greyscale = source_channels == 1
            || img.channels() == 1
            || (0..img.pixels_per_plane()).all(|i| img.plane(0)[i] == img.plane(1)[i] && img.plane(1)[i] == img.plane(2)[i]);
        let small_side = img.width().min(img.height());
        let mean = if small_side >= side {
            let (p, _) = preprocess(img, side)?;
            if p.channels() == 3 { to_greyscale(&p)?.mean() } else { p.mean() }
        } else if img.channels() == 3 {
            to_greyscale(img)?.mean()
        } else {
            img.mean()
        };
        Ok(ImageSummary {
            image_id: image_id.into(),
            width: img.width(),
            height: img.height(),
            greyscale,
            mean,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub retained: Vec<ImageSummary>,
    pub excluded: Vec<Exclusion>,
    pub mean_of_means: f64,
    pub sd_of_means: f64,
}

/// Applies greyscale, size and mean-outlier exclusion, in that order.
///
/// Outputs are sorted by image id, so the result does not depend on input order.
pub fn ingest_filter(images: &[ImageSummary], rules: &IngestRules) -> IngestOutcome {
    let mut sorted: Vec<&ImageSummary> = images.iter().collect();
    sorted.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let mut excluded = Vec::new();
    let mut candidates = Vec::new();
    for s in sorted {
        if rules.exclude_greyscale && s.greyscale {
            excluded.push(Exclusion { image_id: s.image_id.clone(), reason: ExclusionReason::Greyscale });
        } else if s.width < rules.min_side || s.height < rules.min_side {
            excluded.push(Exclusion { image_id: s.image_id.clone(), reason: ExclusionReason::TooSmall });
        } else {
            candidates.push(s);
        }
    }
    let n = candidates.len() as f64;
    let (mean, sd) = if candidates.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = candidates.iter().map(|s| s.mean).sum::<f64>() / n;
        let var = candidates.iter().map(|s| (s.mean - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let mut retained = Vec::new();
    for s in candidates {
        if (s.mean - mean).abs() > rules.max_sd * sd {
            excluded.push(Exclusion { image_id: s.image_id.clone(), reason: ExclusionReason::MeanOutlier });
        } else {
            retained.push(s.clone());
        }
    }
    excluded.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    IngestOutcome {
        retained,
        excluded,
        mean_of_means: mean,
        sd_of_means: sd,
    }
}

/// Corpus-level statistics of the retained images.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub mean_grey: f64,
    /// `(image_id, mean)` sorted by id.
    pub per_image_means: Vec<(String, f64)>,
    pub mean_amplitude_spectrum: Option<MeanAmplitudeSpectrum>,
}

impl DatasetStats {
    pub fn from_summaries(retained: &[ImageSummary]) -> Self {
        let mut per_image_means: Vec<(String, f64)> =
            retained.iter().map(|s| (s.image_id.clone(), s.mean)).collect();
        per_image_means.sort_by(|a, b| a.0.cmp(&b.0));
        let mean_grey = if per_image_means.is_empty() {
            0.0
        } else {
            per_image_means.iter().map(|(_, m)| m).sum::<f64>() / per_image_means.len() as f64
        };
        DatasetStats {
            mean_grey,
            per_image_means,
            mean_amplitude_spectrum: None,
        }
    }
}

/// Decodes every manifest entry and runs [`ingest_filter`]; unreadable files are excluded
/// with [`ExclusionReason::DecodeError`].
pub fn ingest_manifest(entries: &[ManifestEntry], rules: &IngestRules, side: usize) -> (IngestOutcome, BTreeMap<String, ManifestEntry>) {
    use rayon::prelude::*;
    let results: Vec<(String, Result<ImageSummary>)> = entries
        .par_iter()
        .map(|e| {
            let summary = io::load(&e.path).and_then(|d| ImageSummary::of(e.image_id.clone(), &d.image, d.source_channels, side));
            (e.image_id.clone(), summary)
        })
        .collect();
    let mut summaries = Vec::new();
    let mut decode_failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(err) => {
                log::warn!("excluding {id}: {err}");
                decode_failures.push(Exclusion { image_id: id, reason: ExclusionReason::DecodeError });
            }
        }
    }
    let mut outcome = ingest_filter(&summaries, rules);
    outcome.excluded.extend(decode_failures);
    outcome.excluded.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let by_id = entries.iter().map(|e| (e.image_id.clone(), e.clone())).collect();
    (outcome, by_id)
}
