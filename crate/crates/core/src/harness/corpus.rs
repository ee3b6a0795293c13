use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distortions::{apply, DistortionContext, DistortionSpec, Provenance, DEFAULT_MEAN_GREY};
use crate::error::{Error, Result};
use crate::pixel::ingest::{ingest_manifest, read_manifest, DatasetStats, IngestOutcome, IngestRules, ManifestEntry};
use crate::pixel::{io, preprocess, MonitorModel};
use crate::spectral::MeanAmplitudeSpectrum;
use crate::taxonomy::Category;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusImage {
    pub image_id: String,
    pub category: Category,
    pub path: PathBuf,
}

/// Retained images plus the corpus statistics some manipulations need.
#[derive(Debug, Clone)]
pub struct Corpus {
    images: Vec<CorpusImage>,
    pub mean_grey: f64,
    pub spectrum: Option<MeanAmplitudeSpectrum>,
    pub monitor: MonitorModel,
}

/// Corpus statistics written by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub side: usize,
    pub mean_grey: f64,
    pub retained: usize,
    pub excluded: usize,
    pub mean_of_means: f64,
    pub sd_of_means: f64,
}

impl Corpus {
    /// Sorts images by id and rejects duplicates.
    pub fn new(mut images: Vec<CorpusImage>, mean_grey: f64) -> Result<Self> {
        images.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let mut seen = BTreeSet::new();
        for img in &images {
            if !seen.insert(&img.image_id) {
                return Err(Error::invalid(format!("duplicate image id {}", img.image_id)));
            }
        }
        Ok(Corpus { images, mean_grey, spectrum: None, monitor: MonitorModel::default() })
    }

    pub fn from_entries(entries: &[ManifestEntry], mean_grey: f64) -> Result<Self> {
        let images = entries
            .iter()
            .map(|e| Ok(CorpusImage { image_id: e.image_id.clone(), category: e.category.parse()?, path: e.path.clone() }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(images, mean_grey)
    }

    /// Reads a manifest of already-ingested images.
    pub fn load(manifest: &Path, mean_grey: Option<f64>) -> Result<Self> {
        Self::from_entries(&read_manifest(manifest)?, mean_grey.unwrap_or(DEFAULT_MEAN_GREY))
    }

    /// Decodes and filters a raw manifest; the corpus keeps the retained images and
    /// takes its background grey from their mean.
    pub fn ingest(entries: &[ManifestEntry], rules: &IngestRules, side: usize) -> Result<(Self, IngestOutcome, CorpusStats)> {
        let (outcome, by_id) = ingest_manifest(entries, rules, side);
        let stats = DatasetStats::from_summaries(&outcome.retained);
        let retained: Vec<ManifestEntry> = outcome.retained.iter().map(|s| by_id[&s.image_id].clone()).collect();
        let corpus = Self::from_entries(&retained, stats.mean_grey)?;
        let summary = CorpusStats {
            side,
            mean_grey: stats.mean_grey,
            retained: outcome.retained.len(),
            excluded: outcome.excluded.len(),
            mean_of_means: outcome.mean_of_means,
            sd_of_means: outcome.sd_of_means,
        };
        Ok((corpus, outcome, summary))
    }

    pub fn with_spectrum(mut self, spectrum: MeanAmplitudeSpectrum) -> Self {
        self.spectrum = Some(spectrum);
        self
    }

    pub fn images(&self) -> &[CorpusImage] {
        &self.images
    }

    pub fn manifest_entries(&self) -> Vec<ManifestEntry> {
        self.images
            .iter()
            .map(|i| ManifestEntry { image_id: i.image_id.clone(), path: i.path.clone(), category: i.category.name().into() })
            .collect()
    }

    pub fn labelled(&self) -> Vec<(String, Category)> {
        self.images.iter().map(|i| (i.image_id.clone(), i.category)).collect()
    }

    pub fn get(&self, image_id: &str) -> Option<&CorpusImage> {
        self.images.binary_search_by(|i| i.image_id.as_str().cmp(image_id)).ok().map(|k| &self.images[k])
    }

    pub fn context(&self, experiment_seed: u64) -> DistortionContext<'_> {
        let mut ctx = DistortionContext::new(experiment_seed, &self.monitor);
        ctx.mean_grey = self.mean_grey;
        ctx.target_spectrum = self.spectrum.as_ref();
        ctx
    }

    /// Loads, preprocesses to `side`, distorts and PNG-encodes one stimulus.
    pub fn render(&self, image: &CorpusImage, spec: &DistortionSpec, side: usize, experiment_seed: u64) -> Result<(Vec<u8>, Provenance)> {
        let decoded = io::load(&image.path)?;
        let (img, _) = preprocess(&decoded.image, side)?;
        let out = apply(&img, &image.image_id, spec, &self.context(experiment_seed))?;
        Ok((io::encode_png(&out.image)?, out.provenance))
    }
}
