//! Corpus-mean amplitude spectrum and its on-disk format.
//!
//! File layout: a little-endian `u32` header length, a UTF-8 JSON header of that many
//! bytes, then `height × width` little-endian `f64` amplitudes in row-major, unshifted
//! order (DC first).
//!
//! ```json
//! {"format":"mean-amplitude-spectrum","version":1,"shape":[256,256],
//!  "sample_count":1200,"dtype":"f64le","layout":"row-major-unshifted"}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::ImageBuffer;
use crate::spectral::fft_decompose;

#[derive(Debug, Clone, PartialEq)]
pub struct MeanAmplitudeSpectrum {
    pub width: usize,
    pub height: usize,
    pub amplitudes: Vec<f64>,
    pub sample_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    shape: [usize; 2],
    sample_count: usize,
    dtype: String,
    layout: String,
}

const FORMAT: &str = "mean-amplitude-spectrum";

/// Pointwise mean of the amplitude spectra of `(image_id, image)` pairs.
///
/// Summation runs in image-id order, so the result is independent of input order.
pub fn mean_amplitude_spectrum(corpus: &[(String, ImageBuffer)]) -> Result<MeanAmplitudeSpectrum> {
    if corpus.is_empty() {
        return Err(Error::invalid("mean amplitude spectrum of an empty corpus"));
    }
    let mut order: Vec<&(String, ImageBuffer)> = corpus.iter().collect();
    order.sort_by(|a, b| a.0.cmp(&b.0));
    let (w, h) = (order[0].1.width(), order[0].1.height());
    let mut sum = vec![0.0f64; w * h];
    for (id, img) in order {
        if img.width() != w || img.height() != h {
            return Err(Error::ShapeMismatch(format!(
                "image {id} is {}x{}, corpus images are {w}x{h}",
                img.width(),
                img.height()
            )));
        }
        let spec = fft_decompose(img)?;
        for (s, a) in sum.iter_mut().zip(spec.amplitudes()) {
            *s += a;
        }
    }
    let n = corpus.len();
    sum.iter_mut().for_each(|s| *s /= n as f64);
    Ok(MeanAmplitudeSpectrum {
        width: w,
        height: h,
        amplitudes: sum,
        sample_count: n,
    })
}

impl MeanAmplitudeSpectrum {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            format: FORMAT.into(),
            version: 1,
            shape: [self.height, self.width],
            sample_count: self.sample_count,
            dtype: "f64le".into(),
            layout: "row-major-unshifted".into(),
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        let mut out = Vec::with_capacity(4 + json.len() + 8 * self.amplitudes.len());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for a in &self.amplitudes {
            out.extend_from_slice(&a.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |d: &str| Error::parse("spectrum file", d.to_string());
        if bytes.len() < 4 {
            return Err(bad("truncated header length"));
        }
        let hlen = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
        let header_bytes = bytes.get(4..4 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(header_bytes)?;
        if header.format != FORMAT || header.version != 1 || header.dtype != "f64le" {
            return Err(bad("unsupported format, version or dtype"));
        }
        let [height, width] = header.shape;
        let body = &bytes[4 + hlen..];
        if body.len() != 8 * width * height {
            return Err(bad(&format!("expected {} amplitude bytes, found {}", 8 * width * height, body.len())));
        }
        let amplitudes = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(MeanAmplitudeSpectrum {
            width,
            height,
            amplitudes,
            sample_count: header.sample_count,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Mean amplitude in integer-radius annuli, index = radial frequency in cycles/image.
    pub fn radial_profile(&self) -> Vec<f64> {
        radial_profile(&self.amplitudes, self.width, self.height)
    }
}

pub(crate) fn radial_profile(amplitudes: &[f64], width: usize, height: usize) -> Vec<f64> {
    let max_r = width.min(height) / 2;
    let mut sums = vec![0.0; max_r + 1];
    let mut counts = vec![0usize; max_r + 1];
    for r in 0..height {
        for c in 0..width {
            let fy = if r <= height / 2 { r as f64 } else { r as f64 - height as f64 };
            let fx = if c <= width / 2 { c as f64 } else { c as f64 - width as f64 };
            let f = (fx * fx + fy * fy).sqrt().round() as usize;
            if f <= max_r {
                sums[f] += amplitudes[r * width + c];
                counts[f] += 1;
            }
        }
    }
    sums.iter().zip(&counts).map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 }).collect()
}
