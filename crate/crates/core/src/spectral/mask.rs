//! 1/f ("pink") noise masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::{ClipReport, ImageBuffer};
use crate::rng::StreamKey;
use crate::spectral::fft::fft2;
use rustfft::num_complex::Complex64;

/// Provenance text for the enhanced mask.
pub const ENHANCEMENT_RULE: &str =
    "enhanced mask: deviations from the mean grey multiplied by four, values greater than 1 or smaller than 0 clipped to 1 or 0";

const MASK_STREAM: u64 = 0x4D41_534B; // "MASK"

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    /// Mean grey level of the mask (usually the corpus mean grey).
    pub mean_grey: f64,
    /// Standard deviation of the unenhanced mask's pixel values.
    pub rms_contrast: f64,
    /// Multiplier applied to deviations from `mean_grey` when enhancing.
    pub enhancement: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        MaskParams {
            mean_grey: 0.4423,
            rms_contrast: 0.2,
            enhancement: 4.0,
        }
    }
}

/// Square noise image with amplitude exactly `1/f` (zero at DC) and random phases taken
/// from the spectrum of seeded white noise, so conjugate symmetry holds by construction.
pub fn pink_noise_mask(side: usize, key: StreamKey, enhance: bool, params: &MaskParams) -> Result<(ImageBuffer, ClipReport)> {
    if side < 2 {
        return Err(Error::invalid("mask side must be at least 2"));
    }
    let n = side * side;
    let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(key.normal_at(MASK_STREAM, i as u64), 0.0)).collect();
    fft2(&mut buf, side, side, false);
    for r in 0..side {
        for c in 0..side {
            let fy = if r <= side / 2 { r as f64 } else { r as f64 - side as f64 };
            let fx = if c <= side / 2 { c as f64 } else { c as f64 - side as f64 };
            let f = (fx * fx + fy * fy).sqrt();
            let z = &mut buf[r * side + c];
            *z = if f == 0.0 || z.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { *z / z.norm() / f };
        }
    }
    fft2(&mut buf, side, side, true);
    let raw: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let gain = if enhance { params.enhancement } else { 1.0 };
    let values: Vec<f64> = raw
        .iter()
        .map(|v| params.mean_grey + gain * params.rms_contrast * (v - mean) / sd)
        .collect();
    let mut img = ImageBuffer::from_f64_plane(side, side, &values)?;
    let report = img.clip();
    Ok((img, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fft_decompose;
    use crate::spectral::mean::radial_profile;

    /// Least-squares slope of log amplitude against log radial frequency.
    pub(crate) fn loglog_slope(img: &ImageBuffer, lo: usize, hi: usize) -> f64 {
        let s = fft_decompose(img).unwrap();
        let prof = radial_profile(s.amplitudes(), s.width(), s.height());
        let pts: Vec<(f64, f64)> = (lo..=hi).map(|f| ((f as f64).ln(), prof[f].ln())).collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn slope_is_minus_one() {
        let (img, _) = pink_noise_mask(128, StreamKey(1), false, &MaskParams::default()).unwrap();
        let slope = loglog_slope(&img, 4, 48);
        assert!((slope + 1.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn unenhanced_mean_matches_background() {
        let p = MaskParams { mean_grey: 0.454, ..MaskParams::default() };
        let (img, _) = pink_noise_mask(128, StreamKey(2), false, &p).unwrap();
        assert!((img.mean() - 0.454).abs() < 0.01);
    }

    #[test]
    fn enhanced_mask_clips_both_ends() {
        let (img, report) = pink_noise_mask(128, StreamKey(3), true, &MaskParams::default()).unwrap();
        assert!(report.clipped > 0);
        assert!(img.data().iter().any(|&v| v == 0.0));
        assert!(img.data().iter().any(|&v| v == 1.0));
    }

    #[test]
    fn masks_are_seeded() {
        let p = MaskParams::default();
        assert_eq!(pink_noise_mask(32, StreamKey(4), true, &p).unwrap(), pink_noise_mask(32, StreamKey(4), true, &p).unwrap());
        assert_ne!(pink_noise_mask(32, StreamKey(4), true, &p).unwrap().0, pink_noise_mask(32, StreamKey(5), true, &p).unwrap().0);
        assert!(pink_noise_mask(1, StreamKey(4), false, &p).is_err());
    }
}
