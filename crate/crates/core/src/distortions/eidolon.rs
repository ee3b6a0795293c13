//! Partially coherent multi-scale disarray ("eidolon-variant").
//!
//! The image is split into difference-of-Gaussian bands at scales 1, 2, 4, … plus a
//! low-pass residual; the bands sum back to the image exactly. Every band is warped by
//! its own smooth random displacement field and the warped bands are summed.
//!
//! A displacement field is white noise low-pass filtered at scale `grain` and scaled to
//! RMS `reach` pixels per axis. Band `k` uses
//! `(coherence · shared + (1 − coherence) · independent_k) / sqrt(coherence² + (1 − coherence)²)`,
//! so `coherence = 1` gives every band the same field and `coherence = 0` gives each
//! band its own.

use serde::{Deserialize, Serialize};

use crate::distortions::filter::blur_plane;
use crate::error::{Error, Result};
use crate::pixel::{ClipReport, ImageBuffer};
use crate::rng::StreamKey;

pub const EIDOLON_VARIANT_ID: &str = "eidolon-variant/dog-bands+smooth-displacement/v1";

const SHARED_FIELD: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EidolonParams {
    pub reach: f64,
    pub coherence: f64,
    pub grain: f64,
}

impl EidolonParams {
    fn validate(&self) -> Result<()> {
        if !(self.reach > 0.0) || !(self.grain > 0.0) || !(0.0..=1.0).contains(&self.coherence) {
            return Err(Error::invalid(format!(
                "eidolon needs reach > 0, grain > 0 and coherence in [0, 1], got {:?}",
                self
            )));
        }
        Ok(())
    }
}

/// Per-pixel displacement in pixels, `dx` along columns and `dy` along rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

/// Number of band-pass levels for an image whose smaller side is `side`.
pub fn band_count(side: usize) -> usize {
    let mut levels = 1;
    while (1usize << (levels + 1)) <= side / 4 {
        levels += 1;
    }
    levels
}

/// Difference-of-Gaussian bands followed by the low-pass residual.
pub fn decompose(values: &[f64], width: usize, height: usize) -> Vec<Vec<f64>> {
    let levels = band_count(width.min(height));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut previous = values.to_vec();
    let mut bands = Vec::with_capacity(levels + 1);
    for k in 1..=levels {
        let blurred = blur_plane(values, width, height, (1u64 << k) as f64 / 2.0, mean);
        bands.push(previous.iter().zip(&blurred).map(|(a, b)| a - b).collect());
        previous = blurred;
    }
    bands.push(previous);
    bands
}

fn smooth_noise(key: StreamKey, width: usize, height: usize, grain: f64) -> Vec<f64> {
    let white: Vec<f64> = (0..width * height).map(|i| key.normal_at(0, i as u64)).collect();
    let mut smooth = blur_plane(&white, width, height, grain, 0.0);
    let rms = (smooth.iter().map(|v| v * v).sum::<f64>() / smooth.len() as f64).sqrt();
    if rms > 0.0 {
        smooth.iter_mut().for_each(|v| *v /= rms);
    }
    smooth
}

/// Displacement fields for every band (the residual included), exposed for inspection.
pub fn displacement_fields(width: usize, height: usize, params: &EidolonParams, key: StreamKey) -> Result<Vec<DisplacementField>> {
    params.validate()?;
    let count = band_count(width.min(height)) + 1;
    let shared_key = key.child(SHARED_FIELD);
    let shared_x = smooth_noise(shared_key.child(0), width, height, params.grain);
    let shared_y = smooth_noise(shared_key.child(1), width, height, params.grain);
    let c = params.coherence;
    let norm = (c * c + (1.0 - c) * (1.0 - c)).sqrt();
    let mut fields = Vec::with_capacity(count);
    for band in 0..count {
        if c == 1.0 {
            fields.push(DisplacementField {
                dx: shared_x.iter().map(|v| v * params.reach).collect(),
                dy: shared_y.iter().map(|v| v * params.reach).collect(),
            });
            continue;
        }
        let own = key.child(band as u64);
        let ix = smooth_noise(own.child(0), width, height, params.grain);
        let iy = smooth_noise(own.child(1), width, height, params.grain);
        let blend = |s: &[f64], i: &[f64]| -> Vec<f64> {
            s.iter().zip(i).map(|(s, i)| params.reach * (c * s + (1.0 - c) * i) / norm).collect()
        };
        fields.push(DisplacementField { dx: blend(&shared_x, &ix), dy: blend(&shared_y, &iy) });
    }
    Ok(fields)
}

/// Bilinear sampling at displaced positions, clamped to the image border.
fn warp(values: &[f64], width: usize, height: usize, field: &DisplacementField) -> Vec<f64> {
    let at = |r: usize, c: usize| values[r * width + c];
    let mut out = vec![0.0; width * height];
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let y = (r as f64 + field.dy[i]).clamp(0.0, (height - 1) as f64);
            let x = (c as f64 + field.dx[i]).clamp(0.0, (width - 1) as f64);
            let (y0, x0) = (y.floor() as usize, x.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(height - 1), (x0 + 1).min(width - 1));
            let (ty, tx) = (y - y0 as f64, x - x0 as f64);
            out[i] = (1.0 - ty) * ((1.0 - tx) * at(y0, x0) + tx * at(y0, x1)) + ty * ((1.0 - tx) * at(y1, x0) + tx * at(y1, x1));
        }
    }
    out
}

pub fn eidolon(img: &ImageBuffer, params: &EidolonParams, key: StreamKey) -> Result<(ImageBuffer, ClipReport)> {
    img.require_channels(1)?;
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let bands = decompose(&img.plane_f64(0), w, h);
    let fields = displacement_fields(w, h, params, key)?;
    let mut sum = vec![0.0; w * h];
    for (band, field) in bands.iter().zip(&fields) {
        for (s, v) in sum.iter_mut().zip(warp(band, w, h, field)) {
            *s += v;
        }
    }
    let mut out = ImageBuffer::from_f64_plane(w, h, &sum)?;
    let report = out.clip();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fft::tests::natural_image;

    fn params(reach: f64, coherence: f64) -> EidolonParams {
        EidolonParams { reach, coherence, grain: 10.0 }
    }

    /// Global structural similarity (single window).
    fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
        let n = a.data().len() as f64;
        let ma = a.mean();
        let mb = b.mean();
        let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.data().iter().zip(b.data()) {
            let (dx, dy) = (x as f64 - ma, y as f64 - mb);
            va += dx * dx;
            vb += dy * dy;
            cov += dx * dy;
        }
        let (va, vb, cov) = (va / n, vb / n, cov / n);
        let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
        ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
    }

    #[test]
    fn bands_sum_to_image() {
        let img = natural_image(64, 1);
        let bands = decompose(&img.plane_f64(0), 64, 64);
        assert_eq!(bands.len(), band_count(64) + 1);
        for i in 0..64 * 64 {
            let s: f64 = bands.iter().map(|b| b[i]).sum();
            assert!((s - img.data()[i] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_reach_is_identity() {
        let img = natural_image(64, 2);
        let (out, _) = eidolon(&img, &params(1e-6, 0.3), StreamKey(1)).unwrap();
        let rms = (img.data().iter().zip(out.data()).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>() / 4096.0).sqrt();
        assert!(rms < 1e-3, "{rms}");
    }

    #[test]
    fn full_coherence_shares_one_field() {
        let fields = displacement_fields(64, 64, &params(8.0, 1.0), StreamKey(2)).unwrap();
        assert!(fields.len() > 1);
        assert!(fields.windows(2).all(|w| w[0] == w[1]));
        let partial = displacement_fields(64, 64, &params(8.0, 0.3), StreamKey(2)).unwrap();
        assert_ne!(partial[0], partial[1]);
    }

    #[test]
    fn field_rms_equals_reach() {
        for c in [0.0, 0.3, 1.0] {
            let fields = displacement_fields(64, 64, &params(4.0, c), StreamKey(3)).unwrap();
            let rms = (fields[0].dx.iter().map(|v| v * v).sum::<f64>() / 4096.0).sqrt();
            // the blend of two unit-RMS fields is only unit-RMS on average
            assert!((rms - 4.0).abs() < 1.0, "c={c}: {rms}");
        }
    }

    #[test]
    fn degradation_grows_with_reach() {
        let img = natural_image(128, 4);
        let s: Vec<f64> = [1.0, 8.0, 128.0]
            .iter()
            .map(|&r| ssim(&img, &eidolon(&img, &params(r, 0.0), StreamKey(4)).unwrap().0))
            .collect();
        assert!(s[0] > s[1] && s[1] > s[2], "{s:?}");
    }

    #[test]
    fn invalid_parameters_rejected() {
        let img = natural_image(16, 5);
        assert!(eidolon(&img, &params(0.0, 0.5), StreamKey(0)).is_err());
        assert!(eidolon(&img, &EidolonParams { reach: 1.0, coherence: 0.5, grain: 0.0 }, StreamKey(0)).is_err());
        assert!(eidolon(&img, &params(1.0, 1.5), StreamKey(0)).is_err());
    }

    #[test]
    fn deterministic() {
        let img = natural_image(32, 6);
        let p = params(16.0, 0.3);
        assert_eq!(eidolon(&img, &p, StreamKey(9)).unwrap(), eidolon(&img, &p, StreamKey(9)).unwrap());
    }
}
