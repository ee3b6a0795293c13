//! Cropping, resampling and contrast scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::ImageBuffer;

/// Largest centred square. An odd surplus leaves the extra row/column on the
/// bottom/right side, which is the side that gets dropped.
pub fn center_crop_square(img: &ImageBuffer) -> Result<ImageBuffer> {
    let side = img.width().min(img.height());
    if img.is_square() {
        return Ok(img.clone());
    }
    let left = (img.width() - side) / 2;
    let top = (img.height() - side) / 2;
    img.crop(left, top, side, side)
}

/// Resampling kernel chosen by [`downsample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleFilter {
    /// Size unchanged.
    Identity,
    /// Box average over `ratio × ratio` blocks (integer ratios).
    Area,
    /// Antialiased Lanczos window with three lobes, stretched by the reduction ratio.
    Lanczos3,
}

impl ResampleFilter {
    pub fn for_sizes(from: usize, to: usize) -> Self {
        if from == to {
            ResampleFilter::Identity
        } else if from % to == 0 {
            ResampleFilter::Area
        } else {
            ResampleFilter::Lanczos3
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn lanczos3(x: f64) -> f64 {
    if x.abs() < 3.0 {
        sinc(x) * sinc(x / 3.0)
    } else {
        0.0
    }
}

/// Per-output-sample `(first input index, weights)` for a 1-D reduction.
fn resample_weights(from: usize, to: usize, filter: ResampleFilter) -> Vec<(usize, Vec<f64>)> {
    let ratio = from as f64 / to as f64;
    (0..to)
        .map(|i| match filter {
            ResampleFilter::Identity => (i, vec![1.0]),
            ResampleFilter::Area => {
                let k = from / to;
                (i * k, vec![1.0 / k as f64; k])
            }
            ResampleFilter::Lanczos3 => {
                let center = (i as f64 + 0.5) * ratio;
                let support = 3.0 * ratio;
                let lo = ((center - support).floor().max(0.0)) as usize;
                let hi = ((center + support).ceil() as usize).min(from);
                let mut w: Vec<f64> = (lo..hi)
                    .map(|j| lanczos3((j as f64 + 0.5 - center) / ratio))
                    .collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                (lo, w)
            }
        })
        .collect()
}

/// Antialiased reduction of a square image to `side × side`, clipped to `[0, 1]`.
pub fn downsample(img: &ImageBuffer, side: usize) -> Result<(ImageBuffer, ResampleFilter)> {
    if !img.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "downsample expects a square image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let from = img.width();
    if side == 0 || side > from {
        return Err(Error::invalid(format!("cannot resample {from} px to {side} px (upsampling is not supported)")));
    }
    let filter = ResampleFilter::for_sizes(from, side);
    if filter == ResampleFilter::Identity {
        return Ok((img.clone(), filter));
    }
    let weights = resample_weights(from, side, filter);
    let mut data = Vec::with_capacity(side * side * img.channels());
    let mut horizontal = vec![0.0f64; from * side];
    for c in 0..img.channels() {
        let plane = img.plane(c);
        for r in 0..from {
            let row = &plane[r * from..(r + 1) * from];
            for (o, (start, w)) in weights.iter().enumerate() {
                horizontal[r * side + o] = w.iter().enumerate().map(|(k, wk)| wk * row[start + k] as f64).sum();
            }
        }
        for (start, w) in &weights {
            for col in 0..side {
                let v: f64 = w
                    .iter()
                    .enumerate()
                    .map(|(k, wk)| wk * horizontal[(start + k) * side + col])
                    .sum();
                data.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    Ok((ImageBuffer::new(side, side, img.channels(), data)?, filter))
}

/// Centre crop followed by [`downsample`] to `side`.
pub fn preprocess(img: &ImageBuffer, side: usize) -> Result<(ImageBuffer, ResampleFilter)> {
    downsample(&center_crop_square(img)?, side)
}

/// Affine contrast reduction toward mid-grey: `v ↦ c·v + (1 − c)/2`.
pub fn scale_contrast(img: &ImageBuffer, c: f64) -> Result<ImageBuffer> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid(format!("contrast must lie in (0, 1], got {c}")));
    }
    let offset = (1.0 - c) / 2.0;
    Ok(img.map(|v| (c * v as f64 + offset) as f32))
}
