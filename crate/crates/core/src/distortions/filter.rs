//! Separable Gaussian filtering with constant padding and 4σ truncation.

use crate::error::{Error, Result};
use crate::pixel::{ClipReport, ImageBuffer};

/// Mean grey used for padding and high-pass mean restoration when none is configured.
pub const DEFAULT_MEAN_GREY: f64 = 0.4423;

const TRUNCATE: f64 = 4.0;

/// Normalised 1-D kernel with radius `floor(4σ + 0.5)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (TRUNCATE * sigma + 0.5) as usize;
    let two_s2 = 2.0 * sigma * sigma;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / two_s2).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Filters a single `f64` plane; samples outside the image take `pad`.
pub(crate) fn blur_plane(values: &[f64], width: usize, height: usize, sigma: f64, pad: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; width * height];
    for r in 0..height {
        let row = &values[r * width..(r + 1) * width];
        for c in 0..width {
            let mut acc = 0.0;
            for (j, w) in k.iter().enumerate() {
                let x = c as isize + j as isize - radius;
                acc += w * if x >= 0 && (x as usize) < width { row[x as usize] } else { pad };
            }
            tmp[r * width + c] = acc;
        }
    }
    let mut out = vec![0.0; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (j, w) in k.iter().enumerate() {
                let y = r as isize + j as isize - radius;
                acc += w * if y >= 0 && (y as usize) < height { tmp[y as usize * width + c] } else { pad };
            }
            out[r * width + c] = acc;
        }
    }
    out
}

/// Gaussian blur; `sigma = 0` returns the input unchanged.
pub fn gaussian_lowpass(img: &ImageBuffer, sigma: f64, pad_value: f64) -> Result<(ImageBuffer, ClipReport)> {
    img.require_channels(1)?;
    if !(sigma >= 0.0) || sigma.is_infinite() {
        return Err(Error::invalid(format!("low-pass sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok((img.clone(), ClipReport { clipped: 0, total: img.data().len(), mean_clipped_value: 0.0 }));
    }
    let out = blur_plane(&img.plane_f64(0), img.width(), img.height(), sigma, pad_value);
    let mut result = ImageBuffer::from_f64_plane(img.width(), img.height(), &out)?;
    let report = result.clip();
    Ok((result, report))
}

/// Pre-clip high-pass values: `img − lowpass(img)` shifted so their mean is `target_mean`.
pub fn gaussian_highpass_values(img: &ImageBuffer, sigma: f64, target_mean: f64, pad_value: f64) -> Result<Vec<f64>> {
    img.require_channels(1)?;
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("high-pass sigma must be > 0 (or inf), got {sigma}")));
    }
    let src = img.plane_f64(0);
    if sigma.is_infinite() {
        return Ok(src);
    }
    let low = blur_plane(&src, img.width(), img.height(), sigma, pad_value);
    let mut diff: Vec<f64> = src.iter().zip(&low).map(|(a, b)| a - b).collect();
    let shift = target_mean - diff.iter().sum::<f64>() / diff.len() as f64;
    diff.iter_mut().for_each(|v| *v += shift);
    Ok(diff)
}

/// High-pass filter with mean restoration; `sigma = ∞` returns the input unchanged.
pub fn gaussian_highpass(img: &ImageBuffer, sigma: f64, target_mean: f64, pad_value: f64) -> Result<(ImageBuffer, ClipReport)> {
    if sigma.is_infinite() && sigma > 0.0 {
        img.require_channels(1)?;
        return Ok((img.clone(), ClipReport { clipped: 0, total: img.data().len(), mean_clipped_value: 0.0 }));
    }
    let values = gaussian_highpass_values(img, sigma, target_mean, pad_value)?;
    let mut out = ImageBuffer::from_f64_plane(img.width(), img.height(), &values)?;
    let report = out.clip();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fft::tests::natural_image;

    #[test]
    fn kernel_sums_to_one_and_truncates_at_four_sigma() {
        for sigma in [0.4, 1.0, 3.0, 7.0, 40.0] {
            let k = gaussian_kernel(sigma);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(k.len(), 2 * ((4.0 * sigma + 0.5) as usize) + 1);
        }
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        // oracle: unnormalised samples exp(-x²/2) at x = -4..=4, divided by their sum
        let raw: Vec<f64> = (-4..=4).map(|x: i32| (-(x * x) as f64 / 2.0).exp()).collect();
        let total: f64 = raw.iter().sum();
        let mut img = ImageBuffer::constant(21, 21, 1, 0.0).unwrap();
        img.data_mut()[10 * 21 + 10] = 1.0;
        let out = blur_plane(&img.plane_f64(0), 21, 21, 1.0, 0.0);
        for (i, r) in raw.iter().enumerate() {
            let expected = r / total * raw[4] / total;
            assert!((out[10 * 21 + 6 + i] - expected).abs() < 1e-15);
        }
        // centre weight relative to the continuous normalisation 1/sqrt(2π)
        assert!((raw[4] / total - 0.398_942_28 / (total / (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-6);
    }

    #[test]
    fn constant_is_preserved_with_matching_pad() {
        let img = ImageBuffer::constant(40, 40, 1, 0.3).unwrap();
        for sigma in [1.0, 3.0, 15.0] {
            let (out, _) = gaussian_lowpass(&img, sigma, 0.3).unwrap();
            assert!(out.data().iter().all(|&v| (v - 0.3).abs() < 1e-6));
        }
    }

    #[test]
    fn exact_identities() {
        let img = natural_image(32, 1);
        assert_eq!(gaussian_lowpass(&img, 0.0, 0.4423).unwrap().0, img);
        assert_eq!(gaussian_highpass(&img, f64::INFINITY, 0.4423, 0.4423).unwrap().0, img);
        assert!(gaussian_lowpass(&img, -1.0, 0.5).is_err());
        assert!(gaussian_highpass(&img, 0.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn highpass_restores_target_mean() {
        let img = natural_image(64, 2);
        for sigma in [0.4, 1.0, 3.0] {
            let v = gaussian_highpass_values(&img, sigma, 0.4423, 0.4423).unwrap();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean - 0.4423).abs() < 1e-6);
        }
    }

    #[test]
    fn highpass_approaches_flat_grey_as_sigma_shrinks() {
        let img = natural_image(64, 3);
        let rms: Vec<f64> = [3.0, 1.5, 1.0, 0.7, 0.55, 0.45, 0.4]
            .iter()
            .map(|&s| {
                let v = gaussian_highpass_values(&img, s, 0.4423, 0.4423).unwrap();
                (v.iter().map(|x| (x - 0.4423).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
            })
            .collect();
        assert!(rms.windows(2).all(|w| w[1] < w[0]), "{rms:?}");
    }
}
