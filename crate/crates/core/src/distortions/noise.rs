use crate::error::Result;
use crate::pixel::{scale_contrast, ClipReport, ImageBuffer};
use crate::rng::StreamKey;

pub const DEFAULT_PRE_CONTRAST: f64 = 0.3;
/// Probability that a replaced salt-and-pepper pixel is white.
pub const SALT_PEPPER_SPLIT: f64 = 0.5;

const UNIFORM_STREAM: u64 = 0x554E_4946; // "UNIF"
const SP_REPLACE_STREAM: u64 = 0x5350_5250; // "SPRP"
const SP_POLARITY_STREAM: u64 = 0x5350_504C; // "SPPL"

/// Contrast reduction to `pre_contrast`, then i.i.d. `U[−w, w]` per pixel, then clipping.
pub fn uniform_noise(img: &ImageBuffer, w: f64, pre_contrast: f64, key: StreamKey) -> Result<(ImageBuffer, ClipReport)> {
    img.require_channels(1)?;
    if !(w >= 0.0) {
        return Err(crate::Error::invalid(format!("noise width must be >= 0, got {w}")));
    }
    let mut out = scale_contrast(img, pre_contrast)?;
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let noise = (2.0 * key.uniform_at(UNIFORM_STREAM, i as u64) - 1.0) * w;
        *v = (*v as f64 + noise) as f32;
    }
    let report = out.clip();
    Ok((out, report))
}

/// Contrast reduction, then each pixel independently set to black or white with
/// total probability `p` (`p/2` each).
pub fn salt_pepper(img: &ImageBuffer, p: f64, pre_contrast: f64, key: StreamKey) -> Result<(ImageBuffer, ClipReport)> {
    img.require_channels(1)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(crate::Error::invalid(format!("salt-and-pepper probability must lie in [0, 1], got {p}")));
    }
    let mut out = scale_contrast(img, pre_contrast)?;
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if key.uniform_at(SP_REPLACE_STREAM, i as u64) < p {
            *v = if key.uniform_at(SP_POLARITY_STREAM, i as u64) < SALT_PEPPER_SPLIT { 1.0 } else { 0.0 };
        }
    }
    let report = ClipReport { clipped: 0, total: out.data().len(), mean_clipped_value: 0.0 };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(side: usize) -> ImageBuffer {
        ImageBuffer::from_fn(side, side, 1, |_, r, c| ((r * side + c) % 256) as f32 / 255.0).unwrap()
    }

    #[test]
    fn zero_width_equals_contrast_reduction() {
        let img = ramp(32);
        let (out, rep) = uniform_noise(&img, 0.0, 0.3, StreamKey(1)).unwrap();
        assert_eq!(out, scale_contrast(&img, 0.3).unwrap());
        assert_eq!(rep.clipped, 0);
    }

    #[test]
    fn clipping_matches_analytic_probability() {
        // after 0.3 contrast every value lies in [0.35, 0.65]; for w = 0.6 and v in [0.4, 0.6]
        // P(clip) = ((0.6 - (1 - v)) + (0.6 - v)) / 1.2 = 0.2 / 1.2
        for v in [0.4f32, 0.5, 0.6] {
            let raw = ((v as f64 - 0.35) / 0.3) as f32;
            let img = ImageBuffer::constant(300, 300, 1, raw).unwrap();
            let (_, rep) = uniform_noise(&img, 0.6, 0.3, StreamKey(v.to_bits() as u64)).unwrap();
            assert!((rep.fraction() - 1.0 / 6.0).abs() < 0.01, "v={v}: {}", rep.fraction());
        }
    }

    #[test]
    fn colour_input_rejected() {
        let img = ImageBuffer::constant(4, 4, 3, 0.5).unwrap();
        assert!(uniform_noise(&img, 0.1, 0.3, StreamKey(0)).is_err());
        assert!(salt_pepper(&img, 0.1, 0.3, StreamKey(0)).is_err());
    }

    #[test]
    fn salt_pepper_extremes() {
        let img = ramp(400);
        let (zero, _) = salt_pepper(&img, 0.0, 0.3, StreamKey(2)).unwrap();
        assert_eq!(zero, scale_contrast(&img, 0.3).unwrap());
        let (all, _) = salt_pepper(&img, 1.0, 0.3, StreamKey(2)).unwrap();
        assert!(all.data().iter().all(|&v| v == 0.0 || v == 1.0));
        let white = all.data().iter().filter(|&&v| v == 1.0).count() as f64 / all.data().len() as f64;
        assert!((white - 0.5).abs() < 0.01, "{white}");
    }

    #[test]
    fn salt_pepper_replacement_rate_and_value_set() {
        let img = ramp(400);
        let base = scale_contrast(&img, 0.3).unwrap();
        let (out, _) = salt_pepper(&img, 0.35, 0.3, StreamKey(3)).unwrap();
        let mut replaced = 0usize;
        for (o, b) in out.data().iter().zip(base.data()) {
            assert!(*o == *b || *o == 0.0 || *o == 1.0);
            if o != b {
                replaced += 1;
            }
        }
        let frac = replaced as f64 / out.data().len() as f64;
        assert!((frac - 0.35).abs() < 0.01, "{frac}");
    }

    #[test]
    fn inputs_are_not_modified() {
        let img = ramp(16);
        let copy = img.clone();
        let _ = uniform_noise(&img, 0.9, 0.3, StreamKey(4)).unwrap();
        let _ = salt_pepper(&img, 0.5, 0.3, StreamKey(4)).unwrap();
        assert_eq!(img, copy);
    }
}
