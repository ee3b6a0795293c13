//! Fourier-domain manipulations.
//!
//! Spectra are stored unshifted: bin `(0, 0)` is DC and bin `(r, c)` pairs with its
//! conjugate `((h − r) mod h, (w − c) mod w)`. Self-conjugate bins (DC and the Nyquist
//! row/column crossings) are never phase-shifted.

pub(crate) mod fft;
mod mask;
pub(crate) mod mean;

pub use fft::{fft_decompose, Reconstruction, Spectrum};
pub use mask::{pink_noise_mask, MaskParams, ENHANCEMENT_RULE};
pub use mean::{mean_amplitude_spectrum, MeanAmplitudeSpectrum};

use crate::error::{Error, Result};
use crate::pixel::ImageBuffer;
use crate::rng::StreamKey;

const PHASE_STREAM: u64 = 0x5048_4153; // "PHAS"

/// Adds one `U[−w, w]` phase shift per conjugate pair (`+θ` at the canonical bin,
/// `−θ` at its partner); amplitudes are untouched.
pub fn phase_noise(img: &ImageBuffer, width_degrees: f64, key: StreamKey) -> Result<Reconstruction> {
    if !(0.0..=180.0).contains(&width_degrees) {
        return Err(Error::invalid(format!("phase noise width must lie in [0, 180] degrees, got {width_degrees}")));
    }
    let mut spec = fft_decompose(img)?;
    let w = width_degrees.to_radians();
    if w > 0.0 {
        for idx in 0..spec.len() {
            let partner = spec.partner(idx);
            if partner <= idx {
                continue;
            }
            let theta = (2.0 * key.uniform_at(PHASE_STREAM, idx as u64) - 1.0) * w;
            spec.shift_phase(idx, theta);
            spec.shift_phase(partner, -theta);
        }
    }
    Ok(spec.inverse())
}

/// Keeps the image's phases and replaces its amplitudes with the (symmetrised) target.
pub fn power_equalise(img: &ImageBuffer, target: &MeanAmplitudeSpectrum) -> Result<Reconstruction> {
    let mut spec = fft_decompose(img)?;
    if spec.width() != target.width || spec.height() != target.height {
        return Err(Error::ShapeMismatch(format!(
            "target spectrum is {}x{}, image is {}x{}",
            target.width,
            target.height,
            spec.width(),
            spec.height()
        )));
    }
    for idx in 0..spec.len() {
        let partner = spec.partner(idx);
        spec.amplitudes_mut()[idx] = 0.5 * (target.amplitudes[idx] + target.amplitudes[partner]);
    }
    Ok(spec.inverse())
}
