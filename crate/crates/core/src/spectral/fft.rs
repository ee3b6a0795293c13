use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::pixel::{ClipReport, ImageBuffer};

/// Amplitude/phase form of a 2-D DFT, unshifted, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

/// Output of an inverse transform before clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub width: usize,
    pub height: usize,
    /// Real part, pre-clip.
    pub values: Vec<f64>,
    /// Largest discarded imaginary component.
    pub max_imaginary: f64,
}

impl Reconstruction {
    pub fn out_of_range_fraction(&self) -> f64 {
        self.values.iter().filter(|v| !(0.0..=1.0).contains(*v)).count() as f64 / self.values.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn into_image(self) -> Result<(ImageBuffer, ClipReport)> {
        let mut img = ImageBuffer::from_f64_plane(self.width, self.height, &self.values)?;
        let report = img.clip();
        Ok((img, report))
    }
}

/// In-place forward or inverse 2-D DFT (unnormalised both ways).
pub(crate) fn fft2(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = if inverse { planner.plan_fft_inverse(width) } else { planner.plan_fft_forward(width) };
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let col_fft = if inverse { planner.plan_fft_inverse(height) } else { planner.plan_fft_forward(height) };
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for c in 0..width {
        for r in 0..height {
            column[r] = data[r * width + c];
        }
        col_fft.process(&mut column);
        for r in 0..height {
            data[r * width + c] = column[r];
        }
    }
}

fn wrap_phase(p: f64) -> f64 {
    use std::f64::consts::PI;
    let mut q = (p + PI).rem_euclid(2.0 * PI) - PI;
    if q <= -PI {
        q += 2.0 * PI;
    }
    q
}

pub fn fft_decompose(img: &ImageBuffer) -> Result<Spectrum> {
    img.require_channels(1)?;
    if !img.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "Fourier manipulations need square images, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Spectrum::from_real(img.width(), img.height(), &img.plane_f64(0))
}

impl Spectrum {
    pub fn from_real(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::ShapeMismatch(format!("{} values for a {width}x{height} grid", values.len())));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut buf, width, height, false);
        Ok(Self::from_complex(width, height, &buf))
    }

    pub fn from_complex(width: usize, height: usize, bins: &[Complex64]) -> Self {
        Spectrum {
            width,
            height,
            amplitudes: bins.iter().map(|z| z.norm()).collect(),
            phases: bins.iter().map(|z| z.arg()).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [f64] {
        &mut self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Index of the conjugate-symmetric partner of bin `idx`.
    pub fn partner(&self, idx: usize) -> usize {
        let (r, c) = (idx / self.width, idx % self.width);
        ((self.height - r) % self.height) * self.width + (self.width - c) % self.width
    }

    pub fn shift_phase(&mut self, idx: usize, delta: f64) {
        self.phases[idx] = wrap_phase(self.phases[idx] + delta);
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect()
    }

    /// Inverse transform; the imaginary residue is measured and discarded.
    pub fn inverse(&self) -> Reconstruction {
        let mut buf = self.to_complex();
        fft2(&mut buf, self.width, self.height, true);
        let scale = 1.0 / (self.width * self.height) as f64;
        let mut max_imaginary = 0.0f64;
        let values = buf
            .iter()
            .map(|z| {
                max_imaginary = max_imaginary.max((z.im * scale).abs());
                z.re * scale
            })
            .collect();
        Reconstruction {
            width: self.width,
            height: self.height,
            values,
            max_imaginary,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::StreamKey;

    /// Deterministic stand-in for a photograph: 1/f-ish texture plus a few hard edges.
    pub(crate) fn natural_image(side: usize, seed: u64) -> ImageBuffer {
        let key = StreamKey(seed);
        let n = side * side;
        let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(key.normal_at(0, i as u64), 0.0)).collect();
        fft2(&mut buf, side, side, false);
        for r in 0..side {
            for c in 0..side {
                let fy = if r <= side / 2 { r as f64 } else { r as f64 - side as f64 };
                let fx = if c <= side / 2 { c as f64 } else { c as f64 - side as f64 };
                let f = (fx * fx + fy * fy).sqrt();
                buf[r * side + c] *= if f == 0.0 { 0.0 } else { 1.0 / f };
            }
        }
        fft2(&mut buf, side, side, true);
        let vals: Vec<f64> = buf.iter().map(|z| z.re).collect();
        let sd = (vals.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        ImageBuffer::from_fn(side, side, 1, |_, r, c| {
            let tex = 0.12 * vals[r * side + c] / sd;
            let edge = if r > side / 3 && r < 2 * side / 3 && c > side / 4 && c < side / 2 { 0.2 } else { 0.0 };
            let disk = if ((r as f64 - 0.7 * side as f64).powi(2) + (c as f64 - 0.7 * side as f64).powi(2)).sqrt() < side as f64 / 8.0 { -0.15 } else { 0.0 };
            (0.45 + tex + edge + disk).clamp(0.0, 1.0) as f32
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let img = natural_image(64, 1);
        let rec = fft_decompose(&img).unwrap().inverse();
        let rms = (rec.values.iter().zip(img.data()).map(|(a, &b)| (a - b as f64).powi(2)).sum::<f64>() / rec.values.len() as f64).sqrt();
        assert!(rms < 1e-9, "{rms}");
        assert!(rec.max_imaginary < 1e-9);
    }

    #[test]
    fn constant_image_has_only_dc() {
        let img = ImageBuffer::constant(16, 16, 1, 0.5).unwrap();
        let s = fft_decompose(&img).unwrap();
        assert!((s.amplitudes()[0] - 0.5 * 256.0).abs() < 1e-9);
        assert!(s.amplitudes()[1..].iter().all(|&a| a < 1e-9));
    }

    #[test]
    fn cosine_has_two_symmetric_bins() {
        // x[r, c] = 0.5 + 0.25 cos(2π·3c/16): DFT has N²/2·0.25 = 32 at (0, ±3) and 128 at DC
        let n = 16;
        let img = ImageBuffer::from_fn(n, n, 1, |_, _, c| {
            (0.5 + 0.25 * (2.0 * std::f64::consts::PI * 3.0 * c as f64 / n as f64).cos()) as f32
        })
        .unwrap();
        let s = fft_decompose(&img).unwrap();
        for (i, &a) in s.amplitudes().iter().enumerate() {
            let expected = match i {
                0 => 128.0,
                3 | 13 => 32.0,
                _ => 0.0,
            };
            assert!((a - expected).abs() < 1e-4, "bin {i}: {a}");
        }
    }

    #[test]
    fn partner_is_an_involution() {
        let s = fft_decompose(&natural_image(8, 2)).unwrap();
        for i in 0..s.len() {
            assert_eq!(s.partner(s.partner(i)), i);
        }
        assert_eq!(s.partner(0), 0);
        assert_eq!(s.partner(1), 7);
        assert_eq!(s.partner(8 + 1), 7 * 8 + 7);
    }

    #[test]
    fn rejects_non_square_and_colour() {
        assert!(fft_decompose(&ImageBuffer::constant(4, 8, 1, 0.5).unwrap()).is_err());
        assert!(fft_decompose(&ImageBuffer::constant(4, 4, 3, 0.5).unwrap()).is_err());
    }
}
