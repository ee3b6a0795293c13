//! Phase noise and power-spectrum equalisation in the Fourier domain, with the
//! invariants each operation keeps.

use distortion_lab::pixel::ImageBuffer;
use distortion_lab::rng::StreamKey;
use distortion_lab::spectral::{fft_decompose, mean_amplitude_spectrum, phase_noise, power_equalise};
use distortion_lab::Result;

fn texture(side: usize, seed: u64) -> Result<ImageBuffer> {
    let key = StreamKey(seed);
    ImageBuffer::from_fn(side, side, 1, |_, r, c| {
        let blob = (((r / 16) * 7 + (c / 16) * 3) % 5) as f32 / 10.0;
        (0.3 + blob + 0.05 * key.normal_at(0, (r * side + c) as u64) as f32).clamp(0.0, 1.0)
    })
}

pub fn run_example() -> Result<()> {
    let side = 256;
    let img = texture(side, 1)?;
    let original = fft_decompose(&img)?;

    for w in [0.0, 30.0, 90.0, 180.0] {
        let rec = phase_noise(&img, w, StreamKey(5))?;
        let max_imag = rec.max_imaginary;
        let (out, clip) = rec.into_image()?;
        let after = fft_decompose(&out)?;
        let dc_shift = (after.amplitudes()[0] - original.amplitudes()[0]).abs() / original.amplitudes()[0];
        println!("phase noise {w:>5}°: clipped {:.3}%, imaginary residue {max_imag:.1e}, DC change {dc_shift:.1e}", 100.0 * clip.fraction());
    }

    let corpus = (0..6).map(|i| Ok((format!("t{i}"), texture(side, i)?))).collect::<Result<Vec<_>>>()?;
    let target = mean_amplitude_spectrum(&corpus)?;
    let rec = power_equalise(&img, &target)?;
    println!("power equalised: pre-clip out-of-range {:.3}%, mean {:.4}", 100.0 * rec.out_of_range_fraction(), rec.mean());
    let profile = target.radial_profile();
    println!("mean spectrum radial amplitude at radii 4, 16, 64: {:.1} {:.1} {:.1}", profile[4], profile[16], profile[64]);
    Ok(())
}

fn main() {
    run_example().expect("spectral example failed");
}
