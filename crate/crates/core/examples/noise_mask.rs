//! Generates the 1/f noise mask shown after each stimulus, plain and enhanced.

use distortion_lab::pixel::io;
use distortion_lab::rng::StreamKey;
use distortion_lab::spectral::{pink_noise_mask, MaskParams, ENHANCEMENT_RULE};
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let params = MaskParams::default();
    let out = std::env::temp_dir().join("distortion-lab-masks");
    std::fs::create_dir_all(&out).map_err(|e| distortion_lab::Error::io(&out, e))?;
    for enhance in [false, true] {
        let (mask, clip) = pink_noise_mask(224, StreamKey(3), enhance, &params)?;
        let dark = mask.data().iter().filter(|&&v| v == 0.0).count();
        let bright = mask.data().iter().filter(|&&v| v == 1.0).count();
        println!("enhanced={enhance}: mean {:.4}, clipped {:.1}% ({dark} black, {bright} white)", mask.mean(), 100.0 * clip.fraction());
        io::save_png(&mask, &out.join(format!("mask_enhanced_{enhance}.png")))?;
    }
    println!("enhancement rule: {ENHANCEMENT_RULE}");
    Ok(())
}

fn main() {
    run_example().expect("mask example failed");
}
