//! Measures how often uniform noise pushes pixels out of range after the 30% contrast
//! reduction, for every noise width of the test grid.

use distortion_lab::distortions::{grids, uniform_noise, DEFAULT_PRE_CONTRAST};
use distortion_lab::pixel::ImageBuffer;
use distortion_lab::rng::StreamKey;
use distortion_lab::Result;

pub fn run_example() -> Result<()> {
    let side = 1024;
    let img = ImageBuffer::from_fn(side, side, 1, |_, r, c| ((r * 31 + c * 17) % 256) as f32 / 255.0)?;
    for (i, &w) in grids::UNIFORM_NOISE_W.iter().enumerate() {
        let (_, clip) = uniform_noise(&img, w, DEFAULT_PRE_CONTRAST, StreamKey(7).child(i as u64))?;
        println!("w = {w:<5} clipped {:>6.2}% of {} pixels", 100.0 * clip.fraction(), clip.total);
    }
    Ok(())
}

fn main() {
    run_example().expect("uniform noise example failed");
}
