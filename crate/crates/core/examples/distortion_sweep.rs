//! Applies every test manipulation to one synthetic colour image and writes the results
//! as PNGs with their provenance records.

use distortion_lab::distortions::{apply, grids, DistortionContext, DistortionSpec};
use distortion_lab::pixel::{io, ImageBuffer, MonitorModel};
use distortion_lab::spectral::mean_amplitude_spectrum;
use distortion_lab::Result;

fn scene(side: usize, phase: f32) -> Result<ImageBuffer> {
    ImageBuffer::from_fn(side, side, 3, |c, r, col| {
        let (y, x) = (r as f32 / side as f32, col as f32 / side as f32);
        let disc = if (x - 0.55).powi(2) + (y - 0.45).powi(2) < 0.06 { 0.35 } else { 0.0 };
        let wave = 0.15 * ((x * 19.0 + phase).sin() * (y * 7.0).cos());
        (0.25 + 0.2 * c as f32 * x + disc + wave).clamp(0.0, 1.0)
    })
}

pub fn run_example() -> Result<()> {
    let side = 224;
    let img = scene(side, 0.0)?;
    let monitor = MonitorModel::default();
    let grey_corpus = (0..4)
        .map(|i| Ok((format!("scene-{i}"), distortion_lab::pixel::to_greyscale(&scene(side, i as f32)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let spectrum = mean_amplitude_spectrum(&grey_corpus)?;
    let mut ctx = DistortionContext::new(2024, &monitor);
    ctx.target_spectrum = Some(&spectrum);

    let mut specs = vec![DistortionSpec::Colour, DistortionSpec::Greyscale, DistortionSpec::OpponentColour, DistortionSpec::PowerEqualise];
    specs.extend(grids::CONTRAST_C.iter().map(|&c| DistortionSpec::Contrast { c }));
    specs.extend(grids::UNIFORM_NOISE_W.iter().map(|&w| DistortionSpec::uniform_noise(w)));
    specs.extend(grids::SALT_PEPPER_P.iter().map(|&p| DistortionSpec::salt_pepper(p)));
    specs.extend(grids::LOW_PASS_SIGMA.iter().map(|&sigma| DistortionSpec::LowPass { sigma }));
    specs.extend(grids::HIGH_PASS_SIGMA.iter().map(|&sigma| DistortionSpec::HighPass { sigma }));
    specs.extend(grids::PHASE_NOISE_W.iter().map(|&w_degrees| DistortionSpec::PhaseNoise { w_degrees }));
    specs.extend(grids::ROTATION_ANGLE.iter().map(|&angle| DistortionSpec::Rotation { angle }));
    specs.extend([1.0, 8.0, 64.0].iter().map(|&reach| DistortionSpec::eidolon(reach, 0.3)));

    let out = std::env::temp_dir().join("distortion-lab-sweep");
    std::fs::create_dir_all(&out).map_err(|e| distortion_lab::Error::io(&out, e))?;
    println!("{:<16} {:>10} {:>10} {:>8}", "family", "condition", "clipped", "mean");
    for spec in &specs {
        let d = apply(&img, "scene-0", spec, &ctx)?;
        println!("{:<16} {:>10} {:>9.2}% {:>8.4}", spec.family(), spec.condition_label(), 100.0 * d.clip.fraction(), d.image.mean());
        let stem = format!("{}_{}", spec.family(), spec.condition_label());
        io::save_png(&d.image, &out.join(format!("{stem}.png")))?;
        std::fs::write(out.join(format!("{stem}.json")), serde_json::to_string_pretty(&d.provenance)?)
            .map_err(|e| distortion_lab::Error::io(&out, e))?;
    }
    println!("wrote {} stimuli to {}", specs.len(), out.display());
    Ok(())
}

fn main() {
    run_example().expect("distortion sweep failed");
}
