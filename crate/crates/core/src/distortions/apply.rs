use serde::{Deserialize, Serialize};

use crate::distortions::eidolon::{eidolon, EidolonParams, EIDOLON_VARIANT_ID};
use crate::distortions::filter::{gaussian_highpass, gaussian_lowpass, DEFAULT_MEAN_GREY};
use crate::distortions::noise::{salt_pepper, uniform_noise, SALT_PEPPER_SPLIT};
use crate::distortions::rotate::rotate;
use crate::distortions::spec::{DistortionSpec, Seed};
use crate::error::{Error, Result};
use crate::pixel::{opponent_colour, scale_contrast, to_greyscale, ClipReport, ImageBuffer, MonitorModel, LUMA_WEIGHTS};
use crate::rng;
use crate::spectral::{phase_noise, power_equalise, MeanAmplitudeSpectrum};

/// Corpus-level inputs some manipulations need.
#[derive(Debug, Clone)]
pub struct DistortionContext<'a> {
    pub experiment_seed: u64,
    /// Padding value for Gaussian filtering and target mean for high-pass images.
    pub mean_grey: f64,
    pub target_spectrum: Option<&'a MeanAmplitudeSpectrum>,
    pub monitor: &'a MonitorModel,
    /// Skip the test-grid membership check.
    pub allow_off_grid: bool,
}

impl<'a> DistortionContext<'a> {
    pub fn new(experiment_seed: u64, monitor: &'a MonitorModel) -> Self {
        DistortionContext {
            experiment_seed,
            mean_grey: DEFAULT_MEAN_GREY,
            target_spectrum: None,
            monitor,
            allow_off_grid: false,
        }
    }
}

/// Sidecar record written next to every distorted image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub image_id: String,
    pub spec: DistortionSpec,
    pub seed: Seed,
    pub rng_algorithm: String,
    pub luma_weights: [f64; 3],
    pub salt_pepper_white_fraction: f64,
    pub eidolon_algorithm: String,
    pub mean_grey: f64,
    pub monitor_model: String,
    pub clip_fraction: f64,
    pub mean_clipped_value: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Distorted {
    pub image: ImageBuffer,
    pub clip: ClipReport,
    pub provenance: Provenance,
}

fn unclipped(img: &ImageBuffer) -> ClipReport {
    ClipReport { clipped: 0, total: img.data().len(), mean_clipped_value: 0.0 }
}

/// Applies one manipulation to a preprocessed image.
///
/// Colour input is converted to greyscale first for every manipulation except
/// `colour` and `opponent_colour`, which require colour input.
pub fn apply(img: &ImageBuffer, image_id: &str, spec: &DistortionSpec, ctx: &DistortionContext<'_>) -> Result<Distorted> {
    spec.validate(!ctx.allow_off_grid)?;
    let seed = Seed::new(ctx.experiment_seed, image_id, spec);
    let key = seed.stream_key();
    let grey = || -> Result<ImageBuffer> {
        if img.channels() == 3 { to_greyscale(img) } else { Ok(img.clone()) }
    };
    let (image, clip) = match *spec {
        DistortionSpec::Colour => {
            img.require_channels(3)?;
            (img.clone(), unclipped(img))
        }
        DistortionSpec::Greyscale => {
            let g = grey()?;
            let c = unclipped(&g);
            (g, c)
        }
        DistortionSpec::Contrast { c } => {
            let g = scale_contrast(&grey()?, c)?;
            let r = unclipped(&g);
            (g, r)
        }
        DistortionSpec::UniformNoise { w, pre_contrast } => uniform_noise(&grey()?, w, pre_contrast, key)?,
        DistortionSpec::SaltPepper { p, pre_contrast } => salt_pepper(&grey()?, p, pre_contrast, key)?,
        DistortionSpec::LowPass { sigma } => gaussian_lowpass(&grey()?, sigma, ctx.mean_grey)?,
        DistortionSpec::HighPass { sigma } => gaussian_highpass(&grey()?, sigma, ctx.mean_grey, ctx.mean_grey)?,
        DistortionSpec::PhaseNoise { w_degrees } => phase_noise(&grey()?, w_degrees, key)?.into_image()?,
        DistortionSpec::PowerEqualise => {
            let target = ctx
                .target_spectrum
                .ok_or_else(|| Error::invalid("power equalisation needs a target mean amplitude spectrum"))?;
            power_equalise(&grey()?, target)?.into_image()?
        }
        DistortionSpec::OpponentColour => opponent_colour(img, ctx.monitor)?,
        DistortionSpec::Rotation { angle } => {
            let g = rotate(&grey()?, angle)?;
            let r = unclipped(&g);
            (g, r)
        }
        DistortionSpec::Eidolon { reach, coherence, grain } => eidolon(&grey()?, &EidolonParams { reach, coherence, grain }, key)?,
    };
    let provenance = Provenance {
        image_id: image_id.to_string(),
        spec: spec.clone(),
        seed,
        rng_algorithm: rng::ALGORITHM_ID.to_string(),
        luma_weights: LUMA_WEIGHTS,
        salt_pepper_white_fraction: SALT_PEPPER_SPLIT,
        eidolon_algorithm: EIDOLON_VARIANT_ID.to_string(),
        mean_grey: ctx.mean_grey,
        monitor_model: ctx.monitor.source.clone(),
        clip_fraction: clip.fraction(),
        mean_clipped_value: clip.mean_clipped_value,
        notes: spec.notes(),
    };
    Ok(Distorted { image, clip, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortions::grids;
    use crate::spectral::mean_amplitude_spectrum;

    fn colour_image(side: usize) -> ImageBuffer {
        ImageBuffer::from_fn(side, side, 3, |c, r, col| {
            (0.2 + 0.5 * ((r * 7 + col * 3 + c * 11) % 17) as f32 / 17.0).min(1.0)
        })
        .unwrap()
    }

    #[test]
    fn every_family_runs_and_is_deterministic() {
        let monitor = MonitorModel::default();
        let img = colour_image(32);
        let grey = to_greyscale(&img).unwrap();
        let target = mean_amplitude_spectrum(&[("x".into(), grey)]).unwrap();
        let mut ctx = DistortionContext::new(7, &monitor);
        ctx.target_spectrum = Some(&target);
        let specs = vec![
            DistortionSpec::Colour,
            DistortionSpec::Greyscale,
            DistortionSpec::Contrast { c: 0.1 },
            DistortionSpec::uniform_noise(0.2),
            DistortionSpec::salt_pepper(0.2),
            DistortionSpec::LowPass { sigma: 3.0 },
            DistortionSpec::HighPass { sigma: 1.0 },
            DistortionSpec::PhaseNoise { w_degrees: 90.0 },
            DistortionSpec::PowerEqualise,
            DistortionSpec::OpponentColour,
            DistortionSpec::Rotation { angle: 90 },
            DistortionSpec::eidolon(4.0, 0.3),
        ];
        for spec in specs {
            let a = apply(&img, "img-1", &spec, &ctx).unwrap();
            let b = apply(&img, "img-1", &spec, &ctx).unwrap();
            assert_eq!(a.image, b.image, "{spec:?}");
            assert_eq!(a.image.channels(), if spec.is_greyscale() { 1 } else { 3 });
            assert!(a.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(a.provenance.rng_algorithm, rng::ALGORITHM_ID);
        }
    }

    #[test]
    fn stochastic_outputs_differ_across_images_and_seeds() {
        let monitor = MonitorModel::default();
        let img = colour_image(16);
        let ctx = DistortionContext::new(1, &monitor);
        let spec = DistortionSpec::uniform_noise(0.1);
        let a = apply(&img, "a", &spec, &ctx).unwrap().image;
        let b = apply(&img, "b", &spec, &ctx).unwrap().image;
        let other = DistortionContext::new(2, &monitor);
        let c = apply(&img, "a", &spec, &other).unwrap().image;
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn power_equalise_without_target_is_an_error() {
        let monitor = MonitorModel::default();
        let ctx = DistortionContext::new(0, &monitor);
        assert!(apply(&colour_image(8), "x", &DistortionSpec::PowerEqualise, &ctx).is_err());
    }

    #[test]
    fn off_grid_needs_explicit_override() {
        let monitor = MonitorModel::default();
        let mut ctx = DistortionContext::new(0, &monitor);
        let spec = DistortionSpec::LowPass { sigma: 2.0 };
        assert!(apply(&colour_image(8), "x", &spec, &ctx).is_err());
        ctx.allow_off_grid = true;
        assert!(apply(&colour_image(8), "x", &spec, &ctx).is_ok());
        assert_eq!(grids::LOW_PASS_SIGMA.len(), 8);
    }

    #[test]
    fn colour_manipulations_need_colour_input() {
        let monitor = MonitorModel::default();
        let ctx = DistortionContext::new(0, &monitor);
        let grey = ImageBuffer::constant(8, 8, 1, 0.5).unwrap();
        assert!(apply(&grey, "x", &DistortionSpec::OpponentColour, &ctx).is_err());
        assert!(apply(&grey, "x", &DistortionSpec::Colour, &ctx).is_err());
    }
}
