use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distortions::{grids, DistortionSpec};
use crate::error::{Error, Result};

pub const UNPERTURBED: &str = "unperturbed";

/// One manipulation a training image may receive and the levels to draw from.
/// `unperturbed` has no levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationEntry {
    pub manipulation: String,
    #[serde(default)]
    pub levels: Vec<DistortionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    pub entries: Vec<AugmentationEntry>,
}

/// Result of one draw: the manipulation name and the spec to apply, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentationSample {
    pub manipulation: String,
    pub spec: Option<DistortionSpec>,
}

fn entry(manipulation: &str, levels: Vec<DistortionSpec>) -> AugmentationEntry {
    AugmentationEntry { manipulation: manipulation.into(), levels }
}

impl AugmentationPolicy {
    pub fn unperturbed() -> Self {
        AugmentationPolicy { entries: vec![entry(UNPERTURBED, vec![])] }
    }

    /// Unperturbed, greyscale and every test manipulation with more than two levels
    /// apart from eidolons, plus salt-and-pepper noise.
    pub fn all_distortions() -> Self {
        AugmentationPolicy {
            entries: vec![
                entry(UNPERTURBED, vec![]),
                entry("greyscale", vec![DistortionSpec::Greyscale]),
                entry("uniform_noise", grids::UNIFORM_NOISE_W.iter().map(|&w| DistortionSpec::uniform_noise(w)).collect()),
                entry("salt_pepper", grids::SALT_PEPPER_P.iter().map(|&p| DistortionSpec::salt_pepper(p)).collect()),
                entry("contrast", grids::CONTRAST_C.iter().map(|&c| DistortionSpec::Contrast { c }).collect()),
                entry("low_pass", grids::LOW_PASS_SIGMA.iter().map(|&sigma| DistortionSpec::LowPass { sigma }).collect()),
                entry("high_pass", grids::HIGH_PASS_SIGMA.iter().map(|&sigma| DistortionSpec::HighPass { sigma }).collect()),
                entry("phase_noise", grids::PHASE_NOISE_W.iter().map(|&w_degrees| DistortionSpec::PhaseNoise { w_degrees }).collect()),
                entry("rotation", grids::ROTATION_ANGLE.iter().map(|&angle| DistortionSpec::Rotation { angle }).collect()),
            ],
        }
    }

    /// Keeps only the named manipulations, in policy order.
    pub fn only(&self, names: &[&str]) -> Result<Self> {
        for n in names {
            if !self.entries.iter().any(|e| e.manipulation == *n) {
                return Err(Error::invalid(format!("manipulation {n:?} not in policy")));
            }
        }
        Ok(AugmentationPolicy { entries: self.entries.iter().filter(|e| names.contains(&e.manipulation.as_str())).cloned().collect() })
    }

    /// Drops one manipulation, as for a leave-one-out model.
    pub fn without(&self, name: &str) -> Result<Self> {
        if !self.entries.iter().any(|e| e.manipulation == name) {
            return Err(Error::invalid(format!("manipulation {name:?} not in policy")));
        }
        Ok(AugmentationPolicy { entries: self.entries.iter().filter(|e| e.manipulation != name).cloned().collect() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid("augmentation policy is empty"));
        }
        for e in &self.entries {
            if e.manipulation == UNPERTURBED {
                if !e.levels.is_empty() {
                    return Err(Error::invalid("unperturbed takes no levels"));
                }
                continue;
            }
            if e.levels.is_empty() {
                return Err(Error::invalid(format!("{} has no levels", e.manipulation)));
            }
            for spec in &e.levels {
                spec.validate(false)?;
                if let DistortionSpec::UniformNoise { pre_contrast, .. } | DistortionSpec::SaltPepper { pre_contrast, .. } = spec {
                    if *pre_contrast != 0.3 {
                        return Err(Error::invalid("noise augmentations must embed the 0.3 contrast reduction"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Draws a manipulation uniformly from the policy, then a level uniformly from its grid.
pub fn sample_augmentation<R: Rng + ?Sized>(policy: &AugmentationPolicy, rng: &mut R) -> Result<AugmentationSample> {
    policy.validate()?;
    let e = &policy.entries[rng.random_range(0..policy.entries.len())];
    let spec = (!e.levels.is_empty()).then(|| e.levels[rng.random_range(0..e.levels.len())].clone());
    Ok(AugmentationSample { manipulation: e.manipulation.clone(), spec })
}

/// Per-class loss weights proportional to `1 / n_i`, scaled to a mean class weight of 1
/// (`Σ w_i = K`), so counts (100, 200) give (4/3, 2/3).
pub fn class_weights(counts: &[u64]) -> Result<Vec<f64>> {
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::invalid("class weights need a nonzero count for every class"));
    }
    let inv_sum: f64 = counts.iter().map(|&n| 1.0 / n as f64).sum();
    let k = counts.len() as f64;
    Ok(counts.iter().map(|&n| k / (n as f64 * inv_sum)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn unperturbed_only() {
        let mut rng = StreamKey(1).chacha();
        for _ in 0..100 {
            let s = sample_augmentation(&AugmentationPolicy::unperturbed(), &mut rng).unwrap();
            assert_eq!(s.manipulation, UNPERTURBED);
            assert!(s.spec.is_none());
        }
    }

    #[test]
    fn left_out_family_never_drawn() {
        let p = AugmentationPolicy::all_distortions().without("uniform_noise").unwrap();
        let mut rng = StreamKey(2).chacha();
        for _ in 0..5000 {
            assert_ne!(sample_augmentation(&p, &mut rng).unwrap().manipulation, "uniform_noise");
        }
    }

    #[test]
    fn noise_levels_embed_contrast() {
        AugmentationPolicy::all_distortions().validate().unwrap();
        let mut p = AugmentationPolicy::all_distortions().only(&["uniform_noise"]).unwrap();
        p.entries[0].levels[0] = DistortionSpec::UniformNoise { w: 0.1, pre_contrast: 1.0 };
        assert!(p.validate().is_err());
        assert!(AugmentationPolicy { entries: vec![] }.validate().is_err());
    }

    #[test]
    fn weights() {
        let w = class_weights(&[100, 200]).unwrap();
        assert!((w[0] - 4.0 / 3.0).abs() < 1e-12 && (w[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!(class_weights(&[7; 16]).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let doubled = class_weights(&[200, 400]).unwrap();
        assert!(doubled.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(class_weights(&[3, 0]).is_err());
    }
}
