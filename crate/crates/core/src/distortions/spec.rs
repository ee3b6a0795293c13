use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Test-condition grids for each manipulation family.
pub mod grids {
    pub const UNIFORM_NOISE_W: [f64; 8] = [0.0, 0.03, 0.05, 0.1, 0.2, 0.35, 0.6, 0.9];
    pub const SALT_PEPPER_P: [f64; 8] = [0.0, 0.10, 0.20, 0.35, 0.50, 0.65, 0.80, 0.95];
    pub const CONTRAST_C: [f64; 8] = [0.01, 0.03, 0.05, 0.10, 0.15, 0.30, 0.50, 1.0];
    pub const PHASE_NOISE_W: [f64; 7] = [0.0, 30.0, 60.0, 90.0, 120.0, 150.0, 180.0];
    /// Seven published standard deviations plus σ = 5, which is interpolated to make
    /// eight conditions.
    pub const LOW_PASS_SIGMA: [f64; 8] = [0.0, 1.0, 3.0, 5.0, 7.0, 10.0, 15.0, 40.0];
    pub const LOW_PASS_INTERPOLATED: [f64; 1] = [5.0];
    pub const HIGH_PASS_SIGMA: [f64; 8] = [0.4, 0.45, 0.55, 0.7, 1.0, 1.5, 3.0, f64::INFINITY];
    pub const ROTATION_ANGLE: [u32; 4] = [0, 90, 180, 270];
    pub const EIDOLON_REACH: [f64; 8] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    pub const EIDOLON_COHERENCE: [f64; 3] = [0.0, 0.3, 1.0];
    pub const EIDOLON_GRAIN: f64 = 10.0;
}

fn default_pre_contrast() -> f64 {
    0.3
}

fn default_grain() -> f64 {
    grids::EIDOLON_GRAIN
}

/// Serialises `f64::INFINITY` as the string `"inf"`.
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

/// One manipulation and its parameters.
///
/// JSON form is internally tagged, e.g. `{"type":"uniform_noise","w":0.35}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistortionSpec {
    Greyscale,
    Colour,
    Contrast {
        c: f64,
    },
    UniformNoise {
        w: f64,
        #[serde(default = "default_pre_contrast")]
        pre_contrast: f64,
    },
    SaltPepper {
        p: f64,
        #[serde(default = "default_pre_contrast")]
        pre_contrast: f64,
    },
    LowPass {
        sigma: f64,
    },
    HighPass {
        #[serde(with = "maybe_inf")]
        sigma: f64,
    },
    PhaseNoise {
        w_degrees: f64,
    },
    PowerEqualise,
    OpponentColour,
    Rotation {
        angle: u32,
    },
    Eidolon {
        reach: f64,
        coherence: f64,
        #[serde(default = "default_grain")]
        grain: f64,
    },
}

fn on_grid(v: f64, grid: &[f64]) -> bool {
    grid.iter().any(|g| (g.is_infinite() && v == *g) || (v - g).abs() < 1e-9)
}

impl DistortionSpec {
    pub fn uniform_noise(w: f64) -> Self {
        DistortionSpec::UniformNoise { w, pre_contrast: 0.3 }
    }

    pub fn salt_pepper(p: f64) -> Self {
        DistortionSpec::SaltPepper { p, pre_contrast: 0.3 }
    }

    pub fn eidolon(reach: f64, coherence: f64) -> Self {
        DistortionSpec::Eidolon { reach, coherence, grain: grids::EIDOLON_GRAIN }
    }

    /// Short family name, also used in file names.
    pub fn family(&self) -> &'static str {
        match self {
            DistortionSpec::Greyscale => "greyscale",
            DistortionSpec::Colour => "colour",
            DistortionSpec::Contrast { .. } => "contrast",
            DistortionSpec::UniformNoise { .. } => "uniform_noise",
            DistortionSpec::SaltPepper { .. } => "salt_pepper",
            DistortionSpec::LowPass { .. } => "low_pass",
            DistortionSpec::HighPass { .. } => "high_pass",
            DistortionSpec::PhaseNoise { .. } => "phase_noise",
            DistortionSpec::PowerEqualise => "power_equalise",
            DistortionSpec::OpponentColour => "opponent_colour",
            DistortionSpec::Rotation { .. } => "rotation",
            DistortionSpec::Eidolon { .. } => "eidolon",
        }
    }

    /// Condition label written to trial CSVs: the varied parameter's value, or the
    /// manipulation name for dichotomous ones.
    pub fn condition_label(&self) -> String {
        match self {
            DistortionSpec::Greyscale | DistortionSpec::Colour | DistortionSpec::PowerEqualise | DistortionSpec::OpponentColour => {
                self.family().to_string()
            }
            DistortionSpec::Contrast { c } => format!("{c}"),
            DistortionSpec::UniformNoise { w, .. } => format!("{w}"),
            DistortionSpec::SaltPepper { p, .. } => format!("{p}"),
            DistortionSpec::LowPass { sigma } => format!("{sigma}"),
            DistortionSpec::HighPass { sigma } => {
                if sigma.is_infinite() { "inf".to_string() } else { format!("{sigma}") }
            }
            DistortionSpec::PhaseNoise { w_degrees } => format!("{w_degrees}"),
            DistortionSpec::Rotation { angle } => format!("{angle}"),
            DistortionSpec::Eidolon { reach, coherence, .. } => format!("{reach}-{coherence}"),
        }
    }

    /// Whether the manipulation operates on (and outputs) a greyscale image.
    pub fn is_greyscale(&self) -> bool {
        !matches!(self, DistortionSpec::Colour | DistortionSpec::OpponentColour)
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            DistortionSpec::UniformNoise { .. }
                | DistortionSpec::SaltPepper { .. }
                | DistortionSpec::PhaseNoise { .. }
                | DistortionSpec::Eidolon { .. }
        )
    }

    /// Checks parameter domains and, when `strict`, membership in the test grids.
    pub fn validate(&self, strict: bool) -> Result<()> {
        let grid_err = |name: &str, v: f64| {
            Err(Error::invalid(format!(
                "{name} = {v} is not on the {} test grid (pass allow_off_grid to override)",
                self.family()
            )))
        };
        match *self {
            DistortionSpec::Greyscale | DistortionSpec::Colour | DistortionSpec::PowerEqualise | DistortionSpec::OpponentColour => {}
            DistortionSpec::Contrast { c } => {
                if !(c > 0.0 && c <= 1.0) {
                    return Err(Error::invalid(format!("contrast must lie in (0, 1], got {c}")));
                }
                if strict && !on_grid(c, &grids::CONTRAST_C) {
                    return grid_err("c", c);
                }
            }
            DistortionSpec::UniformNoise { w, pre_contrast } => {
                if !(w >= 0.0) || !(pre_contrast > 0.0 && pre_contrast <= 1.0) {
                    return Err(Error::invalid(format!("uniform noise needs w >= 0 and contrast in (0, 1], got w={w}, c={pre_contrast}")));
                }
                if strict && !on_grid(w, &grids::UNIFORM_NOISE_W) {
                    return grid_err("w", w);
                }
            }
            DistortionSpec::SaltPepper { p, pre_contrast } => {
                if !(0.0..=1.0).contains(&p) || !(pre_contrast > 0.0 && pre_contrast <= 1.0) {
                    return Err(Error::invalid(format!("salt-and-pepper needs p in [0, 1], got {p}")));
                }
                if strict && !on_grid(p, &grids::SALT_PEPPER_P) {
                    return grid_err("p", p);
                }
            }
            DistortionSpec::LowPass { sigma } => {
                if !(sigma >= 0.0) || sigma.is_infinite() {
                    return Err(Error::invalid(format!("low-pass sigma must be finite and >= 0, got {sigma}")));
                }
                if strict && !on_grid(sigma, &grids::LOW_PASS_SIGMA) {
                    return grid_err("sigma", sigma);
                }
            }
            DistortionSpec::HighPass { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::invalid(format!("high-pass sigma must be > 0 or inf, got {sigma}")));
                }
                if strict && !on_grid(sigma, &grids::HIGH_PASS_SIGMA) {
                    return grid_err("sigma", sigma);
                }
            }
            DistortionSpec::PhaseNoise { w_degrees } => {
                if !(0.0..=180.0).contains(&w_degrees) {
                    return Err(Error::invalid(format!("phase noise width must lie in [0, 180], got {w_degrees}")));
                }
                if strict && !on_grid(w_degrees, &grids::PHASE_NOISE_W) {
                    return grid_err("w_degrees", w_degrees);
                }
            }
            DistortionSpec::Rotation { angle } => {
                if !grids::ROTATION_ANGLE.contains(&angle) {
                    return Err(Error::invalid(format!("rotation angle must be 0, 90, 180 or 270, got {angle}")));
                }
            }
            DistortionSpec::Eidolon { reach, coherence, grain } => {
                if !(reach > 0.0) || !(grain > 0.0) || !(0.0..=1.0).contains(&coherence) {
                    return Err(Error::invalid(format!(
                        "eidolon needs reach > 0, grain > 0, coherence in [0, 1]; got {reach}, {grain}, {coherence}"
                    )));
                }
                if strict && (!on_grid(reach, &grids::EIDOLON_REACH) || !on_grid(coherence, &grids::EIDOLON_COHERENCE)) {
                    return grid_err("reach/coherence", reach);
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("spec serialises");
        Sha256::digest(&json).into()
    }

    pub fn digest_hex(&self) -> String {
        self.digest().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Provenance notes that apply to this parameterisation.
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        match self {
            DistortionSpec::LowPass { sigma } if on_grid(*sigma, &grids::LOW_PASS_INTERPOLATED) => {
                notes.push("low-pass sigma=5 is an interpolated condition, not one of the seven published values".into());
            }
            DistortionSpec::SaltPepper { .. } => {
                notes.push("salt/pepper polarity split 50/50 (black vs white); original split unstated".into());
            }
            DistortionSpec::PhaseNoise { .. } => {
                notes.push("self-conjugate bins (DC, Nyquist) are not phase-shifted".into());
            }
            DistortionSpec::Eidolon { .. } => {
                notes.push("eidolon-variant: multi-scale partially coherent disarray; parameters map by name only".into());
            }
            _ => {}
        }
        notes
    }
}

/// Everything that determines a stochastic distortion's random stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub experiment_seed: u64,
    pub image_id: String,
    /// Hex SHA-256 of the spec's canonical JSON.
    pub spec_digest: String,
}

impl Seed {
    pub fn new(experiment_seed: u64, image_id: impl Into<String>, spec: &DistortionSpec) -> Self {
        Seed {
            experiment_seed,
            image_id: image_id.into(),
            spec_digest: spec.digest_hex(),
        }
    }

    pub fn stream_key(&self) -> StreamKey {
        let mut digest = [0u8; 32];
        for (i, b) in digest.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.spec_digest[2 * i..2 * i + 2], 16).unwrap_or(0);
        }
        StreamKey::derive(self.experiment_seed, &self.image_id, &digest)
    }
}
