//! Greyscale conversion and opponent-colour inversion in DKL space.
//!
//! RGB → DKL goes through a monitor lookup table (device grey level → luminance), a
//! 3×3 RGB → LMS matrix and a 3×3 LMS → DKL matrix. Negating the two chromatic DKL
//! channels and mapping back yields an image of opposite hue at unchanged luminance.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pixel::{ClipReport, ImageBuffer};

/// `(R, G, B)` luma weights used by [`to_greyscale`].
pub const LUMA_WEIGHTS: [f64; 3] = [0.2125, 0.7154, 0.0721];

pub fn to_greyscale(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.require_channels(3)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| {
            let y = LUMA_WEIGHTS[0] * r as f64 + LUMA_WEIGHTS[1] * g as f64 + LUMA_WEIGHTS[2] * b as f64;
            y.clamp(0.0, 1.0) as f32
        })
        .collect();
    ImageBuffer::new(img.width(), img.height(), 1, data)
}

pub type Mat3 = [[f64; 3]; 3];

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn determinant(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn inverse(m: &Mat3) -> Option<Mat3> {
    let det = determinant(m);
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [c(1, 1, 2, 2), -c(0, 1, 2, 2), c(0, 1, 1, 2)],
        [-c(1, 0, 2, 2), c(0, 0, 2, 2), -c(0, 0, 1, 2)],
        [c(1, 0, 2, 1), -c(0, 0, 2, 1), c(0, 0, 1, 1)],
    ];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] / det;
        }
    }
    Some(out)
}

/// Linear sRGB (D65) → CIE XYZ.
const SRGB_TO_XYZ: Mat3 = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// CIE XYZ → 2° cone fundamentals (Stockman & Sharpe, as adopted by CIE 2006).
const XYZ_TO_LMS_2DEG: Mat3 = [
    [0.210_576, 0.855_098, -0.039_698_3],
    [-0.417_076, 1.177_260, 0.078_628_3],
    [0.0, 0.0, 0.516_835],
];

/// Display description used for DKL conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorModel {
    lut: [f64; 256],
    rgb_to_lms: Mat3,
    lms_to_dkl: Mat3,
    /// Where the model came from, e.g. `"default:gamma-2.2/srgb-ss2"` or a file path.
    pub source: String,
}

impl Default for MonitorModel {
    /// Gamma-2.2 display with sRGB primaries and 2° cone fundamentals.
    fn default() -> Self {
        let mut lut = [0.0; 256];
        for (i, v) in lut.iter_mut().enumerate() {
            *v = (i as f64 / 255.0).powf(2.2);
        }
        let c = mat_mul(&XYZ_TO_LMS_2DEG, &SRGB_TO_XYZ);
        let d = dkl_from_cone_matrix(&c);
        MonitorModel {
            lut,
            rgb_to_lms: c,
            lms_to_dkl: d,
            source: "default:gamma-2.2/srgb-primaries/cone-fundamentals-2deg".to_string(),
        }
    }
}

/// LMS → DKL matrix for the achromatic background `C·(1,1,1)`.
///
/// Rows are luminance `L+M` (scaled to 1 on the background), `L − (bL/bM)·M` and
/// `−L − M + ((bL+bM)/bS)·S`; both chromatic rows vanish on any achromatic input.
pub fn dkl_from_cone_matrix(rgb_to_lms: &Mat3) -> Mat3 {
    let b = mat_vec(rgb_to_lms, [1.0, 1.0, 1.0]);
    let lum = b[0] + b[1];
    [
        [1.0 / lum, 1.0 / lum, 0.0],
        [1.0, -b[0] / b[1], 0.0],
        [-1.0, -1.0, lum / b[2]],
    ]
}

impl MonitorModel {
    pub fn new(lut: [f64; 256], rgb_to_lms: Mat3, lms_to_dkl: Mat3, source: impl Into<String>) -> Result<Self> {
        if lut.windows(2).any(|w| w[1] < w[0]) || lut.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("monitor lut must be finite and monotone nondecreasing"));
        }
        if lut[255] <= 0.0 {
            return Err(Error::invalid("monitor lut must reach a positive luminance"));
        }
        for (name, m) in [("rgb_to_lms", &rgb_to_lms), ("lms_to_dkl", &lms_to_dkl)] {
            if determinant(m).abs() < 1e-12 {
                return Err(Error::invalid(format!("{name} matrix is singular")));
            }
        }
        let model = MonitorModel {
            lut,
            rgb_to_lms,
            lms_to_dkl,
            source: source.into(),
        };
        let grey = model.rgb_to_dkl([0.5, 0.5, 0.5]);
        let scale = grey[0].abs().max(1e-12);
        if grey[1].abs() / scale > 1e-6 || grey[2].abs() / scale > 1e-6 {
            return Err(Error::invalid(
                "lms_to_dkl does not null achromatic input for this rgb_to_lms matrix",
            ));
        }
        Ok(model)
    }

    pub fn lut(&self) -> &[f64; 256] {
        &self.lut
    }

    pub fn rgb_to_lms(&self) -> &Mat3 {
        &self.rgb_to_lms
    }

    pub fn lms_to_dkl(&self) -> &Mat3 {
        &self.lms_to_dkl
    }

    /// Relative luminance in `[0, 1]` for a device value in `[0, 1]`.
    pub fn to_linear(&self, v: f64) -> f64 {
        let x = (v * 255.0).clamp(0.0, 255.0);
        let i = (x.floor() as usize).min(254);
        let t = x - i as f64;
        (self.lut[i] * (1.0 - t) + self.lut[i + 1] * t) / self.lut[255]
    }

    /// Inverse of [`Self::to_linear`]; extrapolates linearly beyond the table so that
    /// out-of-gamut values remain visible to clipping.
    pub fn from_linear(&self, y: f64) -> f64 {
        let target = y * self.lut[255];
        let seg = |i: usize| (self.lut[i], self.lut[i + 1]);
        let interp = |i: usize| {
            let (a, b) = seg(i);
            if b > a {
                (i as f64 + (target - a) / (b - a)) / 255.0
            } else {
                i as f64 / 255.0
            }
        };
        if target <= self.lut[0] {
            let i = (0..255).find(|&i| self.lut[i + 1] > self.lut[i]).unwrap_or(0);
            return interp(i).min(i as f64 / 255.0);
        }
        if target >= self.lut[255] {
            let i = (0..255).rev().find(|&i| self.lut[i + 1] > self.lut[i]).unwrap_or(254);
            return interp(i).max(1.0);
        }
        // first segment whose upper end reaches the target
        let i = self.lut.partition_point(|&l| l < target).saturating_sub(1).min(254);
        interp(i)
    }

    pub fn rgb_to_dkl(&self, rgb: [f64; 3]) -> [f64; 3] {
        let lin = rgb.map(|v| self.to_linear(v));
        mat_vec(&self.lms_to_dkl, mat_vec(&self.rgb_to_lms, lin))
    }

    pub fn dkl_to_rgb(&self, dkl: [f64; 3]) -> [f64; 3] {
        let d_inv = inverse(&self.lms_to_dkl).expect("validated invertible");
        let c_inv = inverse(&self.rgb_to_lms).expect("validated invertible");
        mat_vec(&c_inv, mat_vec(&d_inv, dkl)).map(|v| self.from_linear(v))
    }

    /// Linear-RGB matrix that negates both chromatic DKL channels.
    pub fn opponent_matrix(&self) -> Mat3 {
        let d_inv = inverse(&self.lms_to_dkl).expect("validated invertible");
        let c_inv = inverse(&self.rgb_to_lms).expect("validated invertible");
        let flip = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
        mat_mul(&c_inv, &mat_mul(&d_inv, &mat_mul(&flip, &mat_mul(&self.lms_to_dkl, &self.rgb_to_lms))))
    }

    /// Reads the plain-text calibration format.
    ///
    /// ```text
    /// # comments start with '#'
    /// [lut]
    /// 0 0.35          # grey level, luminance (256 rows, levels 0..=255)
    /// ...
    /// [rgb_to_lms]
    /// m00 m01 m02     # three rows
    /// ...
    /// [lms_to_dkl]    # optional; derived from rgb_to_lms when absent
    /// ...
    /// ```
    pub fn parse_calibration(text: &str, source: impl Into<String>) -> Result<Self> {
        let mut section = "";
        let mut lut = [f64::NAN; 256];
        let mut seen = [false; 256];
        let mut c_rows: Vec<[f64; 3]> = Vec::new();
        let mut d_rows: Vec<[f64; 3]> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match &line[1..line.len() - 1] {
                    "lut" => "lut",
                    "rgb_to_lms" => "c",
                    "lms_to_dkl" => "d",
                    other => {
                        return Err(Error::parse("calibration", format!("line {}: unknown section [{other}]", lineno + 1)))
                    }
                };
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse("calibration", format!("line {}: {e}", lineno + 1)))?;
            match section {
                "lut" => {
                    if nums.len() != 2 || nums[0].fract() != 0.0 || !(0.0..=255.0).contains(&nums[0]) {
                        return Err(Error::parse(
                            "calibration",
                            format!("line {}: expected '<grey 0..255> <luminance>'", lineno + 1),
                        ));
                    }
                    let g = nums[0] as usize;
                    lut[g] = nums[1];
                    seen[g] = true;
                }
                "c" | "d" => {
                    if nums.len() != 3 {
                        return Err(Error::parse("calibration", format!("line {}: matrix rows need 3 values", lineno + 1)));
                    }
                    let row = [nums[0], nums[1], nums[2]];
                    if section == "c" { c_rows.push(row) } else { d_rows.push(row) }
                }
                _ => return Err(Error::parse("calibration", format!("line {}: data outside a section", lineno + 1))),
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::parse("calibration", format!("lut is missing grey level {missing}")));
        }
        if c_rows.len() != 3 {
            return Err(Error::parse("calibration", "rgb_to_lms needs exactly 3 rows"));
        }
        let c = [c_rows[0], c_rows[1], c_rows[2]];
        let d = match d_rows.len() {
            0 => dkl_from_cone_matrix(&c),
            3 => [d_rows[0], d_rows[1], d_rows[2]],
            _ => return Err(Error::parse("calibration", "lms_to_dkl needs exactly 3 rows")),
        };
        MonitorModel::new(lut, c, d, source)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_calibration(&text, path.display().to_string())
    }

    pub fn to_calibration_text(&self) -> String {
        let mut out = String::from("# monitor calibration: grey level -> luminance, then two 3x3 matrices\n[lut]\n");
        for (i, v) in self.lut.iter().enumerate() {
            let _ = writeln!(out, "{i} {v:e}");
        }
        for (name, m) in [("rgb_to_lms", &self.rgb_to_lms), ("lms_to_dkl", &self.lms_to_dkl)] {
            let _ = writeln!(out, "[{name}]");
            for row in m {
                let _ = writeln!(out, "{:e} {:e} {:e}", row[0], row[1], row[2]);
            }
        }
        out
    }
}

/// Negates the chromatic DKL channels of a colour image, keeping DKL luminance.
pub fn opponent_colour(img: &ImageBuffer, monitor: &MonitorModel) -> Result<(ImageBuffer, ClipReport)> {
    img.require_channels(3)?;
    let m = monitor.opponent_matrix();
    let n = img.pixels_per_plane();
    let mut data = vec![0f32; 3 * n];
    for i in 0..n {
        let lin = [img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]].map(|v| monitor.to_linear(v as f64));
        let out = mat_vec(&m, lin);
        for c in 0..3 {
            data[c * n + i] = monitor.from_linear(out[c]) as f32;
        }
    }
    let mut out = ImageBuffer::new(img.width(), img.height(), 3, data)?;
    let report = out.clip();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(r: f32, g: f32, b: f32) -> ImageBuffer {
        ImageBuffer::from_fn(3, 2, 3, |c, _, _| [r, g, b][c]).unwrap()
    }

    #[test]
    fn greyscale_weights() {
        assert!(to_greyscale(&rgb(1.0, 1.0, 1.0)).unwrap().data().iter().all(|&v| v == 1.0));
        assert!(to_greyscale(&rgb(0.0, 0.0, 0.0)).unwrap().data().iter().all(|&v| v == 0.0));
        let red = to_greyscale(&rgb(1.0, 0.0, 0.0)).unwrap();
        assert!(red.data().iter().all(|&v| (v as f64 - 0.2125).abs() < 1e-7));
    }

    #[test]
    fn greyscale_rejects_single_channel() {
        let grey = ImageBuffer::constant(2, 2, 1, 0.5).unwrap();
        assert!(matches!(to_greyscale(&grey), Err(Error::ChannelMismatch { .. })));
    }

    #[test]
    fn achromatic_has_no_chromatic_dkl_component() {
        let m = MonitorModel::default();
        for g in [0.0, 0.1, 0.454, 0.8, 1.0] {
            let dkl = m.rgb_to_dkl([g, g, g]);
            assert!(dkl[1].abs() < 1e-6 && dkl[2].abs() < 1e-6, "{dkl:?}");
        }
    }

    #[test]
    fn lut_round_trip() {
        let m = MonitorModel::default();
        for i in 0..=100 {
            let v = i as f64 / 100.0;
            assert!((m.from_linear(m.to_linear(v)) - v).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn dkl_round_trip() {
        let m = MonitorModel::default();
        let px = [0.2, 0.6, 0.4];
        let back = m.dkl_to_rgb(m.rgb_to_dkl(px));
        for c in 0..3 {
            assert!((back[c] - px[c]).abs() < 1e-9);
        }
    }

    #[test]
    fn opponent_keeps_luminance_and_flips_chroma() {
        let m = MonitorModel::default();
        let img = rgb(0.55, 0.45, 0.5);
        let (out, rep) = opponent_colour(&img, &m).unwrap();
        assert_eq!(rep.clipped, 0);
        let a = m.rgb_to_dkl([0.55, 0.45, 0.5]);
        let b = m.rgb_to_dkl([out.get(0, 0, 0) as f64, out.get(1, 0, 0) as f64, out.get(2, 0, 0) as f64]);
        assert!((a[0] - b[0]).abs() < 1e-5);
        assert!((a[1] + b[1]).abs() < 1e-5);
        assert!((a[2] + b[2]).abs() < 1e-5);
    }

    #[test]
    fn opponent_is_involutive_in_gamut() {
        let m = MonitorModel::default();
        let img = rgb(0.5, 0.48, 0.46);
        let (once, _) = opponent_colour(&img, &m).unwrap();
        let (twice, _) = opponent_colour(&once, &m).unwrap();
        for (a, b) in img.data().iter().zip(twice.data()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn grey_image_is_fixed_point_of_opponent() {
        let m = MonitorModel::default();
        let img = rgb(0.3, 0.3, 0.3);
        let (out, _) = opponent_colour(&img, &m).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn calibration_text_round_trip() {
        let m = MonitorModel::default();
        let parsed = MonitorModel::parse_calibration(&m.to_calibration_text(), "mem").unwrap();
        for i in 0..256 {
            assert!((parsed.lut()[i] - m.lut()[i]).abs() <= 1e-12 * m.lut()[i].max(1.0));
        }
        assert!((determinant(parsed.rgb_to_lms()) - determinant(m.rgb_to_lms())).abs() < 1e-9);
    }

    #[test]
    fn calibration_derives_dkl_and_rejects_bad_tables() {
        let m = MonitorModel::default();
        let text = m.to_calibration_text();
        let without_d: String = text.split("[lms_to_dkl]").next().unwrap().to_string();
        let parsed = MonitorModel::parse_calibration(&without_d, "mem").unwrap();
        assert!(parsed.rgb_to_dkl([0.7, 0.7, 0.7])[1].abs() < 1e-9);

        let non_monotone = text.replacen("\n1 ", "\n1 -", 1);
        assert!(MonitorModel::parse_calibration(&non_monotone, "mem").is_err());
        let missing_level = text.replacen("\n7 ", "\n# ", 1);
        assert!(MonitorModel::parse_calibration(&missing_level, "mem").is_err());
    }
}
