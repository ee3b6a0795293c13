use crate::error::{Error, Result};

/// Planar floating-point image with 1 or 3 channels.
///
/// Samples are `f32`, stored channel after channel, each plane row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

/// How many samples a clipping step moved back into `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClipReport {
    pub clipped: usize,
    pub total: usize,
    /// Mean absolute amount removed from the clipped samples.
    pub mean_clipped_value: f64,
}

impl ClipReport {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.clipped as f64 / self.total as f64
        }
    }

    pub fn merge(self, other: ClipReport) -> ClipReport {
        let clipped = self.clipped + other.clipped;
        let mean = if clipped == 0 {
            0.0
        } else {
            (self.mean_clipped_value * self.clipped as f64
                + other.mean_clipped_value * other.clipped as f64)
                / clipped as f64
        };
        ClipReport {
            clipped,
            total: self.total + other.total,
            mean_clipped_value: mean,
        }
    }
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("channels must be 1 or 3, got {channels}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("image must not be empty"));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from `f(channel, row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for r in 0..height {
                for col in 0..width {
                    data.push(f(c, r, col));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Greyscale image from 64-bit samples (narrowed to `f32`).
    pub fn from_f64_plane(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        Self::new(width, height, 1, values.iter().map(|&v| v as f32).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn pixels_per_plane(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f32] {
        let n = self.pixels_per_plane();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f32] {
        let n = self.pixels_per_plane();
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_f64(&self, channel: usize) -> Vec<f64> {
        self.plane(channel).iter().map(|&v| v as f64).collect()
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[channel * self.pixels_per_plane() + row * self.width + col]
    }

    pub fn require_channels(&self, expected: usize) -> Result<()> {
        if self.channels != expected {
            return Err(Error::ChannelMismatch {
                expected,
                actual: self.channels,
            });
        }
        Ok(())
    }

    /// Arithmetic mean over all samples, accumulated in `f64`.
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Clamps every sample into `[0, 1]`.
    pub fn clip(&mut self) -> ClipReport {
        let mut clipped = 0usize;
        let mut removed = 0.0f64;
        for v in &mut self.data {
            if *v < 0.0 {
                removed += -(*v as f64);
                clipped += 1;
                *v = 0.0;
            } else if *v > 1.0 {
                removed += *v as f64 - 1.0;
                clipped += 1;
                *v = 1.0;
            } else if v.is_nan() {
                clipped += 1;
                *v = 0.0;
            }
        }
        ClipReport {
            clipped,
            total: self.data.len(),
            mean_clipped_value: if clipped == 0 { 0.0 } else { removed / clipped as f64 },
        }
    }

    /// Same pixels with every channel-plane replaced by the result of `f`.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> ImageBuffer {
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies a rectangular window.
    pub fn crop(&self, left: usize, top: usize, width: usize, height: usize) -> Result<ImageBuffer> {
        if left + width > self.width || top + height > self.height || width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "crop {width}x{height}+{left}+{top} outside {}x{} image",
                self.width, self.height
            )));
        }
        ImageBuffer::from_fn(width, height, self.channels, |c, r, col| {
            self.get(c, top + r, left + col)
        })
    }

    /// Repeats a greyscale plane into three channels; colour images are returned as-is.
    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.data.len() * 3);
        for _ in 0..3 {
            data.extend_from_slice(&self.data);
        }
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }
}
