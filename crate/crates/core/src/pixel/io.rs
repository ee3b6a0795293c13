//! PNG/JPEG decoding and 8-bit PNG encoding.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::pixel::ImageBuffer;

/// Decoded image plus whether the source file itself was single-channel.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub image: ImageBuffer,
    pub source_channels: usize,
}

fn from_dynamic(dynamic: DynamicImage) -> Result<Decoded> {
    let source_channels = if dynamic.color().has_color() { 3 } else { 1 };
    let image = if source_channels == 1 {
        let g = dynamic.to_luma32f();
        let (w, h) = g.dimensions();
        ImageBuffer::new(w as usize, h as usize, 1, g.into_raw())?
    } else {
        let rgb = dynamic.to_rgb32f();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        let raw = rgb.into_raw();
        let n = w * h;
        let mut planar = vec![0f32; 3 * n];
        for (i, px) in raw.chunks_exact(3).enumerate() {
            for c in 0..3 {
                planar[c * n + i] = px[c];
            }
        }
        ImageBuffer::new(w, h, 3, planar)?
    };
    Ok(Decoded {
        image,
        source_channels,
    })
}

pub fn load(path: &Path) -> Result<Decoded> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn decode(bytes: &[u8]) -> Result<Decoded> {
    from_dynamic(image::load_from_memory(bytes)?)
}

#[inline]
fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes as 8-bit greyscale or RGB PNG.
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = if img.channels() == 1 {
        let raw = img.data().iter().map(|&v| quantize(v)).collect();
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, raw).expect("buffer size matches"))
    } else {
        let n = img.pixels_per_plane();
        let mut raw = Vec::with_capacity(3 * n);
        for i in 0..n {
            for c in 0..3 {
                raw.push(quantize(img.plane(c)[i]));
            }
        }
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, raw).expect("buffer size matches"))
    };
    let mut out = Cursor::new(Vec::new());
    dynamic.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<()> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact_on_8bit_levels() {
        let img = ImageBuffer::from_fn(5, 4, 3, |c, r, col| ((c * 40 + r * 5 + col) as f32) / 255.0).unwrap();
        let back = decode(&encode_png(&img).unwrap()).unwrap();
        assert_eq!(back.source_channels, 3);
        for (a, b) in img.data().iter().zip(back.image.data()) {
            assert!((a - b).abs() < 1e-6);
        }
        let grey = ImageBuffer::from_fn(3, 3, 1, |_, r, c| ((r * 3 + c) * 20) as f32 / 255.0).unwrap();
        let back = decode(&encode_png(&grey).unwrap()).unwrap();
        assert_eq!(back.source_channels, 1);
        assert_eq!(back.image.channels(), 1);
    }

    #[test]
    fn encoding_is_deterministic() {
        let img = ImageBuffer::from_fn(16, 16, 1, |_, r, c| ((r ^ c) as f32) / 15.0).unwrap();
        assert_eq!(encode_png(&img).unwrap(), encode_png(&img).unwrap());
    }
}
