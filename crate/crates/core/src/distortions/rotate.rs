use crate::error::{Error, Result};
use crate::pixel::ImageBuffer;

fn transpose(img: &ImageBuffer) -> ImageBuffer {
    ImageBuffer::from_fn(img.height(), img.width(), img.channels(), |c, r, col| img.get(c, col, r)).expect("same sample count")
}

fn reverse_columns(img: &ImageBuffer) -> ImageBuffer {
    let w = img.width();
    ImageBuffer::from_fn(w, img.height(), img.channels(), |c, r, col| img.get(c, r, w - 1 - col)).expect("same shape")
}

fn reverse_rows(img: &ImageBuffer) -> ImageBuffer {
    let h = img.height();
    ImageBuffer::from_fn(img.width(), h, img.channels(), |c, r, col| img.get(c, h - 1 - r, col)).expect("same shape")
}

/// Lossless rotation by a multiple of 90°.
///
/// 90: transpose, then reverse the column order. 180: reverse rows and columns.
/// 270: reverse the column order, then transpose.
pub fn rotate(img: &ImageBuffer, angle: u32) -> Result<ImageBuffer> {
    match angle {
        0 => Ok(img.clone()),
        90 => Ok(reverse_columns(&transpose(img))),
        180 => Ok(reverse_columns(&reverse_rows(img))),
        270 => Ok(transpose(&reverse_columns(img))),
        other => Err(Error::invalid(format!("rotation angle must be 0, 90, 180 or 270, got {other}"))),
    }
}
