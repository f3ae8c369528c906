use std::path::Path;

use image::{DynamicImage, ImageReader};

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Reads an 8-bit grayscale or RGB raster (PNG, PGM, PPM) into a planar buffer.
///
/// An alpha channel, if present, is dropped. 16-bit and float rasters are
/// rejected.
pub fn load_frame(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let reader = ImageReader::open(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = reader
        .with_guessed_format()
        .map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
    let decoded = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    from_dynamic(decoded, path)
}

fn from_dynamic(img: DynamicImage, path: &Path) -> Result<ImageBuffer> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    match img {
        DynamicImage::ImageLuma8(buf) => {
            ImageBuffer::new(w, h, 1, buf.into_raw().into_iter().map(f64::from).collect())
        }
        DynamicImage::ImageLumaA8(buf) => ImageBuffer::new(
            w,
            h,
            1,
            buf.into_raw()
                .chunks_exact(2)
                .map(|p| f64::from(p[0]))
                .collect(),
        ),
        DynamicImage::ImageRgb8(buf) => planar_from_interleaved(w, h, &buf.into_raw(), 3),
        DynamicImage::ImageRgba8(buf) => planar_from_interleaved(w, h, &buf.into_raw(), 4),
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            format: format!("{:?}", other.color()),
        }),
    }
}

fn planar_from_interleaved(w: usize, h: usize, raw: &[u8], stride: usize) -> Result<ImageBuffer> {
    let n = w * h;
    let mut data = vec![0.0; n * 3];
    for (i, px) in raw.chunks_exact(stride).enumerate() {
        for c in 0..3 {
            data[c * n + i] = f64::from(px[c]);
        }
    }
    ImageBuffer::new(w, h, 3, data)
}

/// Writes the buffer as an 8-bit PNG, rounding and clamping to `[0, 255]`.
pub fn save_png(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width(), img.height());
    let to_u8 = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    let dynamic = if img.channels() == 1 {
        let raw: Vec<u8> = img.channel(0).iter().map(|&v| to_u8(v)).collect();
        DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w as u32, h as u32, raw).expect("buffer size matches"),
        )
    } else {
        let mut raw = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            for c in 0..3 {
                raw.push(to_u8(img.channel(c)[i]));
            }
        }
        DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w as u32, h as u32, raw).expect("buffer size matches"),
        )
    };
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })
}
