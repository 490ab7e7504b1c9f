//! Image decode/encode: TIFF and PNG read, PNG write. 16-bit inputs scale to
//! [0, 255] by right-shift.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::imagecore::{GrayImage, RgbImage};

/// Result of decoding a file: color pages keep their channels, grayscale
/// pages come back single-channel.
#[derive(Debug, Clone)]
pub enum DecodedImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl DecodedImage {
    /// Collapse to grayscale regardless of the source channel count.
    pub fn into_gray(self) -> GrayImage {
        match self {
            DecodedImage::Gray(g) => g,
            DecodedImage::Rgb(rgb) => rgb.to_gray(),
        }
    }
}

pub fn load_image(path: &Path) -> Result<DecodedImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| Error::Codec {
        path: path.to_path_buf(),
        source: e,
    })?;
    convert(decoded, path)
}

fn convert(img: DynamicImage, path: &Path) -> Result<DecodedImage> {
    let out = match img {
        DynamicImage::ImageLuma8(buf) => {
            DecodedImage::Gray(GrayImage::new(buf.width(), buf.height(), buf.into_raw())?)
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let pixels = buf.into_raw().into_iter().map(|p| (p >> 8) as u8).collect();
            DecodedImage::Gray(GrayImage::new(w, h, pixels)?)
        }
        DynamicImage::ImageLumaA8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let pixels = buf.into_raw().chunks_exact(2).map(|p| p[0]).collect();
            DecodedImage::Gray(GrayImage::new(w, h, pixels)?)
        }
        DynamicImage::ImageRgb8(buf) => {
            DecodedImage::Rgb(RgbImage::new(buf.width(), buf.height(), buf.into_raw())?)
        }
        DynamicImage::ImageRgba8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let pixels = buf
                .into_raw()
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect();
            DecodedImage::Rgb(RgbImage::new(w, h, pixels)?)
        }
        DynamicImage::ImageRgb16(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let pixels = buf.into_raw().into_iter().map(|p| (p >> 8) as u8).collect();
            DecodedImage::Rgb(RgbImage::new(w, h, pixels)?)
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width(), rgb.height());
            DecodedImage::Rgb(RgbImage::new(w, h, rgb.into_raw())?)
        }
    };
    let _ = path;
    Ok(out)
}

/// Encode a grayscale image as PNG bytes.
pub fn encode_gray_png(img: &GrayImage) -> Result<Vec<u8>> {
    let buf: image::GrayImage =
        image::GrayImage::from_raw(img.width(), img.height(), img.pixels().to_vec())
            .expect("buffer length already validated");
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageLuma8(buf)
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Codec {
            path: "<memory>".into(),
            source: e,
        })?;
    Ok(out.into_inner())
}

pub fn save_gray_png(img: &GrayImage, path: &Path) -> Result<()> {
    let bytes = encode_gray_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_roundtrip_gray() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = GrayImage::from_fn(13, 9, |x, y| ((x * 19 + y * 5) % 256) as u8).unwrap();
        save_gray_png(&img, &path).unwrap();
        let back = load_image(&path).unwrap().into_gray();
        assert_eq!(img, back);
    }

    #[test]
    fn sixteen_bit_tiff_scales_by_right_shift() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.tiff");
        let buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(4, 3, |x, y| {
            image::Luma([(x as u16 * 1000 + y as u16 * 77) * 13])
        });
        DynamicImage::ImageLuma16(buf.clone())
            .save_with_format(&path, ImageFormat::Tiff)
            .unwrap();
        let back = load_image(&path).unwrap().into_gray();
        for y in 0..3 {
            for x in 0..4 {
                assert_eq!(back.get(x, y), (buf.get_pixel(x, y).0[0] >> 8) as u8);
            }
        }
    }

    #[test]
    fn encode_is_deterministic() {
        let img = GrayImage::from_fn(20, 20, |x, y| ((x + y) % 256) as u8).unwrap();
        assert_eq!(encode_gray_png(&img).unwrap(), encode_gray_png(&img).unwrap());
    }
}
