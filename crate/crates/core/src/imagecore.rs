//! Raster containers and the preprocessing primitives applied before
//! segmentation and before similarity analysis.
//!
//! All image values are immutable after construction; every operation is a
//! pure function returning a new image, so shared references are safe across
//! threads.

use crate::error::{Error, Result};

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

/// Row-major 8-bit single-channel raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

/// Binary raster whose pixels are exactly 0 or 255 (255 = foreground/ink).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

pub const DEFAULT_THRESHOLD: u8 = 155;

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::invalid(format!(
                "rgb buffer length {} does not match {width}x{height}x3",
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Bilinear resize to exactly `target_w` x `target_h`.
    pub fn resize(&self, target_w: u32, target_h: u32) -> Result<Self> {
        check_dims(target_w, target_h)?;
        let pixels = resize_channels::<3>(
            &self.pixels,
            self.width,
            self.height,
            target_w,
            target_h,
        );
        Ok(RgbImage {
            width: target_w,
            height: target_h,
            pixels,
        })
    }

    /// Width-capped proportional resize; images at or below the cap pass
    /// through unchanged.
    pub fn resize_capped(&self, cap: u32) -> Result<Self> {
        match capped_dims(self.width, self.height, cap)? {
            None => Ok(self.clone()),
            Some((w, h)) => self.resize(w, h),
        }
    }

    /// Rec.601 luminance conversion: round(0.299 R + 0.587 G + 0.114 B).
    pub fn to_gray(&self) -> GrayImage {
        let mut pixels = Vec::with_capacity(self.width as usize * self.height as usize);
        for px in self.pixels.chunks_exact(3) {
            let lum = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
            pixels.push(lum.round() as u8);
        }
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::invalid(format!(
                "gray buffer length {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn constant(width: u32, height: u32, value: u8) -> Result<Self> {
        check_dims(width, height)?;
        Ok(GrayImage {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        check_dims(width, height)?;
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Bilinear resize to exactly `target_w` x `target_h`.
    pub fn resize(&self, target_w: u32, target_h: u32) -> Result<Self> {
        check_dims(target_w, target_h)?;
        let pixels = resize_channels::<1>(
            &self.pixels,
            self.width,
            self.height,
            target_w,
            target_h,
        );
        Ok(GrayImage {
            width: target_w,
            height: target_h,
            pixels,
        })
    }

    /// Width-capped proportional resize; images at or below the cap pass
    /// through unchanged.
    pub fn resize_capped(&self, cap: u32) -> Result<Self> {
        match capped_dims(self.width, self.height, cap)? {
            None => Ok(self.clone()),
            Some((w, h)) => self.resize(w, h),
        }
    }

    /// Inverse binarization: pixels strictly greater than `t` become 0,
    /// pixels at or below `t` become `maxval` (dark ink turns into white
    /// foreground).
    pub fn threshold_inverse(&self, t: u8, maxval: u8) -> Result<BinaryImage> {
        if t >= maxval {
            return Err(Error::invalid(format!(
                "threshold {t} must be below maxval {maxval}"
            )));
        }
        if maxval != 255 {
            return Err(Error::invalid(format!(
                "binary maxval must be 255, got {maxval}"
            )));
        }
        let pixels = self
            .pixels
            .iter()
            .map(|&p| if p > t { 0 } else { maxval })
            .collect();
        Ok(BinaryImage {
            width: self.width,
            height: self.height,
            pixels,
        })
    }

    /// 3x3 sharpening convolution (center 5, 4-neighbors -1, corners 0) with
    /// edge replication; results clamp to [0, 255].
    pub fn sharpen(&self) -> GrayImage {
        let w = self.width as i64;
        let h = self.height as i64;
        let at = |x: i64, y: i64| -> i64 {
            let xc = x.clamp(0, w - 1) as usize;
            let yc = y.clamp(0, h - 1) as usize;
            self.pixels[yc * w as usize + xc] as i64
        };
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for y in 0..h {
            for x in 0..w {
                let v = 5 * at(x, y) - at(x - 1, y) - at(x + 1, y) - at(x, y - 1) - at(x, y + 1);
                pixels.push(v.clamp(0, 255) as u8);
            }
        }
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Crop the axis-aligned window; the window must lie within bounds.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Result<GrayImage> {
        check_dims(w, h)?;
        if x + w > self.width || y + h > self.height {
            return Err(Error::invalid(format!(
                "crop {w}x{h}+{x}+{y} exceeds image {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w as usize * h as usize);
        for row in y..y + h {
            let start = row as usize * self.width as usize + x as usize;
            pixels.extend_from_slice(&self.pixels[start..start + w as usize]);
        }
        Ok(GrayImage {
            width: w,
            height: h,
            pixels,
        })
    }
}

impl BinaryImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::invalid(format!(
                "binary buffer length {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        if let Some(&bad) = pixels.iter().find(|&&p| p != 0 && p != 255) {
            return Err(Error::invalid(format!(
                "binary image may only contain 0 or 255, found {bad}"
            )));
        }
        Ok(BinaryImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn is_foreground(&self, x: u32, y: u32) -> bool {
        self.get(x, y) == 255
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 255).count()
    }

    /// View the binary raster as a grayscale image (shared pixel semantics).
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.clone(),
        }
    }

    /// Morphological dilation with an all-ones kernel of odd dimensions,
    /// anchored at its center. Coordinates clamp at the borders (edge
    /// replication), so foreground never shrinks.
    pub fn dilate(&self, kernel_w: u32, kernel_h: u32, iterations: u32) -> Result<BinaryImage> {
        if kernel_w == 0 || kernel_h == 0 || kernel_w % 2 == 0 || kernel_h % 2 == 0 {
            return Err(Error::invalid(format!(
                "dilation kernel dimensions must be odd and positive, got {kernel_w}x{kernel_h}"
            )));
        }
        if iterations == 0 {
            return Err(Error::invalid("dilation iterations must be at least 1"));
        }
        let rx = (kernel_w / 2) as i64;
        let ry = (kernel_h / 2) as i64;
        let w = self.width as i64;
        let h = self.height as i64;
        let mut current = self.pixels.clone();
        for _ in 0..iterations {
            let mut next = vec![0u8; current.len()];
            for y in 0..h {
                for x in 0..w {
                    let mut hit = false;
                    'scan: for dy in -ry..=ry {
                        let yc = (y + dy).clamp(0, h - 1) as usize;
                        for dx in -rx..=rx {
                            let xc = (x + dx).clamp(0, w - 1) as usize;
                            if current[yc * w as usize + xc] == 255 {
                                hit = true;
                                break 'scan;
                            }
                        }
                    }
                    if hit {
                        next[y as usize * w as usize + x as usize] = 255;
                    }
                }
            }
            current = next;
        }
        Ok(BinaryImage {
            width: self.width,
            height: self.height,
            pixels: current,
        })
    }
}

/// Proportional dimensions under a width cap. `None` means the image is
/// already within the cap.
fn capped_dims(width: u32, height: u32, cap: u32) -> Result<Option<(u32, u32)>> {
    if cap == 0 {
        return Err(Error::invalid("width cap must be at least 1"));
    }
    if width <= cap {
        return Ok(None);
    }
    let scaled = (height as f64 * cap as f64 / width as f64).round() as u32;
    Ok(Some((cap, scaled.max(1))))
}

/// Bilinear resampling over `C` interleaved channels with pixel-center
/// alignment and border clamping.
fn resize_channels<const C: usize>(
    src: &[u8],
    sw: u32,
    sh: u32,
    tw: u32,
    th: u32,
) -> Vec<u8> {
    let sw_us = sw as usize;
    let scale_x = sw as f64 / tw as f64;
    let scale_y = sh as f64 / th as f64;
    let mut out = Vec::with_capacity(tw as usize * th as usize * C);
    for y in 0..th {
        let sy = (y as f64 + 0.5) * scale_y - 0.5;
        let y0 = sy.floor();
        let ty = sy - y0;
        let y0c = (y0 as i64).clamp(0, sh as i64 - 1) as usize;
        let y1c = (y0 as i64 + 1).clamp(0, sh as i64 - 1) as usize;
        for x in 0..tw {
            let sx = (x as f64 + 0.5) * scale_x - 0.5;
            let x0 = sx.floor();
            let tx = sx - x0;
            let x0c = (x0 as i64).clamp(0, sw as i64 - 1) as usize;
            let x1c = (x0 as i64 + 1).clamp(0, sw as i64 - 1) as usize;
            for c in 0..C {
                let p00 = src[(y0c * sw_us + x0c) * C + c] as f64;
                let p10 = src[(y0c * sw_us + x1c) * C + c] as f64;
                let p01 = src[(y1c * sw_us + x0c) * C + c] as f64;
                let p11 = src[(y1c * sw_us + x1c) * C + c] as f64;
                let top = p00 * (1.0 - tx) + p10 * tx;
                let bottom = p01 * (1.0 - tx) + p11 * tx;
                let v = top * (1.0 - ty) + bottom * ty;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: u32, h: u32, px: &[u8]) -> GrayImage {
        GrayImage::new(w, h, px.to_vec()).unwrap()
    }

    #[test]
    fn resize_identity() {
        let img = GrayImage::from_fn(10, 10, |x, y| (x * 10 + y) as u8).unwrap();
        let out = img.resize(10, 10).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn resize_halves_dimensions() {
        let img = GrayImage::constant(2000, 1000, 40).unwrap();
        let out = img.resize(1000, 500).unwrap();
        assert_eq!((out.width(), out.height()), (1000, 500));
        assert!(out.pixels().iter().all(|&p| p == 40));
    }

    #[test]
    fn resize_bilinear_row_values() {
        // 2x1 [0, 255] upscaled to 4x1: hand-evaluated bilinear weights.
        let img = gray(2, 1, &[0, 255]);
        let out = img.resize(4, 1).unwrap();
        assert_eq!(out.pixels(), &[0, 64, 191, 255]);
        assert!(out.pixels().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn resize_rejects_zero_target() {
        let img = GrayImage::constant(4, 4, 0).unwrap();
        assert!(img.resize(0, 4).is_err());
        assert!(img.resize(4, 0).is_err());
    }

    #[test]
    fn resize_capped_below_cap_unchanged() {
        let img = GrayImage::from_fn(800, 600, |x, y| (x ^ y) as u8).unwrap();
        let out = img.resize_capped(1000).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn resize_capped_exact_ratio() {
        let img = GrayImage::constant(2000, 1500, 7).unwrap();
        let out = img.resize_capped(1000).unwrap();
        assert_eq!((out.width(), out.height()), (1000, 750));
    }

    #[test]
    fn resize_capped_rounds_height() {
        let img = GrayImage::constant(1001, 333, 7).unwrap();
        let out = img.resize_capped(1000).unwrap();
        assert_eq!((out.width(), out.height()), (1000, 333));
    }

    #[test]
    fn resize_capped_idempotent() {
        let img = GrayImage::from_fn(1777, 912, |x, y| ((x * 7 + y * 3) % 251) as u8).unwrap();
        let once = img.resize_capped(1000).unwrap();
        let twice = once.resize_capped(1000).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn grayscale_extremes_and_red() {
        let img = RgbImage::new(3, 1, vec![255, 255, 255, 0, 0, 0, 255, 0, 0]).unwrap();
        let g = img.to_gray();
        assert_eq!(g.pixels(), &[255, 0, 76]);
    }

    #[test]
    fn grayscale_equal_channels_identity() {
        for v in [0u8, 17, 100, 200, 255] {
            let img = RgbImage::new(1, 1, vec![v, v, v]).unwrap();
            assert_eq!(img.to_gray().get(0, 0), v);
        }
    }

    #[test]
    fn threshold_maps_sides_and_boundary() {
        let img = gray(3, 1, &[200, 100, 155]);
        let bin = img.threshold_inverse(155, 255).unwrap();
        assert_eq!(bin.pixels(), &[0, 255, 255]);
    }

    #[test]
    fn threshold_rejects_bad_range() {
        let img = GrayImage::constant(2, 2, 10).unwrap();
        assert!(img.threshold_inverse(255, 255).is_err());
    }

    #[test]
    fn threshold_double_application_fixes_binary_output() {
        // The binary output is a fixed point of applying the inverse
        // threshold twice more (it is an involution on {0,255} images).
        let img = GrayImage::from_fn(8, 8, |x, y| ((x * 37 + y * 11) % 256) as u8).unwrap();
        let once = img.threshold_inverse(155, 255).unwrap();
        let twice = once
            .to_gray()
            .threshold_inverse(155, 255)
            .unwrap()
            .to_gray()
            .threshold_inverse(155, 255)
            .unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn dilate_single_pixel_grows_to_kernel_block() {
        let mut px = vec![0u8; 25];
        px[12] = 255;
        let bin = BinaryImage::new(5, 5, px).unwrap();
        let out = bin.dilate(3, 3, 1).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                let expect = (1..=3).contains(&x) && (1..=3).contains(&y);
                assert_eq!(out.is_foreground(x, y), expect, "at {x},{y}");
            }
        }
    }

    #[test]
    fn dilate_blank_unchanged() {
        let bin = BinaryImage::new(6, 4, vec![0; 24]).unwrap();
        let out = bin.dilate(3, 3, 1).unwrap();
        assert_eq!(bin, out);
    }

    #[test]
    fn dilate_merges_neighbouring_pixels() {
        // Foreground at (1,1) and (2,1): the 3x3 footprints overlap and the
        // union is one 4-wide, 3-tall block.
        let mut px = vec![0u8; 30];
        px[6 + 1] = 255;
        px[6 + 2] = 255;
        let bin = BinaryImage::new(6, 5, px).unwrap();
        let out = bin.dilate(3, 3, 1).unwrap();
        for y in 0..5u32 {
            for x in 0..6u32 {
                let expect = (0..=3).contains(&x) && (0..=2).contains(&y);
                assert_eq!(out.is_foreground(x, y), expect, "at {x},{y}");
            }
        }
        assert_eq!(out.foreground_count(), 12);
    }

    #[test]
    fn dilate_identity_kernel() {
        let img = GrayImage::from_fn(9, 7, |x, y| if (x + y) % 3 == 0 { 10 } else { 200 })
            .unwrap()
            .threshold_inverse(155, 255)
            .unwrap();
        let out = img.dilate(1, 1, 1).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn dilate_is_monotone() {
        let img = GrayImage::from_fn(12, 12, |x, y| if (x * y) % 5 == 0 { 0 } else { 255 })
            .unwrap()
            .threshold_inverse(155, 255)
            .unwrap();
        let out = img.dilate(3, 3, 1).unwrap();
        for y in 0..12 {
            for x in 0..12 {
                if img.is_foreground(x, y) {
                    assert!(out.is_foreground(x, y));
                }
            }
        }
    }

    #[test]
    fn dilate_composition_matches_wider_kernel_on_interior() {
        let img = GrayImage::from_fn(16, 14, |x, y| if (x * 3 + y * 7) % 11 == 0 { 0 } else { 255 })
            .unwrap()
            .threshold_inverse(155, 255)
            .unwrap();
        let twice = img.dilate(3, 3, 1).unwrap().dilate(3, 3, 1).unwrap();
        let wide = img.dilate(5, 5, 1).unwrap();
        for y in 2..12 {
            for x in 2..14 {
                assert_eq!(twice.get(x, y), wide.get(x, y), "at {x},{y}");
            }
        }
    }

    #[test]
    fn dilate_rejects_even_kernel() {
        let bin = BinaryImage::new(4, 4, vec![0; 16]).unwrap();
        assert!(bin.dilate(2, 3, 1).is_err());
        assert!(bin.dilate(3, 4, 1).is_err());
    }

    #[test]
    fn sharpen_constant_unchanged() {
        let img = GrayImage::constant(7, 5, 100).unwrap();
        assert_eq!(img.sharpen(), img);
    }

    #[test]
    fn sharpen_single_bright_pixel() {
        let mut px = vec![0u8; 25];
        px[12] = 255;
        let img = gray(5, 5, &px);
        let out = img.sharpen();
        assert_eq!(out.get(2, 2), 255);
        assert_eq!(out.get(1, 2), 0);
        assert_eq!(out.get(3, 2), 0);
        assert_eq!(out.get(2, 1), 0);
        assert_eq!(out.get(2, 3), 0);
        assert_eq!(out.get(1, 1), 0);
    }

    #[test]
    fn sharpen_center_bump() {
        let mut px = vec![100u8; 9];
        px[4] = 110;
        let img = gray(3, 3, &px);
        let out = img.sharpen();
        assert_eq!(out.get(1, 1), 150);
    }

    #[test]
    fn crop_out_of_bounds_rejected() {
        let img = GrayImage::constant(10, 10, 1).unwrap();
        assert!(img.crop(8, 8, 4, 4).is_err());
        assert!(img.crop(0, 0, 10, 10).is_ok());
    }
}
