//! Grayscale images: in-memory samples in [0, 1], bilinear lookup, and
//! PGM/PPM/PNG readers plus PGM/PNG writers.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("image {path}: {message}")]
    Format { path: String, message: String },
    #[error("image dimensions {width}x{height} hold {len} pixels")]
    BadDimensions { width: u32, height: u32, len: usize },
    #[error("pixel {index} is {value}, outside [0, 1]")]
    BadPixel { index: usize, value: f32 },
}

/// Row-major grayscale image with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<f32>) -> Result<GrayImage, ImageError> {
        if pixels.len() != (width as usize) * (height as usize) || width == 0 || height == 0 {
            return Err(ImageError::BadDimensions { width, height, len: pixels.len() });
        }
        for (index, &value) in pixels.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ImageError::BadPixel { index, value });
            }
        }
        Ok(GrayImage { width, height, pixels })
    }

    /// Builds from 8-bit samples, mapping `k` to `k / 255`.
    pub fn from_bytes(width: u32, height: u32, bytes: &[u8]) -> Result<GrayImage, ImageError> {
        let pixels = bytes.iter().map(|&b| b as f32 / 255.0).collect();
        GrayImage::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Bilinear sample at a continuous pixel coordinate, in f64.
    ///
    /// Pixel (i, j) is centered at (i + 0.5, j + 0.5); coordinates outside
    /// the image clamp to the border.
    pub fn bilinear(&self, u: f64, v: f64) -> f64 {
        let x = (u - 0.5).clamp(0.0, (self.width - 1) as f64);
        let y = (v - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as u32;
        let y0 = y0 as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let p00 = self.get(x0, y0) as f64;
        let p10 = self.get(x1, y0) as f64;
        let p01 = self.get(x0, y1) as f64;
        let p11 = self.get(x1, y1) as f64;
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        top + (bottom - top) * fy
    }

    /// Quantizes to 8 bits (`round(v * 255)`).
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| (v * 255.0).round() as u8).collect()
    }
}

/// Rec. 601 luma from 8-bit RGB: `0.299 R + 0.587 G + 0.114 B`, evaluated in
/// f64 on the raw byte values, then divided by 255.
#[inline]
pub fn luma601(r: u8, g: u8, b: u8) -> f32 {
    ((0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0) as f32
}

/// Loads a grayscale image by extension: `.pgm` (binary P5), `.ppm`
/// (binary P6, converted through [`luma601`]), or `.png` (8-bit gray or RGB).
pub fn load_gray(path: &Path) -> Result<GrayImage, ImageError> {
    let display = path.display().to_string();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" | "ppm" => load_pnm(path),
        "png" => load_png(path),
        other => Err(ImageError::Format {
            path: display,
            message: format!("unsupported image extension {other:?} (expected pgm, ppm, or png)"),
        }),
    }
}

/// Saves by extension: `.pgm` (binary P5) or `.png` (8-bit grayscale).
pub fn save_gray(path: &Path, image: &GrayImage) -> Result<(), ImageError> {
    let display = path.display().to_string();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => save_pgm(path, image),
        "png" => {
            let buf = image::GrayImage::from_raw(image.width, image.height, image.to_bytes())
                .expect("buffer length matches dimensions");
            buf.save_with_format(path, image::ImageFormat::Png)
                .map_err(|e| ImageError::Format { path: display, message: e.to_string() })
        }
        other => Err(ImageError::Format {
            path: display,
            message: format!("unsupported image extension {other:?} (expected pgm or png)"),
        }),
    }
}

/// Writes a binary P5 PGM with maxval 255. Reading it back with
/// [`load_gray`] reproduces the quantized image bit for bit.
pub fn save_pgm(path: &Path, image: &GrayImage) -> Result<(), ImageError> {
    let display = path.display().to_string();
    let io = |source| ImageError::Io { path: display.clone(), source };
    let mut file = std::fs::File::create(path).map_err(io)?;
    let header = format!("P5\n{} {}\n255\n", image.width, image.height);
    file.write_all(header.as_bytes()).map_err(io)?;
    file.write_all(&image.to_bytes()).map_err(io)
}

fn load_png(path: &Path) -> Result<GrayImage, ImageError> {
    let display = path.display().to_string();
    let img = image::open(path)
        .map_err(|e| ImageError::Format { path: display.clone(), message: e.to_string() })?;
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            GrayImage::from_bytes(g.width(), g.height(), g.as_raw())
        }
        image::DynamicImage::ImageRgb8(rgb) => {
            let pixels = rgb
                .pixels()
                .map(|p| luma601(p.0[0], p.0[1], p.0[2]))
                .collect();
            GrayImage::new(rgb.width(), rgb.height(), pixels)
        }
        other => Err(ImageError::Format {
            path: display,
            message: format!(
                "unsupported PNG color type {:?} (expected 8-bit gray or RGB)",
                other.color()
            ),
        }),
    }
}

fn load_pnm(path: &Path) -> Result<GrayImage, ImageError> {
    let display = path.display().to_string();
    let data = std::fs::read(path)
        .map_err(|source| ImageError::Io { path: display.clone(), source })?;
    let fmt = |message: String| ImageError::Format { path: display.clone(), message };
    if data.len() < 2 {
        return Err(fmt("truncated header".into()));
    }
    let magic = &data[..2];
    let channels: usize = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => {
            return Err(fmt(format!(
                "bad magic {:?} (expected binary P5 or P6)",
                String::from_utf8_lossy(magic)
            )))
        }
    };
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(fmt(format!("expected integer at byte offset {start}")));
        }
        *field = std::str::from_utf8(&data[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| fmt(format!("bad integer at byte offset {start}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(fmt(format!("maxval {maxval} unsupported (expected 255)")));
    }
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(fmt(format!("expected single whitespace at byte offset {pos}")));
    }
    pos += 1;
    let need = width * height * channels;
    let raster = &data[pos..];
    if raster.len() < need {
        return Err(fmt(format!(
            "raster holds {} bytes at offset {pos}, expected {need}",
            raster.len()
        )));
    }
    let pixels: Vec<f32> = if channels == 1 {
        raster[..need].iter().map(|&b| b as f32 / 255.0).collect()
    } else {
        raster[..need]
            .chunks_exact(3)
            .map(|c| luma601(c[0], c[1], c[2]))
            .collect()
    };
    GrayImage::new(width as u32, height as u32, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_of_constant_image_is_constant() {
        let img = GrayImage::new(4, 3, vec![0.25; 12]).unwrap();
        for &(u, v) in &[(0.0, 0.0), (2.0, 1.5), (100.0, -3.0)] {
            assert_eq!(img.bilinear(u, v), 0.25);
        }
    }

    #[test]
    fn bilinear_interpolates_between_pixel_centers() {
        let img = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!((img.bilinear(1.0, 0.5) - 0.5).abs() < 1e-12);
        // border clamp on both sides
        assert_eq!(img.bilinear(0.0, 0.5), 0.0);
        assert_eq!(img.bilinear(2.0, 0.5), 1.0);
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        let err = GrayImage::new(1, 1, vec![1.5]).unwrap_err();
        assert!(matches!(err, ImageError::BadPixel { .. }));
    }

    #[test]
    fn pgm_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let bytes: Vec<u8> = (0u32..64).map(|i| (i * 4) as u8).collect();
        let img = GrayImage::from_bytes(8, 8, &bytes).unwrap();
        save_pgm(&path, &img).unwrap();
        let back = load_gray(&path).unwrap();
        assert_eq!(back, img);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn ppm_converts_through_rec601_luma() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let mut data = b"P6\n2 1\n255\n".to_vec();
        data.extend_from_slice(&[255, 0, 0, 0, 255, 0]);
        std::fs::write(&path, data).unwrap();
        let img = load_gray(&path).unwrap();
        assert!((img.get(0, 0) - luma601(255, 0, 0)).abs() < 1e-7);
        assert!((img.get(1, 0) - luma601(0, 255, 0)).abs() < 1e-7);
    }

    #[test]
    fn png_round_trip_preserves_gray_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let bytes: Vec<u8> = (0u32..36).map(|i| (i * 7) as u8).collect();
        let img = GrayImage::from_bytes(6, 6, &bytes).unwrap();
        save_gray(&path, &img).unwrap();
        let back = load_gray(&path).unwrap();
        assert_eq!(back, img);
    }
}
