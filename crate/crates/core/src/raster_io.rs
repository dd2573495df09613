//! Raster input/output: PNG and binary PGM/PPM decoding, image statistics
//! and the initial one-region-per-pixel partition.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::region_graph::Partition;

/// A pixel grid with 1 (gray) or 3 (RGB) channels, values in `[0, 255]`
/// stored as reals, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Format(format!("{channels} channels (only gray and RGB are supported)")));
        }
        if width * height < 2 {
            return Err(Error::TooSmall { width, height });
        }
        if data.len() != width * height * channels {
            return Err(Error::Format(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_at(&self, index: usize) -> &[f64] {
        let i = index * self.channels;
        &self.data[i..i + self.channels]
    }

    /// 3x3 box filter with clamped borders. Off by default in the pipeline.
    pub fn box_prefilter(&self) -> RasterImage {
        let (w, h, c) = (self.width, self.height, self.channels);
        let mut out = vec![0.0; self.data.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0.0; 3];
                let mut n = 0.0;
                for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        for (ch, a) in acc.iter_mut().enumerate().take(c) {
                            *a += self.data[(yy * w + xx) * c + ch];
                        }
                        n += 1.0;
                    }
                }
                for ch in 0..c {
                    out[(y * w + x) * c + ch] = acc[ch] / n;
                }
            }
        }
        RasterImage { data: out, ..self.clone() }
    }

    /// Values rounded half-up and clamped to 8 bits.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }
}

/// Round half-up to the nearest integer in `[0, 255]`.
pub fn quantize(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Summary quantities of an input image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageStats {
    /// Sum over channels of the squared channel range.
    pub oscillation_sq: f64,
    /// Pixel count.
    pub total_area: f64,
}

pub fn compute_stats(img: &RasterImage) -> ImageStats {
    let mut oscillation_sq = 0.0;
    for ch in 0..img.channels {
        let (lo, hi) = img
            .data
            .iter()
            .skip(ch)
            .step_by(img.channels)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        oscillation_sq += (hi - lo) * (hi - lo);
    }
    ImageStats { oscillation_sq, total_area: img.pixel_count() as f64 }
}

/// One region per pixel, 4-connected, border pixels adjacent to the
/// out-of-domain region.
pub fn initial_partition(img: &RasterImage) -> Partition {
    Partition::from_pixels(img)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let bytes = fs::read(path)?;
    decode_image(&bytes)
}

/// Decode PNG or binary PNM bytes, sniffing the format from the header.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else {
        Err(Error::Format("expected PNG, binary PGM (P5) or binary PPM (P6)".into()))
    }
}

fn decode_png(bytes: &[u8]) -> Result<RasterImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    // Palette images are expanded; bit depth is kept so 16-bit data can be rescaled.
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| Error::Format(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        png::ColorType::GrayscaleAlpha | png::ColorType::Rgba => {
            return Err(Error::Format("alpha channels are not supported".into()))
        }
        png::ColorType::Indexed => return Err(Error::Format("unexpanded palette".into())),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let n = w * h * channels;
    let data: Vec<f64> = match info.bit_depth {
        png::BitDepth::Sixteen => buf[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * 255.0 / 65535.0)
            .collect(),
        png::BitDepth::Eight => buf[..n].iter().map(|&v| v as f64).collect(),
        // EXPAND widens sub-byte depths to 8 bits.
        other => return Err(Error::Format(format!("unexpected bit depth {other:?}"))),
    };
    RasterImage::new(w, h, channels, data)
}

fn decode_pnm(bytes: &[u8]) -> Result<RasterImage> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("malformed PNM header".into()))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("malformed PNM header".into()));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("invalid PNM maxval {maxval}")));
    }
    let n = w * h * channels;
    let raster = &bytes[pos..];
    let data: Vec<f64> = if maxval < 256 {
        if raster.len() < n {
            return Err(Error::Format("truncated PNM raster".into()));
        }
        raster[..n].iter().map(|&v| v as f64 * 255.0 / maxval as f64).collect()
    } else {
        if raster.len() < 2 * n {
            return Err(Error::Format("truncated PNM raster".into()));
        }
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * 255.0 / maxval as f64)
            .collect()
    };
    RasterImage::new(w, h, channels, data)
}

/// Encode as binary PGM (gray) or PPM (RGB) with maxval 255.
pub fn encode_pnm(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(if img.channels == 1 { png::ColorType::Grayscale } else { png::ColorType::Rgb });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Format(e.to_string()))?;
        writer.write_image_data(&img.to_u8()).map_err(|e| Error::Format(e.to_string()))?;
    }
    Ok(out)
}

/// Write PNG when the extension is `.png`, PNM otherwise.
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png { encode_png(img)? } else { encode_pnm(img) };
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_pgm() {
        let bytes = b"P5\n2 2\n255\n\x80\x80\x80\x80";
        let img = decode_image(bytes).unwrap();
        assert_eq!(img, RasterImage::new(2, 2, 1, vec![128.0; 4]).unwrap());
    }

    #[test]
    fn three_pixel_ppm() {
        let mut bytes = b"P6\n3 1\n255\n".to_vec();
        bytes.extend([0, 0, 0, 255, 255, 255, 0, 0, 0]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.channels, 3);
        assert_eq!(img.data, vec![0.0, 0.0, 0.0, 255.0, 255.0, 255.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn pnm_comments_and_16_bit() {
        let mut bytes = b"P5\n# comment\n2 1\n65535\n".to_vec();
        bytes.extend([0xff, 0xff, 0x00, 0x00]);
        let img = decode_image(&bytes).unwrap();
        assert_eq!(img.data, vec![255.0, 0.0]);
    }

    #[test]
    fn one_pixel_png_is_rejected() {
        let img = RasterImage { width: 1, height: 1, channels: 1, data: vec![7.0] };
        let bytes = encode_png(&img).unwrap();
        assert!(matches!(decode_image(&bytes), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn alpha_png_is_rejected() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 2);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0; 16]).unwrap();
        }
        assert!(matches!(decode_image(&out), Err(Error::Format(_))));
    }

    #[test]
    fn sixteen_bit_png_is_rescaled() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 2, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0xff, 0xff, 0x80, 0x80]).unwrap();
        }
        let img = decode_image(&out).unwrap();
        assert_eq!(img.data[0], 255.0);
        assert!((img.data[1] - 0x8080 as f64 / 257.0).abs() < 1e-12);
    }

    #[test]
    fn cmyk_like_pam_is_rejected() {
        let bytes = b"P7\nWIDTH 2\nHEIGHT 2\nDEPTH 4\nMAXVAL 255\nTUPLTYPE CMYK\nENDHDR\n";
        assert!(matches!(decode_image(bytes), Err(Error::Format(_))));
    }

    #[test]
    fn png_round_trip() {
        let img = RasterImage::new(3, 2, 3, (0..18).map(|v| (v * 13) as f64).collect()).unwrap();
        assert_eq!(decode_image(&encode_png(&img).unwrap()).unwrap(), img);
    }

    #[test]
    fn oscillation() {
        let c = RasterImage::filled(3, 3, 3, 42.0).unwrap();
        assert_eq!(compute_stats(&c).oscillation_sq, 0.0);
        let g = RasterImage::new(2, 1, 1, vec![0.0, 255.0]).unwrap();
        assert_eq!(compute_stats(&g).oscillation_sq, 65025.0);
        let rgb = RasterImage::new(2, 1, 3, vec![0.0, 0.0, 0.0, 255.0, 255.0, 255.0]).unwrap();
        let s = compute_stats(&rgb);
        assert_eq!(s.oscillation_sq, 195075.0);
        assert_eq!(s.total_area, 2.0);
    }

    #[test]
    fn prefilter_keeps_constant_images() {
        let c = RasterImage::filled(4, 3, 1, 9.0).unwrap();
        assert_eq!(c.box_prefilter(), c);
    }
}
