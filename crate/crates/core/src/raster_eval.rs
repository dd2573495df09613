//! Scanline rasterization of vector documents and PSNR evaluation.

use std::fmt;

use crate::bezier_fit::CubicBez;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster_io::RasterImage;
use crate::svg_emit::{flatten_loops, VectorDocument};

/// Chord tolerance used when flattening curves for filling.
pub const FLATTEN_TOLERANCE: f64 = 0.05;

/// Default supersampling factor per axis.
pub const DEFAULT_SUPERSAMPLE: usize = 2;

/// A filled shape: closed polygonal loops and an 8-bit RGB color.
#[derive(Debug, Clone, PartialEq)]
pub struct FilledPath {
    pub fill: [u8; 3],
    pub loops: Vec<Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub image: RasterImage,
    /// Pixels with at least one subsample no shape covered.
    pub unfilled_pixels: usize,
}

/// Fill `paths` in order with the even-odd rule. Each subsample is painted
/// when its center lies in a half-open span `[x0, x1)` between crossings
/// of the scanline through that center.
pub fn fill_paths(
    width: usize,
    height: usize,
    channels: usize,
    paths: &[FilledPath],
    supersample: usize,
) -> Rendered {
    let s = supersample.max(1);
    let (sw, sh) = (width * s, height * s);
    let scale = s as f64;
    let mut canvas: Vec<Option<usize>> = vec![None; sw * sh];
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); sh];
    for (k, path) in paths.iter().enumerate() {
        let mut touched = Vec::new();
        for lp in &path.loops {
            let n = lp.len();
            for i in 0..n {
                let (a, b) = (lp[i] * scale, lp[(i + 1) % n] * scale);
                if a.y == b.y {
                    continue;
                }
                let (lo, hi) = (a.y.min(b.y), a.y.max(b.y));
                let first = (lo - 0.5).ceil().max(0.0) as usize;
                for y in first..sh {
                    let yc = y as f64 + 0.5;
                    if yc >= hi {
                        break;
                    }
                    if (a.y <= yc) == (b.y <= yc) {
                        continue;
                    }
                    if rows[y].is_empty() {
                        touched.push(y);
                    }
                    rows[y].push(a.x + (yc - a.y) / (b.y - a.y) * (b.x - a.x));
                }
            }
        }
        for y in touched {
            let row = &mut rows[y];
            row.sort_by(f64::total_cmp);
            for pair in row.chunks_exact(2) {
                let start = ((pair[0] - 0.5).ceil().max(0.0) as usize).min(sw);
                let end = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(sw);
                for cell in &mut canvas[y * sw + start..y * sw + end] {
                    *cell = Some(k);
                }
            }
            row.clear();
        }
    }
    let mut data = vec![0.0; width * height * channels];
    let mut unfilled = 0;
    let norm = 1.0 / (s * s) as f64;
    for y in 0..height {
        for x in 0..width {
            let mut acc = [0.0; 3];
            let mut missing = false;
            for sy in 0..s {
                for sx in 0..s {
                    match canvas[(y * s + sy) * sw + x * s + sx] {
                        Some(k) => {
                            for (ch, v) in paths[k].fill.iter().enumerate() {
                                acc[ch] += *v as f64;
                            }
                        }
                        None => missing = true,
                    }
                }
            }
            unfilled += missing as usize;
            let px = &mut data[(y * width + x) * channels..(y * width + x + 1) * channels];
            if channels == 1 {
                px[0] = (acc[0] + acc[1] + acc[2]) * norm / 3.0;
            } else {
                for ch in 0..3 {
                    px[ch] = acc[ch] * norm;
                }
            }
        }
    }
    let image = RasterImage { width, height, channels, data };
    Rendered { image, unfilled_pixels: unfilled }
}

/// Render a document at `supersample`× per axis and box-average back.
pub fn rasterize(doc: &VectorDocument, channels: usize, supersample: usize) -> Rendered {
    let paths: Vec<FilledPath> = doc
        .shapes
        .iter()
        .map(|shape| FilledPath { fill: shape.fill, loops: flatten_loops(doc, shape, FLATTEN_TOLERANCE) })
        .collect();
    fill_paths(doc.width, doc.height, channels, &paths, supersample)
}

/// Peak signal-to-noise ratio in dB for 8-bit data. Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels) {
        return Err(Error::DimensionMismatch((a.width, a.height, a.channels), (b.width, b.height, b.channels)));
    }
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum();
    let mse = sum / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// PSNR written for CSV output: `inf` for identical images.
pub fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub psnr: f64,
    pub region_count: usize,
    pub path_segment_count: usize,
    pub unfilled_pixels: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "psnr,region_count,path_segment_count,unfilled_pixels";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", fmt_psnr(self.psnr), self.region_count, self.path_segment_count, self.unfilled_pixels)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PSNR {} dB, {} regions, {} path segments, {} unfilled pixels",
            fmt_psnr(self.psnr),
            self.region_count,
            self.path_segment_count,
            self.unfilled_pixels
        )
    }
}

/// Compare a rasterized document against a reference image.
pub fn evaluate(doc: &VectorDocument, reference: &RasterImage, supersample: usize) -> Result<EvalReport> {
    let r = rasterize(doc, reference.channels, supersample);
    Ok(EvalReport {
        psnr: psnr(&r.image, reference)?,
        region_count: doc.shapes.len(),
        path_segment_count: doc.segment_count(),
        unfilled_pixels: r.unfilled_pixels,
    })
}

/// A parsed SVG: canvas size and filled shapes in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSvg {
    pub width: usize,
    pub height: usize,
    pub shapes: Vec<FilledPath>,
    pub segment_count: usize,
}

fn parse_len(s: Option<&str>, what: &str) -> Result<usize> {
    let s = s.ok_or_else(|| Error::Svg(format!("missing {what}")))?;
    let t = s.trim().trim_end_matches("px");
    let v: f64 = t.parse().map_err(|_| Error::Svg(format!("bad {what} '{s}'")))?;
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::Svg(format!("{what} must be a positive whole number, got '{s}'")));
    }
    Ok(v as usize)
}

fn parse_fill(s: &str) -> Result<[u8; 3]> {
    let hex = s.strip_prefix('#').filter(|h| h.len() == 6).ok_or_else(|| Error::Svg(format!("unsupported fill '{s}'")))?;
    let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| Error::Svg(format!("bad fill '{s}'")));
    Ok([byte(0)?, byte(2)?, byte(4)?])
}

fn tokens(d: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.is_empty() {
            out.push(std::mem::take(cur));
        }
    };
    for ch in d.chars() {
        if ch.is_ascii_alphabetic() && ch != 'e' && ch != 'E' {
            flush(&mut cur, &mut out);
            out.push(ch.to_string());
        } else if ch.is_whitespace() || ch == ',' {
            flush(&mut cur, &mut out);
        } else if ch == '-' && !cur.is_empty() && !cur.ends_with(['e', 'E']) {
            flush(&mut cur, &mut out);
            cur.push(ch);
        } else {
            cur.push(ch);
        }
    }
    flush(&mut cur, &mut out);
    out
}

/// Parse path data made of absolute `M`, `L`, `C` and `Z` commands into
/// closed cubic loops.
pub fn parse_path_data(d: &str) -> Result<Vec<Vec<CubicBez>>> {
    let toks = tokens(d);
    let mut loops: Vec<Vec<CubicBez>> = Vec::new();
    let mut current: Vec<CubicBez> = Vec::new();
    let mut pen = Point::default();
    let mut start = Point::default();
    let mut cmd = ' ';
    let mut i = 0;
    let num = |i: &mut usize| -> Result<f64> {
        let t = toks.get(*i).ok_or_else(|| Error::Svg("path data ends early".into()))?;
        *i += 1;
        t.parse().map_err(|_| Error::Svg(format!("bad number '{t}' in path data")))
    };
    while i < toks.len() {
        if toks[i].len() == 1 && toks[i].chars().next().unwrap().is_ascii_alphabetic() {
            cmd = toks[i].chars().next().unwrap();
            i += 1;
            if cmd == 'Z' || cmd == 'z' {
                if pen != start {
                    current.push(CubicBez::line(pen, start));
                }
                pen = start;
                if !current.is_empty() {
                    loops.push(std::mem::take(&mut current));
                }
                continue;
            }
        }
        match cmd {
            'M' => {
                if !current.is_empty() {
                    if pen != start {
                        current.push(CubicBez::line(pen, start));
                    }
                    loops.push(std::mem::take(&mut current));
                }
                pen = Point::new(num(&mut i)?, num(&mut i)?);
                start = pen;
                cmd = 'L';
            }
            'L' => {
                let p = Point::new(num(&mut i)?, num(&mut i)?);
                current.push(CubicBez::line(pen, p));
                pen = p;
            }
            'C' => {
                let p1 = Point::new(num(&mut i)?, num(&mut i)?);
                let p2 = Point::new(num(&mut i)?, num(&mut i)?);
                let p3 = Point::new(num(&mut i)?, num(&mut i)?);
                current.push(CubicBez { p0: pen, p1, p2, p3 });
                pen = p3;
            }
            other => return Err(Error::Svg(format!("unsupported path command '{other}'"))),
        }
    }
    if !current.is_empty() {
        if pen != start {
            current.push(CubicBez::line(pen, start));
        }
        loops.push(current);
    }
    Ok(loops)
}

/// Flatten one cubic so that a segment and its reverse produce the same
/// points, which keeps shared boundaries watertight.
pub fn flatten_cubic(c: &CubicBez, tolerance: f64) -> Vec<Point> {
    let forward = (c.p0.x, c.p0.y) <= (c.p3.x, c.p3.y);
    let canon = if forward { *c } else { c.reversed() };
    let path = crate::bezier_fit::BezierPath { segments: vec![canon], closed: false, source_curve: 0 };
    let mut pts = path.flatten(tolerance);
    if !forward {
        pts.reverse();
    }
    pts
}

/// Parse the SVG subset written by this crate: a root `svg` with width and
/// height, and `path` elements with `d` and a `#rrggbb` fill.
pub fn parse_svg(text: &str) -> Result<ParsedSvg> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Svg(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(Error::Svg(format!("root element is '{}', expected 'svg'", root.tag_name().name())));
    }
    let width = parse_len(root.attribute("width"), "width")?;
    let height = parse_len(root.attribute("height"), "height")?;
    let mut shapes = Vec::new();
    let mut segment_count = 0;
    for node in root.descendants().filter(|n| n.is_element() && n.tag_name().name() == "path") {
        let d = node.attribute("d").ok_or_else(|| Error::Svg("path without d".into()))?;
        let fill = parse_fill(node.attribute("fill").unwrap_or("#000000"))?;
        let loops = parse_path_data(d)?;
        segment_count += loops.iter().map(Vec::len).sum::<usize>();
        let flat = loops
            .iter()
            .map(|lp| {
                let mut pts = Vec::new();
                for c in lp {
                    let f = flatten_cubic(c, FLATTEN_TOLERANCE);
                    if pts.is_empty() {
                        pts.extend(f);
                    } else {
                        pts.extend_from_slice(&f[1..]);
                    }
                }
                pts
            })
            .collect();
        shapes.push(FilledPath { fill, loops: flat });
    }
    Ok(ParsedSvg { width, height, shapes, segment_count })
}

/// Rasterize an SVG file's contents.
pub fn rasterize_svg(text: &str, channels: usize, supersample: usize) -> Result<Rendered> {
    let svg = parse_svg(text)?;
    Ok(fill_paths(svg.width, svg.height, channels, &svg.shapes, supersample))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, v: &[f64]) -> RasterImage {
        RasterImage::new(w, h, 1, v.to_vec()).unwrap()
    }

    #[test]
    fn psnr_values() {
        let a = gray(2, 2, &[0.0, 10.0, 20.0, 30.0]);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = gray(2, 2, &[1.0, 11.0, 21.0, 31.0]);
        assert!((psnr(&a, &b).unwrap() - 10.0 * 65025f64.log10()).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 48.13).abs() < 0.01);
        let c = gray(2, 2, &[10.0, 20.0, 20.0, 30.0]);
        assert!((psnr(&a, &c).unwrap() - 31.14).abs() < 0.01);
        let d = gray(4, 1, &[0.0; 4]);
        assert!(matches!(psnr(&a, &d), Err(Error::DimensionMismatch(..))));
    }

    #[test]
    fn full_rectangle_is_constant() {
        let rect = vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(5.0, 3.0), Point::new(0.0, 3.0)];
        let r = fill_paths(5, 3, 3, &[FilledPath { fill: [9, 8, 7], loops: vec![rect] }], 2);
        assert_eq!(r.unfilled_pixels, 0);
        assert!(r.image.data.chunks(3).all(|p| p == [9.0, 8.0, 7.0]));
    }

    #[test]
    fn evenodd_hole() {
        let outer = vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(4.0, 4.0), Point::new(0.0, 4.0)];
        let hole = vec![Point::new(1.0, 1.0), Point::new(3.0, 1.0), Point::new(3.0, 3.0), Point::new(1.0, 3.0)];
        let r = fill_paths(4, 4, 1, &[FilledPath { fill: [100; 3], loops: vec![outer, hole] }], 1);
        assert_eq!(r.unfilled_pixels, 4);
        assert_eq!(r.image.pixel(0, 0)[0], 100.0);
        assert_eq!(r.image.pixel(1, 1)[0], 0.0);
    }

    #[test]
    fn path_data_parsing() {
        let loops = parse_path_data("M 0 0 C 1 0 2 0 3 0 L 3 3 Z M1,1 L2-1Z").unwrap();
        assert_eq!(loops.len(), 2);
        assert_eq!(loops[0].len(), 3);
        assert_eq!(loops[1][0].p3, Point::new(2.0, -1.0));
        assert!(parse_path_data("M 0 0 Q 1 1 2 2").is_err());
    }

    #[test]
    fn reversed_cubic_flattens_identically() {
        let c = CubicBez { p0: Point::new(0.1, 0.3), p1: Point::new(3.7, 9.1), p2: Point::new(6.2, -4.0), p3: Point::new(9.9, 2.2) };
        let mut back = flatten_cubic(&c.reversed(), 0.05);
        back.reverse();
        assert_eq!(flatten_cubic(&c, 0.05), back);
    }

    #[test]
    fn svg_parse_errors() {
        assert!(parse_svg("<svg").is_err());
        assert!(parse_svg("<html/>").is_err());
        assert!(parse_svg("<svg width=\"2\"/>").is_err());
        let ok = parse_svg("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"2\" height=\"2\"><path d=\"M 0 0 L 2 0 L 2 2 L 0 2 Z\" fill=\"#ff0000\"/></svg>").unwrap();
        assert_eq!(ok.shapes.len(), 1);
        assert_eq!(ok.shapes[0].fill, [255, 0, 0]);
    }
}
