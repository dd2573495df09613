//! WebAssembly bindings for the browser demo in `www/`.
//!
//! The plain functions work on native targets and carry the logic; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use vecraster::affine_flow::{evolve, FlowParams};
use vecraster::fixtures::fig3_image;
use vecraster::region_graph::run_merges;
use vecraster::{vectorize, CurveKind, GainKind, Partition, PipelineConfig, Point, RasterImage};
use wasm_bindgen::prelude::*;

/// Largest canvas the demo accepts, in pixels.
pub const MAX_PIXELS: usize = 256 * 256;

/// Convert canvas RGBA bytes to an image, dropping alpha. Images whose
/// pixels are all gray become single-channel.
pub fn rgba_to_image(rgba: &[u8], width: usize, height: usize) -> Result<RasterImage, String> {
    let n = width * height;
    if rgba.len() != 4 * n {
        return Err(format!("expected {} RGBA bytes for {width}x{height}, got {}", 4 * n, rgba.len()));
    }
    if n > MAX_PIXELS {
        return Err(format!("image has {n} pixels; the demo accepts at most {MAX_PIXELS}"));
    }
    let gray = rgba.chunks_exact(4).all(|p| p[0] == p[1] && p[1] == p[2]);
    let data: Vec<f64> = if gray {
        rgba.chunks_exact(4).map(|p| p[0] as f64).collect()
    } else {
        rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).map(f64::from).collect()
    };
    RasterImage::new(width, height, if gray { 1 } else { 3 }, data).map_err(|e| e.to_string())
}

fn image_to_rgba(img: &RasterImage) -> Vec<u8> {
    let bytes = img.to_u8();
    bytes
        .chunks_exact(img.channels)
        .flat_map(|p| if p.len() == 1 { [p[0], p[0], p[0], 255] } else { [p[0], p[1], p[2], 255] })
        .collect()
}

/// Vectorize canvas pixels and return the SVG text.
#[allow(clippy::too_many_arguments)]
pub fn vectorize_rgba(
    rgba: &[u8],
    width: usize,
    height: usize,
    gain: &str,
    regions: usize,
    smooth: f64,
    tau: f64,
    iterations: usize,
) -> Result<String, String> {
    let img = rgba_to_image(rgba, width, height)?;
    let cfg = PipelineConfig {
        gain: gain.parse()?,
        target_regions: regions,
        smooth_time: smooth,
        tau,
        iterations,
        evaluate_output: false,
        ..PipelineConfig::default()
    };
    let out = vectorize(&img, &cfg).map_err(|e| e.to_string())?;
    Ok(out.document.to_svg())
}

/// Evolve a polyline given as interleaved `x, y` coordinates by affine
/// shortening for time `t`. Open curves keep their endpoints.
pub fn smooth_polyline(xy: &[f64], t: f64, closed: bool) -> Result<Vec<f64>, String> {
    if !xy.len().is_multiple_of(2) {
        return Err("coordinate list has odd length".into());
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(format!("smoothing time must be finite and non-negative, got {t}"));
    }
    let mut pts: Vec<Point> = xy.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
    if closed && pts.len() > 2 && pts.first() != pts.last() {
        pts.push(pts[0]);
    }
    let kind = if closed { CurveKind::Closed } else { CurveKind::Open };
    let out = evolve(&pts, kind, &FlowParams::for_duration(t));
    Ok(out.points.iter().flat_map(|p| [p.x, p.y]).collect())
}

/// Size of the merge-order test image.
pub fn fig3_size() -> (usize, usize) {
    let img = fig3_image();
    (img.width, img.height)
}

/// Merge the merge-order test image down to `regions` with `gain` and
/// return its piecewise-constant reconstruction as RGBA.
pub fn fig3_merge(gain: &str, regions: usize) -> Result<Vec<u8>, String> {
    let kind: GainKind = gain.parse()?;
    let img = fig3_image();
    if regions == 0 || regions > img.pixel_count() {
        return Err(format!("region count must be between 1 and {}", img.pixel_count()));
    }
    let mut p = Partition::from_pixels(&img);
    run_merges(&mut p, kind, img.pixel_count() - regions, &mut 0.0);
    Ok(image_to_rgba(&p.reconstruct()))
}

mod bindings {
    use super::*;

    #[wasm_bindgen(js_name = vectorizeRgba)]
    #[allow(clippy::too_many_arguments)]
    pub fn vectorize_rgba(
        rgba: &[u8],
        width: usize,
        height: usize,
        gain: &str,
        regions: usize,
        smooth: f64,
        tau: f64,
        iterations: usize,
    ) -> Result<String, JsError> {
        super::vectorize_rgba(rgba, width, height, gain, regions, smooth, tau, iterations).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = smoothPolyline)]
    pub fn smooth_polyline(xy: &[f64], t: f64, closed: bool) -> Result<Vec<f64>, JsError> {
        super::smooth_polyline(xy, t, closed).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = fig3Width)]
    pub fn fig3_width() -> usize {
        super::fig3_size().0
    }

    #[wasm_bindgen(js_name = fig3Height)]
    pub fn fig3_height() -> usize {
        super::fig3_size().1
    }

    #[wasm_bindgen(js_name = fig3Merge)]
    pub fn fig3_merge(gain: &str, regions: usize) -> Result<Vec<u8>, JsError> {
        super::fig3_merge(gain, regions).map_err(|e| JsError::new(&e))
    }
}
