//! Assembly of regions into filled Bézier shapes and SVG serialization.

use std::fmt::Write as _;
use std::path::Path;

use rustc_hash::FxHashMap;

use crate::bezier_fit::{BezierPath, CubicBez};
use crate::curve_net::{CurveId, CurveNetwork, JunctionKey};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::raster_io::quantize;
use crate::region_graph::{Partition, RegionId};

/// A fitted path traversed forwards or backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathRef {
    pub path: usize,
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub region: RegionId,
    pub fill: [u8; 3],
    pub area: f64,
    /// Closed loops; the one enclosing the largest area comes first.
    pub loops: Vec<Vec<PathRef>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorDocument {
    pub width: usize,
    pub height: usize,
    /// One fitted path per boundary curve, shared by both adjacent shapes.
    pub paths: Vec<BezierPath>,
    /// Shapes in paint order (descending area).
    pub shapes: Vec<Shape>,
}

impl VectorDocument {
    pub fn segment_count(&self) -> usize {
        self.paths.iter().map(|p| p.segments.len()).sum()
    }

    /// Segments of one loop in traversal order.
    pub fn loop_segments(&self, refs: &[PathRef]) -> Vec<CubicBez> {
        let mut out = Vec::new();
        for r in refs {
            let p = &self.paths[r.path];
            if r.reversed {
                out.extend(p.segments.iter().rev().map(CubicBez::reversed));
            } else {
                out.extend_from_slice(&p.segments);
            }
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let (w, h) = (self.width, self.height);
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        for shape in &self.shapes {
            let mut d = String::new();
            for lp in &shape.loops {
                let segs = self.loop_segments(lp);
                if segs.is_empty() {
                    continue;
                }
                if !d.is_empty() {
                    d.push(' ');
                }
                let _ = write!(d, "M {} {}", fmt_num(segs[0].p0.x), fmt_num(segs[0].p0.y));
                for c in &segs {
                    let _ = write!(
                        d,
                        " C {} {} {} {} {} {}",
                        fmt_num(c.p1.x),
                        fmt_num(c.p1.y),
                        fmt_num(c.p2.x),
                        fmt_num(c.p2.y),
                        fmt_num(c.p3.x),
                        fmt_num(c.p3.y)
                    );
                }
                d.push_str(" Z");
            }
            let [r, g, b] = shape.fill;
            let _ = writeln!(s, "<path d=\"{d}\" fill=\"#{r:02x}{g:02x}{b:02x}\" fill-rule=\"evenodd\"/>");
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write_svg(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_svg())?;
        Ok(())
    }
}

/// Shortest decimal with at most three fractional digits, never in
/// exponent notation.
pub fn fmt_num(v: f64) -> String {
    let mut s = format!("{:.3}", v);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Rounded mean color of a region, gray expanded to RGB.
pub fn region_fill(p: &Partition, id: RegionId) -> [u8; 3] {
    let mean = p.stats(id).mean(p.channels());
    if p.channels() == 1 {
        let v = quantize(mean[0]);
        [v, v, v]
    } else {
        [quantize(mean[0]), quantize(mean[1]), quantize(mean[2])]
    }
}

/// Build the document: each live region becomes one shape whose loops
/// follow its boundary curves with the region on the left.
pub fn assemble(
    p: &Partition,
    net: &CurveNetwork,
    fitted: &FxHashMap<CurveId, BezierPath>,
) -> Result<VectorDocument> {
    let mut curve_ids: Vec<CurveId> = net.curves().map(|(id, _)| id).collect();
    curve_ids.sort_unstable();
    let mut paths = Vec::with_capacity(curve_ids.len());
    let mut path_of: FxHashMap<CurveId, usize> = FxHashMap::default();
    for id in curve_ids {
        let path = fitted
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::Assembly { region: 0, reason: format!("curve {id} has no fitted path") })?;
        path_of.insert(id, paths.len());
        paths.push(path);
    }

    let mut shapes = Vec::new();
    for region in p.live_regions() {
        let ids = net.curves_of(region);
        if ids.is_empty() {
            return Err(Error::Assembly { region, reason: "region has no boundary curves".into() });
        }
        let mut loops: Vec<Vec<PathRef>> = Vec::new();
        let mut outgoing: FxHashMap<JunctionKey, Vec<(CurveId, bool)>> = FxHashMap::default();
        for &id in &ids {
            let c = net.curve(id).expect("live curve");
            let reversed = c.left != region;
            match (c.start, c.end) {
                (Some(s), Some(e)) => {
                    let from = if reversed { e } else { s };
                    outgoing.entry(from).or_default().push((id, reversed));
                }
                _ => loops.push(vec![PathRef { path: path_of[&id], reversed }]),
            }
        }
        let end_of = |id: CurveId, reversed: bool| {
            let c = net.curve(id).expect("live curve");
            if reversed { c.start.unwrap() } else { c.end.unwrap() }
        };
        let mut starts: Vec<JunctionKey> = outgoing.keys().copied().collect();
        starts.sort_unstable();
        for from in starts {
            while let Some((id, rev)) = outgoing.get_mut(&from).and_then(Vec::pop) {
                let mut lp = vec![PathRef { path: path_of[&id], reversed: rev }];
                let mut at = end_of(id, rev);
                while at != from {
                    let Some((next, nrev)) = outgoing.get_mut(&at).and_then(Vec::pop) else {
                        return Err(Error::Assembly {
                            region,
                            reason: format!("boundary loop cannot be closed at ({}, {})", at.0, at.1),
                        });
                    };
                    lp.push(PathRef { path: path_of[&next], reversed: nrev });
                    at = end_of(next, nrev);
                }
                loops.push(lp);
            }
        }
        let area_of = |lp: &Vec<PathRef>| {
            let mut pts = Vec::new();
            for r in lp {
                let path = &paths[r.path];
                let flat = path.flatten(0.25);
                if r.reversed {
                    pts.extend(flat.into_iter().rev());
                } else {
                    pts.extend(flat);
                }
            }
            crate::geometry::signed_area(&pts).abs()
        };
        let mut keyed: Vec<(f64, Vec<PathRef>)> = loops.into_iter().map(|l| (area_of(&l), l)).collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
        shapes.push(Shape {
            region,
            fill: region_fill(p, region),
            area: p.stats(region).area,
            loops: keyed.into_iter().map(|(_, l)| l).collect(),
        });
    }
    shapes.sort_by(|a, b| b.area.total_cmp(&a.area).then(a.region.cmp(&b.region)));
    Ok(VectorDocument { width: p.width(), height: p.height(), paths, shapes })
}

/// Exact-fit paths: every polyline segment becomes a straight cubic.
pub fn polyline_paths(net: &CurveNetwork) -> FxHashMap<CurveId, BezierPath> {
    net.curves()
        .map(|(id, c)| {
            let segments = c.points.windows(2).map(|w| CubicBez::line(w[0], w[1])).collect();
            (id, BezierPath { segments, closed: c.kind == crate::curve_net::CurveKind::Closed, source_curve: id })
        })
        .collect()
}

/// Flattened loops ready for filling. Each path is flattened in a
/// canonical direction so shared boundaries produce identical points.
pub fn flatten_loops(doc: &VectorDocument, shape: &Shape, tolerance: f64) -> Vec<Vec<Point>> {
    shape
        .loops
        .iter()
        .map(|lp| {
            let mut pts = Vec::new();
            for r in lp {
                let flat = doc.paths[r.path].flatten(tolerance);
                if r.reversed {
                    pts.extend(flat.into_iter().rev());
                } else {
                    pts.extend(flat);
                }
            }
            pts
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_net::extract_network;
    use crate::raster_io::RasterImage;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(2.12345), "2.123");
        assert_eq!(fmt_num(-0.0001), "0");
        assert_eq!(fmt_num(1e-7), "0");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(-3.25), "-3.25");
    }

    #[test]
    fn single_region_document() {
        let img = RasterImage::filled(4, 3, 3, 0.0).unwrap();
        let mut img = img;
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = [10.0, 20.0, 31.0][i % 3];
        }
        let p = Partition::from_labels(&img, vec![1; 12], 2);
        let net = extract_network(&p);
        let doc = assemble(&p, &net, &polyline_paths(&net)).unwrap();
        assert_eq!(doc.shapes.len(), 1);
        assert_eq!(doc.shapes[0].fill, [10, 20, 31]);
        let svg = doc.to_svg();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains("viewBox=\"0 0 4 3\""));
        assert!(svg.contains("fill=\"#0a141f\""));
    }

    #[test]
    fn hole_nesting() {
        let mut vals = vec![0.0; 36];
        let mut labels = vec![1; 36];
        for y in 2..4 {
            for x in 2..4 {
                vals[y * 6 + x] = 200.0;
                labels[y * 6 + x] = 2;
            }
        }
        let img = RasterImage::new(6, 6, 1, vals).unwrap();
        let p = Partition::from_labels(&img, labels, 3);
        let net = extract_network(&p);
        let doc = assemble(&p, &net, &polyline_paths(&net)).unwrap();
        assert_eq!(doc.shapes.len(), 2);
        assert_eq!(doc.shapes[0].region, 1);
        assert_eq!(doc.shapes[0].loops.len(), 2);
        assert_eq!(doc.shapes[1].fill, [200, 200, 200]);
        // The hole and the inner shape share the same path.
        assert_eq!(doc.shapes[0].loops[1][0].path, doc.shapes[1].loops[0][0].path);
        assert_ne!(doc.shapes[0].loops[1][0].reversed, doc.shapes[1].loops[0][0].reversed);
    }
}
