//! Piecewise cubic Bézier approximation of polylines with a Hausdorff
//! error bound: least-squares fits with chord-length parameters, one
//! Newton reparameterization pass, and splitting at the worst point.

use rustc_hash::FxHashMap;

use crate::geometry::{point_segment_distance, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBez {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

impl CubicBez {
    /// The straight segment from `a` to `b` with control points at thirds.
    pub fn line(a: Point, b: Point) -> Self {
        Self { p0: a, p1: a.lerp(b, 1.0 / 3.0), p2: a.lerp(b, 2.0 / 3.0), p3: b }
    }

    pub fn eval(&self, t: f64) -> Point {
        let s = 1.0 - t;
        self.p0 * (s * s * s) + self.p1 * (3.0 * s * s * t) + self.p2 * (3.0 * s * t * t) + self.p3 * (t * t * t)
    }

    fn deriv(&self, t: f64) -> Point {
        let s = 1.0 - t;
        (self.p1 - self.p0) * (3.0 * s * s) + (self.p2 - self.p1) * (6.0 * s * t) + (self.p3 - self.p2) * (3.0 * t * t)
    }

    fn deriv2(&self, t: f64) -> Point {
        (self.p2 - self.p1 * 2.0 + self.p0) * (6.0 * (1.0 - t)) + (self.p3 - self.p2 * 2.0 + self.p1) * (6.0 * t)
    }

    pub fn reversed(&self) -> Self {
        Self { p0: self.p3, p1: self.p2, p2: self.p1, p3: self.p0 }
    }

    /// Length of the control polygon, an upper bound on the arc length.
    pub fn hull_length(&self) -> f64 {
        self.p0.dist(self.p1) + self.p1.dist(self.p2) + self.p2.dist(self.p3)
    }

    /// Points along the curve, `n >= 1` intervals, both ends included.
    pub fn sample(&self, n: usize) -> Vec<Point> {
        (0..=n).map(|k| if k == n { self.p3 } else { self.eval(k as f64 / n as f64) }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BezierPath {
    pub segments: Vec<CubicBez>,
    pub closed: bool,
    pub source_curve: usize,
}

impl BezierPath {
    pub fn start(&self) -> Point {
        self.segments[0].p0
    }

    pub fn end(&self) -> Point {
        self.segments[self.segments.len() - 1].p3
    }

    /// Dense samples with at least `per_unit` points per unit of length.
    pub fn sample(&self, per_unit: f64) -> Vec<Point> {
        let mut out = vec![self.start()];
        for s in &self.segments {
            let n = ((s.hull_length() * per_unit).ceil() as usize).max(1);
            out.extend_from_slice(&s.sample(n)[1..]);
        }
        out
    }

    /// Flatten each segment into chords whose sagitta stays below `tolerance`.
    pub fn flatten(&self, tolerance: f64) -> Vec<Point> {
        let mut out = vec![self.start()];
        for s in &self.segments {
            let dd = (s.p0 - s.p1 * 2.0 + s.p2).norm().max((s.p1 - s.p2 * 2.0 + s.p3).norm());
            let n = ((0.75 * dd / tolerance).sqrt().ceil() as usize).max(1);
            out.extend_from_slice(&s.sample(n)[1..]);
        }
        out
    }

    pub fn reversed(&self) -> BezierPath {
        BezierPath {
            segments: self.segments.iter().rev().map(CubicBez::reversed).collect(),
            closed: self.closed,
            source_curve: self.source_curve,
        }
    }
}

fn unit(p: Point) -> Point {
    let n = p.norm();
    if n > 0.0 {
        p * (1.0 / n)
    } else {
        p
    }
}

fn chord_params(pts: &[Point]) -> Vec<f64> {
    let mut u = Vec::with_capacity(pts.len());
    u.push(0.0);
    for w in pts.windows(2) {
        let last = *u.last().unwrap();
        u.push(last + w[0].dist(w[1]));
    }
    let total = *u.last().unwrap();
    for v in u.iter_mut() {
        *v /= total;
    }
    u
}

/// Least-squares cubic with end tangents `t1` (outgoing at the start) and
/// `t2` (pointing back from the end).
fn generate(pts: &[Point], u: &[f64], t1: Point, t2: Point) -> CubicBez {
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    let (mut c00, mut c01, mut c11, mut x0, mut x1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, &t) in pts.iter().zip(u) {
        let s = 1.0 - t;
        let b0 = s * s * s;
        let b1 = 3.0 * s * s * t;
        let b2 = 3.0 * s * t * t;
        let b3 = t * t * t;
        let a1 = t1 * b1;
        let a2 = t2 * b2;
        c00 += a1.dot(a1);
        c01 += a1.dot(a2);
        c11 += a2.dot(a2);
        let tmp = *p - (first * (b0 + b1) + last * (b2 + b3));
        x0 += a1.dot(tmp);
        x1 += a2.dot(tmp);
    }
    let det = c00 * c11 - c01 * c01;
    let seg = first.dist(last);
    let eps = 1e-6 * seg;
    let (mut al, mut ar) = if det.abs() > 1e-12 {
        ((x0 * c11 - x1 * c01) / det, (c00 * x1 - c01 * x0) / det)
    } else {
        (0.0, 0.0)
    };
    if al < eps || ar < eps {
        al = seg / 3.0;
        ar = seg / 3.0;
    }
    CubicBez { p0: first, p1: first + t1 * al, p2: last + t2 * ar, p3: last }
}

/// Refine each parameter with one Newton step toward the closest point.
fn reparameterize(bez: &CubicBez, pts: &[Point], u: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = pts
        .iter()
        .zip(u)
        .map(|(&p, &t)| {
            let d = bez.eval(t) - p;
            let d1 = bez.deriv(t);
            let d2 = bez.deriv2(t);
            let num = d.dot(d1);
            let den = d1.dot(d1) + d.dot(d2);
            if den.abs() < 1e-12 {
                t
            } else {
                (t - num / den).clamp(0.0, 1.0)
            }
        })
        .collect();
    // Keep the parameters ordered and the ends pinned.
    out[0] = 0.0;
    let n = out.len();
    out[n - 1] = 1.0;
    for i in 1..n {
        if out[i] < out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    out
}

/// Largest distance between a point and its parameter image, with the
/// index where it occurs.
fn max_param_error(bez: &CubicBez, pts: &[Point], u: &[f64]) -> (f64, usize) {
    let mut worst = (0.0, pts.len() / 2);
    for i in 1..pts.len() - 1 {
        let d = bez.eval(u[i]).dist(pts[i]);
        if d > worst.0 {
            worst = (d, i);
        }
    }
    worst
}

/// Spatial hash over polyline segments for nearest-distance queries.
struct SegmentIndex<'a> {
    pts: &'a [Point],
    cell: f64,
    grid: FxHashMap<(i64, i64), Vec<usize>>,
}

impl<'a> SegmentIndex<'a> {
    fn new(pts: &'a [Point], cell: f64) -> Self {
        let mut grid: FxHashMap<(i64, i64), Vec<usize>> = FxHashMap::default();
        for (i, w) in pts.windows(2).enumerate() {
            let x0 = (w[0].x.min(w[1].x) / cell).floor() as i64;
            let x1 = (w[0].x.max(w[1].x) / cell).floor() as i64;
            let y0 = (w[0].y.min(w[1].y) / cell).floor() as i64;
            let y1 = (w[0].y.max(w[1].y) / cell).floor() as i64;
            for gx in x0..=x1 {
                for gy in y0..=y1 {
                    grid.entry((gx, gy)).or_default().push(i);
                }
            }
        }
        Self { pts, cell, grid }
    }

    fn distance(&self, p: Point) -> f64 {
        if self.pts.len() == 1 {
            return p.dist(self.pts[0]);
        }
        let (cx, cy) = ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64);
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            for gx in cx - ring..=cx + ring {
                for gy in cy - ring..=cy + ring {
                    if (gx - cx).abs() != ring && (gy - cy).abs() != ring {
                        continue;
                    }
                    if let Some(list) = self.grid.get(&(gx, gy)) {
                        for &i in list {
                            best = best.min(point_segment_distance(p, self.pts[i], self.pts[i + 1]));
                        }
                    }
                }
            }
            // Every segment within `ring * cell` of p has been seen.
            if best <= ring as f64 * self.cell || ring > 1 << 20 {
                return best;
            }
            if best.is_infinite() && ring > 64 {
                return self.pts.windows(2).map(|w| point_segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min);
            }
            ring += 1;
        }
    }
}

/// Symmetric Hausdorff distance between two polylines, each densified to
/// `per_unit` samples per unit length before measuring against the other.
pub fn polyline_hausdorff(a: &[Point], b: &[Point], per_unit: f64) -> f64 {
    let densify = |pts: &[Point]| -> Vec<Point> {
        let mut out = vec![pts[0]];
        for w in pts.windows(2) {
            let n = ((w[0].dist(w[1]) * per_unit).ceil() as usize).max(1);
            for k in 1..=n {
                out.push(if k == n { w[1] } else { w[0].lerp(w[1], k as f64 / n as f64) });
            }
        }
        out
    };
    let one_way = |from: &[Point], to: &[Point]| {
        let index = SegmentIndex::new(to, 2.0);
        densify(from).iter().map(|&p| index.distance(p)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Symmetric Hausdorff distance between a path and a polyline, sampling
/// both at no fewer than 8 points per unit length.
pub fn path_error(path: &BezierPath, pts: &[Point]) -> f64 {
    path_error_with_density(path, pts, 8.0)
}

pub fn path_error_with_density(path: &BezierPath, pts: &[Point], per_unit: f64) -> f64 {
    polyline_hausdorff(&path.sample(per_unit), pts, per_unit)
}

fn fit_open(pts: &[Point], t1: Point, t2: Point, tau: f64, out: &mut Vec<CubicBez>) {
    let n = pts.len();
    if n == 2 {
        out.push(CubicBez::line(pts[0], pts[1]));
        return;
    }
    let u = chord_params(pts);
    let mut bez = generate(pts, &u, t1, t2);
    let (mut err, mut split) = max_param_error(&bez, pts, &u);
    if err > tau && err < 4.0 * tau {
        let u2 = reparameterize(&bez, pts, &u);
        let candidate = generate(pts, &u2, t1, t2);
        let (e2, s2) = max_param_error(&candidate, pts, &u2);
        if e2 < err {
            bez = candidate;
            err = e2;
            split = s2;
        }
    }
    if err <= tau {
        let path = BezierPath { segments: vec![bez], closed: false, source_curve: 0 };
        if path_error(&path, pts) <= tau {
            out.push(bez);
            return;
        }
    }
    let split = split.clamp(1, n - 2);
    let center = unit(pts[split - 1] - pts[split + 1]);
    let center = if center.norm() == 0.0 { unit(pts[split - 1] - pts[split]) } else { center };
    fit_open(&pts[..=split], t1, center, tau, out);
    fit_open(&pts[split..], center * -1.0, t2, tau, out);
}

fn dedup(points: &[Point]) -> Vec<Point> {
    let mut v = points.to_vec();
    v.dedup();
    v
}

fn fit_polyline(pts: &[Point], tau: f64) -> Vec<CubicBez> {
    let n = pts.len();
    let t1 = unit(pts[1] - pts[0]);
    let t2 = unit(pts[n - 2] - pts[n - 1]);
    let mut out = Vec::new();
    fit_open(pts, t1, t2, tau, &mut out);
    out
}

/// Fit a piecewise cubic path to a polyline. Open curves interpolate both
/// endpoints exactly; closed curves (first point repeated last) are split
/// at two far-apart points and both halves fitted.
pub fn fit_path(points: &[Point], closed: bool, tau: f64) -> BezierPath {
    assert!(tau > 0.0, "tau must be positive");
    let pts = dedup(points);
    assert!(pts.len() >= 2 || (closed && !pts.is_empty()), "need at least two points");
    if !closed || pts.len() < 4 {
        let segments = if pts.len() >= 2 {
            fit_polyline(&pts, tau)
        } else {
            vec![CubicBez::line(pts[0], pts[0])]
        };
        return BezierPath { segments, closed, source_curve: 0 };
    }
    let ring = &pts[..pts.len() - 1];
    let far = |from: Point| {
        ring.iter()
            .enumerate()
            .max_by(|a, b| from.dist(*a.1).total_cmp(&from.dist(*b.1)).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap()
    };
    let i = far(ring[0]);
    let j = far(ring[i]);
    let m = ring.len();
    let rotated: Vec<Point> = (0..=m).map(|k| ring[(i + k) % m]).collect();
    let split = (j + m - i) % m;
    let split = if split == 0 { m / 2 } else { split };
    let mut segments = fit_polyline(&rotated[..=split], tau);
    segments.extend(fit_polyline(&rotated[split..], tau));
    BezierPath { segments, closed: true, source_curve: 0 }
}

/// Exact path through a polyline: one straight cubic per maximal run of
/// collinear segments.
pub fn line_path(points: &[Point], closed: bool) -> BezierPath {
    let pts = dedup(points);
    if pts.len() < 2 {
        let p = pts.first().copied().unwrap_or(Point::new(0.0, 0.0));
        return BezierPath { segments: vec![CubicBez::line(p, p)], closed, source_curve: 0 };
    }
    let mut corners = vec![pts[0]];
    for w in pts.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        if (b - a).cross(c - b) != 0.0 || (b - a).dot(c - b) < 0.0 {
            corners.push(b);
        }
    }
    corners.push(pts[pts.len() - 1]);
    let segments = corners.windows(2).map(|w| CubicBez::line(w[0], w[1])).collect();
    BezierPath { segments, closed, source_curve: 0 }
}
