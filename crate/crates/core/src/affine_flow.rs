//! Affine shortening of boundary curves through iterated affine erosion.
//!
//! One erosion of area `sigma` replaces each convex arc of a curve by the
//! envelope of the chords that cut off area `sigma`, sampled at chord
//! midpoints. Arcs are delimited by inflections, which stay in place, and
//! open curves keep their endpoints. A composition of `n` erosions of area
//! `(T / (n * OMEGA))^(3/2)` approximates the flow for a time `T`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::curve_net::{CurveId, CurveKind, CurveNetwork};
use crate::geometry::{polyline_length, resample_uniform, signed_area, Point};

/// Ratio between scale-space time and `sigma^(2/3)` for one erosion.
///
/// A circle of radius `r` eroded by area `sigma` shrinks by
/// `(12^(2/3) / 8) sigma^(2/3) r^(-1/3)` to leading order, while the flow
/// moves it by `t r^(-1/3)`, which puts the constant near `0.6552`.
/// Resampling onto chords between erosions shrinks curves a little more,
/// so the frozen value is the one measured on a circle of radius 100
/// evolved for `T = 1` by the `calibrate_omega` example.
pub const OMEGA: f64 = 0.675_734;

/// Largest scale-space time covered by one erosion step.
pub const MAX_STEP_TIME: f64 = 0.2;

/// Turning below this (sine of the turn angle) counts as straight.
pub const FLAT_TURN: f64 = 1e-6;

/// Smallest chunk `evolve_network` takes, so tiny guard values cannot stall it.
pub const MIN_CHUNK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Scale-space time `T`.
    pub duration: f64,
    /// Number of erosions `n >= 1`.
    pub erosion_steps: usize,
    pub omega: f64,
    /// Target arc-length spacing used when resampling before each erosion.
    pub spacing: f64,
}

impl FlowParams {
    /// Parameters with `n = max(1, ceil(T / 0.2))` erosions.
    pub fn for_duration(duration: f64) -> Self {
        let n = ((duration / MAX_STEP_TIME).ceil() as usize).max(1);
        Self { duration, erosion_steps: n, omega: OMEGA, spacing: 1.0 }
    }

    /// A single erosion covering the whole duration.
    pub fn single_step(duration: f64) -> Self {
        Self { erosion_steps: 1, ..Self::for_duration(duration) }
    }

    /// Erosion area for one step.
    pub fn sigma(&self) -> f64 {
        (self.duration / (self.erosion_steps as f64 * self.omega)).powf(1.5)
    }
}

/// Result of evolving one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    pub points: Vec<Point>,
    /// Set when a closed curve became too small to erode; `points` then
    /// holds the curve from the last step that could be carried out.
    pub contracted: bool,
}

/// Signed turn at each interior vertex: the sine of the turn angle, zeroed
/// below [`FLAT_TURN`].
fn turns(pts: &[Point]) -> Vec<f64> {
    let mut t = vec![0.0; pts.len()];
    for i in 1..pts.len().saturating_sub(1) {
        let a = pts[i] - pts[i - 1];
        let b = pts[i + 1] - pts[i];
        let s = a.cross(b) / (a.norm() * b.norm());
        t[i] = if s.abs() < FLAT_TURN { 0.0 } else { s };
    }
    t
}

fn dedup(pts: &mut Vec<Point>) {
    pts.dedup_by(|b, a| a.dist(*b) <= 1e-12);
}

/// Point at the arc-length midpoint between vertices `i < j`.
fn arc_midpoint(pts: &[Point], i: usize, j: usize) -> (usize, Point) {
    let total: f64 = (i..j).map(|k| pts[k].dist(pts[k + 1])).sum();
    let mut left = total / 2.0;
    for k in i..j {
        let len = pts[k].dist(pts[k + 1]);
        if left <= len {
            return (k, pts[k].lerp(pts[k + 1], if len > 0.0 { left / len } else { 0.0 }));
        }
        left -= len;
    }
    (j - 1, pts[j])
}

/// Split an open polyline at its inflections. Consecutive pieces share
/// their split point.
fn split_at_inflections(pts: &[Point]) -> Vec<Vec<Point>> {
    let t = turns(pts);
    let mut pieces = Vec::new();
    let mut current = vec![pts[0]];
    let mut last_turn: Option<(usize, f64)> = None;
    let mut next = 1;
    for i in 1..pts.len() - 1 {
        if t[i] == 0.0 {
            continue;
        }
        if let Some((k, s)) = last_turn {
            if s.signum() != t[i].signum() {
                let (seg, m) = arc_midpoint(pts, k, i);
                current.extend_from_slice(&pts[next..=seg]);
                current.push(m);
                dedup(&mut current);
                pieces.push(std::mem::replace(&mut current, vec![m]));
                next = seg + 1;
            }
        }
        last_turn = Some((i, t[i]));
    }
    current.extend_from_slice(&pts[next..]);
    dedup(&mut current);
    pieces.push(current);
    pieces
}

/// Prefix sums of `P_k x P_(k+1)`.
fn cross_prefix(pts: &[Point]) -> Vec<f64> {
    let mut s = Vec::with_capacity(pts.len());
    s.push(0.0);
    for w in pts.windows(2) {
        let last = *s.last().unwrap();
        s.push(last + w[0].cross(w[1]));
    }
    s
}

/// Twice the signed area enclosed by the arc from `q` (on segment `i`) to
/// vertex `k > i` and the closing chord.
fn area_to_vertex(pts: &[Point], pre: &[f64], i: usize, q: Point, k: usize) -> f64 {
    q.cross(pts[i + 1]) + pre[k] - pre[i + 1] + pts[k].cross(q)
}

/// Sample positions on each segment with spacing at most 0.5.
fn samples(pts: &[Point], segments: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for i in 0..segments {
        let len = pts[i].dist(pts[i + 1]);
        let m = ((len / 0.5).ceil() as usize).max(1);
        for k in 0..m {
            out.push((i, k as f64 / m as f64));
        }
    }
    out
}

/// Chord from a start sample to the point where the cut-off area equals
/// `sigma`, or `None` when the arc ends before enough area accumulates.
struct ChordWalker<'a> {
    pts: &'a [Point],
    pre: Vec<f64>,
    sigma2: f64,
    j: usize,
}

impl<'a> ChordWalker<'a> {
    fn new(pts: &'a [Point], sigma: f64) -> Self {
        Self { pts, pre: cross_prefix(pts), sigma2: 2.0 * sigma, j: 0 }
    }

    fn end_for(&mut self, i: usize, q: Point) -> Option<Point> {
        let pts = self.pts;
        let last = pts.len() - 1;
        self.j = self.j.max(i + 1);
        while self.j < last && area_to_vertex(pts, &self.pre, i, q, self.j + 1).abs() < self.sigma2 {
            self.j += 1;
        }
        if self.j >= last {
            return None;
        }
        let j = self.j;
        let d = pts[j + 1] - pts[j];
        let c0 = area_to_vertex(pts, &self.pre, i, q, j);
        let c1 = d.cross(q - pts[j]);
        let target = if c0 + c1 >= 0.0 { self.sigma2 } else { -self.sigma2 };
        let v = if c1 != 0.0 { ((target - c0) / c1).clamp(0.0, 1.0) } else { 0.0 };
        Some(pts[j].lerp(pts[j + 1], v))
    }
}

/// Erode one convex open arc with fixed endpoints.
fn erode_convex_open(pts: &[Point], sigma: f64) -> Vec<Point> {
    let n = pts.len();
    let (a, b) = (pts[0], pts[n - 1]);
    let pre = cross_prefix(pts);
    let whole = area_to_vertex(pts, &pre, 0, a, n - 1).abs();
    if whole <= 2.0 * sigma {
        return vec![a, b];
    }
    let mut out = vec![a];
    let mut walker = ChordWalker::new(pts, sigma);
    let mut prev: Option<(usize, f64)> = None;
    for (i, u) in samples(pts, n - 1) {
        let q = pts[i].lerp(pts[i + 1], u);
        match walker.end_for(i, q) {
            Some(e) => {
                out.push(q.midpoint(e));
                prev = Some((i, u));
            }
            None => {
                // The last chord ends exactly at `b`; its start lies between
                // the previous sample and this one.
                let seg = if area_to_vertex(pts, &pre, i, pts[i], n - 1).abs() >= 2.0 * sigma {
                    i
                } else {
                    i.saturating_sub(1).max(prev.map_or(0, |p| p.0))
                };
                let g = |u: f64| {
                    let q = pts[seg].lerp(pts[seg + 1], u);
                    area_to_vertex(pts, &pre, seg, q, n - 1)
                };
                let (g0, g1) = (g(0.0), g(1.0));
                let target = if g0 >= 0.0 { 2.0 * sigma } else { -2.0 * sigma };
                let u = if g1 != g0 { ((target - g0) / (g1 - g0)).clamp(0.0, 1.0) } else { 0.0 };
                let s = pts[seg].lerp(pts[seg + 1], u);
                out.push(s.midpoint(b));
                break;
            }
        }
    }
    out.push(b);
    dedup(&mut out);
    out
}

/// Erode a closed convex ring (first point repeated last). `None` when
/// the enclosed area is too small for a chord of area `sigma`.
fn erode_convex_closed(ring: &[Point], sigma: f64) -> Option<Vec<Point>> {
    let n = ring.len() - 1;
    if signed_area(ring).abs() <= 2.0 * sigma {
        return None;
    }
    let mut doubled: Vec<Point> = ring[..n].to_vec();
    doubled.extend_from_slice(&ring[..n]);
    doubled.push(ring[0]);
    let mut walker = ChordWalker::new(&doubled, sigma);
    let mut out = Vec::new();
    for (i, u) in samples(&doubled, n) {
        let q = doubled[i].lerp(doubled[i + 1], u);
        let e = walker.end_for(i, q)?;
        out.push(q.midpoint(e));
    }
    dedup(&mut out);
    if out.len() < 3 {
        return None;
    }
    out.push(out[0]);
    Some(out)
}

fn erode_open(pts: &[Point], sigma: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for piece in split_at_inflections(pts) {
        let eroded = if piece.len() < 3 || turns(&piece).iter().all(|&t| t == 0.0) {
            piece
        } else {
            erode_convex_open(&piece, sigma)
        };
        if out.is_empty() {
            out = eroded;
        } else {
            out.extend_from_slice(&eroded[1..]);
        }
    }
    out
}

/// One affine erosion of area `sigma`. Curves with fewer than three
/// distinct points come back unchanged; `None` signals that a closed
/// convex curve would vanish.
pub fn affine_erode(points: &[Point], kind: CurveKind, sigma: f64) -> Option<Vec<Point>> {
    let distinct = {
        let mut v = points.to_vec();
        dedup(&mut v);
        if kind == CurveKind::Closed && v.len() > 1 && v[0] == v[v.len() - 1] {
            v.len() - 1
        } else {
            v.len()
        }
    };
    if distinct < 3 || sigma <= 0.0 {
        return Some(points.to_vec());
    }
    match kind {
        CurveKind::Open => Some(erode_open(points, sigma)),
        CurveKind::Closed => {
            let n = points.len() - 1;
            // Turn at every vertex of the ring, including the seam.
            let mut ext = vec![points[n - 1]];
            ext.extend_from_slice(points);
            let t: Vec<f64> = turns(&ext)[1..=n].to_vec();
            let nonzero: Vec<usize> = (0..n).filter(|&k| t[k] != 0.0).collect();
            if nonzero.is_empty() {
                return Some(points.to_vec());
            }
            let convex = nonzero.iter().all(|&k| t[k].signum() == t[nonzero[0]].signum());
            if convex {
                return erode_convex_closed(points, sigma);
            }
            // Rotate so the ring starts just after a sign change, then erode
            // as an open curve whose ends sit on that inflection.
            let flip = nonzero
                .iter()
                .position(|&k| {
                    let next = nonzero[(nonzero.iter().position(|&x| x == k).unwrap() + 1) % nonzero.len()];
                    t[k].signum() != t[next].signum()
                })
                .map(|p| nonzero[p])
                .expect("non-convex ring has a sign change");
            let next = nonzero[(nonzero.iter().position(|&x| x == flip).unwrap() + 1) % nonzero.len()];
            let mut rotated: Vec<Point> = (0..=n).map(|k| points[(flip + k) % n]).collect();
            let span = (next + n - flip) % n;
            let (seg, m) = arc_midpoint(&rotated, 0, span);
            let mut open = vec![m];
            open.extend_from_slice(&rotated[seg + 1..]);
            open.extend_from_slice(&rotated[1..=seg]);
            open.push(m);
            dedup(&mut open);
            rotated = erode_open(&open, sigma);
            Some(rotated)
        }
    }
}

fn resample(points: &[Point], kind: CurveKind, spacing: f64) -> Vec<Point> {
    let len = polyline_length(points);
    let min = if kind == CurveKind::Closed { 8 } else { 1 };
    let count = ((len / spacing).ceil() as usize).max(min);
    let mut out = resample_uniform(points, count);
    dedup(&mut out);
    out
}

/// Evolve one curve for `params.duration`.
pub fn evolve(points: &[Point], kind: CurveKind, params: &FlowParams) -> Evolved {
    if params.duration <= 0.0 || points.len() < 2 {
        return Evolved { points: points.to_vec(), contracted: false };
    }
    let sigma = params.sigma();
    let mut cur = points.to_vec();
    for _ in 0..params.erosion_steps {
        let sampled = resample(&cur, kind, params.spacing);
        match affine_erode(&sampled, kind, sigma) {
            Some(next) => cur = next,
            None => return Evolved { points: cur, contracted: true },
        }
    }
    if kind == CurveKind::Open {
        let last = cur.len() - 1;
        cur[0] = points[0];
        cur[last] = points[points.len() - 1];
    }
    Evolved { points: cur, contracted: false }
}

/// Largest absolute three-point curvature over the movable curves.
pub fn max_curvature(net: &CurveNetwork) -> f64 {
    let mut k: f64 = 0.0;
    for (_, c) in net.curves() {
        if c.fixed {
            continue;
        }
        let pts = &c.points;
        let n = pts.len();
        let mut triple = |a: Point, b: Point, d: Point| {
            let denom = a.dist(b) * b.dist(d) * a.dist(d);
            if denom > 0.0 {
                k = k.max(2.0 * (b - a).cross(d - b).abs() / denom);
            }
        };
        for w in pts.windows(3) {
            triple(w[0], w[1], w[2]);
        }
        if c.kind == CurveKind::Closed && n >= 4 {
            triple(pts[n - 2], pts[0], pts[1]);
        }
    }
    k
}

/// Time bound `rho / K^(1/3)` below which evolving every movable curve
/// cannot change the network's topology.
pub fn max_safe_time(net: &CurveNetwork) -> f64 {
    let k = max_curvature(net);
    if k == 0.0 {
        return f64::INFINITY;
    }
    net.critical_distance() / k.cbrt()
}

/// What happened during [`evolve_network`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkReport {
    pub chunks: Vec<f64>,
    /// Curves restored to their pre-chunk state after a topology check failed.
    pub rolled_back: Vec<CurveId>,
    pub contracted: Vec<CurveId>,
}

/// Evolve every movable curve for time `t` with junctions fixed. The time
/// is split into chunks no longer than the current safe time (but at
/// least [`MIN_CHUNK`]); after each chunk, curves involved in a
/// violation are rolled back.
pub fn evolve_network(net: &mut CurveNetwork, t: f64) -> NetworkReport {
    evolve_network_with(net, t, FlowParams::for_duration)
}

pub fn evolve_network_with(
    net: &mut CurveNetwork,
    t: f64,
    params_for: impl Fn(f64) -> FlowParams + Sync,
) -> NetworkReport {
    let mut report = NetworkReport::default();
    let mut remaining = t;
    while remaining > 1e-12 {
        let safe = max_safe_time(net);
        let chunk = remaining.min(safe.max(MIN_CHUNK));
        let params = params_for(chunk);
        let movable: Vec<(CurveId, Vec<Point>, CurveKind)> = net
            .curves()
            .filter(|(_, c)| !c.fixed)
            .map(|(id, c)| (id, c.points.clone(), c.kind))
            .collect();
        let run = |(id, pts, kind): &(CurveId, Vec<Point>, CurveKind)| (*id, evolve(pts, *kind, &params));
        #[cfg(feature = "parallel")]
        let results: Vec<(CurveId, Evolved)> = movable.par_iter().map(run).collect();
        #[cfg(not(feature = "parallel"))]
        let results: Vec<(CurveId, Evolved)> = movable.iter().map(run).collect();
        for (id, ev) in results {
            if ev.contracted {
                report.contracted.push(id);
            }
            net.set_points(id, ev.points);
        }
        let mut restored = rustc_hash::FxHashSet::default();
        loop {
            let bad: Vec<CurveId> = net
                .violations()
                .into_iter()
                .flat_map(|v| v.curves)
                .filter(|id| !restored.contains(id) && net.curve(*id).is_some_and(|c| !c.fixed))
                .collect();
            if bad.is_empty() {
                break;
            }
            for id in bad {
                if restored.insert(id) {
                    let old = &movable.iter().find(|m| m.0 == id).expect("movable curve").1;
                    net.set_points(id, old.clone());
                    report.rolled_back.push(id);
                }
            }
        }
        report.chunks.push(chunk);
        remaining -= chunk;
    }
    report.rolled_back.sort_unstable();
    report.rolled_back.dedup();
    report.contracted.sort_unstable();
    report.contracted.dedup();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{convex_hull, hull_contains};

    fn circle(r: f64, n: usize) -> Vec<Point> {
        let mut v: Vec<Point> = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                Point::new(200.0 + r * a.cos(), 200.0 + r * a.sin())
            })
            .collect();
        v.push(v[0]);
        v
    }

    fn mean_radius(pts: &[Point]) -> f64 {
        let c = Point::new(200.0, 200.0);
        let ring = &pts[..pts.len() - 1];
        ring.iter().map(|p| p.dist(c)).sum::<f64>() / ring.len() as f64
    }

    #[test]
    fn params() {
        let p = FlowParams::for_duration(1.0);
        assert_eq!(p.erosion_steps, 5);
        assert_eq!(FlowParams::for_duration(0.01).erosion_steps, 1);
        assert_eq!(FlowParams::for_duration(0.0).erosion_steps, 1);
        assert!((p.sigma() - (0.2 / OMEGA).powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn omega_matches_leading_order_value() {
        assert!((OMEGA - 12f64.powf(2.0 / 3.0) / 8.0).abs() < 0.03);
    }

    #[test]
    fn straight_line_is_fixed() {
        let pts: Vec<Point> = (0..20).map(|k| Point::new(k as f64 * 0.7, 3.0 + k as f64 * 0.3)).collect();
        let out = affine_erode(&pts, CurveKind::Open, 2.0).unwrap();
        assert_eq!(out.len(), pts.len());
        for (a, b) in out.iter().zip(&pts) {
            assert!(a.dist(*b) < 1e-9);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let pts = circle(5.0, 40);
        let out = evolve(&pts, CurveKind::Closed, &FlowParams::for_duration(0.0));
        assert_eq!(out.points, pts);
    }

    #[test]
    fn convex_polygon_shrinks_inside_hull() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(12.0, 6.0),
            Point::new(5.0, 11.0),
            Point::new(-2.0, 5.0),
            Point::new(0.0, 0.0),
        ];
        let hull = convex_hull(&pts);
        let out = affine_erode(&pts, CurveKind::Closed, 1.0).unwrap();
        assert!(out.iter().all(|&p| hull_contains(&hull, p)));
        assert!(signed_area(&out).abs() < signed_area(&pts).abs());
    }

    #[test]
    fn endpoints_are_pinned() {
        let pts: Vec<Point> = (0..=12).map(|k| Point::new(k as f64, ((k % 4) as f64 - 1.5).abs())).collect();
        let out = evolve(&pts, CurveKind::Open, &FlowParams::for_duration(1.0));
        assert_eq!(out.points[0], pts[0]);
        assert_eq!(out.points.last(), pts.last());
    }

    #[test]
    fn circle_law_large_polygon() {
        let pts = circle(50.0, 256);
        let sigma = FlowParams::single_step(1.0).sigma();
        let out = affine_erode(&pts, CurveKind::Closed, sigma).unwrap();
        let expected = (50f64.powf(4.0 / 3.0) - 4.0 / 3.0).powf(0.75);
        let r = mean_radius(&out);
        assert!((r - expected).abs() / expected < 0.02, "r = {r}, expected {expected}");
    }

    #[test]
    fn tiny_circle_contracts() {
        let pts = circle(0.3, 16);
        let out = evolve(&pts, CurveKind::Closed, &FlowParams::for_duration(1.0));
        assert!(out.contracted);
    }

    #[test]
    fn s_curve_keeps_inflection() {
        let pts: Vec<Point> = (0..=40)
            .map(|k| {
                let x = k as f64 * 0.5 - 10.0;
                Point::new(x + 20.0, 20.0 + 4.0 * (x * 0.3).sin())
            })
            .collect();
        let out = evolve(&pts, CurveKind::Open, &FlowParams::for_duration(0.5));
        let mid = Point::new(20.0, 20.0);
        let d = crate::geometry::point_polyline_distance(mid, &out.points);
        assert!(d < 0.3, "inflection moved by {d}");
    }
}
