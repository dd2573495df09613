//! The primal graph of a partition: junctions and the boundary polycurves
//! between them, extracted from a pixel label map and rasterized back.
//!
//! Coordinates put pixel `(x, y)` on the unit square `[x, x+1] × [y, y+1]`,
//! so its center is `(x + 0.5, y + 0.5)` and junctions sit on integer grid
//! corners. The y axis points down. A curve's left region is the one on the
//! side where `cross(direction, p - a) > 0`.

use std::fmt::Write as _;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::geometry::{orient, ring_centroid, segments_intersect, signed_area, Point};
use crate::region_graph::{Partition, RegionId, OUTSIDE};

pub type CurveId = usize;
pub type JunctionKey = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    /// Periodic curve without junctions; the first point repeats as the last.
    Closed,
    /// Curve between two junctions; its endpoints never move.
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyCurve {
    pub points: Vec<Point>,
    pub kind: CurveKind,
    pub left: RegionId,
    pub right: RegionId,
    /// Curves on the image border are kept but never moved.
    pub fixed: bool,
    pub start: Option<JunctionKey>,
    pub end: Option<JunctionKey>,
}

impl PolyCurve {
    pub fn reverse(&mut self) {
        self.points.reverse();
        std::mem::swap(&mut self.left, &mut self.right);
        std::mem::swap(&mut self.start, &mut self.end);
    }

    pub fn reversed(&self) -> PolyCurve {
        let mut c = self.clone();
        c.reverse();
        c
    }

    pub fn borders(&self, region: RegionId) -> bool {
        self.left == region || self.right == region
    }

    pub fn length(&self) -> f64 {
        crate::geometry::polyline_length(&self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveEnd {
    pub curve: CurveId,
    /// True for the curve's first point, false for its last.
    pub at_start: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub position: Point,
    pub ends: Vec<CurveEnd>,
}

impl Junction {
    pub fn degree(&self) -> usize {
        self.ends.len()
    }
}

/// A clause of the network validity conditions that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub clause: ViolationKind,
    pub curves: Vec<CurveId>,
    pub at: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    TooFewPoints,
    RepeatedPoint,
    NotClosed,
    EndpointNotClosed,
    SelfIntersection,
    IntersectionNotJunction,
    LeavesDomain,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let what = match self.clause {
            ViolationKind::TooFewPoints => "curve has fewer than two points",
            ViolationKind::RepeatedPoint => "consecutive points coincide",
            ViolationKind::NotClosed => "closed curve does not end where it starts",
            ViolationKind::EndpointNotClosed => "endpoint not closed",
            ViolationKind::SelfIntersection => "self-intersection",
            ViolationKind::IntersectionNotJunction => "intersection not a junction",
            ViolationKind::LeavesDomain => "movable curve touches the domain border",
        };
        write!(f, "{what} at ({}, {}) on curves {:?}", self.at.x, self.at.y, self.curves)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CurveNetwork {
    pub width: usize,
    pub height: usize,
    curves: Vec<Option<PolyCurve>>,
    junctions: FxHashMap<JunctionKey, Junction>,
    region_curves: FxHashMap<RegionId, Vec<CurveId>>,
}

/// Extract the network of a partition.
pub fn extract_network(p: &Partition) -> CurveNetwork {
    extract_from_labels(&p.labels(), p.width(), p.height())
}

/// Extract the network of a label map. Label 0 is reserved for the outside.
pub fn extract_from_labels(labels: &[RegionId], width: usize, height: usize) -> CurveNetwork {
    assert_eq!(labels.len(), width * height);
    Tracer::new(labels, width, height).run()
}

// Directions on the corner grid.
const DIRS: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

struct Tracer<'a> {
    labels: &'a [RegionId],
    w: i32,
    h: i32,
    // Horizontal edge (i, j)-(i+1, j) at j * w + i, vertical edge (i, j)-(i, j+1) at j * (w+1) + i.
    h_seen: Vec<bool>,
    v_seen: Vec<bool>,
}

impl<'a> Tracer<'a> {
    fn new(labels: &'a [RegionId], width: usize, height: usize) -> Self {
        let (w, h) = (width as i32, height as i32);
        Self {
            labels,
            w,
            h,
            h_seen: vec![false; (width) * (height + 1)],
            v_seen: vec![false; (width + 1) * height],
        }
    }

    fn label(&self, x: i32, y: i32) -> RegionId {
        if x < 0 || y < 0 || x >= self.w || y >= self.h {
            OUTSIDE
        } else {
            self.labels[(y * self.w + x) as usize]
        }
    }

    /// Whether the unit edge leaving corner `(i, j)` in direction `d` separates two labels.
    fn is_boundary(&self, i: i32, j: i32, d: (i32, i32)) -> bool {
        let (l, r) = self.sides(i, j, d);
        let (ni, nj) = (i + d.0, j + d.1);
        ni >= 0 && nj >= 0 && ni <= self.w && nj <= self.h && l != r
    }

    /// Labels left and right of the unit edge leaving `(i, j)` in direction `d`.
    fn sides(&self, i: i32, j: i32, d: (i32, i32)) -> (RegionId, RegionId) {
        // Pixel centers at a + d/2 ± (-dy, dx)/2, floored.
        let cx2 = 2 * i + d.0;
        let cy2 = 2 * j + d.1;
        let left = ((cx2 - d.1).div_euclid(2), (cy2 + d.0).div_euclid(2));
        let right = ((cx2 + d.1).div_euclid(2), (cy2 - d.0).div_euclid(2));
        (self.label(left.0, left.1), self.label(right.0, right.1))
    }

    fn degree(&self, i: i32, j: i32) -> usize {
        DIRS.iter().filter(|&&d| self.is_boundary(i, j, d)).count()
    }

    fn seen(&mut self, i: i32, j: i32, d: (i32, i32)) -> &mut bool {
        let (i, j) = (i.min(i + d.0), j.min(j + d.1));
        if d.1 == 0 {
            &mut self.h_seen[(j * self.w + i) as usize]
        } else {
            &mut self.v_seen[(j * (self.w + 1) + i) as usize]
        }
    }

    fn trace(&mut self, i: i32, j: i32, d: (i32, i32), junctions: &FxHashSet<JunctionKey>) -> PolyCurve {
        let (left, right) = self.sides(i, j, d);
        let mut points = vec![Point::new(i as f64, j as f64)];
        let (mut ci, mut cj, mut dir) = (i, j, d);
        loop {
            *self.seen(ci, cj, dir) = true;
            ci += dir.0;
            cj += dir.1;
            points.push(Point::new(ci as f64, cj as f64));
            if junctions.contains(&(ci, cj)) || (ci, cj) == (i, j) {
                break;
            }
            let back = (-dir.0, -dir.1);
            dir = *DIRS
                .iter()
                .find(|&&nd| nd != back && self.is_boundary(ci, cj, nd))
                .expect("non-junction boundary corner has degree 2");
        }
        let closed = !junctions.contains(&(i, j));
        PolyCurve {
            points,
            kind: if closed { CurveKind::Closed } else { CurveKind::Open },
            left,
            right,
            fixed: left == OUTSIDE || right == OUTSIDE,
            start: (!closed).then_some((i, j)),
            end: (!closed).then_some((ci, cj)),
        }
    }

    fn run(mut self) -> CurveNetwork {
        let mut keys = FxHashSet::default();
        let mut order = Vec::new();
        for j in 0..=self.h {
            for i in 0..=self.w {
                if self.degree(i, j) >= 3 {
                    keys.insert((i, j));
                    order.push((i, j));
                }
            }
        }
        let mut net = CurveNetwork {
            width: self.w as usize,
            height: self.h as usize,
            ..Default::default()
        };
        for &(i, j) in &order {
            net.junctions.insert(
                (i, j),
                Junction { position: Point::new(i as f64, j as f64), ends: Vec::new() },
            );
        }
        for &(i, j) in &order {
            for d in DIRS {
                if self.is_boundary(i, j, d) && !*self.seen(i, j, d) {
                    let c = self.trace(i, j, d, &keys);
                    net.add_curve(c);
                }
            }
        }
        for j in 0..=self.h {
            for i in 0..=self.w {
                for d in [(1, 0), (0, 1)] {
                    if self.is_boundary(i, j, d) && !*self.seen(i, j, d) {
                        let c = self.trace(i, j, d, &keys);
                        net.add_curve(c);
                    }
                }
            }
        }
        net
    }
}

impl CurveNetwork {
    /// Network over a `width × height` domain with no curves.
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, ..Default::default() }
    }

    pub fn add_junction(&mut self, key: JunctionKey) {
        self.junctions
            .entry(key)
            .or_insert_with(|| Junction { position: Point::new(key.0 as f64, key.1 as f64), ends: Vec::new() });
    }

    /// Insert a curve, registering its ends with existing junctions.
    pub fn add_curve(&mut self, c: PolyCurve) -> CurveId {
        let id = self.curves.len();
        for (key, at_start) in [(c.start, true), (c.end, false)] {
            if let Some(k) = key {
                if let Some(j) = self.junctions.get_mut(&k) {
                    j.ends.push(CurveEnd { curve: id, at_start });
                }
            }
        }
        for r in [c.left, c.right] {
            self.region_curves.entry(r).or_default().push(id);
        }
        self.curves.push(Some(c));
        id
    }

    pub fn curve(&self, id: CurveId) -> Option<&PolyCurve> {
        self.curves.get(id).and_then(Option::as_ref)
    }

    /// Replace a curve's points; endpoints and labels stay as they are.
    pub fn set_points(&mut self, id: CurveId, points: Vec<Point>) {
        if let Some(c) = self.curves[id].as_mut() {
            c.points = points;
        }
    }

    pub fn curves(&self) -> impl Iterator<Item = (CurveId, &PolyCurve)> {
        self.curves.iter().enumerate().filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
    }

    pub fn curve_count(&self) -> usize {
        self.curves.iter().flatten().count()
    }

    pub fn junctions(&self) -> impl Iterator<Item = (&JunctionKey, &Junction)> {
        self.junctions.iter()
    }

    pub fn junction(&self, key: JunctionKey) -> Option<&Junction> {
        self.junctions.get(&key)
    }

    pub fn junction_count(&self) -> usize {
        self.junctions.len()
    }

    /// Junctions sorted by key, for reproducible iteration.
    pub fn sorted_junctions(&self) -> Vec<(JunctionKey, &Junction)> {
        let mut v: Vec<_> = self.junctions.iter().map(|(k, j)| (*k, j)).collect();
        v.sort_unstable_by_key(|(k, _)| (k.1, k.0));
        v
    }

    /// Ids of the live curves bordering `region`.
    pub fn curves_of(&self, region: RegionId) -> Vec<CurveId> {
        let mut ids: Vec<CurveId> = self
            .region_curves
            .get(&region)
            .map(|v| v.iter().copied().filter(|&id| self.curve(id).is_some_and(|c| c.borders(region))).collect())
            .unwrap_or_default();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Region ids appearing on some curve, excluding the outside.
    pub fn regions(&self) -> Vec<RegionId> {
        let mut v: Vec<RegionId> = self
            .curves()
            .flat_map(|(_, c)| [c.left, c.right])
            .filter(|&r| r != OUTSIDE)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn on_border(&self, p: Point) -> bool {
        p.x <= 0.0 || p.y <= 0.0 || p.x >= self.width as f64 || p.y >= self.height as f64
    }

    /// Update the network after `absorbed` is merged into `survivor`:
    /// their shared curves disappear, the absorbed label is renamed and
    /// junctions left between exactly two curve ends are dissolved by
    /// joining those curves.
    pub fn merge_regions(&mut self, survivor: RegionId, absorbed: RegionId) {
        let mut touched: Vec<JunctionKey> = Vec::new();
        let ids = self.curves_of(absorbed);
        for id in ids {
            let c = self.curves[id].as_mut().expect("live curve");
            if c.borders(survivor) {
                let c = self.curves[id].take().expect("live curve");
                for (key, at_start) in [(c.start, true), (c.end, false)] {
                    if let Some(k) = key {
                        if let Some(j) = self.junctions.get_mut(&k) {
                            j.ends.retain(|e| *e != CurveEnd { curve: id, at_start });
                            touched.push(k);
                        }
                    }
                }
            } else {
                if c.left == absorbed {
                    c.left = survivor;
                }
                if c.right == absorbed {
                    c.right = survivor;
                }
                touched.extend(c.start);
                touched.extend(c.end);
                self.region_curves.entry(survivor).or_default().push(id);
            }
        }
        self.region_curves.remove(&absorbed);
        touched.sort_unstable();
        touched.dedup();
        for k in touched {
            self.simplify_junction(k);
        }
    }

    fn simplify_junction(&mut self, key: JunctionKey) {
        let Some(j) = self.junctions.get(&key) else { return };
        match j.ends.len() {
            0 => {
                self.junctions.remove(&key);
            }
            2 => {
                let (e1, e2) = (j.ends[0], j.ends[1]);
                let mut labels: Vec<RegionId> = [e1.curve, e2.curve]
                    .iter()
                    .flat_map(|&id| {
                        let c = self.curve(id).expect("junction ends reference live curves");
                        [c.left, c.right]
                    })
                    .collect();
                labels.sort_unstable();
                labels.dedup();
                if labels.len() <= 2 {
                    self.junctions.remove(&key);
                    self.join_at(e1, e2);
                }
            }
            _ => {}
        }
    }

    fn join_at(&mut self, e1: CurveEnd, e2: CurveEnd) {
        if e1.curve == e2.curve {
            let c = self.curves[e1.curve].as_mut().expect("live curve");
            c.kind = CurveKind::Closed;
            c.start = None;
            c.end = None;
            return;
        }
        let mut a = self.curves[e1.curve].take().expect("live curve");
        let mut b = self.curves[e2.curve].take().expect("live curve");
        // Orient `a` to end at the junction and `b` to start there.
        if e1.at_start {
            a.reverse();
        }
        if !e2.at_start {
            b.reverse();
        }
        debug_assert_eq!((a.left, a.right), (b.left, b.right));
        a.points.extend_from_slice(&b.points[1..]);
        a.end = b.end;
        let id = e1.curve;
        for (key, at_start) in [(a.start, true), (a.end, false)] {
            if let Some(k) = key {
                let j = self.junctions.get_mut(&k).expect("curve ends at a live junction");
                j.ends.retain(|e| e.curve != e1.curve && e.curve != e2.curve);
                j.ends.push(CurveEnd { curve: id, at_start });
            }
        }
        // A curve starting and ending at the same junction was pushed twice
        // with both flags; keep one of each.
        if let Some(k) = a.start.filter(|_| a.start == a.end) {
            let j = self.junctions.get_mut(&k).unwrap();
            j.ends.retain(|e| e.curve != id);
            j.ends.push(CurveEnd { curve: id, at_start: true });
            j.ends.push(CurveEnd { curve: id, at_start: false });
        }
        self.curves[id] = Some(a);
    }

    /// Region containing each pixel center, by scanline crossing of every
    /// curve segment. A pixel center exactly on a crossing goes to the
    /// region before it, which is the left side of upward segments.
    pub fn rasterize_labels(&self) -> Vec<RegionId> {
        let (w, h) = (self.width, self.height);
        let mut rows: Vec<Vec<(f64, RegionId)>> = vec![Vec::new(); h];
        for (_, c) in self.curves() {
            for s in c.points.windows(2) {
                let (p0, p1) = (s[0], s[1]);
                if p0.y == p1.y {
                    continue;
                }
                let (lo, hi) = (p0.y.min(p1.y), p0.y.max(p1.y));
                let first = (lo - 0.5).ceil().max(0.0) as usize;
                for y in first..h {
                    let yc = y as f64 + 0.5;
                    if yc >= hi {
                        break;
                    }
                    if (p0.y <= yc) == (p1.y <= yc) {
                        continue;
                    }
                    let x = p0.x + (yc - p0.y) / (p1.y - p0.y) * (p1.x - p0.x);
                    let region = if p1.y < p0.y { c.left } else { c.right };
                    rows[y].push((x, region));
                }
            }
        }
        let mut labels = vec![OUTSIDE; w * h];
        for (y, row) in rows.iter_mut().enumerate() {
            row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut k = 0;
            let mut current = OUTSIDE;
            for x in 0..w {
                let cx = x as f64 + 0.5;
                while k < row.len() && row[k].0 < cx {
                    current = row[k].1;
                    k += 1;
                }
                labels[y * w + x] = current;
            }
        }
        labels
    }

    /// Check the network conditions; returns the first violation found.
    pub fn validate(&self) -> Result<(), Violation> {
        match self.violations().into_iter().next() {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    /// Every violation found, in a deterministic order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (id, c) in self.curves() {
            let n = c.points.len();
            if n < 2 {
                out.push(Violation { clause: ViolationKind::TooFewPoints, curves: vec![id], at: c.points.first().copied().unwrap_or_default() });
                continue;
            }
            if let Some(w) = c.points.windows(2).find(|w| w[0] == w[1]) {
                out.push(Violation { clause: ViolationKind::RepeatedPoint, curves: vec![id], at: w[0] });
            }
            match c.kind {
                CurveKind::Closed => {
                    if c.points[0] != c.points[n - 1] || n < 4 {
                        out.push(Violation { clause: ViolationKind::NotClosed, curves: vec![id], at: c.points[0] });
                    }
                }
                CurveKind::Open => {
                    for (key, p) in [(c.start, c.points[0]), (c.end, c.points[n - 1])] {
                        let ok = key
                            .and_then(|k| self.junctions.get(&k))
                            .is_some_and(|j| j.position == p);
                        if !ok {
                            out.push(Violation { clause: ViolationKind::EndpointNotClosed, curves: vec![id], at: p });
                        }
                    }
                }
            }
            if !c.fixed {
                let inner = match c.kind {
                    CurveKind::Open => &c.points[1..n - 1],
                    CurveKind::Closed => &c.points[..],
                };
                if let Some(&p) = inner.iter().find(|&&p| self.on_border(p)) {
                    out.push(Violation { clause: ViolationKind::LeavesDomain, curves: vec![id], at: p });
                }
            }
        }
        out.extend(self.intersection_violations());
        out
    }

    fn intersection_violations(&self) -> Vec<Violation> {
        // Segments bucketed on a unit grid over their bounding boxes.
        struct Seg {
            curve: CurveId,
            index: usize,
            a: Point,
            b: Point,
        }
        let mut segs = Vec::new();
        let mut grid: FxHashMap<(i64, i64), Vec<usize>> = FxHashMap::default();
        for (id, c) in self.curves() {
            for (k, w) in c.points.windows(2).enumerate() {
                let s = segs.len();
                segs.push(Seg { curve: id, index: k, a: w[0], b: w[1] });
                let x0 = w[0].x.min(w[1].x).floor() as i64;
                let x1 = w[0].x.max(w[1].x).floor() as i64;
                let y0 = w[0].y.min(w[1].y).floor() as i64;
                let y1 = w[0].y.max(w[1].y).floor() as i64;
                for gx in x0..=x1 {
                    for gy in y0..=y1 {
                        grid.entry((gx, gy)).or_default().push(s);
                    }
                }
            }
        }
        let mut cells: Vec<_> = grid.into_iter().collect();
        cells.sort_unstable_by_key(|(k, _)| *k);
        let mut tested: FxHashSet<(usize, usize)> = FxHashSet::default();
        let mut out = Vec::new();
        for (_, list) in cells {
            for x in 0..list.len() {
                for y in x + 1..list.len() {
                    let (i, j) = (list[x].min(list[y]), list[x].max(list[y]));
                    if !tested.insert((i, j)) {
                        continue;
                    }
                    let (s, t) = (&segs[i], &segs[j]);
                    if !segments_intersect(s.a, s.b, t.a, t.b) {
                        continue;
                    }
                    if let Some(v) = self.classify_touch(s.curve, s.index, s.a, s.b, t.curve, t.index, t.a, t.b) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Decide whether two intersecting segments form a violation.
    #[allow(clippy::too_many_arguments)]
    fn classify_touch(
        &self,
        c1: CurveId,
        k1: usize,
        a1: Point,
        b1: Point,
        c2: CurveId,
        k2: usize,
        a2: Point,
        b2: Point,
    ) -> Option<Violation> {
        let shared = [(a1, b1, a2, b2), (a1, b1, b2, a2), (b1, a1, a2, b2), (b1, a1, b2, a2)]
            .into_iter()
            .find(|(p, _, q, _)| p == q);
        let kind = if c1 == c2 { ViolationKind::SelfIntersection } else { ViolationKind::IntersectionNotJunction };
        let curves = if c1 == c2 { vec![c1] } else { vec![c1, c2] };
        let Some((p, u, _, v)) = shared else {
            let at = crate::geometry::segment_intersection_point(a1, b1, a2, b2).unwrap_or(a1);
            return Some(Violation { clause: kind, curves, at });
        };
        // Touching at a shared vertex is fine only where the curves are
        // meant to meet and the segments do not fold onto each other.
        let overlap = orient(p, u, v) == 0.0 && (u - p).dot(v - p) > 0.0;
        let allowed = !overlap && self.meet_allowed(c1, k1, c2, k2, p);
        if allowed {
            None
        } else {
            Some(Violation { clause: kind, curves, at: p })
        }
    }

    fn meet_allowed(&self, c1: CurveId, k1: usize, c2: CurveId, k2: usize, p: Point) -> bool {
        let a = self.curve(c1).expect("live curve");
        if c1 == c2 {
            let last = a.points.len() - 2;
            let (lo, hi) = (k1.min(k2), k1.max(k2));
            if hi == lo + 1 {
                return true;
            }
            // First and last segments of a closed curve or a loop through a junction.
            return lo == 0 && hi == last && (a.kind == CurveKind::Closed || a.start == a.end);
        }
        let b = self.curve(c2).expect("live curve");
        let ends_at = |c: &PolyCurve, k: usize| -> Vec<JunctionKey> {
            let mut v = Vec::new();
            if k == 0 && c.points[0] == p {
                v.extend(c.start);
            }
            if k == c.points.len() - 2 && c.points[c.points.len() - 1] == p {
                v.extend(c.end);
            }
            v
        };
        let ja = ends_at(a, k1);
        let jb = ends_at(b, k2);
        ja.iter().any(|k| jb.contains(k) && self.junctions.get(k).is_some_and(|j| j.position == p))
    }

    /// Contraction point used for each closed curve: its area centroid.
    pub fn contraction_points(&self) -> Vec<(CurveId, Point)> {
        self.curves()
            .filter(|(_, c)| c.kind == CurveKind::Closed && signed_area(&c.points) != 0.0)
            .map(|(id, c)| (id, ring_centroid(&c.points)))
            .collect()
    }

    /// Critical distance: over every movable curve, the smallest distance
    /// from a junction or contraction point inside the convex hull of the
    /// curve (closed by its chord) to the curve. Points belonging to the
    /// curve itself, such as its own endpoints, are not counted. Returns
    /// `+∞` when no point lies inside any hull.
    pub fn critical_distance(&self) -> f64 {
        let mut pts: Vec<Point> = self
            .junctions
            .values()
            .filter(|j| !self.on_border(j.position))
            .map(|j| j.position)
            .collect();
        pts.extend(self.contraction_points().into_iter().map(|(_, p)| p));
        let mut grid: FxHashMap<(i64, i64), Vec<Point>> = FxHashMap::default();
        for &p in &pts {
            grid.entry((p.x.floor() as i64, p.y.floor() as i64)).or_default().push(p);
        }
        let mut rho = f64::INFINITY;
        for (_, c) in self.curves() {
            if c.fixed {
                continue;
            }
            let hull = crate::geometry::convex_hull(&c.points);
            let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for p in &hull {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            for gx in x0.floor() as i64..=x1.floor() as i64 {
                for gy in y0.floor() as i64..=y1.floor() as i64 {
                    let Some(list) = grid.get(&(gx, gy)) else { continue };
                    for &p in list {
                        if !crate::geometry::hull_contains(&hull, p) {
                            continue;
                        }
                        let d = crate::geometry::point_polyline_distance(p, &c.points);
                        if d > 0.0 {
                            rho = rho.min(d);
                        }
                    }
                }
            }
        }
        rho
    }

    /// Human-readable dump: junctions, then one curve per line.
    pub fn dump(&self) -> String {
        let mut s = String::from("{\n  \"junctions\": [\n");
        for (k, j) in self.sorted_junctions() {
            let _ = writeln!(s, "    {{\"at\": [{}, {}], \"degree\": {}}},", k.0, k.1, j.degree());
        }
        s.push_str("  ],\n  \"curves\": [\n");
        for (id, c) in self.curves() {
            let pts: Vec<String> = c.points.iter().map(|p| format!("[{}, {}]", p.x, p.y)).collect();
            let _ = writeln!(
                s,
                "    {{\"id\": {id}, \"kind\": \"{:?}\", \"left\": {}, \"right\": {}, \"fixed\": {}, \"points\": [{}]}},",
                c.kind,
                c.left,
                c.right,
                c.fixed,
                pts.join(", ")
            );
        }
        s.push_str("  ]\n}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(labels: &[RegionId], w: usize, h: usize) -> CurveNetwork {
        extract_from_labels(labels, w, h)
    }

    #[test]
    fn single_region_is_one_closed_border_curve() {
        let n = net(&[1; 6], 3, 2);
        assert_eq!(n.curve_count(), 1);
        assert_eq!(n.junction_count(), 0);
        let (_, c) = n.curves().next().unwrap();
        assert_eq!(c.kind, CurveKind::Closed);
        assert!(c.fixed);
        assert_eq!(c.length(), 10.0);
        n.validate().unwrap();
    }

    #[test]
    fn vertical_split() {
        let n = net(&[1, 2, 1, 2], 2, 2);
        let interior: Vec<_> = n.curves().filter(|(_, c)| !c.fixed).collect();
        assert_eq!(interior.len(), 1);
        let c = interior[0].1;
        assert_eq!(c.kind, CurveKind::Open);
        assert_eq!(c.points.first().unwrap().y.min(c.points.last().unwrap().y), 0.0);
        assert_eq!(n.junction_count(), 2);
        assert_eq!(n.curve_count(), 3);
        n.validate().unwrap();
        assert_eq!(n.rasterize_labels(), vec![1, 2, 1, 2]);
    }

    #[test]
    fn square_inside_background() {
        let mut labels = vec![1; 16];
        for (x, y) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            labels[y * 4 + x] = 2;
        }
        let n = net(&labels, 4, 4);
        let inner: Vec<_> = n.curves().filter(|(_, c)| !c.fixed).collect();
        assert_eq!(inner.len(), 1);
        let c = inner[0].1;
        assert_eq!(c.kind, CurveKind::Closed);
        assert_eq!(c.points.len(), 9);
        assert_eq!(c.length(), 8.0);
        n.validate().unwrap();
        assert_eq!(n.rasterize_labels(), labels);
    }

    #[test]
    fn t_junction() {
        // Left half one region, right half split top and bottom.
        let labels = [1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 3, 3, 1, 1, 3, 3];
        let n = net(&labels, 4, 4);
        let j = n.junction((2, 2)).expect("junction where three regions meet");
        assert_eq!(j.degree(), 3);
        n.validate().unwrap();
        assert_eq!(n.rasterize_labels(), labels);
    }

    #[test]
    fn checkerboard_corner_is_a_junction() {
        let labels = [1, 2, 2, 1];
        let n = net(&labels, 2, 2);
        assert_eq!(n.junction((1, 1)).unwrap().degree(), 4);
        assert_eq!(n.curve_count(), 8);
        n.validate().unwrap();
        assert_eq!(n.rasterize_labels(), labels);
    }

    #[test]
    fn orientation_convention() {
        let n = net(&[1, 2, 1, 2], 2, 2);
        let (_, c) = n.curves().find(|(_, c)| !c.fixed).unwrap();
        let (a, b) = (c.points[0], c.points[1]);
        let left_center = if b.y < a.y { Point::new(a.x + 0.5, a.y - 0.5) } else { Point::new(a.x - 0.5, a.y + 0.5) };
        let expected = if left_center.x < 1.0 { 1 } else { 2 };
        assert_eq!(c.left, expected);
    }

    #[test]
    fn crossing_segments_are_reported() {
        let mut n = CurveNetwork::empty(10, 10);
        for (a, b) in [((2.0, 2.0), (8.0, 8.0)), ((2.0, 8.0), (8.0, 2.0))] {
            n.add_junction((a.0 as i32, a.1 as i32));
            n.add_junction((b.0 as i32, b.1 as i32));
            n.add_curve(PolyCurve {
                points: vec![Point::new(a.0, a.1), Point::new(b.0, b.1)],
                kind: CurveKind::Open,
                left: 1,
                right: 2,
                fixed: false,
                start: Some((a.0 as i32, a.1 as i32)),
                end: Some((b.0 as i32, b.1 as i32)),
            });
        }
        let v = n.validate().unwrap_err();
        assert_eq!(v.clause, ViolationKind::IntersectionNotJunction);
        assert!(v.to_string().contains("intersection not a junction"));
        assert_eq!(v.at, Point::new(5.0, 5.0));
    }

    #[test]
    fn dangling_endpoint_is_reported() {
        let mut n = CurveNetwork::empty(10, 10);
        n.add_junction((2, 2));
        n.add_curve(PolyCurve {
            points: vec![Point::new(2.0, 2.0), Point::new(5.0, 5.0)],
            kind: CurveKind::Open,
            left: 1,
            right: 2,
            fixed: false,
            start: Some((2, 2)),
            end: None,
        });
        let v = n.validate().unwrap_err();
        assert_eq!(v.clause, ViolationKind::EndpointNotClosed);
        assert!(v.to_string().contains("endpoint not closed"));
    }

    #[test]
    fn merge_dissolves_junctions() {
        // Three vertical stripes; merging the middle into the left leaves
        // a single interior curve.
        let labels = [1, 2, 3, 1, 2, 3];
        let mut n = net(&labels, 3, 2);
        n.merge_regions(1, 2);
        n.validate().unwrap();
        assert_eq!(n.rasterize_labels(), vec![1, 1, 3, 1, 1, 3]);
        assert_eq!(n.curves().filter(|(_, c)| !c.fixed).count(), 1);
        let fresh = net(&[1, 1, 3, 1, 1, 3], 3, 2);
        assert_eq!(n.junction_count(), fresh.junction_count());
        assert_eq!(n.curve_count(), fresh.curve_count());
    }

    #[test]
    fn merge_into_surrounding_region_closes_curves() {
        let mut labels = vec![1; 25];
        labels[12] = 2;
        labels[13] = 3;
        let mut n = net(&labels, 5, 5);
        n.merge_regions(1, 3);
        n.validate().unwrap();
        let inner: Vec<_> = n.curves().filter(|(_, c)| !c.fixed).collect();
        assert_eq!(inner.len(), 1);
        assert_eq!(inner[0].1.kind, CurveKind::Closed);
        assert_eq!(n.junction_count(), 0);
        labels[13] = 1;
        assert_eq!(n.rasterize_labels(), labels);
    }

    #[test]
    fn critical_distance_of_fresh_network() {
        let labels = [1, 1, 2, 2, 1, 1, 2, 2, 1, 1, 3, 3, 1, 1, 3, 3];
        let n = net(&labels, 4, 4);
        assert!(n.critical_distance() >= 1.0);
        assert_eq!(net(&[1, 2, 1, 2], 2, 2).critical_distance(), f64::INFINITY);
    }

    #[test]
    fn dump_lists_everything() {
        let d = net(&[1, 2, 1, 2], 2, 2).dump();
        assert!(d.contains("\"junctions\""));
        assert_eq!(d.matches("\"kind\"").count(), 3);
    }
}
