//! The dual graph of a partition: per-region sufficient statistics,
//! adjacency with shared boundary lengths, merge costs under the
//! supported gain functionals, and the greedy merge engine.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::str::FromStr;

use rustc_hash::FxHashMap;

use crate::raster_io::RasterImage;

pub type RegionId = u32;

/// The out-of-domain region. It takes part in adjacency so perimeters add
/// up, but is never merged.
pub const OUTSIDE: RegionId = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats {
    pub area: f64,
    pub perimeter: f64,
    pub color_sum: [f64; 3],
    pub color_sq_sum: [f64; 3],
    pub alive: bool,
    pub version: u32,
}

impl RegionStats {
    pub fn empty() -> Self {
        Self {
            area: 0.0,
            perimeter: 0.0,
            color_sum: [0.0; 3],
            color_sq_sum: [0.0; 3],
            alive: false,
            version: 0,
        }
    }

    pub fn mean(&self, channels: usize) -> [f64; 3] {
        let mut m = [0.0; 3];
        for ch in 0..channels {
            m[ch] = self.color_sum[ch] / self.area;
        }
        m
    }

    /// Sum over channels of the squared deviation from the mean.
    pub fn variance(&self, channels: usize) -> f64 {
        (0..channels)
            .map(|ch| self.color_sq_sum[ch] - self.color_sum[ch] * self.color_sum[ch] / self.area)
            .sum()
    }
}

/// Gain functional used in the denominator of the merge cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GainKind {
    /// Beaulieu-Goldberg: constant gain.
    Bg,
    /// Mumford-Shah: length of the shared boundary.
    Ms,
    /// Change in perimeter/area scale caused by the merge.
    Scale,
    /// Scale (area over perimeter) of the union.
    ScaleMax,
    /// Proportion of the larger region in the union.
    Area,
}

impl GainKind {
    pub const ALL: [GainKind; 5] =
        [GainKind::Bg, GainKind::Ms, GainKind::Scale, GainKind::ScaleMax, GainKind::Area];

    pub fn name(self) -> &'static str {
        match self {
            GainKind::Bg => "bg",
            GainKind::Ms => "ms",
            GainKind::Scale => "scale",
            GainKind::ScaleMax => "scale-max",
            GainKind::Area => "area",
        }
    }
}

impl FromStr for GainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GainKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown gain '{s}' (expected area, bg, scale, scale-max or ms)"))
    }
}

/// Variance increase caused by merging two regions, computed from their
/// means: `|a||b| / (|a| + |b|) * ||mean_a - mean_b||^2`.
pub fn pair_variance_gain(a: &RegionStats, b: &RegionStats, channels: usize) -> f64 {
    let ma = a.mean(channels);
    let mb = b.mean(channels);
    let d2: f64 = (0..channels).map(|ch| (ma[ch] - mb[ch]).powi(2)).sum();
    a.area * b.area / (a.area + b.area) * d2
}

pub fn gain(kind: GainKind, a: &RegionStats, b: &RegionStats, shared_len: f64) -> f64 {
    let union_area = a.area + b.area;
    let union_perimeter = a.perimeter + b.perimeter - 2.0 * shared_len;
    match kind {
        GainKind::Bg => 1.0,
        GainKind::Ms => shared_len,
        GainKind::Scale => {
            assert!(union_perimeter > 0.0, "union of adjacent regions has no boundary");
            a.perimeter / a.area + b.perimeter / b.area - union_perimeter / union_area
        }
        GainKind::ScaleMax => {
            assert!(union_perimeter > 0.0, "union of adjacent regions has no boundary");
            union_area / union_perimeter
        }
        GainKind::Area => a.area.max(b.area) / union_area,
    }
}

pub fn merge_cost(
    kind: GainKind,
    a: &RegionStats,
    b: &RegionStats,
    shared_len: f64,
    channels: usize,
) -> f64 {
    let cost = pair_variance_gain(a, b, channels) / gain(kind, a, b, shared_len);
    if kind == GainKind::Area {
        debug_assert!({
            let ma = a.mean(channels);
            let mb = b.mean(channels);
            let d2: f64 = (0..channels).map(|ch| (ma[ch] - mb[ch]).powi(2)).sum();
            let direct = a.area.min(b.area) * d2;
            (cost - direct).abs() <= 1e-12 * direct.abs().max(f64::MIN_POSITIVE)
        });
    }
    cost
}

/// A partition of the pixel grid into regions, with its dual graph.
#[derive(Debug, Clone)]
pub struct Partition {
    width: usize,
    height: usize,
    channels: usize,
    regions: Vec<RegionStats>,
    neighbors: Vec<FxHashMap<RegionId, f64>>,
    parent: Vec<RegionId>,
    labels: Vec<RegionId>,
    region_count: usize,
}

/// Record of one executed merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeEvent {
    pub survivor: RegionId,
    pub absorbed: RegionId,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MergeError {
    #[error("region {0} is the outside region")]
    Outside(RegionId),
    #[error("region {0} is not alive")]
    Dead(RegionId),
    #[error("regions {0} and {1} are not adjacent")]
    NotAdjacent(RegionId, RegionId),
}

impl Partition {
    /// One region per pixel: pixel `i` gets id `i + 1`.
    pub fn from_pixels(img: &RasterImage) -> Self {
        let labels = (1..=img.pixel_count() as RegionId).collect();
        Self::from_labels(img, labels, img.pixel_count() + 1)
    }

    /// Build statistics and adjacency from a pixel label map. `id_space`
    /// bounds the region ids (exclusive); ids without pixels are dead.
    pub fn from_labels(img: &RasterImage, labels: Vec<RegionId>, id_space: usize) -> Self {
        let (w, h, c) = (img.width, img.height, img.channels);
        assert_eq!(labels.len(), w * h);
        let mut regions = vec![RegionStats::empty(); id_space];
        let mut neighbors: Vec<FxHashMap<RegionId, f64>> = vec![FxHashMap::default(); id_space];
        for (p, &l) in labels.iter().enumerate() {
            assert!(l != OUTSIDE && (l as usize) < id_space, "label {l} out of range");
            let r = &mut regions[l as usize];
            r.area += 1.0;
            for (ch, &v) in img.pixel_at(p).iter().enumerate() {
                r.color_sum[ch] += v;
                r.color_sq_sum[ch] += v * v;
            }
        }
        let mut link = |a: RegionId, b: RegionId| {
            *neighbors[a as usize].entry(b).or_insert(0.0) += 1.0;
            *neighbors[b as usize].entry(a).or_insert(0.0) += 1.0;
        };
        for y in 0..h {
            for x in 0..w {
                let l = labels[y * w + x];
                if x + 1 < w && labels[y * w + x + 1] != l {
                    link(l, labels[y * w + x + 1]);
                }
                if y + 1 < h && labels[(y + 1) * w + x] != l {
                    link(l, labels[(y + 1) * w + x]);
                }
                let border = (x == 0) as u32 + (x + 1 == w) as u32 + (y == 0) as u32 + (y + 1 == h) as u32;
                for _ in 0..border {
                    link(l, OUTSIDE);
                }
            }
        }
        let mut region_count = 0;
        for (id, r) in regions.iter_mut().enumerate().skip(1) {
            if r.area > 0.0 {
                r.alive = true;
                r.perimeter = neighbors[id].values().sum();
                region_count += 1;
            }
        }
        regions[0].alive = true;
        regions[0].perimeter = neighbors[0].values().sum();
        Self {
            width: w,
            height: h,
            channels: c,
            regions,
            neighbors,
            parent: (0..id_space as RegionId).collect(),
            labels,
            region_count,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of live regions, not counting the outside region.
    pub fn region_count(&self) -> usize {
        self.region_count
    }

    pub fn id_space(&self) -> usize {
        self.regions.len()
    }

    pub fn stats(&self, id: RegionId) -> &RegionStats {
        &self.regions[id as usize]
    }

    pub fn is_alive(&self, id: RegionId) -> bool {
        id != OUTSIDE && self.regions.get(id as usize).is_some_and(|r| r.alive)
    }

    pub fn live_regions(&self) -> impl Iterator<Item = RegionId> + '_ {
        (1..self.regions.len() as RegionId).filter(|&id| self.regions[id as usize].alive)
    }

    pub fn neighbors(&self, id: RegionId) -> &FxHashMap<RegionId, f64> {
        &self.neighbors[id as usize]
    }

    /// Neighbor ids in ascending order.
    pub fn sorted_neighbors(&self, id: RegionId) -> Vec<RegionId> {
        let mut v: Vec<RegionId> = self.neighbors[id as usize].keys().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn shared_len(&self, a: RegionId, b: RegionId) -> Option<f64> {
        self.neighbors[a as usize].get(&b).copied()
    }

    /// Every live adjacent pair `(a, b)` with `a < b`, excluding the outside region.
    pub fn adjacent_pairs(&self) -> Vec<(RegionId, RegionId, f64)> {
        let mut pairs = Vec::new();
        for a in self.live_regions() {
            for (&b, &len) in &self.neighbors[a as usize] {
                if b > a {
                    pairs.push((a, b, len));
                }
            }
        }
        pairs.sort_unstable_by_key(|x| (x.0, x.1));
        pairs
    }

    pub fn merge_cost(&self, kind: GainKind, a: RegionId, b: RegionId) -> Option<f64> {
        let shared = self.shared_len(a, b)?;
        Some(merge_cost(kind, self.stats(a), self.stats(b), shared, self.channels))
    }

    fn find(&self, mut id: RegionId) -> RegionId {
        while self.parent[id as usize] != id {
            id = self.parent[id as usize];
        }
        id
    }

    /// Live region containing pixel `index`.
    pub fn label_of(&self, index: usize) -> RegionId {
        self.find(self.labels[index])
    }

    /// Resolve every pixel to its live region and return the label map.
    pub fn label_map(&mut self) -> &[RegionId] {
        for i in 0..self.labels.len() {
            let root = self.find(self.labels[i]);
            self.labels[i] = root;
        }
        for id in 0..self.parent.len() {
            let root = self.find(id as RegionId);
            self.parent[id] = root;
        }
        &self.labels
    }

    /// Label map without mutating the union-find.
    pub fn labels(&self) -> Vec<RegionId> {
        (0..self.labels.len()).map(|i| self.label_of(i)).collect()
    }

    /// Merge two adjacent live regions. Returns the id that survives.
    pub fn merge(&mut self, a: RegionId, b: RegionId) -> Result<RegionId, MergeError> {
        for id in [a, b] {
            if id == OUTSIDE {
                return Err(MergeError::Outside(id));
            }
            if !self.is_alive(id) {
                return Err(MergeError::Dead(id));
            }
        }
        let shared = self.shared_len(a, b).ok_or(MergeError::NotAdjacent(a, b))?;
        // The survivor keeps the larger neighbor map so fewer entries move.
        let key = |id: RegionId| {
            let r = &self.regions[id as usize];
            (self.neighbors[id as usize].len(), r.area as u64, Reverse(id))
        };
        let (s, l) = if key(a) >= key(b) { (a, b) } else { (b, a) };

        let absorbed = std::mem::replace(&mut self.regions[l as usize], RegionStats::empty());
        {
            let r = &mut self.regions[s as usize];
            r.area += absorbed.area;
            r.perimeter = r.perimeter + absorbed.perimeter - 2.0 * shared;
            for ch in 0..3 {
                r.color_sum[ch] += absorbed.color_sum[ch];
                r.color_sq_sum[ch] += absorbed.color_sq_sum[ch];
            }
            r.version += 1;
        }
        self.regions[l as usize].version = absorbed.version + 1;

        let lmap = std::mem::take(&mut self.neighbors[l as usize]);
        self.neighbors[s as usize].remove(&l);
        for (n, len) in lmap {
            if n == s {
                continue;
            }
            let nmap = &mut self.neighbors[n as usize];
            nmap.remove(&l);
            *nmap.entry(s).or_insert(0.0) += len;
            *self.neighbors[s as usize].entry(n).or_insert(0.0) += len;
        }
        self.parent[l as usize] = s;
        self.region_count -= 1;
        Ok(s)
    }

    /// Mean color of each live region, indexed by id.
    pub fn mean_colors(&self) -> Vec<[f64; 3]> {
        self.regions.iter().map(|r| if r.area > 0.0 { r.mean(self.channels) } else { [0.0; 3] }).collect()
    }

    /// Piecewise-constant reconstruction: each pixel painted with its
    /// region's mean color.
    pub fn reconstruct(&self) -> RasterImage {
        let means = self.mean_colors();
        let mut data = Vec::with_capacity(self.labels.len() * self.channels);
        for i in 0..self.labels.len() {
            let m = means[self.label_of(i) as usize];
            data.extend_from_slice(&m[..self.channels]);
        }
        RasterImage { width: self.width, height: self.height, channels: self.channels, data }
    }

    /// Check conservation, perimeter identity and adjacency symmetry.
    pub fn check_invariants(&self) -> Result<(), String> {
        let total: f64 = self.live_regions().map(|id| self.stats(id).area).sum();
        if total != (self.width * self.height) as f64 {
            return Err(format!("areas sum to {total}, expected {}", self.width * self.height));
        }
        let live = self.live_regions().count();
        if live != self.region_count {
            return Err(format!("region_count {} but {live} live regions", self.region_count));
        }
        for id in self.live_regions() {
            let r = self.stats(id);
            let sum: f64 = self.neighbors[id as usize].values().sum();
            if (sum - r.perimeter).abs() > 1e-9 {
                return Err(format!("region {id}: perimeter {} but shared lengths sum to {sum}", r.perimeter));
            }
            for (&n, &len) in &self.neighbors[id as usize] {
                if n != OUTSIDE && !self.is_alive(n) {
                    return Err(format!("region {id} lists dead neighbor {n}"));
                }
                if self.neighbors[n as usize].get(&id) != Some(&len) {
                    return Err(format!("asymmetric adjacency {id} -> {n}"));
                }
                if len < 1.0 {
                    return Err(format!("shared length {len} between {id} and {n}"));
                }
            }
        }
        Ok(())
    }

    /// One line per dual-graph edge: `id_a id_b shared_len cost`.
    pub fn dump_dual_graph(&self, kind: GainKind) -> String {
        let mut out = String::new();
        for (a, b, len) in self.adjacent_pairs() {
            let cost = merge_cost(kind, self.stats(a), self.stats(b), len, self.channels);
            let _ = writeln!(out, "{a} {b} {len} {cost}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    cost: f64,
    a: RegionId,
    b: RegionId,
    version_a: u32,
    version_b: u32,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then(self.version_a.cmp(&other.version_a))
            .then(self.version_b.cmp(&other.version_b))
    }
}

/// Min-cost priority queue of adjacent pairs with lazy deletion keyed on
/// region versions. Ties are broken by `(min id, max id)`.
#[derive(Debug, Clone)]
pub struct MergeQueue {
    kind: GainKind,
    heap: BinaryHeap<Reverse<QueueEntry>>,
}

impl MergeQueue {
    pub fn new(p: &Partition, kind: GainKind) -> Self {
        let mut q = Self { kind, heap: BinaryHeap::new() };
        for (a, b, _) in p.adjacent_pairs() {
            q.push_pair(p, a, b);
        }
        q
    }

    pub fn kind(&self) -> GainKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    fn push_pair(&mut self, p: &Partition, a: RegionId, b: RegionId) {
        let (a, b) = (a.min(b), a.max(b));
        let Some(cost) = p.merge_cost(self.kind, a, b) else { return };
        self.heap.push(Reverse(QueueEntry {
            cost,
            a,
            b,
            version_a: p.stats(a).version,
            version_b: p.stats(b).version,
        }));
    }

    /// Queue fresh entries for every in-domain adjacency of `id`.
    pub fn push_region(&mut self, p: &Partition, id: RegionId) {
        for n in p.sorted_neighbors(id) {
            if n != OUTSIDE {
                self.push_pair(p, id, n);
            }
        }
    }

    fn is_valid(p: &Partition, e: &QueueEntry) -> bool {
        p.is_alive(e.a)
            && p.is_alive(e.b)
            && p.stats(e.a).version == e.version_a
            && p.stats(e.b).version == e.version_b
    }

    /// Cost of the cheapest valid entry, discarding stale ones on the way.
    pub fn peek_cost(&mut self, p: &Partition) -> Option<f64> {
        while let Some(Reverse(top)) = self.heap.peek() {
            if Self::is_valid(p, top) {
                return Some(top.cost);
            }
            self.heap.pop();
        }
        None
    }

    /// Remove and return the cheapest valid pair; `None` once exhausted.
    pub fn pop_best(&mut self, p: &Partition) -> Option<(RegionId, RegionId, f64)> {
        while let Some(Reverse(e)) = self.heap.pop() {
            if Self::is_valid(p, &e) {
                return Some((e.a, e.b, e.cost));
            }
        }
        None
    }
}

/// Perform up to `count` greedy merges, each the global minimum at its
/// moment, raising `lambda_star` to every executed cost. `on_merge` sees
/// each merge after the partition is updated.
pub fn run_merges_with(
    p: &mut Partition,
    kind: GainKind,
    count: usize,
    lambda_star: &mut f64,
    mut on_merge: impl FnMut(&Partition, MergeEvent),
) -> usize {
    if count == 0 {
        return 0;
    }
    let mut q = MergeQueue::new(p, kind);
    let mut done = 0;
    while done < count && p.region_count() > 1 {
        let Some((a, b, cost)) = q.pop_best(p) else { break };
        let s = p.merge(a, b).expect("queue entries are valid adjacent pairs");
        *lambda_star = lambda_star.max(cost);
        q.push_region(p, s);
        done += 1;
        on_merge(p, MergeEvent { survivor: s, absorbed: if s == a { b } else { a }, cost });
    }
    done
}

pub fn run_merges(p: &mut Partition, kind: GainKind, count: usize, lambda_star: &mut f64) -> usize {
    run_merges_with(p, kind, count, lambda_star, |_, _| {})
}

/// Merge the global-minimum pair while its cost is at most `lambda`.
/// Afterwards every adjacent pair costs more than `lambda`. `lambda` is
/// not raised.
pub fn refine_to_2normal_with(
    p: &mut Partition,
    kind: GainKind,
    lambda: f64,
    mut on_merge: impl FnMut(&Partition, MergeEvent),
) -> usize {
    let mut q = MergeQueue::new(p, kind);
    let mut done = 0;
    while q.peek_cost(p).is_some_and(|c| c <= lambda) {
        let (a, b, cost) = q.pop_best(p).expect("peeked entry is valid");
        let s = p.merge(a, b).expect("queue entries are valid adjacent pairs");
        q.push_region(p, s);
        done += 1;
        on_merge(p, MergeEvent { survivor: s, absorbed: if s == a { b } else { a }, cost });
    }
    done
}

pub fn refine_to_2normal(p: &mut Partition, kind: GainKind, lambda: f64) -> usize {
    refine_to_2normal_with(p, kind, lambda, |_, _| {})
}

/// Exhaustive scan for the cheapest adjacent pair, with the same tie rule
/// as the queue.
pub fn scan_min_pair(p: &Partition, kind: GainKind) -> Option<(RegionId, RegionId, f64)> {
    p.adjacent_pairs()
        .into_iter()
        .map(|(a, b, len)| (a, b, merge_cost(kind, p.stats(a), p.stats(b), len, p.channels())))
        .min_by(|x, y| x.2.total_cmp(&y.2).then((x.0, x.1).cmp(&(y.0, y.1))))
}

/// Mean merge cost over all live adjacent pairs, `None` when there are none.
pub fn mean_pair_cost(p: &Partition, kind: GainKind) -> Option<f64> {
    let pairs = p.adjacent_pairs();
    if pairs.is_empty() {
        return None;
    }
    let sum: f64 = pairs
        .iter()
        .map(|&(a, b, len)| merge_cost(kind, p.stats(a), p.stats(b), len, p.channels()))
        .sum();
    Some(sum / pairs.len() as f64)
}

/// True when every adjacent pair costs strictly more than `lambda`.
pub fn is_2normal(p: &Partition, kind: GainKind, lambda: f64) -> bool {
    scan_min_pair(p, kind).is_none_or(|(_, _, c)| c > lambda)
}
