//! The full vectorization loop: alternating dual (merge) and primal
//! (smoothing) steps, the refine step, fitting and assembly, plus the
//! merge-trace diagnostics.

use std::fmt::Write as _;
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
use std::time::Instant;
#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
use web_time::Instant;

use rustc_hash::{FxHashMap, FxHashSet};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::affine_flow::{evolve_network, evolve_network_with, FlowParams, NetworkReport};
use crate::bezier_fit::{fit_path, line_path, BezierPath};
use crate::curve_net::{extract_network, CurveId, CurveKind, CurveNetwork, PolyCurve};
use crate::error::{Error, Result};
use crate::raster_eval::{fmt_psnr, psnr, rasterize, DEFAULT_SUPERSAMPLE};
use crate::raster_io::RasterImage;
use crate::region_graph::{
    mean_pair_cost, merge_cost, refine_to_2normal_with, run_merges_with, GainKind, MergeEvent, Partition,
    RegionId, OUTSIDE,
};
use crate::svg_emit::{assemble, VectorDocument};

/// Time of the last smoothing pass before fitting.
pub const FINAL_SMOOTH_TIME: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub gain: GainKind,
    /// Target region count `N*`.
    pub target_regions: usize,
    /// Total smoothing time `T*` spread over the iterations.
    pub smooth_time: f64,
    /// Bézier fitting tolerance in pixels.
    pub tau: f64,
    /// Number of dual/primal iterations `I_max`.
    pub iterations: usize,
    /// Merge on a 3×3 box-filtered copy of the image.
    pub prefilter: bool,
    /// Record the mean pair cost every this many merges; `None` picks
    /// `ceil(total / 1000)`.
    pub trace_stride: Option<usize>,
    /// Rasterize the finished document and report its PSNR.
    pub evaluate_output: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            gain: GainKind::Area,
            target_regions: 100,
            smooth_time: 1.0,
            tau: 0.5,
            iterations: 3,
            prefilter: false,
            trace_stride: None,
            evaluate_output: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, pixels: usize) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.target_regions < 1 || self.target_regions >= pixels {
            return fail(format!("target regions must be in 1..{pixels}, got {}", self.target_regions));
        }
        if !(self.smooth_time > 0.0 && self.smooth_time.is_finite()) {
            return fail(format!("smoothing time must be positive, got {}", self.smooth_time));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if self.iterations < 1 || self.iterations > pixels - self.target_regions {
            return fail(format!(
                "iterations must be in 1..={}, got {}",
                pixels - self.target_regions,
                self.iterations
            ));
        }
        if self.trace_stride == Some(0) {
            return fail("trace stride must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Dual,
    Primal,
    Refine,
    Final,
    Output,
    /// A region emptied by smoothing, absorbed by a neighbor.
    Vanished,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Dual => "dual",
            Stage::Primal => "primal",
            Stage::Refine => "refine",
            Stage::Final => "final",
            Stage::Output => "output",
            Stage::Vanished => "vanished",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    /// 1-based merge index.
    pub i: usize,
    pub stage: Stage,
    pub delta_e: f64,
    /// Running maximum of the merge costs, which is `λ*` during the dual steps.
    pub lambda_so_far: f64,
    /// Mean cost over live adjacent pairs after this merge, when sampled.
    pub mean_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageMetrics {
    pub stage: Stage,
    pub k: usize,
    pub region_count: usize,
    pub lambda_star: f64,
    pub psnr: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineSummary {
    pub psnr_before: f64,
    pub psnr_after: f64,
    pub n_before: usize,
    pub n_after: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MergeTrace {
    pub merges: Vec<MergeRecord>,
    pub stages: Vec<StageMetrics>,
    pub refine: Option<RefineSummary>,
    /// Curves restored by the topology guards, summed over primal steps.
    pub rolled_back: usize,
}

impl MergeTrace {
    /// Merging potential after merge `i` (1-based): the largest cost so far
    /// over the mean pair cost. `None` where the mean was not sampled;
    /// infinite when the mean is zero.
    pub fn merging_potential(&self, i: usize) -> Option<f64> {
        let rec = self.merges.get(i.checked_sub(1)?)?;
        let mean = rec.mean_cost?;
        let max = self.merges[..i]
            .iter()
            .filter(|r| r.stage != Stage::Vanished)
            .map(|r| r.delta_e)
            .fold(f64::NEG_INFINITY, f64::max);
        Some(if mean == 0.0 { f64::INFINITY } else { max / mean })
    }

    /// CSV with columns `stage,k,region_count,lambda_star,psnr,wall_ms`.
    pub fn metrics_csv(&self) -> String {
        let mut s = String::from("stage,k,region_count,lambda_star,psnr,wall_ms\n");
        for m in &self.stages {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.3}",
                m.stage.name(),
                m.k,
                m.region_count,
                m.lambda_star,
                fmt_psnr(m.psnr),
                m.wall_ms
            );
        }
        s
    }

    /// CSV with columns `i,delta_E,lambda_so_far,M_i,P_i`, one row per
    /// sampled merge.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("i,delta_E,lambda_so_far,M_i,P_i\n");
        for r in &self.merges {
            if let Some(m) = r.mean_cost {
                let p = self.merging_potential(r.i).unwrap_or(f64::NAN);
                let p = if p.is_infinite() { "inf".to_string() } else { p.to_string() };
                let _ = writeln!(s, "{},{},{},{},{}", r.i, r.delta_e, r.lambda_so_far, m, p);
            }
        }
        s
    }
}

/// PSNR lost per region removed: `(before - after) / (n_before - n_after)`.
/// `None` unless `n_before > n_after`.
pub fn region_importance(psnr_before: f64, psnr_after: f64, n_before: usize, n_after: usize) -> Option<f64> {
    (n_before > n_after).then(|| (psnr_before - psnr_after) / (n_before - n_after) as f64)
}

/// Free-function form of [`MergeTrace::merging_potential`].
pub fn merging_potential(trace: &MergeTrace, i: usize) -> Option<f64> {
    trace.merging_potential(i)
}

#[derive(Debug, Clone)]
pub struct Vectorized {
    pub document: VectorDocument,
    pub trace: MergeTrace,
    /// Final partition, with statistics from the input image.
    pub partition: Partition,
    pub network: CurveNetwork,
    pub lambda_star: f64,
}

struct Recorder {
    stride: usize,
    count: usize,
    running_max: f64,
    records: Vec<MergeRecord>,
}

impl Recorder {
    fn record(&mut self, p: &Partition, kind: GainKind, stage: Stage, cost: f64) {
        self.count += 1;
        if stage != Stage::Vanished {
            self.running_max = self.running_max.max(cost);
        }
        let mean_cost = (self.count.is_multiple_of(self.stride) || self.count == 1)
            .then(|| mean_pair_cost(p, kind).unwrap_or(0.0));
        self.records.push(MergeRecord {
            i: self.count,
            stage,
            delta_e: cost,
            lambda_so_far: self.running_max,
            mean_cost,
        });
    }
}

/// Result of one guarded primal step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrimalReport {
    pub flow: NetworkReport,
    /// Regions emptied by smoothing, as `(absorbed, survivor)`.
    pub vanished: Vec<(RegionId, RegionId)>,
    /// Curves restored because the pixel adjacency graph changed.
    pub rolled_back: Vec<CurveId>,
}

/// Pixel counts and 4-adjacency (including the outside) of a label map.
fn label_graph(labels: &[RegionId], w: usize, h: usize) -> (FxHashMap<RegionId, usize>, FxHashSet<(RegionId, RegionId)>) {
    let mut counts: FxHashMap<RegionId, usize> = FxHashMap::default();
    let mut pairs = FxHashSet::default();
    let mut add = |a: RegionId, b: RegionId| {
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    };
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            *counts.entry(l).or_insert(0) += 1;
            if x + 1 < w {
                add(l, labels[y * w + x + 1]);
            }
            if y + 1 < h {
                add(l, labels[(y + 1) * w + x]);
            }
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                add(l, OUTSIDE);
            }
        }
    }
    (counts, pairs)
}

fn partition_pairs(p: &Partition) -> FxHashSet<(RegionId, RegionId)> {
    let mut pairs = FxHashSet::default();
    for a in p.live_regions() {
        for &b in p.neighbors(a).keys() {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    pairs
}

/// Evolve the network for time `t` (or one final erosion when `single` is
/// set), then rebuild the partition from the rasterized labels. Regions
/// left without pixels are merged into the neighbor they share the most
/// boundary with; any other change of the pixel adjacency graph rolls the
/// curves of the affected regions back to their pre-step shape.
pub fn primal_step(
    p: &mut Partition,
    net: &mut CurveNetwork,
    work: &RasterImage,
    t: f64,
    single: bool,
    mut on_vanish: impl FnMut(&Partition, MergeEvent),
    kind: GainKind,
) -> PrimalReport {
    let mut snapshot = net.clone();
    let flow = if single {
        evolve_network_with(net, t, FlowParams::single_step)
    } else {
        evolve_network(net, t)
    };
    let mut report = PrimalReport { flow, ..Default::default() };
    let (w, h) = (p.width(), p.height());
    let mut restored: FxHashSet<CurveId> = FxHashSet::default();
    let labels = loop {
        let labels = net.rasterize_labels();
        let (counts, after) = label_graph(&labels, w, h);
        if counts.contains_key(&OUTSIDE) {
            // Pixels outside every region: restore the whole network.
            let ids: Vec<CurveId> = net.curves().map(|(id, _)| id).collect();
            let mut changed = false;
            for id in ids {
                if restored.insert(id) {
                    net.set_points(id, snapshot.curve(id).expect("snapshot in sync").points.clone());
                    report.rolled_back.push(id);
                    changed = true;
                }
            }
            if changed {
                continue;
            }
            break labels;
        }
        let mut vanished: Vec<RegionId> = p.live_regions().filter(|r| !counts.contains_key(r)).collect();
        vanished.sort_unstable();
        if !vanished.is_empty() {
            for l in vanished {
                if !p.is_alive(l) {
                    continue;
                }
                let Some(n) = p
                    .sorted_neighbors(l)
                    .into_iter()
                    .filter(|&n| n != OUTSIDE)
                    .max_by(|&a, &b| {
                        p.shared_len(l, a).unwrap().total_cmp(&p.shared_len(l, b).unwrap()).then(b.cmp(&a))
                    })
                else {
                    continue;
                };
                let cost = p.merge_cost(kind, l, n).expect("adjacent");
                let s = p.merge(l, n).expect("adjacent live regions");
                let absorbed = if s == l { n } else { l };
                net.merge_regions(s, absorbed);
                snapshot.merge_regions(s, absorbed);
                report.vanished.push((absorbed, s));
                on_vanish(p, MergeEvent { survivor: s, absorbed, cost });
            }
            continue;
        }
        let before = partition_pairs(p);
        let diff: Vec<(RegionId, RegionId)> = before.symmetric_difference(&after).copied().collect();
        if diff.is_empty() {
            break labels;
        }
        let mut regions: Vec<RegionId> = diff.iter().flat_map(|&(a, b)| [a, b]).filter(|&r| r != OUTSIDE).collect();
        regions.sort_unstable();
        regions.dedup();
        let mut changed = false;
        for r in regions {
            for id in net.curves_of(r) {
                let c = net.curve(id).expect("live curve");
                if c.fixed || restored.contains(&id) {
                    continue;
                }
                let old = &snapshot.curve(id).expect("snapshot in sync").points;
                if *old != c.points {
                    net.set_points(id, old.clone());
                    report.rolled_back.push(id);
                    changed = true;
                }
                restored.insert(id);
            }
        }
        if !changed {
            break labels;
        }
    };
    *p = Partition::from_labels(work, labels, p.id_space());
    report.rolled_back.sort_unstable();
    report.rolled_back.dedup();
    report
}

fn fit_all(net: &CurveNetwork, tau: f64) -> FxHashMap<CurveId, BezierPath> {
    let items: Vec<(CurveId, &PolyCurve)> = net.curves().collect();
    let fit = |(id, c): &(CurveId, &PolyCurve)| {
        // Border curves never move; fitting them loosely would cut the
        // image corners.
        let closed = c.kind == CurveKind::Closed;
        let mut path = if c.fixed { line_path(&c.points, closed) } else { fit_path(&c.points, closed, tau) };
        path.source_curve = *id;
        (*id, path)
    };
    #[cfg(feature = "parallel")]
    let fitted: Vec<(CurveId, BezierPath)> = items.par_iter().map(fit).collect();
    #[cfg(not(feature = "parallel"))]
    let fitted: Vec<(CurveId, BezierPath)> = items.iter().map(fit).collect();
    fitted.into_iter().collect()
}

/// Vectorize an image.
pub fn vectorize(img: &RasterImage, cfg: &PipelineConfig) -> Result<Vectorized> {
    let n = img.pixel_count();
    cfg.validate(n)?;
    let started = Instant::now();
    let work = if cfg.prefilter { img.box_prefilter() } else { img.clone() };
    let kind = cfg.gain;
    let mut p = Partition::from_pixels(&work);
    let j = (n - cfg.target_regions).div_ceil(cfg.iterations);
    let stride = cfg.trace_stride.unwrap_or_else(|| (n - cfg.target_regions).div_ceil(1000).max(1));
    let mut rec = Recorder { stride, count: 0, running_max: 0.0, records: Vec::new() };
    let mut stages = Vec::new();
    let mut lambda = 0.0;
    let mut net: Option<CurveNetwork> = None;
    let mut rolled_back = 0;

    let label_psnr = |p: &Partition| {
        let mut q = p.clone();
        let labels = q.label_map().to_vec();
        let recon = Partition::from_labels(img, labels, p.id_space()).reconstruct();
        psnr(img, &recon).unwrap_or(f64::NAN)
    };
    let push_stage = |stages: &mut Vec<StageMetrics>, stage, k, p: &Partition, lambda: f64| {
        stages.push(StageMetrics {
            stage,
            k,
            region_count: p.region_count(),
            lambda_star: lambda,
            psnr: label_psnr(p),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    };

    for k in 1..=cfg.iterations {
        let count = j.min(p.region_count().saturating_sub(cfg.target_regions));
        run_merges_with(&mut p, kind, count, &mut lambda, |p, e| {
            if let Some(net) = net.as_mut() {
                net.merge_regions(e.survivor, e.absorbed);
            }
            rec.record(p, kind, Stage::Dual, e.cost);
        });
        push_stage(&mut stages, Stage::Dual, k, &p, lambda);

        let network = net.get_or_insert_with(|| extract_network(&p));
        let report = primal_step(
            &mut p,
            network,
            &work,
            cfg.smooth_time / cfg.iterations as f64,
            false,
            |p, e| rec.record(p, kind, Stage::Vanished, e.cost),
            kind,
        );
        rolled_back += report.flow.rolled_back.len() + report.rolled_back.len();
        push_stage(&mut stages, Stage::Primal, k, &p, lambda);
    }

    let mut network = net.take().expect("at least one iteration");
    let n_before = p.region_count();
    let psnr_before = label_psnr(&p);
    refine_to_2normal_with(&mut p, kind, lambda, |p, e| {
        network.merge_regions(e.survivor, e.absorbed);
        rec.record(p, kind, Stage::Refine, e.cost);
    });
    push_stage(&mut stages, Stage::Refine, 0, &p, lambda);
    let refine = RefineSummary {
        psnr_before,
        psnr_after: stages.last().unwrap().psnr,
        n_before,
        n_after: p.region_count(),
    };

    let report = primal_step(
        &mut p,
        &mut network,
        &work,
        FINAL_SMOOTH_TIME,
        true,
        |p, e| rec.record(p, kind, Stage::Vanished, e.cost),
        kind,
    );
    rolled_back += report.flow.rolled_back.len() + report.rolled_back.len();
    // Pixel flips from the last smoothing can lower a pair below λ*.
    refine_to_2normal_with(&mut p, kind, lambda, |p, e| {
        network.merge_regions(e.survivor, e.absorbed);
        rec.record(p, kind, Stage::Final, e.cost);
    });
    push_stage(&mut stages, Stage::Final, 0, &p, lambda);

    let labels = p.label_map().to_vec();
    let final_partition = Partition::from_labels(img, labels, p.id_space());
    let fitted = fit_all(&network, cfg.tau);
    let document = assemble(&final_partition, &network, &fitted)?;
    if cfg.evaluate_output {
        let r = rasterize(&document, img.channels, DEFAULT_SUPERSAMPLE);
        stages.push(StageMetrics {
            stage: Stage::Output,
            k: 0,
            region_count: document.shapes.len(),
            lambda_star: lambda,
            psnr: psnr(img, &r.image)?,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    let trace = MergeTrace { merges: rec.records, stages, refine: Some(refine), rolled_back };
    Ok(Vectorized { document, trace, partition: final_partition, network, lambda_star: lambda })
}

/// Cost of merging two regions of a finished partition, for audits.
pub fn pair_cost(p: &Partition, kind: GainKind, a: RegionId, b: RegionId) -> Option<f64> {
    let len = p.shared_len(a, b)?;
    Some(merge_cost(kind, p.stats(a), p.stats(b), len, p.channels()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn importance_examples() {
        let area = region_importance(25.82, 25.67, 100, 93).unwrap();
        assert!((area - 2.14e-2).abs() < 5e-5);
        let ms = region_importance(24.35, 24.01, 100, 88).unwrap();
        assert!((ms - 2.83e-2).abs() < 5e-5);
        assert_eq!(region_importance(20.0, 20.0, 10, 5), Some(0.0));
        assert_eq!(region_importance(20.0, 19.0, 5, 5), None);
    }

    #[test]
    fn config_validation() {
        let cfg = PipelineConfig::default();
        assert!(cfg.validate(100).is_err());
        assert!(cfg.validate(102).is_err());
        assert!(cfg.validate(103).is_ok());
        let bad = PipelineConfig { tau: 0.0, ..PipelineConfig::default() };
        assert!(bad.validate(1000).is_err());
        let bad = PipelineConfig { iterations: 0, ..PipelineConfig::default() };
        assert!(bad.validate(1000).is_err());
        let bad = PipelineConfig { target_regions: 0, ..PipelineConfig::default() };
        assert!(bad.validate(1000).is_err());
    }

    #[test]
    fn constant_image_collapses() {
        let img = RasterImage::filled(8, 8, 1, 77.0).unwrap();
        let cfg = PipelineConfig { target_regions: 1, ..PipelineConfig::default() };
        let out = vectorize(&img, &cfg).unwrap();
        assert_eq!(out.document.shapes.len(), 1);
        assert_eq!(out.lambda_star, 0.0);
        assert_eq!(out.document.shapes[0].fill, [77, 77, 77]);
        assert_eq!(out.trace.merging_potential(1), Some(f64::INFINITY));
    }
}
