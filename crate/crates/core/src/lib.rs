//! Piecewise-constant image vectorization.
//!
//! Starting from one region per pixel, the engine alternates two steps:
//! greedy region merging on the dual (adjacency) graph of the partition,
//! and affine shortening of the boundary curves forming the primal graph.
//! A final refine pass makes the partition 2-normal at the largest merge
//! cost seen, the boundaries are fitted with cubic Béziers and the regions
//! are written out as an SVG with their mean colors.

pub mod affine_flow;
pub mod bezier_fit;
pub mod curve_net;
mod error;
pub mod fixtures;
pub mod geometry;
pub mod pipeline;
pub mod raster_eval;
pub mod raster_io;
pub mod region_graph;
pub mod svg_emit;

pub use affine_flow::FlowParams;
pub use bezier_fit::{fit_path, path_error, BezierPath, CubicBez};
pub use curve_net::{extract_network, CurveKind, CurveNetwork, Junction, PolyCurve};
pub use error::{Error, Result};
pub use geometry::Point;
pub use pipeline::{vectorize, MergeTrace, PipelineConfig, Vectorized};
pub use raster_eval::{psnr, EvalReport};
pub use raster_io::{compute_stats, ImageStats, RasterImage};
pub use region_graph::{GainKind, Partition, RegionId, RegionStats};
pub use svg_emit::VectorDocument;
