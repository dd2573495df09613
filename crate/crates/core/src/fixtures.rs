//! Deterministic synthetic images and curve scenarios.

use crate::curve_net::{CurveKind, CurveNetwork, PolyCurve};
use crate::geometry::Point;
use crate::raster_io::{encode_pnm, RasterImage};

pub const FIG3_WIDTH: usize = 64;
pub const FIG3_HEIGHT: usize = 40;
pub const FIG3_BACKGROUND: f64 = 40.0;
pub const SPIRAL_INTENSITY: f64 = 131.0;
pub const SPIRAL_PIXELS: usize = 121;

/// `(x, y, side, intensity)` of the three central squares, top to bottom.
pub const FIG3_SQUARES: [(usize, usize, usize, f64); 3] =
    [(28, 6, 5, 140.0), (28, 17, 4, 110.0), (29, 29, 2, 255.0)];

/// Origin of the 11×11 striped square on the right.
pub const FIG3_STRIPED_ORIGIN: (usize, usize) = (44, 14);
/// `(height, intensity)` of the strips, top to bottom.
pub const FIG3_STRIPS: [(usize, f64); 3] = [(3, 190.0), (4, 85.0), (4, 180.0)];

pub const SPIRAL_ORIGIN: (usize, usize) = (3, 12);
pub const SPIRAL_BOX: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub image: RasterImage,
}

impl Fixture {
    pub fn to_pgm(&self) -> Vec<u8> {
        encode_pnm(&self.image)
    }
}

pub const FIXTURE_NAMES: [&str; 3] = ["fig3", "gradient", "disk"];

/// Look up an image fixture by name, using default sizes.
pub fn fixture(name: &str) -> Option<Fixture> {
    let image = match name {
        "fig3" => fig3_image(),
        "gradient" => gradient_fixture(64, 64),
        "disk" => disk_fixture(32, 10.0),
        _ => return None,
    };
    let name = FIXTURE_NAMES.iter().find(|n| **n == name).copied()?;
    Some(Fixture { name, image })
}

/// Pixels of a clockwise square spiral inside a `side × side` box, with a
/// one-pixel gap between arms.
pub fn spiral_pixels(side: usize, count: usize) -> Vec<(usize, usize)> {
    let n = side as i64;
    let mut grid = vec![false; side * side];
    let inside = |x: i64, y: i64| x >= 0 && y >= 0 && x < n && y < n;
    let idx = |x: i64, y: i64| (y * n + x) as usize;
    let dirs = [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)];
    let (mut x, mut y, mut d) = (0i64, 0i64, 0usize);
    grid[0] = true;
    let mut out = vec![(0, 0)];
    let free = |grid: &[bool], x: i64, y: i64, d: usize| {
        let (dx, dy) = dirs[d];
        let (nx, ny) = (x + dx, y + dy);
        inside(nx, ny) && !grid[idx(nx, ny)] && !(inside(nx + dx, ny + dy) && grid[idx(nx + dx, ny + dy)])
    };
    while out.len() < count {
        if !free(&grid, x, y, d) {
            d = (d + 1) % 4;
            if !free(&grid, x, y, d) {
                break;
            }
        }
        x += dirs[d].0;
        y += dirs[d].1;
        grid[idx(x, y)] = true;
        out.push((x as usize, y as usize));
    }
    out
}

/// Grayscale test image with eight flat regions: a one-pixel-wide spiral,
/// three stacked squares and a square made of three horizontal strips,
/// all on a uniform background.
pub fn fig3_image() -> RasterImage {
    let (w, h) = (FIG3_WIDTH, FIG3_HEIGHT);
    let mut data = vec![FIG3_BACKGROUND; w * h];
    for (x, y) in spiral_pixels(SPIRAL_BOX, SPIRAL_PIXELS) {
        data[(SPIRAL_ORIGIN.1 + y) * w + SPIRAL_ORIGIN.0 + x] = SPIRAL_INTENSITY;
    }
    for (x0, y0, side, v) in FIG3_SQUARES {
        for y in y0..y0 + side {
            data[y * w + x0..y * w + x0 + side].fill(v);
        }
    }
    let (sx, mut sy) = FIG3_STRIPED_ORIGIN;
    for (height, v) in FIG3_STRIPS {
        for y in sy..sy + height {
            data[y * w + sx..y * w + sx + 11].fill(v);
        }
        sy += height;
    }
    RasterImage::new(w, h, 1, data).expect("valid fixture size")
}

/// Horizontal ramp from 0 at the left column to 255 at the right column.
pub fn gradient_fixture(w: usize, h: usize) -> RasterImage {
    assert!(w >= 16 && h >= 16, "gradient fixture needs w, h >= 16");
    let row: Vec<f64> = (0..w).map(|x| (255.0 * x as f64 / (w - 1) as f64).round()).collect();
    let data = (0..h).flat_map(|_| row.iter().copied()).collect();
    RasterImage::new(w, h, 1, data).expect("valid fixture size")
}

/// A bright disk of radius `r` centered in a dark `size × size` square.
/// A pixel is inside when its center is.
pub fn disk_fixture(size: usize, r: f64) -> RasterImage {
    let c = size as f64 / 2.0;
    let data = (0..size * size)
        .map(|i| {
            let p = Point::new((i % size) as f64 + 0.5, (i / size) as f64 + 0.5);
            if p.dist(Point::new(c, c)) <= r { 220.0 } else { 30.0 }
        })
        .collect();
    RasterImage::new(size, size, 1, data).expect("valid fixture size")
}

pub const Z_P1: (i32, i32) = (0, -3);
pub const Z_P2: (i32, i32) = (3, 3);
pub const Z_P3: (i32, i32) = (1, 3);
pub const Z_P4: (i32, i32) = (2, -3);

fn densify(corners: &[(i32, i32)], spacing: f64) -> Vec<Point> {
    let mut out = Vec::new();
    for w in corners.windows(2) {
        let a = Point::new(w[0].0 as f64, w[0].1 as f64);
        let b = Point::new(w[1].0 as f64, w[1].1 as f64);
        let n = (a.dist(b) / spacing).ceil().max(1.0) as usize;
        out.extend((0..n).map(|k| a.lerp(b, k as f64 / n as f64)));
    }
    let last = corners[corners.len() - 1];
    out.push(Point::new(last.0 as f64, last.1 as f64));
    out
}

fn open_curve(points: Vec<Point>, start: (i32, i32), end: (i32, i32)) -> PolyCurve {
    PolyCurve { points, kind: CurveKind::Open, left: 1, right: 2, fixed: false, start: Some(start), end: Some(end) }
}

/// Z-shaped polyline `P1 → P4 → P3 → P2` with all four corners as
/// junctions, so each bar evolves on its own.
pub fn z_curve_fixture() -> CurveNetwork {
    let mut net = CurveNetwork::empty(4, 7);
    for k in [Z_P1, Z_P2, Z_P3, Z_P4] {
        net.add_junction(k);
    }
    for (a, b) in [(Z_P1, Z_P4), (Z_P4, Z_P3), (Z_P3, Z_P2)] {
        net.add_curve(open_curve(densify(&[a, b], 0.25), a, b));
    }
    net
}

/// The same Z as one curve between `P1` and `P2`.
pub fn z_curve_single() -> CurveNetwork {
    let mut net = CurveNetwork::empty(4, 7);
    net.add_junction(Z_P1);
    net.add_junction(Z_P2);
    net.add_curve(open_curve(densify(&[Z_P1, Z_P4, Z_P3, Z_P2], 0.25), Z_P1, Z_P2));
    net
}

/// Join the curves of a network in id order into one polyline.
pub fn concat_curves(net: &CurveNetwork) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for (_, c) in net.curves() {
        let skip = usize::from(out.last() == c.points.first());
        out.extend_from_slice(&c.points[skip..]);
    }
    out
}
