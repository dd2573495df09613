#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use vecraster::{Partition, RasterImage, RegionId};

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize, channels: usize, levels: u32) -> RasterImage {
    let step = 255.0 / (levels - 1).max(1) as f64;
    let data = (0..w * h * channels).map(|_| (rng.gen_range(0..levels) as f64 * step).round()).collect();
    RasterImage::new(w, h, channels, data).unwrap()
}

/// Nearest-seed partition of a `w × h` grid with `k` cells, each cell
/// painted in a random gray.
pub fn voronoi_partition(rng: &mut impl Rng, w: usize, h: usize, k: usize) -> (RasterImage, Partition) {
    let seeds: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64), rng.gen_range(0..256) as f64))
        .collect();
    let mut labels = vec![0; w * h];
    let mut data = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            let d = |s: &(f64, f64, f64)| (s.0 - cx).powi(2) + (s.1 - cy).powi(2);
            let j = (0..k).min_by(|&a, &b| d(&seeds[a]).total_cmp(&d(&seeds[b])).then(a.cmp(&b))).unwrap();
            labels[y * w + x] = j as RegionId + 1;
            data[y * w + x] = seeds[j].2;
        }
    }
    let img = RasterImage::new(w, h, 1, data).unwrap();
    let p = Partition::from_labels(&img, labels, k + 1);
    (img, p)
}

/// Region ids present in a label map and their 4-adjacency pairs.
pub fn label_graph(labels: &[RegionId], w: usize, h: usize) -> (BTreeSet<RegionId>, BTreeSet<(RegionId, RegionId)>) {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let a = labels[y * w + x];
            nodes.insert(a);
            for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                if nx < w && ny < h {
                    let b = labels[ny * w + nx];
                    if a != b {
                        edges.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    (nodes, edges)
}

/// Brute-force population variance sum `Σ ||f(x) - mean||²` over pixels.
pub fn variance_sum(img: &RasterImage, pixels: &[usize]) -> f64 {
    let c = img.channels;
    let mut total = 0.0;
    for ch in 0..c {
        let mean = pixels.iter().map(|&i| img.data[i * c + ch]).sum::<f64>() / pixels.len() as f64;
        total += pixels.iter().map(|&i| (img.data[i * c + ch] - mean).powi(2)).sum::<f64>();
    }
    total
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) || (a == 0.0 && b.abs() < 1e-9)
}
