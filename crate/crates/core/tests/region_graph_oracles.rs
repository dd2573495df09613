mod common;

use common::{random_image, rel_close, variance_sum};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecraster::region_graph::{
    gain, merge_cost, pair_variance_gain, refine_to_2normal, run_merges, scan_min_pair, MergeQueue,
};
use vecraster::{compute_stats, GainKind, Partition, RasterImage, RegionId};

fn pixels_of(p: &Partition, id: RegionId) -> Vec<usize> {
    p.labels().iter().enumerate().filter(|(_, &l)| l == id).map(|(i, _)| i).collect()
}

/// A random small image merged part of the way, so regions have mixed sizes.
fn random_partition(rng: &mut ChaCha8Rng) -> (RasterImage, Partition) {
    let w = rng.gen_range(1..=8);
    let h = rng.gen_range(if w == 1 { 2 } else { 1 }..=8);
    let channels = if rng.gen_bool(0.5) { 1 } else { 3 };
    let img = random_image(rng, w, h, channels, 256);
    let mut p = Partition::from_pixels(&img);
    let kind = GainKind::ALL[rng.gen_range(0..GainKind::ALL.len())];
    let merges = rng.gen_range(0..w * h);
    run_merges(&mut p, kind, merges, &mut 0.0);
    (img, p)
}

#[test]
fn pair_variance_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..200 {
        let (img, p) = random_partition(&mut rng);
        for (a, b, _) in p.adjacent_pairs() {
            let pa = pixels_of(&p, a);
            let pb = pixels_of(&p, b);
            let union: Vec<usize> = pa.iter().chain(&pb).copied().collect();
            let brute = variance_sum(&img, &union) - variance_sum(&img, &pa) - variance_sum(&img, &pb);
            let fast = pair_variance_gain(p.stats(a), p.stats(b), img.channels);
            assert!(rel_close(fast, brute, 1e-10), "{fast} vs {brute}");
            checked += 1;
        }
    }
    assert!(checked > 500);
}

#[test]
fn area_cost_is_min_area_times_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let (img, p) = random_partition(&mut rng);
        for (a, b, len) in p.adjacent_pairs() {
            let (sa, sb) = (p.stats(a), p.stats(b));
            let (ma, mb) = (sa.mean(img.channels), sb.mean(img.channels));
            let d2: f64 = (0..img.channels).map(|c| (ma[c] - mb[c]).powi(2)).sum();
            let direct = sa.area.min(sb.area) * d2;
            let cost = merge_cost(GainKind::Area, sa, sb, len, img.channels);
            assert!(rel_close(cost, direct, 1e-12), "{cost} vs {direct}");
        }
    }
}

#[test]
fn queue_pops_match_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for kind in GainKind::ALL {
        for _ in 0..20 {
            let (w, h) = (rng.gen_range(2..=8), rng.gen_range(2..=8));
            let img = random_image(&mut rng, w, h, 1, 6);
            let mut p = Partition::from_pixels(&img);
            let mut q = MergeQueue::new(&p, kind);
            while p.region_count() > 1 {
                let expect = scan_min_pair(&p, kind).unwrap();
                let got = q.pop_best(&p).unwrap();
                assert_eq!((got.0, got.1), (expect.0, expect.1), "{}", kind.name());
                assert_eq!(got.2.to_bits(), expect.2.to_bits());
                let s = p.merge(got.0, got.1).unwrap();
                q.push_region(&p, s);
                p.check_invariants().unwrap();
            }
            assert!(q.pop_best(&p).is_none());
        }
    }
}

#[test]
fn area_refine_bounds_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..40 {
        let channels = if rng.gen_bool(0.5) { 1 } else { 3 };
        let img = random_image(&mut rng, 16, 16, channels, 8);
        let stats = compute_stats(&img);
        let mut p = Partition::from_pixels(&img);
        let mut lambda = 0.0;
        run_merges(&mut p, GainKind::Area, rng.gen_range(150..250), &mut lambda);
        refine_to_2normal(&mut p, GainKind::Area, lambda);
        if lambda == 0.0 {
            continue;
        }
        let min_area = lambda / stats.oscillation_sq;
        let min_perimeter = 2.0 * (std::f64::consts::PI * min_area).sqrt();
        for r in p.live_regions() {
            let s = p.stats(r);
            assert!(s.area >= min_area, "area {} < {min_area}", s.area);
            assert!(s.perimeter >= min_perimeter, "perimeter {} < {min_perimeter}", s.perimeter);
        }
        assert!(p.region_count() as f64 <= stats.total_area * stats.oscillation_sq / lambda);
    }
}

#[test]
fn lambda_is_nondecreasing_under_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let img = random_image(&mut rng, 12, 12, 3, 256);
    let mut p = Partition::from_pixels(&img);
    let mut lambda = 0.0;
    let mut last = 0.0;
    while p.region_count() > 1 {
        run_merges(&mut p, GainKind::Area, 1, &mut lambda);
        assert!(lambda >= last);
        last = lambda;
    }
}

fn stats_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (1u32..200, 1u32..200, 0.0f64..255.0, 0.0f64..255.0, 1u32..4).prop_map(|(a, b, ma, mb, s)| {
        (a as f64, b as f64, ma, mb, s as f64)
    })
}

fn region(area: f64, mean: f64) -> vecraster::RegionStats {
    let mut s = vecraster::RegionStats::empty();
    s.area = area;
    s.perimeter = 2.0 * area + 2.0;
    s.alive = true;
    s.color_sum[0] = mean * area;
    s.color_sq_sum[0] = mean * mean * area;
    s
}

proptest! {
    #[test]
    fn area_gain_between_half_and_one((a, b, ma, mb, shared) in stats_strategy()) {
        let g = gain(GainKind::Area, &region(a, ma), &region(b, mb), shared);
        prop_assert!((0.5..=1.0).contains(&g));
    }

    #[test]
    fn costs_are_symmetric((a, b, ma, mb, shared) in stats_strategy()) {
        for kind in GainKind::ALL {
            let x = merge_cost(kind, &region(a, ma), &region(b, mb), shared, 1);
            let y = merge_cost(kind, &region(b, mb), &region(a, ma), shared, 1);
            prop_assert!(rel_close(x, y, 1e-12));
            prop_assert!(x >= 0.0);
        }
    }

    #[test]
    fn ms_and_bg_relation((a, b, ma, mb, shared) in stats_strategy()) {
        let (ra, rb) = (region(a, ma), region(b, mb));
        let bg = merge_cost(GainKind::Bg, &ra, &rb, shared, 1);
        let ms = merge_cost(GainKind::Ms, &ra, &rb, shared, 1);
        prop_assert!(rel_close(bg, pair_variance_gain(&ra, &rb, 1), 1e-12));
        prop_assert!(rel_close(ms * shared, bg, 1e-12));
    }
}
