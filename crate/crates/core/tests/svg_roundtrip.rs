mod common;

use common::random_image;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vecraster::fixtures::{disk_fixture, fig3_image};
use vecraster::raster_eval::{parse_svg, rasterize, rasterize_svg};
use vecraster::region_graph::run_merges;
use vecraster::svg_emit::{assemble, polyline_paths};
use vecraster::{extract_network, vectorize, GainKind, Partition, PipelineConfig};

#[test]
fn disk_becomes_background_with_hole() {
    let img = disk_fixture(32, 10.0);
    let cfg = PipelineConfig { target_regions: 2, ..PipelineConfig::default() };
    let out = vectorize(&img, &cfg).unwrap();
    let doc = &out.document;
    assert_eq!(doc.shapes.len(), 2);
    assert_eq!(doc.paths.len(), 2);
    let (bg, disk) = (&doc.shapes[0], &doc.shapes[1]);
    // Smoothing pulls the disk boundary inward, so the background mean
    // picks up a few bright pixels.
    assert!((30..=40).contains(&bg.fill[0]), "{:?}", bg.fill);
    assert_eq!(disk.fill, [220, 220, 220]);
    assert_eq!(bg.loops.len(), 2);
    assert_eq!(bg.loops[1][0].path, disk.loops[0][0].path);
    assert_ne!(bg.loops[1][0].reversed, disk.loops[0][0].reversed);

    let r = rasterize(doc, 1, 1);
    assert_eq!(r.unfilled_pixels, 0);
    let disk_px = r.image.data.iter().filter(|&&v| v == 220.0).count() as f64;
    let exact = std::f64::consts::PI * 100.0;
    assert!((disk_px - exact).abs() <= 2.0 * std::f64::consts::PI * 10.0, "{disk_px} vs {exact}");
}

#[test]
fn merged_fig3_fills_are_region_means() {
    let img = fig3_image();
    let mut p = Partition::from_pixels(&img);
    run_merges(&mut p, GainKind::Bg, img.pixel_count() - 5, &mut 0.0);
    let net = extract_network(&p);
    let doc = assemble(&p, &net, &polyline_paths(&net)).unwrap();
    assert_eq!(doc.shapes.len(), 5);
    // Background absorbs the 16- and 4-pixel squares and the middle strip.
    let bg_pixels = 64 * 40 - 121 - 25 - 16 - 4 - 121;
    let bg_mean = (bg_pixels as f64 * 40.0 + 16.0 * 110.0 + 4.0 * 255.0 + 44.0 * 85.0) / (bg_pixels + 64) as f64;
    let mut fills: Vec<u8> = doc.shapes.iter().map(|s| s.fill[0]).collect();
    fills.sort_unstable();
    let mut want = vec![bg_mean.round() as u8, 131, 140, 180, 190];
    want.sort_unstable();
    assert_eq!(fills, want);
    // Exact polylines reproduce the merged label map.
    let r = rasterize(&doc, 1, 1);
    assert_eq!(r.unfilled_pixels, 0);
    assert_eq!(r.image.data, p.reconstruct().data.iter().map(|v| v.round()).collect::<Vec<_>>());
}

#[test]
fn serialized_svg_renders_like_the_document() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for channels in [1, 3] {
        let img = random_image(&mut rng, 30, 22, channels, 4);
        let cfg = PipelineConfig { target_regions: 25, ..PipelineConfig::default() };
        let out = vectorize(&img, &cfg).unwrap();
        let svg = out.document.to_svg();
        roxmltree::Document::parse(&svg).unwrap();
        let parsed = parse_svg(&svg).unwrap();
        assert_eq!((parsed.width, parsed.height), (30, 22));
        assert_eq!(parsed.shapes.len(), out.document.shapes.len());
        let a = rasterize(&out.document, channels, 2);
        let b = rasterize_svg(&svg, channels, 2).unwrap();
        assert_eq!(a.unfilled_pixels, 0);
        assert_eq!(b.unfilled_pixels, 0);
        let differing = a.image.data.iter().zip(&b.image.data).filter(|(x, y)| x != y).count();
        assert!(differing <= a.image.data.len() / 100, "{differing}");
    }
}
