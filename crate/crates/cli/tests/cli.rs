use std::fs;
use std::path::Path;

use vecraster::fixtures::{spiral_pixels, SPIRAL_BOX, SPIRAL_ORIGIN, SPIRAL_PIXELS};
use vecraster::raster_eval::{fill_paths, parse_svg};
use vecraster::raster_io::load_image;
use vecraster_cli::{run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("vecraster").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixture_then_vectorize_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("disk.pgm");
    let svg = dir.path().join("disk.svg");
    let metrics = dir.path().join("m.csv");
    let trace = dir.path().join("t.csv");
    let report = dir.path().join("r.csv");
    assert_eq!(cli(&["fixture", "--name", "disk", "--out", s(&pgm)]), EXIT_OK);
    let args = ["vectorize", "--in", s(&pgm), "--out", s(&svg), "--regions", "4", "--metrics", s(&metrics), "--trace", s(&trace)];
    assert_eq!(cli(&args), EXIT_OK);
    assert!(fs::read_to_string(&metrics).unwrap().starts_with("stage,k,region_count,lambda_star,psnr,wall_ms\n"));
    assert!(fs::read_to_string(&trace).unwrap().starts_with("i,delta_E,lambda_so_far,M_i,P_i\n"));
    assert_eq!(cli(&["eval", "--svg", s(&svg), "--ref", s(&pgm), "--report", s(&report)]), EXIT_OK);
    let text = fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("psnr,region_count,path_segment_count,unfilled_pixels"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(row[0].parse::<f64>().unwrap() > 20.0);
    assert_eq!(row[3], "0");
}

#[test]
fn identical_invocations_give_identical_svg() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("g.pgm");
    assert_eq!(cli(&["fixture", "--name", "gradient", "--out", s(&pgm)]), EXIT_OK);
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    for out in [&a, &b] {
        assert_eq!(cli(&["--threads", "2", "vectorize", "--in", s(&pgm), "--out", s(out), "--regions", "20"]), EXIT_OK);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn ms_on_fig3_removes_the_spiral() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("fig3.pgm");
    let svg = dir.path().join("fig3.svg");
    assert_eq!(cli(&["fixture", "--name", "fig3", "--out", s(&pgm)]), EXIT_OK);
    assert_eq!(cli(&["vectorize", "--in", s(&pgm), "--out", s(&svg), "--gain", "ms", "--regions", "7"]), EXIT_OK);
    let img = load_image(&pgm).unwrap();
    let parsed = parse_svg(&fs::read_to_string(&svg).unwrap()).unwrap();
    let rendered = fill_paths(parsed.width, parsed.height, 1, &parsed.shapes, 2).image;
    let background = rendered.pixel(0, 0)[0];
    let (ox, oy) = SPIRAL_ORIGIN;
    for (x, y) in spiral_pixels(SPIRAL_BOX, SPIRAL_PIXELS) {
        let (x, y) = (ox + x, oy + y);
        assert!(img.pixel(x, y)[0] > background + 50.0);
        assert!((rendered.pixel(x, y)[0] - background).abs() < 1.0, "spiral pixel ({x},{y}) still drawn");
    }
}

#[test]
fn sweep_writes_one_row_per_count() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("disk.pgm");
    let out = dir.path().join("sweep");
    assert_eq!(cli(&["fixture", "--name", "disk", "--out", s(&pgm)]), EXIT_OK);
    assert_eq!(cli(&["sweep", "--in", s(&pgm), "--gain", "bg", "--regions", "2,6", "--out", s(&out)]), EXIT_OK);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "target_regions,region_count,psnr");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,") && lines[2].starts_with("6,"));
    assert!(out.join("n2.svg").exists() && out.join("n6.svg").exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cli(&["vectorize", "--in", "a.pgm", "--out", "a.svg", "--regions", "0"]), EXIT_USAGE);
    assert_eq!(cli(&["vectorize", "--out", "a.svg"]), EXIT_USAGE);
    assert_eq!(cli(&["vectorize", "--in", "a.pgm", "--out", "a.svg", "--gain", "fast"]), EXIT_USAGE);
    assert_eq!(cli(&["fixture", "--name", "teapot", "--out", "x.pgm"]), EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(cli(&["--threads", "0", "fixture", "--name", "fig3", "--out", "x.pgm"]), EXIT_USAGE);
    assert_eq!(cli(&["--help"]), EXIT_OK);
}

#[test]
fn processing_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.png");
    let svg = dir.path().join("x.svg");
    assert_eq!(cli(&["vectorize", "--in", s(&missing), "--out", s(&svg)]), EXIT_FAILURE);
    let tiny = dir.path().join("tiny.pgm");
    fs::write(&tiny, b"P5\n2 2\n255\n\x00\x10\x20\x30").unwrap();
    assert_eq!(cli(&["vectorize", "--in", s(&tiny), "--out", s(&svg), "--regions", "4"]), EXIT_FAILURE);
    let bad = dir.path().join("bad.svg");
    fs::write(&bad, "<svg").unwrap();
    assert_eq!(cli(&["eval", "--svg", s(&bad), "--ref", s(&tiny)]), EXIT_FAILURE);
}
