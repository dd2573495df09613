//! Measures the erosion constant `OMEGA` on sampled circles.
//!
//! Each circle is evolved with `omega = 1`, so every erosion of area
//! `sigma` stands for a time `sigma^(2/3)`. The flow shrinks a circle by
//! `r^(4/3) = r0^(4/3) - (4/3) t`, so the time the erosions actually
//! produced, divided by the nominal time, is the constant.
//!
//! Run with `cargo run --release -p vecraster --example calibrate_omega`.

use vecraster::affine_flow::{evolve, FlowParams, OMEGA};
use vecraster::curve_net::CurveKind;
use vecraster::Point;

fn circle(r: f64) -> Vec<Point> {
    let n = (std::f64::consts::TAU * r).ceil() as usize * 4;
    let mut v: Vec<Point> = (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    v.push(v[0]);
    v
}

fn mean_radius(pts: &[Point]) -> f64 {
    let ring = &pts[..pts.len() - 1];
    ring.iter().map(|p| p.norm()).sum::<f64>() / ring.len() as f64
}

fn main() {
    let t = 1.0;
    println!("{:>8} {:>12} {:>12}", "r0", "radius", "omega");
    let mut estimates = Vec::new();
    for r0 in [25.0, 50.0, 100.0, 200.0] {
        let params = FlowParams { omega: 1.0, ..FlowParams::for_duration(t) };
        let out = evolve(&circle(r0), CurveKind::Closed, &params);
        let r = mean_radius(&out.points);
        let produced = 0.75 * (r0.powf(4.0 / 3.0) - r.powf(4.0 / 3.0));
        let omega = produced / t;
        estimates.push(omega);
        println!("{r0:>8} {r:>12.6} {omega:>12.6}");
    }
    let leading = 12f64.powf(2.0 / 3.0) / 8.0;
    println!("leading-order value 12^(2/3)/8 = {leading:.7}");
    println!("estimate at r0 = 100             {:.7}", estimates[2]);
    println!("frozen OMEGA                     {OMEGA:.7}");
}
