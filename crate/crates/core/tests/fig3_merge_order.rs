use vecraster::fixtures::{fig3_image, spiral_pixels, FIG3_SQUARES, FIG3_STRIPED_ORIGIN, FIG3_WIDTH};
use vecraster::region_graph::run_merges;
use vecraster::{GainKind, Partition, RegionId};

const BG: usize = 0;
const SPIRAL: usize = 1;
const SQ16: usize = 3;
const SQ4: usize = 4;
const MID: usize = 6;

/// One pixel index inside each of the eight flat regions.
fn representatives() -> [usize; 8] {
    let w = FIG3_WIDTH;
    let (sx, sy) = (3, 12);
    let (x, y) = spiral_pixels(15, 121)[0];
    let sq = |k: usize| FIG3_SQUARES[k].1 * w + FIG3_SQUARES[k].0;
    let (rx, ry) = FIG3_STRIPED_ORIGIN;
    [0, (sy + y) * w + sx + x, sq(0), sq(1), sq(2), ry * w + rx, (ry + 3) * w + rx, (ry + 7) * w + rx]
}

/// Region groups after merging down to `n` regions, as sorted lists of
/// the names above.
fn groups_at(kind: GainKind, n: usize) -> Vec<Vec<usize>> {
    let img = fig3_image();
    let mut p = Partition::from_pixels(&img);
    let mut lambda = 0.0;
    run_merges(&mut p, kind, img.pixel_count() - n, &mut lambda);
    assert_eq!(p.region_count(), n);
    let reps = representatives();
    let mut by_label: Vec<(RegionId, usize)> = reps.iter().enumerate().map(|(k, &i)| (p.label_of(i), k)).collect();
    by_label.sort_unstable();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &(l, k)) in by_label.iter().enumerate() {
        if i > 0 && by_label[i - 1].0 == l {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups
}

fn singles_except(merged: &[usize]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = (0..8).filter(|k| !merged.contains(k)).map(|k| vec![k]).collect();
    groups.push(merged.to_vec());
    groups.sort();
    groups
}

#[test]
fn ms_eliminates_spiral_first() {
    assert_eq!(groups_at(GainKind::Ms, 7), singles_except(&[BG, SPIRAL]));
}

#[test]
fn area_bg_scale_merge_dim_square_first() {
    for kind in [GainKind::Area, GainKind::Bg, GainKind::Scale] {
        assert_eq!(groups_at(kind, 7), singles_except(&[BG, SQ16]), "{}", kind.name());
    }
}

#[test]
fn area_removes_bright_square_and_middle_strip() {
    assert_eq!(groups_at(GainKind::Area, 5), singles_except(&[BG, SQ16, SQ4, MID]));
}

#[test]
fn scale_keeps_spiral() {
    let groups = groups_at(GainKind::Scale, 5);
    assert!(groups.contains(&vec![SPIRAL]), "{groups:?}");
}
