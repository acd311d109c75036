#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use aurora::tasks::Trajectory;

pub const UNIT: [(f64, f64); 2] = [(0.0, 1.0), (0.0, 1.0)];

pub fn bin_index(v: f64, bins: usize) -> usize {
    let t = (v * bins as f64).floor();
    if t < 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

// Liang-Barsky clip of segment p->q against the closed box; true when a
// piece of positive length lies inside.
pub fn crosses_box(p: [f64; 2], q: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for a in 0..2 {
        let d = q[a] - p[a];
        if d == 0.0 {
            if p[a] < lo[a] || p[a] > hi[a] {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo[a] - p[a]) / d, (hi[a] - p[a]) / d);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
    }
    t1 > t0
}

pub fn brute_bins(points: &[[f64; 2]], bins: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let w = 1.0 / bins as f64;
    for p in points {
        out.insert(bin_index(p[0], bins) * bins + bin_index(p[1], bins));
    }
    for s in points.windows(2) {
        for i in 0..bins {
            for j in 0..bins {
                let lo = [i as f64 * w, j as f64 * w];
                let hi = [lo[0] + w, lo[1] + w];
                if crosses_box(s[0], s[1], lo, hi) {
                    out.insert(i * bins + j);
                }
            }
        }
    }
    out
}

pub fn brute_diversity(trajs: &[Vec<[f64; 2]>], bins: usize) -> f64 {
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for t in trajs {
        let end = t[t.len() - 1];
        let key = bin_index(end[0], bins) * bins + bin_index(end[1], bins);
        groups.entry(key).or_default().extend(brute_bins(t, bins));
    }
    groups.values().map(|s| s.len() as f64).sum::<f64>() / (bins * bins) as f64
}

pub fn traj(points: &[[f64; 2]]) -> Trajectory {
    let mut full = points.to_vec();
    while full.len() < 50 {
        full.push(*points.last().unwrap());
    }
    Trajectory::new(full).unwrap()
}
