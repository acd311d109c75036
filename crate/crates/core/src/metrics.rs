//! Evaluation metrics: KL coverage, trajectory diversity, reconstruction
//! error and repertoire size.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::descriptor::{Dataset, LatentModel};
use crate::error::{Error, Result};
use crate::par;
use crate::qd::Container;
use crate::tasks::Trajectory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlcConfig {
    pub bins: usize,
    /// Added to every bin count before normalisation.
    pub epsilon: f64,
}

impl Default for KlcConfig {
    fn default() -> Self {
        Self {
            bins: 30,
            epsilon: 1e-6,
        }
    }
}

/// Square 2-D histogram of point counts; points outside the bounds land in
/// the edge bins.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram2D {
    bins: usize,
    bounds: [(f64, f64); 2],
    counts: Vec<f64>,
    total: usize,
}

impl Histogram2D {
    pub fn new(bins: usize, bounds: [(f64, f64); 2]) -> Result<Self> {
        if bins == 0
            || bounds
                .iter()
                .any(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "histogram with {bins} bins over {bounds:?}"
            )));
        }
        Ok(Self {
            bins,
            bounds,
            counts: vec![0.0; bins * bins],
            total: 0,
        })
    }

    pub fn from_points<'a, I>(bins: usize, bounds: [(f64, f64); 2], points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64; 2]>,
    {
        let mut h = Self::new(bins, bounds)?;
        for p in points {
            h.add(*p);
        }
        Ok(h)
    }

    /// Row-major bin index (x major).
    pub fn bin_of(&self, p: [f64; 2]) -> usize {
        Grid {
            bins: self.bins,
            bounds: self.bounds,
        }
        .bin_of(p)
    }

    pub fn add(&mut self, p: [f64; 2]) {
        let i = self.bin_of(p);
        self.counts[i] += 1.0;
        self.total += 1;
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Probabilities after adding `epsilon` to every bin.
    pub fn normalized(&self, epsilon: f64) -> Vec<f64> {
        let z = self.total as f64 + epsilon * self.counts.len() as f64;
        self.counts.iter().map(|c| (c + epsilon) / z).collect()
    }
}

/// KL divergence of the `compared` histogram from the `reference` one,
/// summed over every bin of the 2-D grid.
pub fn klc(
    reference: &[[f64; 2]],
    compared: &[[f64; 2]],
    bounds: [(f64, f64); 2],
    config: &KlcConfig,
) -> Result<f64> {
    if reference.is_empty() || compared.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            got: reference.len().min(compared.len()),
        });
    }
    let e = Histogram2D::from_points(config.bins, bounds, reference)?.normalized(config.epsilon);
    let a = Histogram2D::from_points(config.bins, bounds, compared)?.normalized(config.epsilon);
    Ok(e.iter().zip(&a).map(|(e, a)| e * (e / a).ln()).sum())
}

/// Bins of a `bins x bins` grid over `bounds` crossed by the polyline,
/// including every point on the segments between samples.
pub fn traversed_bins(traj: &Trajectory, bins: usize, bounds: [(f64, f64); 2]) -> BTreeSet<usize> {
    let grid = Grid { bins, bounds };
    let pts = traj.points();
    let mut out = BTreeSet::new();
    out.insert(grid.bin_of(pts[0]));
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        out.insert(grid.bin_of(q));
        let mut ts = vec![0.0, 1.0];
        for axis in 0..2 {
            let (lo, hi) = bounds[axis];
            let width = (hi - lo) / bins as f64;
            let (a, b) = (p[axis], q[axis]);
            if a == b {
                continue;
            }
            for k in 1..bins {
                let line = lo + k as f64 * width;
                let t = (line - a) / (b - a);
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        for t in ts.windows(2) {
            if t[1] > t[0] {
                let m = 0.5 * (t[0] + t[1]);
                out.insert(grid.bin_of([p[0] + m * (q[0] - p[0]), p[1] + m * (q[1] - p[1])]));
            }
        }
    }
    out
}

struct Grid {
    bins: usize,
    bounds: [(f64, f64); 2],
}

impl Grid {
    fn bin_of(&self, p: [f64; 2]) -> usize {
        let axis = |a: usize| {
            let (lo, hi) = self.bounds[a];
            let t = ((p[a] - lo) / (hi - lo) * self.bins as f64).floor();
            if t.is_nan() || t < 0.0 {
                0
            } else {
                (t as usize).min(self.bins - 1)
            }
        };
        axis(0) * self.bins + axis(1)
    }
}

/// Trajectories are grouped by the bin of their final point; each group
/// scores the number of bins its members traverse, over the total bin
/// count. Ranges over `[0, bins^2]`.
pub fn diversity(trajectories: &[Trajectory], bins: usize, bounds: [(f64, f64); 2]) -> f64 {
    if trajectories.is_empty() || bins == 0 {
        return 0.0;
    }
    let grid = Grid { bins, bounds };
    let sets = par::map(trajectories, |t| {
        (grid.bin_of(t.last()), traversed_bins(t, bins, bounds))
    });
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (end, set) in sets {
        groups.entry(end).or_default().extend(set);
    }
    let covered: usize = groups.values().map(BTreeSet::len).sum();
    covered as f64 / (bins * bins) as f64
}

/// Mean over rows of the per-row root mean square reconstruction error,
/// in the data's own units.
pub fn reconstruction_rmse(model: &LatentModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let per_row = par::try_map(&idx, |&i| {
        let x = data.row(i);
        let r = model.round_trip(x)?;
        let mse = x
            .iter()
            .zip(&r)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / x.len() as f64;
        Ok::<_, Error>(mse.sqrt())
    })?;
    Ok(per_row.iter().sum::<f64>() / per_row.len() as f64)
}

pub fn repertoire_size(container: &Container) -> usize {
    container.len()
}
