//! CVT-MAP-Elites baseline: a Voronoi grid over the raw sensory space.

mod centroids;
mod kmeans;

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use centroids::{uniform_in_box, CentroidSet};
pub use kmeans::{kmeans, KMeansReport};

use crate::descriptor::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::qd::{AddResult, Individual};
use crate::tasks::{Task, SENSORY_DIM};

/// Centroids from k-means over trajectories of a regular action grid with
/// `per_dim` values per parameter.
pub fn build_prior_centroids(
    task: &Task,
    per_dim: usize,
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<CentroidSet> {
    let genotypes = task.prior_genotypes(per_dim).ok_or_else(|| {
        Error::NotApplicable(format!(
            "a prior action grid for the {} task",
            task.kind().name()
        ))
    })?;
    let sensory = par::try_map(&genotypes, |g| task.evaluate(g).map(|t| t.to_sensory()))?;
    let data = Dataset::from_rows(SENSORY_DIM, &sensory)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(kmeans(&data, k, max_iter, seed, &mut rng)?.0)
}

/// `k` uniform samples inside `bounds`, used directly as centroids; with
/// `lloyd_iters > 0` they are refined by k-means on a second uniform sample
/// of the same size.
pub fn build_blind_centroids(
    bounds: &[(f64, f64)],
    k: usize,
    lloyd_iters: usize,
    seed: u64,
) -> Result<CentroidSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = uniform_in_box(bounds, k, &mut rng);
    if lloyd_iters == 0 {
        return CentroidSet::new(bounds.len(), data, seed);
    }
    let d = bounds.len();
    let points = Dataset::new(d, uniform_in_box(bounds, k, &mut rng))?;
    let mut centroids = CentroidSet::new(d, data, seed)?;
    for _ in 0..lloyd_iters {
        let assign = centroids.nearest_many(points.as_slice())?;
        // each centroid counts as one of its own points, so empty cells stay put
        let mut sums = centroids.as_slice().to_vec();
        let mut counts = vec![1usize; k];
        for (row, &(c, _)) in points.rows().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(row) {
                *s += v;
            }
        }
        for (c, n) in counts.iter().enumerate() {
            for s in &mut sums[c * d..(c + 1) * d] {
                *s /= *n as f64;
            }
        }
        centroids = CentroidSet::new(d, sums, seed)?;
    }
    Ok(centroids)
}

/// One elite per Voronoi cell.
#[derive(Clone, Debug)]
pub struct CvtGrid {
    centroids: Arc<CentroidSet>,
    slots: HashMap<usize, usize>,
    entries: Vec<Individual>,
}

impl CvtGrid {
    pub fn new(centroids: Arc<CentroidSet>) -> Self {
        Self {
            centroids,
            slots: HashMap::new(),
            entries: Vec::new(),
        }
    }

    pub fn centroids(&self) -> &Arc<CentroidSet> {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Individual] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Individual] {
        &mut self.entries
    }

    /// Fraction of cells holding an elite.
    pub fn coverage(&self) -> f64 {
        self.slots.len() as f64 / self.centroids.k() as f64
    }

    pub fn cell_of(&self, descriptor: &[f64]) -> Result<usize> {
        self.check(descriptor)?;
        Ok(self.centroids.nearest(descriptor).0)
    }

    fn check(&self, descriptor: &[f64]) -> Result<()> {
        if descriptor.len() != self.centroids.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.centroids.dim(),
                got: descriptor.len(),
            });
        }
        Ok(())
    }

    pub fn try_add(&mut self, candidate: Individual) -> Result<AddResult> {
        let cell = self.cell_of(&candidate.descriptor)?;
        self.try_add_at(cell, candidate)
    }

    /// Insertion with a precomputed cell index (see
    /// [`CentroidSet::nearest_many`]).
    pub fn try_add_at(&mut self, cell: usize, candidate: Individual) -> Result<AddResult> {
        self.check(&candidate.descriptor)?;
        if cell >= self.centroids.k() {
            return Err(Error::DimensionMismatch {
                expected: self.centroids.k(),
                got: cell,
            });
        }
        match self.slots.get(&cell) {
            None => {
                self.slots.insert(cell, self.entries.len());
                self.entries.push(candidate);
                Ok(AddResult::Added)
            }
            Some(&i) if candidate.fitness > self.entries[i].fitness => {
                let old = std::mem::replace(&mut self.entries[i], candidate);
                Ok(AddResult::Replaced(Box::new(old)))
            }
            Some(_) => Ok(AddResult::Rejected),
        }
    }
}
