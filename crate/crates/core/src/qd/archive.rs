use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AddResult, Individual};
use crate::error::{Error, Result};

/// Nearest-neighbour search strategy. Both return the same neighbour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborIndex {
    #[default]
    Linear,
    /// Uniform grid with cell side `l`; used for 2-D descriptors only.
    Grid,
}

/// Unstructured archive: a candidate closer than `l` to its nearest entry
/// has to beat that entry on fitness.
#[derive(Clone, Debug)]
pub struct Archive {
    entries: Vec<Individual>,
    l: f64,
    dim: Option<usize>,
    index: NeighborIndex,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl Archive {
    pub fn new(l: f64, index: NeighborIndex) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "archive distance threshold must be positive, got {l}"
            )));
        }
        Ok(Self {
            entries: Vec::new(),
            l,
            dim: None,
            index,
            grid: HashMap::new(),
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn index(&self) -> NeighborIndex {
        self.index
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

    pub fn into_entries(self) -> Vec<Individual> {
        self.entries
    }

    fn uses_grid(&self) -> bool {
        self.index == NeighborIndex::Grid && self.dim == Some(2)
    }

    fn cell(&self, d: &[f64]) -> (i64, i64) {
        (
            (d[0] / self.l).floor() as i64,
            (d[1] / self.l).floor() as i64,
        )
    }

    /// Index and distance of the nearest entry. Ties go to the earliest entry.
    pub fn nearest(&self, descriptor: &[f64]) -> Option<(usize, f64)> {
        if self.uses_grid() {
            self.nearest_within_l(descriptor)
        } else {
            self.nearest_linear(descriptor)
        }
    }

    fn nearest_linear(&self, descriptor: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let d2 = sq_dist(&e.descriptor, descriptor);
            if best.map_or(true, |(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    // Only neighbours closer than `l` matter to `try_add`, and those all sit
    // in the 3x3 block of cells around the candidate.
    fn nearest_in_block(&self, descriptor: &[f64]) -> Option<(usize, f64)> {
        let (cx, cy) = self.cell(descriptor);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(ids) = self.grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &i in ids {
                    let d2 = sq_dist(&self.entries[i].descriptor, descriptor);
                    let better = match best {
                        None => true,
                        Some((bi, b)) => d2 < b || (d2 == b && i < bi),
                    };
                    if better {
                        best = Some((i, d2));
                    }
                }
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
            .filter(|&(_, d)| d < self.l)
    }

    fn nearest_within_l(&self, descriptor: &[f64]) -> Option<(usize, f64)> {
        self.nearest_in_block(descriptor)
            .or_else(|| self.nearest_linear(descriptor))
    }

    fn crowds_others(&self, descriptor: &[f64], except: usize) -> bool {
        let close = |i: usize| {
            i != except && sq_dist(&self.entries[i].descriptor, descriptor).sqrt() < self.l
        };
        if !self.uses_grid() {
            return (0..self.entries.len()).any(close);
        }
        let (cx, cy) = self.cell(descriptor);
        (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                self.grid
                    .get(&(cx + dx, cy + dy))
                    .is_some_and(|ids| ids.iter().any(|&i| close(i)))
            })
        })
    }

    fn check_dim(&self, descriptor: &[f64]) -> Result<()> {
        match self.dim {
            Some(d) if d != descriptor.len() => Err(Error::DimensionMismatch {
                expected: d,
                got: descriptor.len(),
            }),
            _ if descriptor.iter().any(|v| !v.is_finite()) => Err(Error::NonFinite("descriptor")),
            _ => Ok(()),
        }
    }

    /// Closest entry within `l`, found without a full scan when the grid is on.
    fn competitor(&self, descriptor: &[f64]) -> Option<usize> {
        let hit = if self.uses_grid() {
            self.nearest_in_block(descriptor)
        } else {
            self.nearest_linear(descriptor).filter(|&(_, d)| d < self.l)
        };
        hit.map(|(i, _)| i)
    }

    /// Inserts `candidate` if its nearest neighbour is at least `l` away;
    /// otherwise it replaces that neighbour only on strictly higher fitness,
    /// and only if no other entry is within `l` of it.
    pub fn try_add(&mut self, candidate: Individual) -> Result<AddResult> {
        self.check_dim(&candidate.descriptor)?;
        if self.dim.is_none() {
            self.dim = Some(candidate.descriptor.len());
        }
        match self.competitor(&candidate.descriptor) {
            None => {
                let i = self.entries.len();
                if self.uses_grid() {
                    let c = self.cell(&candidate.descriptor);
                    self.grid.entry(c).or_default().push(i);
                }
                self.entries.push(candidate);
                Ok(AddResult::Added)
            }
            Some(i)
                if candidate.fitness > self.entries[i].fitness
                    && !self.crowds_others(&candidate.descriptor, i) =>
            {
                if self.uses_grid() {
                    let old = self.cell(&self.entries[i].descriptor);
                    if let Some(ids) = self.grid.get_mut(&old) {
                        ids.retain(|&j| j != i);
                    }
                    let c = self.cell(&candidate.descriptor);
                    let ids = self.grid.entry(c).or_default();
                    let pos = ids.partition_point(|&j| j < i);
                    ids.insert(pos, i);
                }
                let old = std::mem::replace(&mut self.entries[i], candidate);
                Ok(AddResult::Replaced(Box::new(old)))
            }
            Some(_) => Ok(AddResult::Rejected),
        }
    }

    /// Re-inserts every entry, in stored order, into a fresh archive with
    /// threshold `l`. Entries must already carry their new descriptors.
    pub fn rebuild(self, l: f64) -> Result<Self> {
        let mut fresh = Archive::new(l, self.index)?;
        for e in self.entries {
            fresh.try_add(e)?;
        }
        Ok(fresh)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(id: u64, d: &[f64]) -> Individual {
        Individual::new(id, vec![0.0], vec![0.0; 100], d.to_vec())
    }

    #[test]
    fn add_compete_reject() {
        for index in [NeighborIndex::Linear, NeighborIndex::Grid] {
            let mut a = Archive::new(1.0, index).unwrap();
            assert_eq!(a.try_add(ind(0, &[0.0, 0.0])).unwrap(), AddResult::Added);
            assert_eq!(a.try_add(ind(1, &[0.5, 0.0])).unwrap(), AddResult::Rejected);
            assert_eq!(a.try_add(ind(2, &[2.0, 0.0])).unwrap(), AddResult::Added);
            // exactly l away counts as far enough
            assert_eq!(a.try_add(ind(3, &[0.0, 1.0])).unwrap(), AddResult::Added);
            let mut fitter = ind(4, &[0.1, -0.1]);
            fitter.fitness = 1.0;
            match a.try_add(fitter).unwrap() {
                AddResult::Replaced(old) => assert_eq!(old.id, 0),
                r => panic!("{r:?}"),
            }
            assert_eq!(a.len(), 3);
            assert_eq!(a.entries()[0].id, 4);
        }
    }

    #[test]
    fn fitter_candidate_cannot_crowd_a_third_entry() {
        for index in [NeighborIndex::Linear, NeighborIndex::Grid] {
            let mut a = Archive::new(1.0, index).unwrap();
            a.try_add(ind(0, &[0.0, 0.0])).unwrap();
            a.try_add(ind(1, &[1.5, 0.0])).unwrap();
            let mut fit = ind(2, &[0.6, 0.0]);
            fit.fitness = 1.0;
            assert_eq!(a.try_add(fit).unwrap(), AddResult::Rejected);
            let mut fit = ind(3, &[-0.4, 0.0]);
            fit.fitness = 1.0;
            assert!(matches!(a.try_add(fit).unwrap(), AddResult::Replaced(_)));
            assert_eq!(a.entries()[0].id, 3);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut a = Archive::new(1.0, NeighborIndex::Linear).unwrap();
        a.try_add(ind(0, &[0.0, 0.0])).unwrap();
        assert!(matches!(
            a.try_add(ind(1, &[0.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
        assert!(a.try_add(ind(1, &[f64::NAN, 0.0])).is_err());
    }

    #[test]
    fn rebuild_merges_identical_descriptors() {
        let mut a = Archive::new(0.1, NeighborIndex::Linear).unwrap();
        a.try_add(ind(0, &[0.0, 0.0])).unwrap();
        a.try_add(ind(1, &[1.0, 0.0])).unwrap();
        for e in a.entries_mut() {
            e.descriptor = vec![3.0, 3.0];
        }
        let b = a.rebuild(0.1).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.entries()[0].id, 0);
    }

    #[test]
    fn rejects_bad_threshold() {
        assert!(Archive::new(0.0, NeighborIndex::Linear).is_err());
        assert!(Archive::new(f64::NAN, NeighborIndex::Grid).is_err());
    }
}
