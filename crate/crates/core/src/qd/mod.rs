//! Quality-diversity engine: containers, selection, variation and the
//! batch loop.

mod archive;
pub mod run;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub(crate) use archive::sq_dist;
pub use archive::{Archive, NeighborIndex};
pub use run::{Container, MetricsRow, ModelUpdate, RunSettings, RunState, Selector};

use crate::error::{Error, Result};

/// One evaluated controller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u64,
    pub genotype: Vec<f64>,
    pub sensory: Vec<f64>,
    pub descriptor: Vec<f64>,
    /// Hand-coded descriptor, kept for evaluation in a common frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<[f64; 2]>,
    pub fitness: f64,
    pub curiosity: f64,
}

impl Individual {
    pub fn new(id: u64, genotype: Vec<f64>, sensory: Vec<f64>, descriptor: Vec<f64>) -> Self {
        Self {
            id,
            genotype,
            sensory,
            descriptor,
            ground_truth: None,
            fitness: 0.0,
            curiosity: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AddResult {
    Added,
    Replaced(Box<Individual>),
    Rejected,
}

impl AddResult {
    pub fn is_success(&self) -> bool {
        !matches!(self, AddResult::Rejected)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuriosityConfig {
    pub reward: f64,
    pub penalty: f64,
    pub floor: f64,
    pub offset: f64,
}

impl Default for CuriosityConfig {
    fn default() -> Self {
        Self {
            reward: 1.0,
            penalty: -0.5,
            floor: 0.0,
            offset: 1.0,
        }
    }
}

impl CuriosityConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.reward, self.penalty, self.floor, self.offset]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.offset <= 0.0 {
            return Err(Error::InvalidConfig(
                "curiosity values must be finite with a positive offset".into(),
            ));
        }
        Ok(())
    }

    pub fn weight(&self, curiosity: f64) -> f64 {
        curiosity - self.floor + self.offset
    }

    /// Curiosity after one offspring outcome, clamped at the floor.
    pub fn updated(&self, curiosity: f64, result: &AddResult) -> f64 {
        let delta = if result.is_success() {
            self.reward
        } else {
            self.penalty
        };
        (curiosity + delta).max(self.floor)
    }
}

/// Samples `n` entry indices with probability proportional to curiosity
/// weight.
pub fn select_parents<R: Rng + ?Sized>(
    entries: &[Individual],
    curiosity: &CuriosityConfig,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if entries.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let weights = entries.iter().map(|e| curiosity.weight(e.curiosity));
    let dist = WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidConfig(format!("selection weights: {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

pub fn select_parent<'a, R: Rng + ?Sized>(
    entries: &'a [Individual],
    curiosity: &CuriosityConfig,
    rng: &mut R,
) -> Result<&'a Individual> {
    let i = select_parents(entries, curiosity, 1, rng)?[0];
    Ok(&entries[i])
}

/// Uniform parent indices.
pub fn select_uniform<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(Error::EmptyArchive);
    }
    Ok((0..n).map(|_| rng.gen_range(0..len)).collect())
}

pub fn update_curiosity(parent: &mut Individual, result: &AddResult, config: &CuriosityConfig) {
    parent.curiosity = config.updated(parent.curiosity, result);
}

/// Gaussian perturbation with per-dimension standard deviation
/// `sigma_fraction * (hi - lo)`, clamped to the bounds.
pub fn mutate<R: Rng + ?Sized>(
    genotype: &[f64],
    bounds: &[(f64, f64)],
    sigma_fraction: f64,
    rng: &mut R,
) -> Vec<f64> {
    genotype
        .iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| {
            let z: f64 = StandardNormal.sample(rng);
            (x + z * sigma_fraction * (hi - lo)).clamp(lo, hi)
        })
        .collect()
}

/// Threshold giving roughly `target_capacity` cells over the bounding box
/// of `descriptors`: `(volume / target)^(1/d)`, or `l_min` when degenerate.
pub fn recompute_l<'a, I>(descriptors: I, target_capacity: usize, l_min: f64) -> f64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for d in descriptors {
        if lo.is_empty() {
            lo = d.to_vec();
            hi = d.to_vec();
            continue;
        }
        for (k, &v) in d.iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let extent: Vec<(f64, f64)> = lo.into_iter().zip(hi).collect();
    l_from_extent(&extent, target_capacity, l_min)
}

pub fn l_from_extent(extent: &[(f64, f64)], target_capacity: usize, l_min: f64) -> f64 {
    if extent.is_empty() || target_capacity == 0 {
        return l_min;
    }
    let volume: f64 = extent.iter().map(|(lo, hi)| hi - lo).product();
    let l = (volume / target_capacity as f64).powf(1.0 / extent.len() as f64);
    if l.is_finite() && l > l_min {
        l
    } else {
        l_min
    }
}
