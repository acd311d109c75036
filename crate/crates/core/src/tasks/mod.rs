//! Simulated tasks producing 50-step planar trajectories from genotypes.

pub mod airhockey;
pub mod ballistic;
pub mod trajectory;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use airhockey::ArenaConfig;
pub use ballistic::BallisticConfig;
pub use trajectory::{Trajectory, SENSORY_DIM, STEPS};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Ballistic,
    Airhockey,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Ballistic => "ballistic",
            TaskKind::Airhockey => "airhockey",
        }
    }
}

/// A configured simulation environment.
#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    Ballistic(BallisticConfig),
    AirHockey(ArenaConfig),
}

impl Task {
    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Ballistic(_) => TaskKind::Ballistic,
            Task::AirHockey(_) => TaskKind::Airhockey,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Task::Ballistic(c) => c.validate(),
            Task::AirHockey(c) => c.validate(),
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Task::Ballistic(c) => c.bounds(),
            Task::AirHockey(c) => c.bounds(),
        }
    }

    pub fn evaluate(&self, genotype: &[f64]) -> Result<Trajectory> {
        match self {
            Task::Ballistic(c) => c.simulate(genotype),
            Task::AirHockey(c) => c.simulate(genotype),
        }
    }

    /// Hand-coded behavioural descriptor: the analytic first apex for the
    /// projectile, the final puck position for air hockey.
    pub fn ground_truth(&self, genotype: &[f64], traj: &Trajectory) -> Result<[f64; 2]> {
        match self {
            Task::Ballistic(c) => c.apex(genotype),
            Task::AirHockey(_) => Ok(traj.last()),
        }
    }

    /// Axis-aligned extent of the hand-coded descriptor space.
    pub fn ground_truth_bounds(&self) -> [(f64, f64); 2] {
        match self {
            Task::Ballistic(c) => {
                let e = c.apex_extent();
                [(0.0, e), (0.0, e)]
            }
            Task::AirHockey(c) => {
                let r = c.puck_radius;
                [(r, c.arena_size - r), (r, c.arena_size - r)]
            }
        }
    }

    /// Per-dimension bounds of the sensory vector implied by the task
    /// constants alone.
    pub fn sensory_bounds(&self) -> Vec<(f64, f64)> {
        let (xb, yb) = match self {
            Task::Ballistic(c) => ((0.0, c.force_max * c.duration), (0.0, c.apex_extent())),
            Task::AirHockey(c) => {
                let r = c.puck_radius;
                ((r, c.arena_size - r), (r, c.arena_size - r))
            }
        };
        (0..STEPS).flat_map(|_| [xb, yb]).collect()
    }

    pub fn sample_genotype<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds()
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
            .collect()
    }

    /// Regular grid over the action space with `per_dim` values per axis.
    /// Only the projectile task has a prior sampler.
    pub fn prior_genotypes(&self, per_dim: usize) -> Option<Vec<Vec<f64>>> {
        match self {
            Task::Ballistic(c) => {
                let lin = |lo: f64, hi: f64| -> Vec<f64> {
                    if per_dim == 1 {
                        return vec![lo];
                    }
                    (0..per_dim)
                        .map(|i| (lo + (hi - lo) * i as f64 / (per_dim - 1) as f64).min(hi))
                        .collect()
                };
                let angles = lin(c.angle_min, c.angle_max);
                let forces = lin(0.0, c.force_max);
                Some(
                    angles
                        .iter()
                        .flat_map(|&a| forces.iter().map(move |&f| vec![a, f]))
                        .collect(),
                )
            }
            Task::AirHockey(_) => None,
        }
    }
}

pub(crate) fn check_bounds(genotype: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    if genotype.len() != bounds.len() {
        return Err(Error::DimensionMismatch {
            expected: bounds.len(),
            got: genotype.len(),
        });
    }
    for (index, (&value, &(lower, upper))) in genotype.iter().zip(bounds).enumerate() {
        if !(value >= lower && value <= upper) {
            return Err(Error::OutOfBounds {
                index,
                value,
                lower,
                upper,
            });
        }
    }
    Ok(())
}
