use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of recorded time steps per trajectory.
pub const STEPS: usize = 50;
/// Length of the flattened sensory vector.
pub const SENSORY_DIM: usize = 2 * STEPS;

/// Planar positions sampled at uniform intervals over an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() != STEPS {
            return Err(Error::DimensionMismatch {
                expected: STEPS,
                got: points.len(),
            });
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory"));
        }
        Ok(Self { points })
    }

    /// Inverse of [`Trajectory::to_sensory`].
    pub fn from_sensory(sensory: &[f64]) -> Result<Self> {
        if sensory.len() != SENSORY_DIM {
            return Err(Error::DimensionMismatch {
                expected: SENSORY_DIM,
                got: sensory.len(),
            });
        }
        Self::new(sensory.chunks_exact(2).map(|p| [p[0], p[1]]).collect())
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn last(&self) -> [f64; 2] {
        self.points[STEPS - 1]
    }

    /// Row-major flattening: `x0, y0, x1, y1, ...`.
    pub fn to_sensory(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    /// Writes the trajectory as a two-column CSV (`x,y`, 50 rows).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y"])?;
        for p in &self.points {
            w.write_record([p[0].to_string(), p[1].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut points = Vec::with_capacity(STEPS);
        for rec in r.deserialize() {
            let (x, y): (f64, f64) = rec?;
            points.push([x, y]);
        }
        Self::new(points)
    }
}
