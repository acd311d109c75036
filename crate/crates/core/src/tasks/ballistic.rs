//! Point-mass projectile launched from the origin, bouncing on flat ground.
//!
//! The motion is evaluated in closed form: each arc between ground contacts
//! is a parabola, and every contact scales the vertical speed by the
//! restitution coefficient.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::trajectory::{Trajectory, STEPS};
use crate::error::{Error, Result};

/// Vertical speeds below this are treated as resting on the ground.
const REST_SPEED: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallisticConfig {
    pub gravity: f64,
    /// Fraction of vertical speed kept after a ground contact, in (0, 1).
    pub restitution: f64,
    /// Episode length in seconds; samples are taken at `k * duration / 49`.
    pub duration: f64,
    pub force_max: f64,
    pub angle_min: f64,
    pub angle_max: f64,
}

impl Default for BallisticConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            restitution: 0.75,
            duration: 5.0,
            force_max: 10.0,
            angle_min: 0.05,
            angle_max: FRAC_PI_2,
        }
    }
}

impl BallisticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("ballistic: {m}")));
        if !(self.gravity > 0.0) {
            return bad("gravity must be positive");
        }
        if !(self.restitution > 0.0 && self.restitution < 1.0) {
            return bad("restitution must lie in (0, 1)");
        }
        if !(self.duration > 0.0) {
            return bad("duration must be positive");
        }
        if !(self.force_max >= 0.0) {
            return bad("force_max must be non-negative");
        }
        if !(self.angle_min <= self.angle_max) {
            return bad("angle_min must not exceed angle_max");
        }
        Ok(())
    }

    /// Genotype bounds: `(alpha, force)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(self.angle_min, self.angle_max), (0.0, self.force_max)]
    }

    /// Time between consecutive samples.
    pub fn sample_interval(&self) -> f64 {
        self.duration / (STEPS - 1) as f64
    }

    /// Largest apex height (and apex distance) reachable under these bounds:
    /// `F_max^2 / (2 g)`.
    pub fn apex_extent(&self) -> f64 {
        self.force_max * self.force_max / (2.0 * self.gravity)
    }

    fn launch_velocity(&self, genotype: &[f64]) -> Result<(f64, f64)> {
        super::check_bounds(genotype, &self.bounds())?;
        let (alpha, force) = (genotype[0], genotype[1]);
        Ok((force * alpha.cos(), force * alpha.sin()))
    }

    /// Height at time `t` for a launch with vertical speed `vy0`.
    fn height_at(&self, vy0: f64, t: f64) -> f64 {
        let g = self.gravity;
        let mut start = 0.0;
        let mut vy = vy0;
        while vy > REST_SPEED {
            let flight = 2.0 * vy / g;
            if t < start + flight {
                let s = t - start;
                return (vy * s - 0.5 * g * s * s).max(0.0);
            }
            start += flight;
            vy *= self.restitution;
        }
        0.0
    }

    pub fn simulate(&self, genotype: &[f64]) -> Result<Trajectory> {
        let (vx, vy) = self.launch_velocity(genotype)?;
        let dt = self.sample_interval();
        let points = (0..STEPS)
            .map(|k| {
                let t = k as f64 * dt;
                [vx * t, self.height_at(vy, t)]
            })
            .collect();
        Trajectory::new(points)
    }

    /// Analytic apex of the first arc, `(X_max, Y_max)`.
    pub fn apex(&self, genotype: &[f64]) -> Result<[f64; 2]> {
        let (vx, vy) = self.launch_velocity(genotype)?;
        let g = self.gravity;
        Ok([vx * vy / g, vy * vy / (2.0 * g)])
    }
}

/// Highest sampled point of a trajectory; the first such sample on ties.
pub fn sampled_apex(traj: &Trajectory) -> [f64; 2] {
    traj.points()
        .iter()
        .copied()
        .fold([0.0, f64::NEG_INFINITY], |best, p| {
            if p[1] > best[1] {
                p
            } else {
                best
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_force_stays_at_origin() {
        let cfg = BallisticConfig::default();
        let t = cfg.simulate(&[0.7, 0.0]).unwrap();
        assert!(t.points().iter().all(|p| *p == [0.0, 0.0]));
        assert_eq!(cfg.apex(&[0.7, 0.0]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn vertical_launch_has_no_horizontal_motion() {
        let cfg = BallisticConfig::default();
        let t = cfg.simulate(&[FRAC_PI_2, 10.0]).unwrap();
        assert!(t.points().iter().all(|p| p[0].abs() < 1e-12));
        let apex = cfg.apex(&[FRAC_PI_2, 10.0]).unwrap();
        assert!(apex[0].abs() < 1e-12);
        assert!((apex[1] - 100.0 / (2.0 * 9.81)).abs() < 1e-12);
    }

    #[test]
    fn forty_five_degree_apex() {
        let cfg = BallisticConfig::default();
        let [x, y] = cfg.apex(&[FRAC_PI_4, 10.0]).unwrap();
        assert!((x - 5.0968).abs() < 1e-4, "{x}");
        assert!((y - 2.5484).abs() < 1e-4, "{y}");
    }

    #[test]
    fn bounces_lose_height() {
        let cfg = BallisticConfig::default();
        let vy: f64 = 8.0;
        let g = cfg.gravity;
        let t1 = 2.0 * vy / g;
        // apex of the second arc
        let vy2 = vy * cfg.restitution;
        let h2 = cfg.height_at(vy, t1 + vy2 / g);
        assert!((h2 - vy2 * vy2 / (2.0 * g)).abs() < 1e-12);
        // ground contact times give zero height
        assert!(cfg.height_at(vy, t1).abs() < 1e-12);
        // far beyond the accumulation point the mass rests
        assert_eq!(cfg.height_at(vy, 1e3), 0.0);
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        let cfg = BallisticConfig::default();
        assert!(matches!(
            cfg.simulate(&[0.0, 5.0]),
            Err(Error::OutOfBounds { index: 0, .. })
        ));
        assert!(matches!(
            cfg.simulate(&[0.5, 10.5]),
            Err(Error::OutOfBounds { index: 1, .. })
        ));
        assert!(matches!(
            cfg.simulate(&[0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampled_apex_within_interpolation_bound() {
        let cfg = BallisticConfig::default();
        let dt = cfg.sample_interval();
        let bound = cfg.gravity * dt * dt / 8.0;
        for &(a, f) in &[(0.3, 4.0), (1.2, 9.5), (0.05, 10.0), (1.5, 1.0)] {
            let t = cfg.simulate(&[a, f]).unwrap();
            let exact = cfg.apex(&[a, f]).unwrap();
            let s = sampled_apex(&t);
            assert!(s[1] <= exact[1] + 1e-12);
            assert!(exact[1] - s[1] <= bound + 1e-12);
        }
    }
}
