//! Four-joint planar arm pushing a puck around a walled square arena.
//!
//! The arm interpolates linearly from an initial to a final joint
//! configuration. Only the end-effector point interacts with the puck: when
//! it enters the puck disc, the puck is moved out of penetration and takes
//! the effector's velocity. The puck then coasts under constant friction
//! deceleration and reflects off the walls.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::trajectory::{Trajectory, STEPS};
use crate::error::{Error, Result};

pub const JOINTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaConfig {
    /// Side of the square arena `[0, arena_size]^2`.
    pub arena_size: f64,
    pub base: [f64; 2],
    /// Direction of the first link when joint 0 is at zero.
    pub base_orientation: f64,
    pub link_lengths: [f64; JOINTS],
    pub joint_min: f64,
    pub joint_max: f64,
    pub puck_radius: f64,
    pub puck_start: [f64; 2],
    /// Friction deceleration in m/s^2.
    pub friction: f64,
    pub wall_restitution: f64,
    /// Micro-step length in seconds.
    pub dt: f64,
    /// Micro-steps spent moving from the initial to the final configuration.
    pub motion_steps: usize,
    /// Micro-steps in the whole episode.
    pub total_steps: usize,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            arena_size: 1.0,
            base: [0.5, -0.05],
            base_orientation: FRAC_PI_2,
            link_lengths: [0.2; JOINTS],
            joint_min: -FRAC_PI_2,
            joint_max: FRAC_PI_2,
            puck_radius: 0.03,
            puck_start: [0.5, 0.35],
            friction: 0.25,
            wall_restitution: 0.9,
            dt: 0.004,
            motion_steps: 250,
            total_steps: 500,
        }
    }
}

/// Planar puck state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Puck {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
}

impl Puck {
    pub fn speed(&self) -> f64 {
        self.vel[0].hypot(self.vel[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Push,
    /// Reflection off a wall normal to the x axis.
    WallX,
    /// Reflection off a wall normal to the y axis.
    WallY,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PuckEvent {
    pub step: usize,
    pub kind: EventKind,
    pub vel_before: [f64; 2],
    pub vel_after: [f64; 2],
}

/// Full record of one episode.
#[derive(Clone, Debug)]
pub struct AirHockeyTrace {
    pub trajectory: Trajectory,
    pub events: Vec<PuckEvent>,
    /// Puck speed after every micro-step (index 0 is the initial state).
    pub speeds: Vec<f64>,
    /// Puck position after every micro-step.
    pub positions: Vec<[f64; 2]>,
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("airhockey: {m}")));
        if !(self.arena_size > 0.0) {
            return bad("arena_size must be positive");
        }
        let r = self.puck_radius;
        if !(r > 0.0 && 2.0 * r < self.arena_size) {
            return bad("puck_radius must be positive and fit in the arena");
        }
        let inside = |v: f64| v > r && v < self.arena_size - r;
        if !(inside(self.puck_start[0]) && inside(self.puck_start[1])) {
            return bad("puck start must lie strictly inside the arena");
        }
        let reach: f64 = self.link_lengths.iter().sum();
        let d = (self.puck_start[0] - self.base[0]).hypot(self.puck_start[1] - self.base[1]);
        if reach < d {
            return bad("puck start is out of reach of the arm");
        }
        if !(self.joint_min <= self.joint_max) {
            return bad("joint_min must not exceed joint_max");
        }
        if !(self.friction >= 0.0) {
            return bad("friction must be non-negative");
        }
        if !(self.wall_restitution >= 0.0 && self.wall_restitution <= 1.0) {
            return bad("wall_restitution must lie in [0, 1]");
        }
        if !(self.dt > 0.0) || self.motion_steps == 0 || self.total_steps < self.motion_steps {
            return bad("need dt > 0 and 0 < motion_steps <= total_steps");
        }
        Ok(())
    }

    /// Genotype bounds: 4 initial joint angles followed by 4 final ones.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(self.joint_min, self.joint_max); 2 * JOINTS]
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Base followed by the end of each link, in arena coordinates.
    pub fn forward_kinematics(&self, joints: &[f64; JOINTS]) -> [[f64; 2]; JOINTS + 1] {
        let mut pts = [self.base; JOINTS + 1];
        let mut angle = self.base_orientation;
        for i in 0..JOINTS {
            angle += joints[i];
            let prev = pts[i];
            pts[i + 1] = [
                prev[0] + self.link_lengths[i] * angle.cos(),
                prev[1] + self.link_lengths[i] * angle.sin(),
            ];
        }
        pts
    }

    fn effector(&self, joints: &[f64; JOINTS]) -> [f64; 2] {
        self.forward_kinematics(joints)[JOINTS]
    }

    /// Micro-step index at which sample `k` is recorded.
    fn sample_step(&self, k: usize) -> usize {
        let n = STEPS - 1;
        (k * self.total_steps + n / 2) / n
    }

    pub fn simulate(&self, genotype: &[f64]) -> Result<Trajectory> {
        Ok(self.simulate_traced(genotype)?.trajectory)
    }

    pub fn simulate_traced(&self, genotype: &[f64]) -> Result<AirHockeyTrace> {
        super::check_bounds(genotype, &self.bounds())?;
        let mut q0 = [0.0; JOINTS];
        let mut q1 = [0.0; JOINTS];
        q0.copy_from_slice(&genotype[..JOINTS]);
        q1.copy_from_slice(&genotype[JOINTS..]);

        let mut puck = Puck {
            pos: self.puck_start,
            vel: [0.0, 0.0],
        };
        let mut effector = self.effector(&q0);
        let mut events = Vec::new();
        let mut speeds = Vec::with_capacity(self.total_steps + 1);
        let mut positions = Vec::with_capacity(self.total_steps + 1);
        let mut samples = Vec::with_capacity(STEPS);
        let mut next_sample = 0;
        speeds.push(0.0);
        positions.push(puck.pos);
        while next_sample < STEPS && self.sample_step(next_sample) == 0 {
            samples.push(puck.pos);
            next_sample += 1;
        }

        for step in 1..=self.total_steps {
            if step <= self.motion_steps {
                let s = step as f64 / self.motion_steps as f64;
                let mut q = [0.0; JOINTS];
                for j in 0..JOINTS {
                    q[j] = q0[j] + s * (q1[j] - q0[j]);
                }
                let next = self.effector(&q);
                let vel = [
                    (next[0] - effector[0]) / self.dt,
                    (next[1] - effector[1]) / self.dt,
                ];
                effector = next;
                self.resolve_contact(&mut puck, effector, vel, step, &mut events);
            }
            self.advance_puck(&mut puck, self.dt, step, &mut events);
            speeds.push(puck.speed());
            positions.push(puck.pos);
            while next_sample < STEPS && self.sample_step(next_sample) == step {
                samples.push(puck.pos);
                next_sample += 1;
            }
        }

        Ok(AirHockeyTrace {
            trajectory: Trajectory::new(samples)?,
            events,
            speeds,
            positions,
        })
    }

    fn resolve_contact(
        &self,
        puck: &mut Puck,
        effector: [f64; 2],
        effector_vel: [f64; 2],
        step: usize,
        events: &mut Vec<PuckEvent>,
    ) {
        let dx = puck.pos[0] - effector[0];
        let dy = puck.pos[1] - effector[1];
        let d = dx.hypot(dy);
        let r = self.puck_radius;
        if d >= r {
            return;
        }
        let dir = if d > 0.0 {
            [dx / d, dy / d]
        } else {
            let sp = effector_vel[0].hypot(effector_vel[1]);
            if sp > 0.0 {
                [effector_vel[0] / sp, effector_vel[1] / sp]
            } else {
                [0.0, 1.0]
            }
        };
        let before = puck.vel;
        puck.pos = [effector[0] + r * dir[0], effector[1] + r * dir[1]];
        puck.vel = effector_vel;
        events.push(PuckEvent {
            step,
            kind: EventKind::Push,
            vel_before: before,
            vel_after: puck.vel,
        });
        self.resolve_walls(puck, step, events);
    }

    /// One micro-step of coasting: friction, displacement, wall reflections.
    pub fn advance_puck(&self, puck: &mut Puck, dt: f64, step: usize, events: &mut Vec<PuckEvent>) {
        let speed = puck.speed();
        if speed > 0.0 {
            let reduced = (speed - self.friction * dt).max(0.0);
            let scale = reduced / speed;
            puck.vel = [puck.vel[0] * scale, puck.vel[1] * scale];
        }
        puck.pos[0] += puck.vel[0] * dt;
        puck.pos[1] += puck.vel[1] * dt;
        self.resolve_walls(puck, step, events);
    }

    // x walls first, then y walls, so corner hits resolve deterministically.
    fn resolve_walls(&self, puck: &mut Puck, step: usize, events: &mut Vec<PuckEvent>) {
        let lo = self.puck_radius;
        let hi = self.arena_size - self.puck_radius;
        let e = self.wall_restitution;
        for (axis, kind) in [(0, EventKind::WallX), (1, EventKind::WallY)] {
            let p = puck.pos[axis];
            let reflected = if p < lo {
                Some(lo + e * (lo - p))
            } else if p > hi {
                Some(hi - e * (p - hi))
            } else {
                None
            };
            if let Some(np) = reflected {
                let before = puck.vel;
                puck.pos[axis] = np.clamp(lo, hi);
                // only reverse velocity heading into the wall
                let into_wall =
                    (p < lo && puck.vel[axis] < 0.0) || (p > hi && puck.vel[axis] > 0.0);
                if into_wall {
                    puck.vel[axis] *= -e;
                }
                events.push(PuckEvent {
                    step,
                    kind,
                    vel_before: before,
                    vel_after: puck.vel,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm_frame() -> ArenaConfig {
        ArenaConfig {
            base_orientation: 0.0,
            ..ArenaConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        ArenaConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_pose_is_straight() {
        let cfg = arm_frame();
        let p = cfg.forward_kinematics(&[0.0; 4]);
        assert!((p[4][0] - (cfg.base[0] + 0.8)).abs() < 1e-12);
        assert!((p[4][1] - cfg.base[1]).abs() < 1e-12);
    }

    #[test]
    fn first_joint_rotates_whole_arm() {
        let cfg = arm_frame();
        let p = cfg.forward_kinematics(&[FRAC_PI_2, 0.0, 0.0, 0.0]);
        assert!((p[4][0] - cfg.base[0]).abs() < 1e-12);
        assert!((p[4][1] - (cfg.base[1] + 0.8)).abs() < 1e-12);
    }

    #[test]
    fn no_motion_leaves_puck_in_place() {
        let cfg = ArenaConfig::default();
        let g = [0.3, -0.2, 0.5, 1.0, 0.3, -0.2, 0.5, 1.0];
        let t = cfg.simulate(&g).unwrap();
        assert!(t.points().iter().all(|p| *p == cfg.puck_start));
    }

    #[test]
    fn sweep_far_from_puck_never_touches_it() {
        let cfg = ArenaConfig::default();
        // arm folded to the right side of the arena, moving within that side
        let g = [-1.4, 0.2, 0.2, 0.2, -1.2, 0.0, 0.0, 0.0];
        let trace = cfg.simulate_traced(&g).unwrap();
        assert!(trace.events.is_empty());
        assert!(trace
            .trajectory
            .points()
            .iter()
            .all(|p| *p == cfg.puck_start));
    }

    /// Joint vector whose effector lies on the puck start after a sweep of
    /// joint 0 through the middle of the motion.
    fn sweep_through_puck(cfg: &ArenaConfig) -> Vec<f64> {
        let dist = |phi: f64| {
            let p = cfg.forward_kinematics(&[0.0, phi, phi, phi])[4];
            (p[0] - cfg.base[0]).hypot(p[1] - cfg.base[1])
        };
        let target = (cfg.puck_start[0] - cfg.base[0]).hypot(cfg.puck_start[1] - cfg.base[1]);
        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if dist(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let phi = 0.5 * (lo + hi);
        let p = cfg.forward_kinematics(&[0.0, phi, phi, phi])[4];
        let offset = (p[1] - cfg.base[1]).atan2(p[0] - cfg.base[0]) - cfg.base_orientation;
        let mid = -offset;
        vec![mid - 0.1, phi, phi, phi, mid + 0.1, phi, phi, phi]
    }

    #[test]
    fn sweeping_through_puck_moves_it() {
        let cfg = ArenaConfig::default();
        // straight arm passes at 0.8 from the base, well beyond the puck
        let trace = cfg
            .simulate_traced(&[-0.6, 0.0, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0])
            .unwrap();
        assert!(trace.events.iter().all(|e| e.kind != EventKind::Push));

        let g = sweep_through_puck(&cfg);
        let trace = cfg.simulate_traced(&g).unwrap();
        assert!(trace.events.iter().any(|e| e.kind == EventKind::Push));
        assert_ne!(trace.trajectory.last(), cfg.puck_start);
    }

    #[test]
    fn puck_stays_inside_and_slows_between_contacts() {
        let cfg = ArenaConfig::default();
        let trace = cfg.simulate_traced(&sweep_through_puck(&cfg)).unwrap();
        let r = cfg.puck_radius;
        for p in &trace.positions {
            assert!(p[0] >= r && p[0] <= 1.0 - r && p[1] >= r && p[1] <= 1.0 - r);
        }
        let pushed: std::collections::HashSet<usize> = trace
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Push)
            .map(|e| e.step)
            .collect();
        for s in 1..trace.speeds.len() {
            if !pushed.contains(&s) {
                assert!(trace.speeds[s] <= trace.speeds[s - 1] + 1e-12, "step {s}");
            }
        }
    }

    #[test]
    fn wall_reflection_matches_formula() {
        let cfg = ArenaConfig {
            friction: 0.0,
            ..ArenaConfig::default()
        };
        let v = 1.5;
        let angle: f64 = 0.3;
        let mut puck = Puck {
            pos: [0.5, 0.5],
            vel: [v * angle.cos(), v * angle.sin()],
        };
        let mut events = Vec::new();
        for step in 0..1000 {
            cfg.advance_puck(&mut puck, cfg.dt, step, &mut events);
            if !events.is_empty() {
                break;
            }
        }
        let ev = events[0];
        assert_eq!(ev.kind, EventKind::WallX);
        let e = cfg.wall_restitution;
        assert!((ev.vel_after[0] + e * ev.vel_before[0]).abs() < 1e-15);
        assert_eq!(ev.vel_after[1], ev.vel_before[1]);
        // normal speed scaled by e, incidence angle mirrored about the normal
        let before = ev.vel_before[1].atan2(ev.vel_before[0]);
        let after = ev.vel_after[1].atan2(-ev.vel_after[0]);
        assert!((after.tan() - before.tan() / e).abs() < 1e-12);
    }

    #[test]
    fn head_on_bounce_keeps_restitution_fraction_of_speed() {
        let cfg = ArenaConfig {
            friction: 0.0,
            ..ArenaConfig::default()
        };
        let v = 2.0;
        let mut puck = Puck {
            pos: [0.5, 0.5],
            vel: [0.0, v],
        };
        let mut events = Vec::new();
        let mut step = 0;
        while events.is_empty() {
            cfg.advance_puck(&mut puck, cfg.dt, step, &mut events);
            step += 1;
        }
        assert_eq!(events[0].kind, EventKind::WallY);
        assert!((puck.speed() - cfg.wall_restitution * v).abs() < 1e-12);
        assert!(puck.vel[1] < 0.0 && puck.vel[0] == 0.0);
    }
}
