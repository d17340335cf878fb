//! Flat square arena with a unicycle robot lapping a racetrack between two
//! points of interest, A and B.
//!
//! The track is a stadium: two straights parallel to AB, offset by the turn
//! radius on either side, joined by half circles centred on A and B. The
//! robot laps it anticlockwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kinematic step, one raw command period.
pub const STEP_S: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    /// Integrates one unicycle step under `(lin, ang)`.
    pub fn step(&mut self, lin: f64, ang: f64, dt: f64) {
        self.x += lin * self.theta.cos() * dt;
        self.y += lin * self.theta.sin() * dt;
        self.theta = wrap_angle(self.theta + ang * dt);
    }
}

/// Wraps to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    /// Half-extent of the square arena, metres.
    pub half_size: f64,
    pub point_a: [f64; 2],
    pub point_b: [f64; 2],
    pub turn_radius: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Self {
            half_size: 40.0,
            point_a: [-15.0, 0.0],
            point_b: [15.0, 0.0],
            turn_radius: 10.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ArenaError {
    #[error("point {name} at ({x}, {y}) is unreachable: the track around it leaves the arena")]
    OutsideArena { name: char, x: f64, y: f64 },
    #[error("points A and B coincide")]
    Coincident,
    #[error("turn radius {0} must be positive")]
    BadRadius(f64),
    #[error("robot left the arena at t_ms={t_ms} ({x:.2}, {y:.2})")]
    LeftArena { t_ms: u64, x: f64, y: f64 },
}

/// Where the robot stands relative to the nearest point of the track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackError {
    /// Direction of travel at the nearest track point.
    pub heading: f64,
    /// Signed curvature there, positive turning left.
    pub curvature: f64,
    /// Signed distance of the robot to the left of the track.
    pub offset: f64,
}

impl Arena {
    pub fn validate(&self) -> Result<(), ArenaError> {
        if !(self.turn_radius > 0.0 && self.turn_radius.is_finite()) {
            return Err(ArenaError::BadRadius(self.turn_radius));
        }
        for (name, p) in [('A', self.point_a), ('B', self.point_b)] {
            if !p.iter().all(|c| c.is_finite() && c.abs() + self.turn_radius <= self.half_size) {
                return Err(ArenaError::OutsideArena { name, x: p[0], y: p[1] });
            }
        }
        if self.length() <= 0.0 {
            return Err(ArenaError::Coincident);
        }
        Ok(())
    }

    fn length(&self) -> f64 {
        (self.point_b[0] - self.point_a[0]).hypot(self.point_b[1] - self.point_a[1])
    }

    /// Unit vector A→B and its left normal.
    fn frame(&self) -> ([f64; 2], [f64; 2]) {
        let l = self.length();
        let u = [
            (self.point_b[0] - self.point_a[0]) / l,
            (self.point_b[1] - self.point_a[1]) / l,
        ];
        (u, [-u[1], u[0]])
    }

    /// Start of the outbound straight, facing B.
    pub fn start_pose(&self) -> Pose {
        let (u, n) = self.frame();
        let r = self.turn_radius;
        Pose {
            x: self.point_a[0] - n[0] * r,
            y: self.point_a[1] - n[1] * r,
            theta: u[1].atan2(u[0]),
        }
    }

    pub fn contains(&self, pose: &Pose) -> bool {
        pose.x.abs() <= self.half_size && pose.y.abs() <= self.half_size
    }

    pub fn track_error(&self, pose: &Pose) -> TrackError {
        let (u, n) = self.frame();
        let (dx, dy) = (pose.x - self.point_a[0], pose.y - self.point_a[1]);
        let xi = dx * u[0] + dy * u[1];
        let eta = dx * n[0] + dy * n[1];
        let base = u[1].atan2(u[0]);
        let (l, r) = (self.length(), self.turn_radius);
        let (local_heading, curvature, offset) = if (0.0..=l).contains(&xi) {
            if eta < 0.0 {
                (0.0, 0.0, eta + r)
            } else {
                (std::f64::consts::PI, 0.0, r - eta)
            }
        } else {
            let cx = if xi > l { xi - l } else { xi };
            let dist = cx.hypot(eta);
            (eta.atan2(cx) + std::f64::consts::FRAC_PI_2, 1.0 / r, r - dist)
        };
        TrackError {
            heading: wrap_angle(base + local_heading),
            curvature,
            offset,
        }
    }
}
