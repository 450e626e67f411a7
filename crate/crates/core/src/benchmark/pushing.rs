//! Quasi-static planar pushing with an ellipsoidal limit surface.
//!
//! A point pusher moving at constant velocity touches one face of a box that
//! slides on a plane with uniform support pressure. The box twist follows from
//! the motion cone of the contact: inside the cone the contact sticks and the
//! contact point moves with the pusher; outside it the contact slips and the
//! twist is the one produced by the friction-cone edge, scaled so the normal
//! velocities of pusher and box agree.

use serde::{Deserialize, Serialize};

use super::BenchError;

/// `m_max / f_max` of a uniformly loaded square of side `side`: the mean
/// distance of its area from the centre.
pub fn square_limit_surface_c(side: f64) -> f64 {
    side * (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln()) / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushState {
    /// Box centre in the plane (m).
    pub x: f64,
    pub y: f64,
    /// Box heading (rad).
    pub theta: f64,
    /// Pusher contact point in the world (m).
    pub pusher: [f64; 2],
    /// Pusher velocity in the world (m/s).
    pub pusher_velocity: [f64; 2],
    /// Half the side of the pushed face (m); the face lies at body-frame
    /// `x = −half_width`.
    pub half_width: f64,
    /// Limit-surface ratio `m_max / f_max` (m).
    pub c: f64,
    pub support_friction: f64,
    pub contact_friction: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactMode {
    Sticking,
    SlidingLeft,
    SlidingRight,
}

/// Body-frame twist `(v_x, v_y, ω)` and the contact mode that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    pub v: [f64; 2],
    pub omega: f64,
    pub mode: ContactMode,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl PushState {
    /// Contact point and pusher velocity in the body frame.
    pub fn contact_in_body(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.theta.sin_cos();
        let dx = self.pusher[0] - self.x;
        let dy = self.pusher[1] - self.y;
        let y_c = -s * dx + c * dy;
        let [vx, vy] = self.pusher_velocity;
        let v = [c * vx + s * vy, -s * vx + c * vy];
        ([-self.half_width, y_c], v)
    }

    /// Twist caused by a contact force `f` (body frame) at `r` under the
    /// ellipsoidal limit surface.
    fn force_twist(&self, r: [f64; 2], f: [f64; 2]) -> [f64; 3] {
        let m = cross(r, f);
        [f[0], f[1], m / (self.c * self.c)]
    }

    fn point_velocity(r: [f64; 2], tw: [f64; 3]) -> [f64; 2] {
        [tw[0] - tw[2] * r[1], tw[1] + tw[2] * r[0]]
    }

    /// Body-frame twist for the current configuration.
    pub fn twist(&self) -> Result<Twist, BenchError> {
        let (r, vp) = self.contact_in_body();
        let [x_c, y_c] = r;
        if y_c.abs() > self.half_width || vp[0] <= 0.0 {
            return Err(BenchError::ContactLost { time: self.time });
        }
        let c2 = self.c * self.c;
        let mu = self.contact_friction;
        // friction-cone edges about the inward face normal +x
        let left = Self::point_velocity(r, self.force_twist(r, [1.0, mu]));
        let right = Self::point_velocity(r, self.force_twist(r, [1.0, -mu]));
        let (lo, hi) = if cross(right, left) >= 0.0 {
            (right, left)
        } else {
            (left, right)
        };
        if cross(lo, vp) >= -1e-15 && cross(vp, hi) >= -1e-15 {
            let den = c2 + x_c * x_c + y_c * y_c;
            let vx = ((c2 + x_c * x_c) * vp[0] + x_c * y_c * vp[1]) / den;
            let vy = (x_c * y_c * vp[0] + (c2 + y_c * y_c) * vp[1]) / den;
            let omega = (x_c * vy - y_c * vx) / c2;
            return Ok(Twist {
                v: [vx, vy],
                omega,
                mode: ContactMode::Sticking,
            });
        }
        // sliding: the boundary force nearest the pusher velocity
        let (f, mode) = if cross(vp, lo) > 0.0 {
            if lo == left {
                ([1.0, mu], ContactMode::SlidingLeft)
            } else {
                ([1.0, -mu], ContactMode::SlidingRight)
            }
        } else if hi == left {
            ([1.0, mu], ContactMode::SlidingLeft)
        } else {
            ([1.0, -mu], ContactMode::SlidingRight)
        };
        let tw = self.force_twist(r, f);
        let vc = Self::point_velocity(r, tw);
        let k = vp[0] / vc[0];
        Ok(Twist {
            v: [tw[0] * k, tw[1] * k],
            omega: tw[2] * k,
            mode,
        })
    }
}

/// Advances the pushing model by `dt` with a midpoint step.
pub fn oracle_push_step(state: &PushState, dt: f64) -> Result<PushState, BenchError> {
    let advance = |s: &PushState, tw: &Twist, h: f64| {
        let (sn, cs) = s.theta.sin_cos();
        let vx = cs * tw.v[0] - sn * tw.v[1];
        let vy = sn * tw.v[0] + cs * tw.v[1];
        PushState {
            x: s.x + vx * h,
            y: s.y + vy * h,
            theta: s.theta + tw.omega * h,
            pusher: [
                s.pusher[0] + s.pusher_velocity[0] * h,
                s.pusher[1] + s.pusher_velocity[1] * h,
            ],
            time: s.time + h,
            ..*s
        }
    };
    let k1 = state.twist()?;
    let mid = advance(state, &k1, dt / 2.0);
    let k2 = mid.twist()?;
    let (sn, cs) = (mid.theta.sin(), mid.theta.cos());
    let vx = cs * k2.v[0] - sn * k2.v[1];
    let vy = sn * k2.v[0] + cs * k2.v[1];
    Ok(PushState {
        x: state.x + vx * dt,
        y: state.y + vy * dt,
        theta: state.theta + k2.omega * dt,
        pusher: [
            state.pusher[0] + state.pusher_velocity[0] * dt,
            state.pusher[1] + state.pusher_velocity[1] * dt,
        ],
        time: state.time + dt,
        ..*state
    })
}

/// Reference trajectory sampled at `sample_dt` intervals for `samples` samples
/// (the first at `sample_dt`), integrated with steps of at most `max_dt`.
/// Stops early, returning what was reached, if contact is lost.
pub fn integrate_push(
    initial: PushState,
    sample_dt: f64,
    samples: usize,
    max_dt: f64,
) -> (Vec<PushState>, Option<f64>) {
    let sub = (sample_dt / max_dt).ceil().max(1.0) as usize;
    let h = sample_dt / sub as f64;
    let mut out = Vec::with_capacity(samples);
    let mut s = initial;
    for k in 1..=samples {
        for _ in 0..sub {
            match oracle_push_step(&s, h) {
                Ok(next) => s = next,
                Err(BenchError::ContactLost { time }) => return (out, Some(time)),
                Err(_) => return (out, Some(s.time)),
            }
        }
        s.time = k as f64 * sample_dt;
        out.push(s);
    }
    (out, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(offset: f64, speed: f64) -> PushState {
        PushState {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            pusher: [-0.1, offset],
            pusher_velocity: [speed, 0.0],
            half_width: 0.1,
            c: square_limit_surface_c(0.2),
            support_friction: 0.4,
            contact_friction: 0.4,
            time: 0.0,
        }
    }

    #[test]
    fn limit_surface_ratio_of_square() {
        // mean distance of a unit square's area from its centre
        let n = 400;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = (i as f64 + 0.5) / n as f64 - 0.5;
                let y = (j as f64 + 0.5) / n as f64 - 0.5;
                sum += (x * x + y * y).sqrt();
            }
        }
        let mean = sum / (n * n) as f64;
        assert!((square_limit_surface_c(1.0) - mean).abs() < 1e-5);
    }

    #[test]
    fn centered_push_translates() {
        let (traj, lost) = integrate_push(state(0.0, 0.05), 0.01, 1000, 1e-4);
        assert!(lost.is_none());
        let last = traj.last().unwrap();
        assert!(last.theta.abs() < 1e-12);
        assert!(last.y.abs() < 1e-12);
        assert!((last.x - 0.5).abs() < 1e-9);
    }

    #[test]
    fn offset_push_turns_away_from_contact() {
        let s = state(0.025, 0.05);
        let tw = s.twist().unwrap();
        // contact above the com pushed along +x: clockwise turn
        assert!(tw.omega < 0.0);
        let mirrored = state(-0.025, 0.05).twist().unwrap();
        assert!((tw.omega + mirrored.omega).abs() < 1e-15);
    }

    #[test]
    fn twist_scales_with_pusher_speed() {
        let a = state(0.03, 0.05).twist().unwrap();
        let b = state(0.03, 0.025).twist().unwrap();
        assert!((a.omega - 2.0 * b.omega).abs() < 1e-15);
        assert!((a.v[0] - 2.0 * b.v[0]).abs() < 1e-15);
        // the displacement per unit pusher advance does not depend on speed
        let (ta, _) = integrate_push(state(0.03, 0.05), 0.01, 100, 1e-4);
        let (tb, _) = integrate_push(state(0.03, 0.025), 0.01, 200, 1e-4);
        assert!((ta[99].theta - tb[199].theta).abs() < 1e-9);
    }

    #[test]
    fn vanishing_advance_gives_vanishing_twist() {
        let s = state(0.04, 0.05);
        let mut last = f64::INFINITY;
        for dt in [1e-2, 1e-3, 1e-4, 1e-5] {
            let next = oracle_push_step(&s, dt).unwrap();
            let step = (next.x - s.x).hypot(next.y - s.y) + (next.theta - s.theta).abs();
            assert!(step < last);
            last = step;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn sticking_contact_moves_with_pusher() {
        let s = state(0.01, 0.05);
        let tw = s.twist().unwrap();
        assert_eq!(tw.mode, ContactMode::Sticking);
        let (r, vp) = s.contact_in_body();
        let vc = [tw.v[0] - tw.omega * r[1], tw.v[1] + tw.omega * r[0]];
        assert!((vc[0] - vp[0]).abs() < 1e-15 && (vc[1] - vp[1]).abs() < 1e-15);
    }

    #[test]
    fn sliding_contact_matches_normal_velocity() {
        let mut s = state(0.09, 0.05);
        s.contact_friction = 0.05;
        let tw = s.twist().unwrap();
        assert_ne!(tw.mode, ContactMode::Sticking);
        let (r, vp) = s.contact_in_body();
        let vc0 = tw.v[0] - tw.omega * r[1];
        assert!((vc0 - vp[0]).abs() < 1e-15);
    }

    #[test]
    fn losing_contact_is_reported() {
        let s = state(0.15, 0.05);
        assert!(matches!(s.twist(), Err(BenchError::ContactLost { .. })));
        let s = state(0.0, -0.05);
        assert!(matches!(s.twist(), Err(BenchError::ContactLost { .. })));
    }
}
