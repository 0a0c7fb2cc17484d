//! Synchronized trapezoidal time law along a waypoint path.
//!
//! All joints move together along each straight connection, so the law is a
//! scalar profile over joint-space arc length. Per connection the speed and
//! acceleration caps are the tightest over joints of their limit divided by the
//! direction component. Waypoints where some joint with a non-negligible share
//! of the motion reverses are passed at rest; other waypoints at the lower of
//! the adjacent speed caps.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kinematics::{Configuration, RobotModel};
use crate::path::{Path, PathPoint};

/// Share of a unit direction below which a joint's sign change is not
/// treated as a reversal.
pub const REVERSAL_TOLERANCE: f64 = 0.02;

/// Whether some joint moving by a non-negligible share of `a` and of `b`
/// changes direction between them.
pub fn reverses(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return false;
    }
    a.iter().zip(b.iter()).any(|(x, y)| {
        x * y < 0.0 && x.abs() > REVERSAL_TOLERANCE * na && y.abs() > REVERSAL_TOLERANCE * nb
    })
}

#[derive(Clone, Copy, Debug)]
struct Phase {
    t0: f64,
    s0: f64,
    v0: f64,
    a: f64,
    duration: f64,
}

#[derive(Clone, Debug)]
struct Segment {
    start: Configuration,
    dir: DVector<f64>,
    length: f64,
    phases: Vec<Phase>,
    t0: f64,
    duration: f64,
}

/// One sample of a trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub q: Configuration,
    pub qdot: DVector<f64>,
    /// Scalar speed along the path, rad/s.
    pub speed: f64,
    pub point: PathPoint,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    path: Path,
    segments: Vec<Segment>,
    duration: f64,
}

fn caps(model: &RobotModel, dir: &DVector<f64>, speed_fraction: f64) -> (f64, f64) {
    let mut v = f64::INFINITY;
    let mut a = f64::INFINITY;
    for l in 0..dir.len() {
        let u = dir[l].abs();
        if u > 0.0 {
            v = v.min(speed_fraction * model.qdot_max()[l] / u);
            a = a.min(model.qddot_max()[l] / u);
        }
    }
    (v, a)
}

/// Phases covering `length` from speed `vs` to `ve` under the caps. The
/// boundary speeds must be mutually reachable.
fn profile(length: f64, vs: f64, ve: f64, vmax: f64, amax: f64) -> Vec<Phase> {
    let peak = ((2.0 * amax * length + vs * vs + ve * ve) / 2.0).sqrt().min(vmax).max(vs.max(ve));
    let d_acc = ((peak * peak - vs * vs) / (2.0 * amax)).max(0.0);
    let d_dec = ((peak * peak - ve * ve) / (2.0 * amax)).max(0.0);
    let d_cruise = (length - d_acc - d_dec).max(0.0);
    let mut out = Vec::with_capacity(3);
    let mut t = 0.0;
    let mut s = 0.0;
    let mut push = |v0: f64, a: f64, duration: f64, dist: f64| {
        if duration > 0.0 {
            out.push(Phase { t0: t, s0: s, v0, a, duration });
            t += duration;
            s += dist;
        }
    };
    push(vs, amax, (peak - vs) / amax, d_acc);
    if peak > 0.0 {
        push(peak, 0.0, d_cruise / peak, d_cruise);
    }
    push(peak, -amax, (peak - ve) / amax, d_dec);
    out
}

impl Trajectory {
    /// Time law along `path` from rest (or from `initial_speed`) to rest at the
    /// goal, with joint speeds capped at `speed_fraction × q̇_max`.
    pub fn parametrize(model: &RobotModel, path: &Path, speed_fraction: f64, initial_speed: f64) -> Result<Self> {
        if !(speed_fraction > 0.0 && speed_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!("speed fraction {speed_fraction} outside (0, 1]")));
        }
        model.check_dim(path.start())?;
        let wps = path.waypoints();
        let m = path.connection_count();
        let mut dirs = Vec::with_capacity(m);
        let mut lens = Vec::with_capacity(m);
        let mut vcap = Vec::with_capacity(m);
        let mut acap = Vec::with_capacity(m);
        for w in wps.windows(2) {
            let d = &w[1] - &w[0];
            let len = d.norm();
            if len == 0.0 {
                return Err(Error::ZeroLengthConnection);
            }
            let dir = d / len;
            let (v, a) = caps(model, &dir, speed_fraction);
            dirs.push(dir);
            lens.push(len);
            vcap.push(v);
            acap.push(a);
        }
        // Speed limits at the m + 1 waypoints.
        let mut node_v = vec![0.0; m + 1];
        node_v[0] = initial_speed.max(0.0).min(vcap[0]);
        for k in 1..m {
            node_v[k] = if reverses(&dirs[k - 1], &dirs[k]) { 0.0 } else { vcap[k - 1].min(vcap[k]) };
        }
        for k in 0..m {
            node_v[k + 1] = node_v[k + 1].min((node_v[k] * node_v[k] + 2.0 * acap[k] * lens[k]).sqrt());
        }
        for k in (0..m).rev() {
            node_v[k] = node_v[k].min((node_v[k + 1] * node_v[k + 1] + 2.0 * acap[k] * lens[k]).sqrt());
        }
        let mut segments = Vec::with_capacity(m);
        let mut t = 0.0;
        for k in 0..m {
            let phases = profile(lens[k], node_v[k], node_v[k + 1], vcap[k], acap[k]);
            let duration = phases.last().map_or(0.0, |p| p.t0 + p.duration);
            segments.push(Segment { start: wps[k].clone(), dir: dirs[k].clone(), length: lens[k], phases, t0: t, duration });
            t += duration;
        }
        Ok(Self { path: path.clone(), segments, duration: t })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn segment_durations(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.duration).collect()
    }

    pub fn sample(&self, t: f64) -> TrajectoryState {
        let last = self.segments.len() - 1;
        let k = if t >= self.duration {
            last
        } else {
            self.segments.partition_point(|s| s.t0 + s.duration <= t).min(last)
        };
        let seg = &self.segments[k];
        if t >= self.duration {
            return TrajectoryState {
                q: self.path.goal().clone(),
                qdot: DVector::zeros(seg.dir.len()),
                speed: 0.0,
                point: PathPoint { segment: k, t: 1.0 },
            };
        }
        let tl = (t - seg.t0).max(0.0);
        let (s, v) = match seg.phases.iter().rev().find(|p| p.t0 <= tl) {
            Some(p) => {
                let dt = (tl - p.t0).min(p.duration);
                (p.s0 + p.v0 * dt + 0.5 * p.a * dt * dt, (p.v0 + p.a * dt).max(0.0))
            }
            None => (0.0, 0.0),
        };
        let s = s.clamp(0.0, seg.length);
        TrajectoryState {
            q: &seg.start + &seg.dir * s,
            qdot: &seg.dir * v,
            speed: v,
            point: PathPoint { segment: k, t: s / seg.length },
        }
    }
}

/// Convenience wrapper for [`Trajectory::parametrize`] from rest.
pub fn parametrize(model: &RobotModel, path: &Path, speed_fraction: f64) -> Result<Trajectory> {
    Trajectory::parametrize(model, path, speed_fraction, 0.0)
}
