//! Scene description, the scripted mannequin, distance queries and collision
//! checking of configurations and joint-space connections.

use std::cmp::Ordering;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Configuration, RobotModel};

/// Default joint-space resolution for connection checks, rad.
pub const DEFAULT_CHECK_STEP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

/// Snapshot of the tracked human points at time `t`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct HumanState {
    pub t: f64,
    pub keypoints: Vec<Keypoint>,
}

impl HumanState {
    pub fn absent(t: f64) -> Self {
        Self { t, keypoints: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    pub fn new(t: f64, keypoints: Vec<Keypoint>) -> Result<Self> {
        let finite = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
        if keypoints.iter().any(|k| !finite(&k.position) || !finite(&k.velocity)) {
            return Err(Error::InvalidScript("keypoints must be finite".into()));
        }
        Ok(Self { t, keypoints })
    }

    /// Static keypoints, zero velocity.
    pub fn stationary(t: f64, positions: &[Vector3<f64>]) -> Self {
        Self {
            t,
            keypoints: positions
                .iter()
                .map(|&position| Keypoint { position, velocity: Vector3::zeros() })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub p: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Track {
    #[serde(default)]
    pub name: String,
    pub points: Vec<TrackPoint>,
}

impl Track {
    fn sample(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if t <= first.t {
            return (Vector3::from(first.p), Vector3::zeros());
        }
        if t >= last.t {
            return (Vector3::from(last.p), Vector3::zeros());
        }
        // First waypoint strictly after t.
        let hi = pts.partition_point(|p| p.t <= t);
        let (a, b) = (pts[hi - 1], pts[hi]);
        let (pa, pb) = (Vector3::from(a.p), Vector3::from(b.p));
        let dt = b.t - a.t;
        let s = (t - a.t) / dt;
        (pa + (pb - pa) * s, (pb - pa) / dt)
    }
}

/// Piecewise-linear keypoint schedules with bounded uniform position noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanScript {
    pub tracks: Vec<Track>,
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    /// Half-range of a per-seed shift applied to the whole schedule, s.
    #[serde(default)]
    pub time_jitter: f64,
}

impl HumanScript {
    pub fn empty() -> Self {
        Self { tracks: Vec::new(), noise_amplitude: 0.0, seed: 0, time_jitter: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_amplitude >= 0.0) || !(self.time_jitter >= 0.0) {
            return Err(Error::InvalidScript("noise and jitter must be non-negative".into()));
        }
        for tr in &self.tracks {
            if tr.points.is_empty() {
                return Err(Error::InvalidScript(format!("track '{}' has no waypoints", tr.name)));
            }
            if tr.points.windows(2).any(|w| w[1].t <= w[0].t) {
                return Err(Error::InvalidScript(format!(
                    "track '{}' timestamps must increase strictly",
                    tr.name
                )));
            }
            if tr.points.iter().any(|p| !p.t.is_finite() || p.p.iter().any(|x| !x.is_finite())) {
                return Err(Error::InvalidScript(format!("track '{}' is not finite", tr.name)));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Schedule shift implied by `time_jitter` and the seed.
    pub fn time_shift(&self) -> f64 {
        if self.time_jitter == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, 0x5eed_0f_7111));
        rng.random_range(-self.time_jitter..=self.time_jitter)
    }

    /// Position and velocity of every keypoint at `t`.
    ///
    /// Velocities come from the un-noised schedule. The noise is a pure function
    /// of `(seed, t)`, so repeated queries agree bit for bit.
    pub fn sample(&self, t: f64) -> HumanState {
        let ts = t - self.time_shift();
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, t.to_bits()));
        let a = self.noise_amplitude;
        let keypoints = self
            .tracks
            .iter()
            .map(|tr| {
                let (mut position, velocity) = tr.sample(ts);
                if a > 0.0 {
                    for x in position.iter_mut() {
                        *x += rng.random_range(-a..=a);
                    }
                }
                Keypoint { position, velocity }
            })
            .collect();
        HumanState { t, keypoints }
    }
}

pub fn sample_human(script: &HumanScript, t: f64) -> HumanState {
    script.sample(t)
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstacle {
    Sphere { center: [f64; 3], radius: f64 },
    Box { min: [f64; 3], max: [f64; 3] },
    Capsule { a: [f64; 3], b: [f64; 3], radius: f64 },
}

impl Obstacle {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Obstacle::Sphere { radius, .. } | Obstacle::Capsule { radius, .. } => *radius > 0.0,
            Obstacle::Box { min, max } => min.iter().zip(max).all(|(lo, hi)| hi > lo),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScene(format!("degenerate obstacle {self:?}")))
        }
    }

    /// True when the segment `a`–`b` stays farther than `margin` from the obstacle.
    pub fn clears_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>, margin: f64) -> bool {
        if let Obstacle::Box { min, max } = self {
            // Box-to-box gap is a lower bound on the segment distance.
            let mut gap2 = 0.0;
            for i in 0..3 {
                let (lo, hi) = (a[i].min(b[i]), a[i].max(b[i]));
                let g = (min[i] - hi).max(lo - max[i]).max(0.0);
                gap2 += g * g;
            }
            if gap2.sqrt() > margin {
                return true;
            }
        }
        self.distance_to_segment(a, b) > margin
    }

    /// Distance from the segment `a`–`b` to the obstacle surface (0 inside).
    pub fn distance_to_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        match self {
            Obstacle::Sphere { center, radius } => {
                (point_segment_distance(&Vector3::from(*center), a, b) - radius).max(0.0)
            }
            Obstacle::Capsule { a: ca, b: cb, radius } => {
                (segment_segment_distance(a, b, &Vector3::from(*ca), &Vector3::from(*cb)) - radius)
                    .max(0.0)
            }
            Obstacle::Box { min, max } => {
                segment_box_distance(a, b, &Vector3::from(*min), &Vector3::from(*max))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub static_obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub human_clearance: f64,
}

impl Scene {
    pub fn empty() -> Self {
        Self { static_obstacles: Vec::new(), human_clearance: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.human_clearance >= 0.0) {
            return Err(Error::InvalidScene("human_clearance must be non-negative".into()));
        }
        self.static_obstacles.iter().try_for_each(Obstacle::validate)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let s: Scene = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        s.validate()?;
        Ok(s)
    }

    /// True when every capsule between consecutive robot points clears the
    /// static obstacles.
    pub fn robot_clear(&self, points: &[Vector3<f64>], link_radius: f64) -> bool {
        if self.static_obstacles.is_empty() {
            return true;
        }
        let segments: Vec<(Vector3<f64>, Vector3<f64>)> = if points.len() == 1 {
            vec![(points[0], points[0])]
        } else {
            points.windows(2).map(|w| (w[0], w[1])).collect()
        };
        segments.iter().all(|(a, b)| {
            self.static_obstacles.iter().all(|o| o.clears_segment(a, b, link_radius))
        })
    }
}

/// Smallest point-pair distance between robot points and human keypoints,
/// minus the keypoint clearance.
pub fn separation_from_points(points: &[Vector3<f64>], human: &HumanState, clearance: f64) -> f64 {
    let mut best = f64::INFINITY;
    for r in points {
        for k in &human.keypoints {
            best = best.min((k.position - r).norm());
        }
    }
    best - clearance
}

pub fn min_separation(
    model: &RobotModel,
    q: &Configuration,
    human: &HumanState,
    scene: &Scene,
) -> Result<f64> {
    if human.is_empty() {
        return Ok(f64::INFINITY);
    }
    let pts = model.forward_points(q)?;
    Ok(separation_from_points(&pts, human, scene.human_clearance))
}

pub fn check_config(model: &RobotModel, q: &Configuration, human: &HumanState, scene: &Scene) -> bool {
    if !model.within_limits(q) {
        return false;
    }
    let Ok(pts) = model.forward_points(q) else {
        return false;
    };
    let mut capsules = Vec::with_capacity(pts.len() + 1);
    capsules.push(model.base_point());
    capsules.extend_from_slice(&pts);
    scene.robot_clear(&capsules, model.link_radius())
        && (human.is_empty() || separation_from_points(&pts, human, scene.human_clearance) > 0.0)
}

/// Checks `check_config` at `2^k + 1` evenly spaced samples, `k` the smallest
/// level with spacing at most `step`. Sample sets are nested under halving of
/// `step`, and the result does not depend on the endpoint order.
pub fn check_connection(
    model: &RobotModel,
    q_a: &Configuration,
    q_b: &Configuration,
    human: &HumanState,
    scene: &Scene,
    step: f64,
) -> bool {
    assert!(step > 0.0, "connection check step must be positive");
    let (a, b) = if lex_cmp(q_a, q_b) == Ordering::Greater { (q_b, q_a) } else { (q_a, q_b) };
    let d = (b - a).norm();
    let mut level = 0u32;
    while d / f64::from(1u32 << level) > step && level < 30 {
        level += 1;
    }
    let n = 1usize << level;
    let at = |i: usize| -> Configuration {
        if i == 0 {
            a.clone()
        } else if i == n {
            b.clone()
        } else {
            a + (b - a) * (i as f64 / n as f64)
        }
    };
    if !check_config(model, &at(0), human, scene) || !check_config(model, &at(n), human, scene) {
        return false;
    }
    // Coarse-to-fine order: the midpoint first, then quarters, and so on.
    let mut stride = n;
    while stride > 1 {
        let half = stride / 2;
        let mut i = half;
        while i < n {
            if !check_config(model, &at(i), human, scene) {
                return false;
            }
            i += stride;
        }
        stride = half;
    }
    true
}

fn lex_cmp(a: &Configuration, b: &Configuration) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

pub fn point_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Closest distance between segments `p1q1` and `p2q2`.
pub fn segment_segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let eps = 1e-15;
    let (s, t);
    if a <= eps && e <= eps {
        return r.norm();
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > eps { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

fn point_box_distance(p: &Vector3<f64>, min: &Vector3<f64>, max: &Vector3<f64>) -> f64 {
    let mut d2 = 0.0;
    for i in 0..3 {
        let v = if p[i] < min[i] {
            min[i] - p[i]
        } else if p[i] > max[i] {
            p[i] - max[i]
        } else {
            0.0
        };
        d2 += v * v;
    }
    d2.sqrt()
}

/// Distance between a segment and an axis-aligned box. The point-box distance
/// is convex along the segment, so a golden-section search converges to the
/// minimum.
pub fn segment_box_distance(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    min: &Vector3<f64>,
    max: &Vector3<f64>,
) -> f64 {
    let f = |t: f64| point_box_distance(&(a + (b - a) * t), min, max);
    let (fa, fb) = (f(0.0), f(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..48 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if f1 == 0.0 || f2 == 0.0 {
            return 0.0;
        }
    }
    fa.min(fb).min(f1).min(f2)
}
