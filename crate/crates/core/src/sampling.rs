//! Admissible heuristic for the weighted-length family of costs and direct
//! sampling of the corresponding informed set.
//!
//! In scaled coordinates `q̂ = q ⊘ q̇_max` the heuristic is the sum of the
//! Euclidean distances to the two foci, so the informed set is a prolate
//! hyperspheroid. Samples are drawn uniformly in the unit ball, stretched
//! along the transverse axis, rotated onto the focal line by a Householder
//! reflection and mapped back. Samples outside the joint limits are redrawn.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kinematics::{Configuration, RobotModel};

/// Upper bound on redraws before sampling gives up.
pub const MAX_SAMPLE_ATTEMPTS: usize = 100_000;

#[derive(Clone, Debug)]
pub struct InformedSet {
    pub q_start: Configuration,
    pub q_goal: Configuration,
    /// Best cost found so far; `+∞` samples the whole joint box.
    pub c_best: f64,
    pub qdot_max: DVector<f64>,
    pub q_min: DVector<f64>,
    pub q_max: DVector<f64>,
}

impl InformedSet {
    pub fn new(model: &RobotModel, q_start: Configuration, q_goal: Configuration, c_best: f64) -> Self {
        Self {
            q_start,
            q_goal,
            c_best,
            qdot_max: model.qdot_max().clone(),
            q_min: model.q_min().clone(),
            q_max: model.q_max().clone(),
        }
    }

    /// Same set, measured with the unweighted Euclidean norm.
    pub fn unweighted(mut self) -> Self {
        self.qdot_max = DVector::from_element(self.qdot_max.len(), 1.0);
        self
    }

    pub fn dim(&self) -> usize {
        self.q_start.len()
    }

    /// Heuristic value of the start, the smallest cost any path can have.
    pub fn c_min(&self) -> f64 {
        weighted_distance(&self.q_start, &self.q_goal, &self.qdot_max)
    }

    pub fn is_empty(&self) -> bool {
        self.c_best < self.c_min()
    }

    pub fn contains(&self, q: &Configuration) -> bool {
        self.c_best == f64::INFINITY || heuristic_unchecked(q, self) < self.c_best
    }
}

fn weighted_distance(a: &Configuration, b: &Configuration, w: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .zip(w.iter())
        .map(|((x, y), s)| ((y - x) / s).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn heuristic_unchecked(q: &Configuration, set: &InformedSet) -> f64 {
    weighted_distance(&set.q_start, q, &set.qdot_max) + weighted_distance(q, &set.q_goal, &set.qdot_max)
}

/// `‖(q − q_start) ⊘ q̇_max‖₂ + ‖(q_goal − q) ⊘ q̇_max‖₂`
pub fn heuristic(q: &Configuration, set: &InformedSet) -> Result<f64> {
    if q.len() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), actual: q.len() });
    }
    Ok(heuristic_unchecked(q, set))
}

pub fn to_scaled(q: &Configuration, qdot_max: &DVector<f64>) -> DVector<f64> {
    q.component_div(qdot_max)
}

pub fn from_scaled(qhat: &DVector<f64>, qdot_max: &DVector<f64>) -> Configuration {
    qhat.component_mul(qdot_max)
}

fn unit_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / n as f64);
            return g * (radius / norm);
        }
    }
}

/// Householder reflection taking `e1` onto the unit vector `a`.
fn reflect_e1_onto(a: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut w = -a.clone();
    w[0] += 1.0;
    let ww = w.norm_squared();
    if ww < 1e-30 {
        return x.clone();
    }
    x - &w * (2.0 * w.dot(x) / ww)
}

fn uniform_in_box<R: Rng + ?Sized>(set: &InformedSet, rng: &mut R) -> Configuration {
    DVector::from_fn(set.dim(), |i, _| {
        let (lo, hi) = (set.q_min[i], set.q_max[i]);
        lo + (hi - lo) * rng.random::<f64>()
    })
}

fn within(set: &InformedSet, q: &Configuration) -> bool {
    q.iter().enumerate().all(|(i, x)| *x >= set.q_min[i] && *x <= set.q_max[i])
}

/// Log of the volume of the unit n-ball.
pub(crate) fn ln_unit_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n + 1.0)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7.
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Draws a configuration uniformly from the informed set intersected with the
/// joint limits.
pub fn sample_informed<R: Rng + ?Sized>(set: &InformedSet, rng: &mut R) -> Result<Configuration> {
    let n = set.dim();
    if set.c_best == f64::INFINITY {
        return Ok(uniform_in_box(set, rng));
    }
    let c_min = set.c_min();
    if !(set.c_best >= c_min) {
        return Err(Error::EmptyInformedSet { c_best: set.c_best, c_min });
    }
    let s_start = to_scaled(&set.q_start, &set.qdot_max);
    let s_goal = to_scaled(&set.q_goal, &set.qdot_max);

    if set.c_best == c_min {
        // Zero-volume spheroid: the focal segment itself.
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let t: f64 = rng.random();
            let q = from_scaled(&(&s_start + (&s_goal - &s_start) * t), &set.qdot_max);
            if within(set, &q) {
                return Ok(q);
            }
        }
        return Err(Error::SamplingExhausted(MAX_SAMPLE_ATTEMPTS));
    }

    let r1 = set.c_best / 2.0;
    let r2 = (set.c_best * set.c_best - c_min * c_min).max(0.0).sqrt() / 2.0;

    // When the spheroid is larger than the joint box, rejection from the box
    // is the cheaper route to the same distribution.
    let ln_box: f64 = (0..n).map(|i| ((set.q_max[i] - set.q_min[i]) / set.qdot_max[i]).ln()).sum();
    let ln_ell = ln_unit_ball_volume(n) + r1.ln() + (n as f64 - 1.0) * r2.ln();
    if ln_ell >= ln_box {
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let q = uniform_in_box(set, rng);
            if heuristic_unchecked(&q, set) < set.c_best {
                return Ok(q);
            }
        }
        return Err(Error::SamplingExhausted(MAX_SAMPLE_ATTEMPTS));
    }

    let center = (&s_start + &s_goal) * 0.5;
    let axis = if c_min > 0.0 {
        (&s_goal - &s_start) / c_min
    } else {
        let mut e = DVector::zeros(n);
        e[0] = 1.0;
        e
    };
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let mut x = unit_ball(n, rng);
        x[0] *= r1;
        for i in 1..n {
            x[i] *= r2;
        }
        let y = reflect_e1_onto(&axis, &x) + &center;
        let q = from_scaled(&y, &set.qdot_max);
        if within(set, &q) && heuristic_unchecked(&q, set) < set.c_best {
            return Ok(q);
        }
    }
    Err(Error::SamplingExhausted(MAX_SAMPLE_ATTEMPTS))
}
