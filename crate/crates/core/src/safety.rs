//! ISO/TS 15066 speed limits and the time-dilation factor they induce.
//!
//! Two collaborative modes are supported: speed and separation monitoring,
//! where the admissible closing speed depends on the human-robot separation,
//! and power and force limiting, where it is a constant.
//!
//! The separation of a (robot point, human keypoint) pair is their Euclidean
//! distance minus the scene's keypoint clearance, the same quantity that
//! [`crate::world::min_separation`] minimizes.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ChainState, Configuration, RobotModel};
use crate::world::{HumanState, Keypoint};

/// Cap on λ used by the cost functions, so that paths through stop zones keep
/// finite, comparable costs.
pub const DEFAULT_LAMBDA_MAX: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsmParams {
    /// Perception uncertainty, m.
    pub c: f64,
    /// Reaction time, s.
    pub t_r: f64,
    /// Assumed human speed toward the robot, m/s.
    pub v_h: f64,
    /// Maximum Cartesian deceleration of the robot, m/s².
    pub a_s: f64,
}

impl SsmParams {
    pub const DEFAULT: SsmParams = SsmParams { c: 0.25, t_r: 0.15, v_h: 1.6, a_s: 2.5 };

    pub fn validate(&self) -> Result<()> {
        let ok = self.c >= 0.0 && self.t_r >= 0.0 && self.v_h >= 0.0 && self.a_s > 0.0;
        if ok && [self.c, self.t_r, self.v_h, self.a_s].iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid SSM parameters {self:?}")))
        }
    }

    /// Separation at or below which the admissible closing speed is zero.
    pub fn stop_distance(&self) -> f64 {
        self.c + self.t_r * self.v_h
    }
}

impl Default for SsmParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PflParams {
    /// Maximum contact force, N.
    pub f_max: f64,
    /// Body-region spring constant, N/m.
    pub k: f64,
    /// Effective robot mass, kg.
    pub m_r: f64,
    /// Effective human body-region mass, kg.
    pub m_h: f64,
}

impl PflParams {
    pub fn validate(&self) -> Result<()> {
        if [self.f_max, self.k, self.m_r, self.m_h].iter().all(|&x| x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid PFL parameters {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SafetyMode {
    Ssm(SsmParams),
    Pfl(PflParams),
}

impl SafetyMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            SafetyMode::Ssm(p) => p.validate(),
            SafetyMode::Pfl(p) => p.validate(),
        }
    }

    /// Admissible closing speed at the given pair separation.
    pub fn vmax(&self, separation: f64) -> f64 {
        match self {
            SafetyMode::Ssm(p) => ssm_vmax(p, separation),
            SafetyMode::Pfl(p) => pfl_vmax(p),
        }
    }
}

/// `sqrt(v_h² + (a_s T_r)² − 2 a_s (C − S)) − a_s T_r − v_h`, clamped so the
/// robot must stand still inside the protective separation.
pub fn ssm_vmax(p: &SsmParams, separation: f64) -> f64 {
    if separation == f64::INFINITY {
        return f64::INFINITY;
    }
    let at = p.a_s * p.t_r;
    let radicand = p.v_h * p.v_h + at * at - 2.0 * p.a_s * (p.c - separation);
    (radicand.max(0.0).sqrt() - at - p.v_h).max(0.0)
}

/// `F_max / sqrt(k) · sqrt(1/m_r + 1/m_h)`.
pub fn pfl_vmax(p: &PflParams) -> f64 {
    p.f_max / p.k.sqrt() * (1.0 / p.m_r + 1.0 / p.m_h).sqrt()
}

/// Closing speed `(ṙ − ḣ)·u` with `u` the unit vector from the robot point to
/// the keypoint. Positive when the pair is getting closer.
pub fn closing_speed(r: &Vector3<f64>, r_dot: &Vector3<f64>, k: &Keypoint) -> Result<f64> {
    let d = k.position - r;
    let dist = d.norm();
    if dist == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    Ok((r_dot - k.velocity).dot(&d) / dist)
}

pub fn pair_velocity(
    model: &RobotModel,
    q: &Configuration,
    qdot: &DVector<f64>,
    poi_index: usize,
    keypoint: &Keypoint,
) -> Result<f64> {
    if poi_index >= model.poi_count() {
        return Err(Error::InvalidPoi { index: poi_index, count: model.poi_count() });
    }
    model.check_dim(qdot)?;
    let state = model.chain_state(q)?;
    let r_dot = state.point_velocity(poi_index, model.poi_link(poi_index), qdot);
    closing_speed(&state.points[poi_index], &r_dot, keypoint)
}

/// Robot points with their velocities under `qdot`, ready for pair loops.
pub struct MovingPoints {
    pub points: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
}

impl MovingPoints {
    pub fn new(model: &RobotModel, state: &ChainState, qdot: &DVector<f64>) -> Self {
        let velocities = (0..model.poi_count())
            .map(|j| state.point_velocity(j, model.poi_link(j), qdot))
            .collect();
        Self { points: state.points.clone(), velocities }
    }

    pub fn compute(model: &RobotModel, q: &Configuration, qdot: &DVector<f64>) -> Result<Self> {
        model.check_dim(qdot)?;
        let state = model.chain_state(q)?;
        Ok(Self::new(model, &state, qdot))
    }

    /// λ at this configuration; see [`lambda_at`].
    pub fn lambda(&self, human: &HumanState, mode: &SafetyMode, clearance: f64, lambda_max: f64) -> f64 {
        let mut lambda: f64 = 1.0;
        for (r, r_dot) in self.points.iter().zip(&self.velocities) {
            for k in &human.keypoints {
                let d = k.position - r;
                let dist = d.norm();
                let v = if dist > 0.0 {
                    (r_dot - k.velocity).dot(&d) / dist
                } else {
                    // Coincident points: assume the worst-case direction.
                    (r_dot - k.velocity).norm()
                };
                if v <= 0.0 {
                    continue;
                }
                let vmax = mode.vmax(dist - clearance);
                let ratio = if vmax > 0.0 { v / vmax } else { f64::INFINITY };
                lambda = lambda.max(ratio);
            }
        }
        lambda.min(lambda_max)
    }

    /// Largest factor in `[0, 1]` applied to the robot velocity such that every
    /// robot-induced closing speed `s·ṙ·u` stays within its pair limit.
    pub fn scale(&self, human: &HumanState, mode: &SafetyMode, clearance: f64) -> f64 {
        let mut s: f64 = 1.0;
        for (r, r_dot) in self.points.iter().zip(&self.velocities) {
            for k in &human.keypoints {
                let d = k.position - r;
                let dist = d.norm();
                let a = if dist > 0.0 { r_dot.dot(&d) / dist } else { r_dot.norm() };
                if a <= 0.0 {
                    continue;
                }
                let vmax = mode.vmax(dist - clearance);
                s = s.min(vmax / a);
                if s == 0.0 {
                    return 0.0;
                }
            }
        }
        s
    }

    /// Worst excess of a robot-induced closing speed over its limit, together
    /// with the smallest pair separation at which the robot was closing in.
    pub fn worst_excess(&self, human: &HumanState, mode: &SafetyMode, clearance: f64) -> (f64, f64) {
        let mut excess = f64::NEG_INFINITY;
        let mut closing_sep = f64::INFINITY;
        for (r, r_dot) in self.points.iter().zip(&self.velocities) {
            for k in &human.keypoints {
                let d = k.position - r;
                let dist = d.norm();
                let a = if dist > 0.0 { r_dot.dot(&d) / dist } else { r_dot.norm() };
                let sep = dist - clearance;
                if a > 0.0 {
                    closing_sep = closing_sep.min(sep);
                }
                excess = excess.max(a - mode.vmax(sep));
            }
        }
        (excess, closing_sep)
    }
}

/// Time-dilation factor at `q` when moving with `qdot`: the largest ratio of
/// closing speed to admissible speed over all pairs, floored at 1 and capped at
/// `lambda_max`.
pub fn lambda_at(
    model: &RobotModel,
    q: &Configuration,
    qdot: &DVector<f64>,
    human: &HumanState,
    mode: &SafetyMode,
    clearance: f64,
    lambda_max: f64,
) -> Result<f64> {
    if human.is_empty() {
        model.check_dim(q)?;
        model.check_dim(qdot)?;
        return Ok(1.0);
    }
    Ok(MovingPoints::compute(model, q, qdot)?.lambda(human, mode, clearance, lambda_max))
}

/// Runtime speed-scaling factor applied by the safety layer. Equals `1/λ`
/// (uncapped, so `0` means halt) when the human keypoints are static; moving
/// keypoints are accounted for by the assumed human speed of the limit itself.
pub fn execution_scale(
    model: &RobotModel,
    q: &Configuration,
    qdot_commanded: &DVector<f64>,
    human: &HumanState,
    mode: &SafetyMode,
    clearance: f64,
) -> Result<f64> {
    if human.is_empty() {
        return Ok(1.0);
    }
    Ok(MovingPoints::compute(model, q, qdot_commanded)?.scale(human, mode, clearance))
}

/// The sixteen SSM parameter sets used by the parameter sweep.
pub fn bundled_ssm_sets() -> Vec<SsmParams> {
    serde_json::from_str(include_str!("../data/ssm_sets.json")).expect("bundled SSM sets parse")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kp(p: [f64; 3], v: [f64; 3]) -> Keypoint {
        Keypoint { position: Vector3::from(p), velocity: Vector3::from(v) }
    }

    #[test]
    fn ssm_zero_at_c_without_human_speed() {
        let p = SsmParams { c: 0.4, t_r: 0.2, v_h: 0.0, a_s: 1.5 };
        assert!(ssm_vmax(&p, 0.4).abs() < 1e-15);
        assert_eq!(ssm_vmax(&p, 0.1), 0.0);
    }

    #[test]
    fn ssm_default_boundary_and_regression() {
        let p = SsmParams::DEFAULT;
        assert_eq!(ssm_vmax(&p, 0.25), 0.0);
        // sqrt(1.6² + 0.375² + 2·2.5·0.75) − 0.375 − 1.6, evaluated independently
        // with 50-digit arithmetic: 0.56480806...
        assert!((ssm_vmax(&p, 1.0) - 0.564_808_063_614_256_7).abs() < 1e-12, "{}", ssm_vmax(&p, 1.0));
        assert_eq!(ssm_vmax(&p, f64::INFINITY), f64::INFINITY);
        assert!((p.stop_distance() - 0.49).abs() < 1e-15);
    }

    #[test]
    fn pfl_values() {
        let unit = PflParams { f_max: 3.0, k: 9.0, m_r: 2.0, m_h: 2.0 };
        assert!((pfl_vmax(&unit) - 1.0).abs() < 1e-15);
        let heavy = PflParams { f_max: 140.0, k: 75_000.0, m_r: 10.0, m_h: 1e12 };
        assert!((pfl_vmax(&heavy) - 140.0 / (75_000.0f64 * 10.0).sqrt()).abs() < 1e-9);
        let iso = PflParams { f_max: 140.0, k: 75_000.0, m_r: 10.0, m_h: 4.0 };
        // 140/sqrt(75000)·sqrt(0.35), independent evaluation: 0.30243456...
        assert!((pfl_vmax(&iso) - 0.302_434_565_925_700_1).abs() < 1e-12, "{}", pfl_vmax(&iso));
    }

    #[test]
    fn pair_velocity_signs() {
        let m = RobotModel::planar_2dof();
        let q = DVector::from_row_slice(&[0.0, 0.0]);
        // Tip at (2,0,0) moves along +y at 2·qdot0; keypoint straight ahead.
        let qdot = DVector::from_row_slice(&[0.25, 0.0]);
        let v = pair_velocity(&m, &q, &qdot, 1, &kp([2.0, 1.0, 0.0], [0.0; 3])).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let still = DVector::zeros(2);
        let v = pair_velocity(&m, &q, &still, 1, &kp([2.0, 1.0, 0.0], [0.0, 1.0, 0.0])).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        assert!(matches!(
            pair_velocity(&m, &q, &still, 1, &kp([2.0, 0.0, 0.0], [0.0; 3])),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn pair_velocity_matches_distance_derivative() {
        let m = RobotModel::ur10e_like();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let q = DVector::from_fn(6, |_, _| rng.random_range(-2.5..2.5));
            let qdot = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            let k = kp(
                [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..2.0)],
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0],
            );
            let j = rng.random_range(0..m.poi_count());
            let dist = |t: f64| {
                let qt = &q + &qdot * t;
                let r = m.forward_points(&qt).unwrap()[j];
                (k.position + k.velocity * t - r).norm()
            };
            let h = 1e-6;
            let fd = -(dist(h) - dist(-h)) / (2.0 * h);
            let v = pair_velocity(&m, &q, &qdot, j, &k).unwrap();
            assert!((v - fd).abs() < 1e-4, "{v} vs {fd}");
        }
    }

    #[test]
    fn lambda_cases() {
        let m = RobotModel::planar_2dof();
        let q = DVector::from_row_slice(&[0.0, 0.0]);
        let qdot = DVector::from_row_slice(&[0.4, 0.0]);
        let mode = SafetyMode::Ssm(SsmParams::DEFAULT);
        let none = HumanState::absent(0.0);
        assert_eq!(lambda_at(&m, &q, &qdot, &none, &mode, 0.0, 1e3).unwrap(), 1.0);
        // Keypoint behind the motion: all closing speeds negative.
        let behind = HumanState::stationary(0.0, &[Vector3::new(2.0, -1.0, 0.0)]);
        assert_eq!(lambda_at(&m, &q, &qdot, &behind, &mode, 0.0, 1e3).unwrap(), 1.0);
    }

    #[test]
    fn lambda_single_pair_hand_value() {
        // One robot point; closing speed 0.8 m/s at a separation where vmax = 0.4.
        let spec = crate::kinematics::RobotModelSpec {
            poi: vec![crate::kinematics::PointOfInterest { link: 1, offset: [1.0, 0.0, 0.0] }],
            ..RobotModel::planar_2dof().spec().clone()
        };
        let m = RobotModel::new(spec).unwrap();
        let p = SsmParams { c: 0.1, t_r: 0.1, v_h: 0.0, a_s: 2.0 };
        // vmax(S) = sqrt(0.04 + 4(S − 0.1)) − 0.2 = 0.4  ⇒  S = 0.18.
        let s = 0.18;
        assert!((ssm_vmax(&p, s) - 0.4).abs() < 1e-12);
        let q = DVector::from_row_slice(&[0.0, 0.0]);
        let qdot = DVector::from_row_slice(&[0.4, 0.0]); // tip speed 0.8 along +y
        let h = HumanState::stationary(0.0, &[Vector3::new(2.0, s, 0.0)]);
        let l = lambda_at(&m, &q, &qdot, &h, &SafetyMode::Ssm(p), 0.0, 1e3).unwrap();
        assert!((l - 2.0).abs() < 1e-9, "{l}");
        let scale = execution_scale(&m, &q, &qdot, &h, &SafetyMode::Ssm(p), 0.0).unwrap();
        assert!((scale - 0.5).abs() < 1e-9);
    }

    #[test]
    fn scale_halts_inside_protective_distance() {
        let m = RobotModel::planar_2dof();
        let q = DVector::from_row_slice(&[0.0, 0.0]);
        let qdot = DVector::from_row_slice(&[0.1, 0.0]);
        let h = HumanState::stationary(0.0, &[Vector3::new(2.0, 0.2, 0.0)]);
        let mode = SafetyMode::Ssm(SsmParams::DEFAULT);
        assert_eq!(execution_scale(&m, &q, &qdot, &h, &mode, 0.0).unwrap(), 0.0);
        let l = lambda_at(&m, &q, &qdot, &h, &mode, 0.0, 1e3).unwrap();
        assert_eq!(l, 1e3);
    }

    #[test]
    fn bundled_sets_match_table() {
        let sets = bundled_ssm_sets();
        assert_eq!(sets.len(), 16);
        for (i, s) in sets.iter().enumerate() {
            assert_eq!(s.c, if i < 8 { 0.10 } else { 0.30 });
            assert_eq!(s.t_r, if (i / 4) % 2 == 0 { 0.15 } else { 0.30 });
            assert_eq!(s.v_h, if (i / 2) % 2 == 0 { 0.0 } else { 1.6 });
            assert_eq!(s.a_s, if i % 2 == 0 { 0.10 } else { 2.50 });
        }
    }

    fn arb_ssm() -> impl Strategy<Value = SsmParams> {
        (0.0..0.5f64, 0.0..0.5f64, 0.0..2.0f64, 0.05..3.0f64)
            .prop_map(|(c, t_r, v_h, a_s)| SsmParams { c, t_r, v_h, a_s })
    }

    proptest! {
        #[test]
        fn ssm_monotone_in_separation(p in arb_ssm(), s1 in -1.0..5.0f64, ds in 0.0..3.0f64) {
            prop_assert!(ssm_vmax(&p, s1 + ds) >= ssm_vmax(&p, s1));
            prop_assert!(ssm_vmax(&p, s1) >= 0.0);
        }

        #[test]
        fn lambda_scales_linearly_with_qdot(
            seed in 0u64..1000,
            s in 0.1..5.0f64,
        ) {
            let m = RobotModel::ur10e_like();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0));
            let qdot = DVector::from_fn(6, |_, _| rng.random_range(-0.5..0.5));
            let kps: Vec<_> = (0..3).map(|_| Vector3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(0.0..1.5))).collect();
            let h = HumanState::stationary(0.0, &kps);
            let mode = SafetyMode::Ssm(SsmParams { c: 0.0, t_r: 0.1, v_h: 0.0, a_s: 2.5 });
            // Uncapped, unfloored ratio: max over pairs of v/vmax.
            let ratio = |qd: &DVector<f64>| {
                let mp = MovingPoints::compute(&m, &q, qd).unwrap();
                let mut best = f64::NEG_INFINITY;
                for (r, rd) in mp.points.iter().zip(&mp.velocities) {
                    for k in &h.keypoints {
                        let d = k.position - r;
                        let v = rd.dot(&d) / d.norm();
                        let vmax = mode.vmax(d.norm());
                        if v > 0.0 && vmax > 0.0 { best = best.max(v / vmax); }
                    }
                }
                best
            };
            let base = ratio(&qdot);
            let scaled = ratio(&(&qdot * s));
            if base.is_finite() {
                prop_assert!((scaled - s * base).abs() <= 1e-9 * (1.0 + scaled.abs()));
            }
        }

        #[test]
        fn scaled_motion_respects_limits(seed in 0u64..1000) {
            let m = RobotModel::ur10e_like();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0));
            let qdot = DVector::from_fn(6, |_, _| rng.random_range(-0.5..0.5));
            let kps: Vec<_> = (0..4).map(|_| Keypoint {
                position: Vector3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(0.0..1.5)),
                velocity: Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0),
            }).collect();
            let h = HumanState { t: 0.0, keypoints: kps };
            let mode = SafetyMode::Ssm(SsmParams::DEFAULT);
            let s = execution_scale(&m, &q, &qdot, &h, &mode, 0.1).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            let mp = MovingPoints::compute(&m, &q, &(&qdot * s)).unwrap();
            let (excess, _) = mp.worst_excess(&h, &mode, 0.1);
            prop_assert!(excess <= 1e-9);
            let l = lambda_at(&m, &q, &qdot, &h, &mode, 0.1, 1e3).unwrap();
            prop_assert!(l >= 1.0);
        }
    }
}
