//! Connection and path costs.
//!
//! Four models share one interface: plain joint-space length, length weighted
//! by the inverse joint speed limits, and two execution-time estimates that
//! multiply a nominal time by the mean time-dilation factor λ̄ along the
//! connection. The time estimates differ only in the nominal time: the
//! slowest-joint bound (L∞) or the weighted length (L2), the latter being an
//! upper bound of the former.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Configuration, RobotModel};
use crate::safety::{MovingPoints, SafetyMode, DEFAULT_LAMBDA_MAX};
use crate::world::HumanState;

/// Largest joint-space spacing between λ samples when `z` is automatic, rad.
pub const LAMBDA_SAMPLE_SPACING: f64 = 0.1;
/// Fewest λ samples per connection when `z` is automatic.
pub const MIN_LAMBDA_SAMPLES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyCost {
    pub mode: SafetyMode,
    /// Keypoint clearance subtracted from pair distances, m.
    #[serde(default)]
    pub clearance: f64,
    /// λ samples per connection, endpoints included. `None` picks the count
    /// from [`LAMBDA_SAMPLE_SPACING`].
    #[serde(default)]
    pub z: Option<usize>,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    /// Commanded fraction of the joint speed limits the robot moves at.
    #[serde(default = "default_speed_fraction")]
    pub speed_fraction: f64,
}

fn default_lambda_max() -> f64 {
    DEFAULT_LAMBDA_MAX
}

fn default_speed_fraction() -> f64 {
    1.0
}

impl SafetyCost {
    pub fn new(mode: SafetyMode, clearance: f64) -> Self {
        Self { mode, clearance, z: None, lambda_max: DEFAULT_LAMBDA_MAX, speed_fraction: 1.0 }
    }

    pub fn with_samples(self, z: usize) -> Self {
        Self { z: Some(z), ..self }
    }

    pub fn with_speed_fraction(self, speed_fraction: f64) -> Self {
        Self { speed_fraction, ..self }
    }

    pub fn samples_for(&self, length: f64) -> usize {
        self.z.unwrap_or_else(|| {
            MIN_LAMBDA_SAMPLES.max((length / LAMBDA_SAMPLE_SPACING).ceil() as usize + 1)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostModel {
    PathLength,
    WeightedLength,
    HampTime(SafetyCost),
    MarshaTime(SafetyCost),
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            CostModel::PathLength | CostModel::WeightedLength => Ok(()),
            CostModel::HampTime(s) | CostModel::MarshaTime(s) => {
                s.mode.validate()?;
                if s.z.is_some_and(|z| z < 2) {
                    return Err(Error::InvalidParams("λ sample count must be at least 2".into()));
                }
                if !(s.lambda_max >= 1.0) || !(s.clearance >= 0.0) {
                    return Err(Error::InvalidParams("lambda_max ≥ 1 and clearance ≥ 0 required".into()));
                }
                if !(s.speed_fraction > 0.0 && s.speed_fraction <= 1.0) {
                    return Err(Error::InvalidParams("speed fraction must lie in (0, 1]".into()));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostModel::PathLength => "path_length",
            CostModel::WeightedLength => "weighted_length",
            CostModel::HampTime(_) => "hamp_time",
            CostModel::MarshaTime(_) => "marsha_time",
        }
    }

    /// Whether the cost depends on the human state.
    pub fn is_human_aware(&self) -> bool {
        matches!(self, CostModel::HampTime(_) | CostModel::MarshaTime(_))
    }
}

/// Joint velocity along `q_b − q_a` with the most constrained joint at its
/// speed limit.
pub fn directional_qdot(
    q_a: &Configuration,
    q_b: &Configuration,
    qdot_max: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len(q_a, q_b)?;
    check_len(q_a, qdot_max)?;
    let delta = q_b - q_a;
    let norm = delta.norm();
    if norm == 0.0 {
        return Err(Error::ZeroLengthConnection);
    }
    let u = delta / norm;
    let speed = u
        .iter()
        .zip(qdot_max.iter())
        .filter(|(ul, _)| **ul != 0.0)
        .map(|(ul, vm)| (vm / ul).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(u * speed)
}

fn check_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    Ok(())
}

/// `‖(q_b − q_a) ⊘ q̇_max‖₂`
pub fn weighted_length(q_a: &Configuration, q_b: &Configuration, qdot_max: &DVector<f64>) -> f64 {
    q_a.iter()
        .zip(q_b.iter())
        .zip(qdot_max.iter())
        .map(|((a, b), v)| ((b - a) / v).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `‖(q_b − q_a) ⊘ q̇_max‖∞`
pub fn slowest_joint_time(q_a: &Configuration, q_b: &Configuration, qdot_max: &DVector<f64>) -> f64 {
    q_a.iter()
        .zip(q_b.iter())
        .zip(qdot_max.iter())
        .map(|((a, b), v)| ((b - a) / v).abs())
        .fold(0.0, f64::max)
}

/// Mean λ over `z` equally spaced configurations of the connection, both
/// endpoints included.
pub fn mean_lambda(
    model: &RobotModel,
    q_a: &Configuration,
    q_b: &Configuration,
    human: &HumanState,
    safety: &SafetyCost,
) -> Result<f64> {
    model.check_dim(q_a)?;
    model.check_dim(q_b)?;
    if human.is_empty() || q_a == q_b {
        return Ok(1.0);
    }
    let qdot = directional_qdot(q_a, q_b, model.qdot_max())? * safety.speed_fraction;
    let delta = q_b - q_a;
    let z = safety.samples_for(delta.norm());
    let mut sum = 0.0;
    for i in 0..z {
        let q = if i + 1 == z { q_b.clone() } else { q_a + &delta * (i as f64 / (z - 1) as f64) };
        let state = model.chain_state(&q)?;
        sum += MovingPoints::new(model, &state, &qdot).lambda(
            human,
            &safety.mode,
            safety.clearance,
            safety.lambda_max,
        );
    }
    Ok(sum / z as f64)
}

pub fn connection_cost(
    model: &RobotModel,
    q_a: &Configuration,
    q_b: &Configuration,
    human: &HumanState,
    cm: &CostModel,
) -> Result<f64> {
    model.check_dim(q_a)?;
    model.check_dim(q_b)?;
    if q_a == q_b {
        return Ok(0.0);
    }
    let qdot_max = model.qdot_max();
    Ok(match cm {
        CostModel::PathLength => (q_b - q_a).norm(),
        CostModel::WeightedLength => weighted_length(q_a, q_b, qdot_max),
        CostModel::HampTime(s) => {
            slowest_joint_time(q_a, q_b, qdot_max) * mean_lambda(model, q_a, q_b, human, s)?
        }
        CostModel::MarshaTime(s) => {
            weighted_length(q_a, q_b, qdot_max) * mean_lambda(model, q_a, q_b, human, s)?
        }
    })
}

pub fn path_cost(
    model: &RobotModel,
    waypoints: &[Configuration],
    human: &HumanState,
    cm: &CostModel,
) -> Result<f64> {
    if waypoints.len() < 2 {
        return Err(Error::PathTooShort(waypoints.len()));
    }
    waypoints
        .windows(2)
        .map(|w| connection_cost(model, &w[0], &w[1], human, cm))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safety::{ssm_vmax, SsmParams};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn ssm_cost() -> SafetyCost {
        SafetyCost::new(SafetyMode::Ssm(SsmParams::DEFAULT), 0.1)
    }

    #[test]
    fn directional_qdot_cases() {
        let vmax = v(&[1.0, 2.0]);
        assert_eq!(directional_qdot(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &vmax).unwrap(), v(&[1.0, 0.0]));
        let d = directional_qdot(&v(&[0.0, 0.0]), &v(&[1.0, 1.0]), &vmax).unwrap();
        assert!((d - v(&[1.0, 1.0])).norm() < 1e-15);
        assert_eq!(directional_qdot(&v(&[0.0, 0.0]), &v(&[0.0, 1.0]), &vmax).unwrap(), v(&[0.0, 2.0]));
        assert!(matches!(
            directional_qdot(&v(&[1.0, 1.0]), &v(&[1.0, 1.0]), &vmax),
            Err(Error::ZeroLengthConnection)
        ));
    }

    #[test]
    fn directional_qdot_saturates_a_joint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let a = DVector::from_fn(6, |_, _| rng.random_range(-3.0..3.0));
            let b = DVector::from_fn(6, |_, _| rng.random_range(-3.0..3.0));
            let vmax = DVector::from_fn(6, |_, _| rng.random_range(0.1..3.0));
            let qd = directional_qdot(&a, &b, &vmax).unwrap();
            let worst = qd.iter().zip(vmax.iter()).map(|(x, m)| (x / m).abs()).fold(0.0, f64::max);
            assert!((worst - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn no_human_time_cost_equals_weighted_length() {
        let m = RobotModel::ur10e_like();
        let a = v(&[0.1, -0.5, 0.7, 0.0, 0.2, 0.0]);
        let b = v(&[1.1, -0.9, 1.2, 0.3, -0.2, 0.4]);
        let none = HumanState::absent(0.0);
        let w = connection_cost(&m, &a, &b, &none, &CostModel::WeightedLength).unwrap();
        let t = connection_cost(&m, &a, &b, &none, &CostModel::MarshaTime(ssm_cost())).unwrap();
        assert_eq!(w, t);
    }

    #[test]
    fn unit_connection_all_models() {
        let m = RobotModel::planar_2dof();
        let none = HumanState::absent(0.0);
        let (a, b) = (v(&[0.0, 0.0]), v(&[1.0, 0.0]));
        for cm in [
            CostModel::PathLength,
            CostModel::WeightedLength,
            CostModel::HampTime(ssm_cost()),
            CostModel::MarshaTime(ssm_cost()),
        ] {
            assert_eq!(connection_cost(&m, &a, &b, &none, &cm).unwrap(), 1.0, "{}", cm.name());
        }
    }

    /// Dense-sampling oracle: λ evaluated with finite-difference Jacobians and
    /// a separately written SSM limit.
    #[test]
    fn mean_lambda_matches_dense_oracle() {
        let m = RobotModel::ur10e_like();
        let a = v(&[-0.3, -0.6, 1.2, -0.6, 0.0, 0.0]);
        let b = v(&[0.9, -0.4, 0.9, -0.5, 0.3, 0.2]);
        let mid = m.forward_points(&((&a + &b) * 0.5)).unwrap();
        let tip = mid[mid.len() - 1];
        let h = HumanState::stationary(0.0, &[tip + Vector3::new(0.0, 0.55, 0.1)]);
        let params = SsmParams::DEFAULT;
        let clearance = 0.1;
        let z = 1001;
        let safety = SafetyCost::new(SafetyMode::Ssm(params), clearance).with_samples(z);

        let delta = &b - &a;
        let u = &delta / delta.norm();
        let speed = (0..6).map(|l| (m.qdot_max()[l] / u[l]).abs()).fold(f64::INFINITY, f64::min);
        let qdot = &u * speed;
        let vmax_oracle = |s: f64| {
            let r = params.v_h.powi(2) + (params.a_s * params.t_r).powi(2) - 2.0 * params.a_s * (params.c - s);
            (r.max(0.0).sqrt() - params.a_s * params.t_r - params.v_h).max(0.0)
        };
        let hk = h.keypoints[0].position;
        let mut sum = 0.0;
        for i in 0..z {
            let q = &a + &delta * (i as f64 / (z - 1) as f64);
            let eps = 1e-7;
            let p0 = m.forward_points(&(&q - &qdot * eps)).unwrap();
            let p1 = m.forward_points(&(&q + &qdot * eps)).unwrap();
            let pts = m.forward_points(&q).unwrap();
            let mut lam: f64 = 1.0;
            for j in 0..pts.len() {
                let rdot = (p1[j] - p0[j]) / (2.0 * eps);
                let d = hk - pts[j];
                let vrh = rdot.dot(&d) / d.norm();
                if vrh > 0.0 {
                    let vm = vmax_oracle(d.norm() - clearance);
                    lam = lam.max(if vm > 0.0 { vrh / vm } else { f64::INFINITY });
                }
            }
            sum += lam.min(1e3);
        }
        let oracle = sum / z as f64;
        let got = mean_lambda(&m, &a, &b, &h, &safety).unwrap();
        assert!(got > 1.01, "scene should slow the robot, got {got}");
        assert!((got - oracle).abs() < 1e-5 * oracle, "{got} vs {oracle}");
        assert!(ssm_vmax(&params, 10.0) > 0.0);
    }

    #[test]
    fn path_cost_sums_connections() {
        let m = RobotModel::ur10e_like();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = HumanState::stationary(
            0.0,
            &[Vector3::new(0.6, 0.6, 0.4), Vector3::new(0.5, 0.8, 0.9)],
        );
        let cm = CostModel::MarshaTime(ssm_cost());
        let wps: Vec<_> = (0..5).map(|_| DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0))).collect();
        let total = path_cost(&m, &wps, &h, &cm).unwrap();
        let mut oracle = 0.0;
        for i in 0..4 {
            oracle += connection_cost(&m, &wps[i], &wps[i + 1], &h, &cm).unwrap();
        }
        assert!((total - oracle).abs() <= 1e-12 * oracle);
        assert_eq!(path_cost(&m, &[wps[0].clone(), wps[0].clone()], &h, &cm).unwrap(), 0.0);
        assert!(matches!(path_cost(&m, &wps[..1], &h, &cm), Err(Error::PathTooShort(1))));
    }

    #[test]
    fn additive_over_collinear_split() {
        let m = RobotModel::planar_2dof();
        let none = HumanState::absent(0.0);
        let (a, b, c) = (v(&[0.0, 0.0]), v(&[0.5, 0.25]), v(&[1.0, 0.5]));
        let cm = CostModel::WeightedLength;
        let whole = connection_cost(&m, &a, &c, &none, &cm).unwrap();
        let split = path_cost(&m, &[a, b, c], &none, &cm).unwrap();
        assert!((whole - split).abs() < 1e-15);
    }

    #[test]
    fn time_costs_dominate_their_bounds() {
        let m = RobotModel::ur10e_like();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = ssm_cost();
        for _ in 0..200 {
            let a = DVector::from_fn(6, |_, _| rng.random_range(-2.5..2.5));
            let b = &a + DVector::from_fn(6, |_, _| rng.random_range(-0.6..0.6));
            let kps: Vec<_> = (0..3)
                .map(|_| Vector3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(0.0..1.5)))
                .collect();
            let h = HumanState::stationary(0.0, &kps);
            let marsha = connection_cost(&m, &a, &b, &h, &CostModel::MarshaTime(s)).unwrap();
            let hamp = connection_cost(&m, &a, &b, &h, &CostModel::HampTime(s)).unwrap();
            let wl = connection_cost(&m, &a, &b, &h, &CostModel::WeightedLength).unwrap();
            assert!(marsha >= hamp * (1.0 - 1e-12));
            assert!(marsha >= wl);
        }
    }
}
