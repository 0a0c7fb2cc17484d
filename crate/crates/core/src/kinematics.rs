//! Serial-chain robot model: forward kinematics of the robot points of
//! interest and their linear-velocity Jacobians.
//!
//! Every joint is revolute. Joint `i` first applies a fixed transform from the
//! previous link frame (`origin_xyz`, `origin_rpy`) and then rotates about its
//! local `axis` by `q[i]`. The resulting frame is link `i`. Points of interest
//! are fixed offsets expressed in a link frame.

use std::path::Path;

use nalgebra::{DVector, Isometry3, Matrix3xX, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint-angle vector, rad.
pub type Configuration = DVector<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub origin_xyz: [f64; 3],
    #[serde(default)]
    pub origin_rpy: [f64; 3],
    pub axis: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointOfInterest {
    pub link: usize,
    pub offset: [f64; 3],
}

/// On-disk description of a robot. Converted into a validated [`RobotModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModelSpec {
    pub name: String,
    pub joints: Vec<JointSpec>,
    pub qdot_max: Vec<f64>,
    pub qddot_max: Vec<f64>,
    pub q_min: Vec<f64>,
    pub q_max: Vec<f64>,
    pub poi: Vec<PointOfInterest>,
    /// Radius of the capsules swept between consecutive points of interest.
    #[serde(default = "default_link_radius")]
    pub link_radius: f64,
}

fn default_link_radius() -> f64 {
    0.05
}

#[derive(Clone, Debug)]
struct Joint {
    origin: Isometry3<f64>,
    axis: Unit<Vector3<f64>>,
}

/// Immutable kinematic model. Cheap to share behind an `Arc`.
#[derive(Clone, Debug)]
pub struct RobotModel {
    spec: RobotModelSpec,
    joints: Vec<Joint>,
    qdot_max: DVector<f64>,
    qddot_max: DVector<f64>,
    q_min: DVector<f64>,
    q_max: DVector<f64>,
}

/// Positions of every joint axis and point of interest at one configuration.
///
/// Computing this once and deriving Jacobian-vector products from it is what
/// the safety and cost code does in its inner loops.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub axes: Vec<Vector3<f64>>,
    pub origins: Vec<Vector3<f64>>,
    pub points: Vec<Vector3<f64>>,
}

impl RobotModel {
    pub fn new(spec: RobotModelSpec) -> Result<Self> {
        let n = spec.joints.len();
        if n == 0 {
            return Err(Error::InvalidModel("model needs at least one joint".into()));
        }
        for (label, v) in [
            ("qdot_max", &spec.qdot_max),
            ("qddot_max", &spec.qddot_max),
            ("q_min", &spec.q_min),
            ("q_max", &spec.q_max),
        ] {
            if v.len() != n {
                return Err(Error::InvalidModel(format!(
                    "{label} has {} entries, expected {n}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidModel(format!("{label} must be finite")));
            }
        }
        if spec.qdot_max.iter().chain(&spec.qddot_max).any(|&x| x <= 0.0) {
            return Err(Error::InvalidModel(
                "speed and acceleration limits must be strictly positive".into(),
            ));
        }
        if spec.q_min.iter().zip(&spec.q_max).any(|(lo, hi)| lo >= hi) {
            return Err(Error::InvalidModel("q_min must be below q_max".into()));
        }
        if spec.poi.is_empty() {
            return Err(Error::InvalidModel("at least one point of interest is required".into()));
        }
        if let Some(p) = spec.poi.iter().find(|p| p.link >= n) {
            return Err(Error::InvalidModel(format!(
                "point of interest references link {} but the chain has {n} links",
                p.link
            )));
        }
        if !(spec.link_radius >= 0.0) {
            return Err(Error::InvalidModel("link_radius must be non-negative".into()));
        }
        let mut joints = Vec::with_capacity(n);
        for j in &spec.joints {
            let axis = Vector3::from(j.axis);
            if axis.norm() < 1e-12 {
                return Err(Error::InvalidModel(format!("joint '{}' has a zero axis", j.name)));
            }
            let [r, p, y] = j.origin_rpy;
            joints.push(Joint {
                origin: Isometry3::from_parts(
                    Translation3::from(Vector3::from(j.origin_xyz)),
                    UnitQuaternion::from_euler_angles(r, p, y),
                ),
                axis: Unit::new_normalize(axis),
            });
        }
        Ok(Self {
            qdot_max: DVector::from_vec(spec.qdot_max.clone()),
            qddot_max: DVector::from_vec(spec.qddot_max.clone()),
            q_min: DVector::from_vec(spec.q_min.clone()),
            q_max: DVector::from_vec(spec.q_max.clone()),
            joints,
            spec,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::new(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Two 1 m links rotating about z in the xy-plane; a point at each tip.
    pub fn planar_2dof() -> Self {
        Self::new(RobotModelSpec {
            name: "planar_2dof".into(),
            joints: vec![
                JointSpec {
                    name: "j1".into(),
                    origin_xyz: [0.0; 3],
                    origin_rpy: [0.0; 3],
                    axis: [0.0, 0.0, 1.0],
                },
                JointSpec {
                    name: "j2".into(),
                    origin_xyz: [1.0, 0.0, 0.0],
                    origin_rpy: [0.0; 3],
                    axis: [0.0, 0.0, 1.0],
                },
            ],
            qdot_max: vec![1.0, 1.0],
            qddot_max: vec![2.0, 2.0],
            q_min: vec![-std::f64::consts::PI; 2],
            q_max: vec![std::f64::consts::PI; 2],
            poi: vec![
                PointOfInterest { link: 0, offset: [1.0, 0.0, 0.0] },
                PointOfInterest { link: 1, offset: [1.0, 0.0, 0.0] },
            ],
            link_radius: 0.05,
        })
        .expect("bundled planar model is valid")
    }

    /// Six-joint arm with UR10e link lengths, used by the bundled benchmarks.
    pub fn ur10e_like() -> Self {
        Self::from_json_str(include_str!("../data/ur10e_like.json"))
            .expect("bundled 6-DOF model is valid")
    }

    pub fn spec(&self) -> &RobotModelSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn poi_count(&self) -> usize {
        self.spec.poi.len()
    }

    pub fn link_radius(&self) -> f64 {
        self.spec.link_radius
    }

    pub fn qdot_max(&self) -> &DVector<f64> {
        &self.qdot_max
    }

    pub fn qddot_max(&self) -> &DVector<f64> {
        &self.qddot_max
    }

    pub fn q_min(&self) -> &DVector<f64> {
        &self.q_min
    }

    pub fn q_max(&self) -> &DVector<f64> {
        &self.q_max
    }

    pub fn within_limits(&self, q: &Configuration) -> bool {
        q.len() == self.dof()
            && q.iter()
                .zip(self.q_min.iter().zip(self.q_max.iter()))
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    pub fn check_dim(&self, q: &Configuration) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch { expected: self.dof(), actual: q.len() });
        }
        Ok(())
    }

    /// Link frames in the world frame, one per joint.
    pub fn link_frames(&self, q: &Configuration) -> Result<Vec<Isometry3<f64>>> {
        self.check_dim(q)?;
        let mut t = Isometry3::identity();
        Ok(self
            .joints
            .iter()
            .zip(q.iter())
            .map(|(j, &qi)| {
                t *= j.origin;
                t *= UnitQuaternion::from_axis_angle(&j.axis, qi);
                t
            })
            .collect())
    }

    pub fn chain_state(&self, q: &Configuration) -> Result<ChainState> {
        self.check_dim(q)?;
        let n = self.dof();
        let mut axes = Vec::with_capacity(n);
        let mut origins = Vec::with_capacity(n);
        let mut frames = Vec::with_capacity(n);
        let mut t = Isometry3::identity();
        for (j, &qi) in self.joints.iter().zip(q.iter()) {
            t *= j.origin;
            axes.push(t.rotation * j.axis.into_inner());
            origins.push(t.translation.vector);
            t *= UnitQuaternion::from_axis_angle(&j.axis, qi);
            frames.push(t);
        }
        let points = self
            .spec
            .poi
            .iter()
            .map(|p| frames[p.link].transform_point(&Vector3::from(p.offset).into()).coords)
            .collect();
        Ok(ChainState { axes, origins, points })
    }

    /// Fixed point where the chain is mounted; the first capsule starts here.
    pub fn base_point(&self) -> Vector3<f64> {
        self.joints[0].origin.translation.vector
    }

    /// World position of every point of interest.
    pub fn forward_points(&self, q: &Configuration) -> Result<Vec<Vector3<f64>>> {
        Ok(self.chain_state(q)?.points)
    }

    /// 3×n linear-velocity Jacobian of one point of interest.
    pub fn point_jacobian(&self, q: &Configuration, poi_index: usize) -> Result<Matrix3xX<f64>> {
        if poi_index >= self.poi_count() {
            return Err(Error::InvalidPoi { index: poi_index, count: self.poi_count() });
        }
        let state = self.chain_state(q)?;
        Ok(state.jacobian(poi_index, self.spec.poi[poi_index].link))
    }

    pub(crate) fn poi_link(&self, poi_index: usize) -> usize {
        self.spec.poi[poi_index].link
    }
}

impl ChainState {
    pub fn jacobian(&self, poi_index: usize, link: usize) -> Matrix3xX<f64> {
        let n = self.axes.len();
        let p = self.points[poi_index];
        let mut jac = Matrix3xX::zeros(n);
        for i in 0..=link {
            jac.set_column(i, &self.axes[i].cross(&(p - self.origins[i])));
        }
        jac
    }

    /// `J_j(q) * qdot` without materializing the Jacobian.
    pub fn point_velocity(&self, poi_index: usize, link: usize, qdot: &DVector<f64>) -> Vector3<f64> {
        let p = self.points[poi_index];
        (0..=link).fold(Vector3::zeros(), |acc, i| {
            acc + self.axes[i].cross(&(p - self.origins[i])) * qdot[i]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn q(v: &[f64]) -> Configuration {
        DVector::from_row_slice(v)
    }

    #[test]
    fn planar_straight_chain() {
        let m = RobotModel::planar_2dof();
        let pts = m.forward_points(&q(&[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(pts[0], Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(pts[1], Vector3::new(2.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn planar_right_angle() {
        let m = RobotModel::planar_2dof();
        let pts = m.forward_points(&q(&[FRAC_PI_2, 0.0])).unwrap();
        assert_abs_diff_eq!(pts[0], Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(pts[1], Vector3::new(0.0, 2.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn planar_tip_jacobian_column_norms() {
        let m = RobotModel::planar_2dof();
        let jac = m.point_jacobian(&q(&[0.0, 0.0]), 1).unwrap();
        assert_abs_diff_eq!(jac.column(0).norm(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jac.column(1).norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn point_on_axis_has_zero_column() {
        let mut spec = RobotModel::planar_2dof().spec().clone();
        spec.poi.push(PointOfInterest { link: 1, offset: [0.0; 3] });
        let m = RobotModel::new(spec).unwrap();
        let jac = m.point_jacobian(&q(&[0.3, -0.7]), 2).unwrap();
        assert_eq!(jac.column(1).norm(), 0.0);
        assert!(jac.column(0).norm() > 0.9);
    }

    #[test]
    fn dimension_and_index_errors() {
        let m = RobotModel::planar_2dof();
        assert!(matches!(
            m.forward_points(&q(&[0.0])),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
        assert!(matches!(
            m.point_jacobian(&q(&[0.0, 0.0]), 5),
            Err(Error::InvalidPoi { index: 5, count: 2 })
        ));
    }

    #[test]
    fn rejects_bad_models() {
        let base = RobotModel::planar_2dof().spec().clone();
        let mut s = base.clone();
        s.qdot_max[0] = 0.0;
        assert!(RobotModel::new(s).is_err());
        let mut s = base.clone();
        s.q_min[1] = s.q_max[1];
        assert!(RobotModel::new(s).is_err());
        let mut s = base.clone();
        s.poi.clear();
        assert!(RobotModel::new(s).is_err());
        let mut s = base;
        s.poi[0].link = 2;
        assert!(RobotModel::new(s).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = RobotModel::ur10e_like();
        let text = serde_json::to_string(m.spec()).unwrap();
        let back = RobotModel::from_json_str(&text).unwrap();
        let qq = q(&[0.1, -0.4, 0.9, -0.2, 0.5, 0.3]);
        assert_eq!(m.forward_points(&qq).unwrap(), back.forward_points(&qq).unwrap());
    }
}
