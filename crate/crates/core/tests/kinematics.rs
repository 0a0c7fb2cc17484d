mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use replan_core::kinematics::{JointSpec, PointOfInterest};
use replan_core::{RobotModel, RobotModelSpec};

fn tilted_model() -> RobotModel {
    let joint = |xyz: [f64; 3], rpy: [f64; 3], axis: [f64; 3]| JointSpec {
        name: String::new(),
        origin_xyz: xyz,
        origin_rpy: rpy,
        axis,
    };
    RobotModel::new(RobotModelSpec {
        name: "tilted".into(),
        joints: vec![
            joint([0.1, -0.2, 0.3], [0.3, -0.7, 1.1], [0.0, 0.0, 1.0]),
            joint([0.4, 0.0, 0.1], [-1.2, 0.4, 0.0], [1.0, 1.0, 0.0]),
            joint([0.0, 0.35, 0.0], [0.0, 0.0, 2.0], [0.2, -0.5, 1.0]),
        ],
        qdot_max: vec![1.0; 3],
        qddot_max: vec![1.0; 3],
        q_min: vec![-3.0; 3],
        q_max: vec![3.0; 3],
        poi: vec![
            PointOfInterest { link: 0, offset: [0.2, 0.1, 0.0] },
            PointOfInterest { link: 2, offset: [0.0, 0.0, 0.0] },
            PointOfInterest { link: 2, offset: [0.15, -0.05, 0.3] },
        ],
        link_radius: 0.05,
    })
    .unwrap()
}

#[test]
fn forward_points_match_transform_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for model in [RobotModel::ur10e_like(), RobotModel::planar_2dof(), tilted_model()] {
        for _ in 0..200 {
            let q = common::random_config(&model, &mut rng);
            let got = model.forward_points(&q).unwrap();
            let want = common::fk_oracle(model.spec(), q.as_slice());
            for (g, w) in got.iter().zip(&want) {
                for k in 0..3 {
                    assert!((g[k] - w[k]).abs() <= 1e-12, "{}: {g:?} vs {w:?}", model.name());
                }
            }
        }
    }
}

#[test]
fn jacobians_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for model in [RobotModel::ur10e_like(), RobotModel::planar_2dof(), tilted_model()] {
        let err = common::jacobian_fd_error(&model, 300, &mut rng);
        assert!(err <= 1e-5, "{}: {err}", model.name());
    }
}
