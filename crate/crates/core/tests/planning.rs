mod common;

use std::sync::Arc;

use nalgebra::Vector3;

use replan_core::planner::{configuration as q, mean_tool_distance, PathSetConfig};
use replan_core::{
    path_cost, plan, plan_path_set, Budget, CostModel, HumanState, Obstacle, PlannerConfig, RobotModel, SafetyCost,
    SafetyMode, Scene, SsmParams,
};

fn gate_scene() -> Scene {
    // Spheres at the stretched and half-folded elbow leave two gaps.
    let at = |a: f64| [1.0 + a.cos(), a.sin(), 0.0];
    Scene {
        static_obstacles: vec![
            Obstacle::Sphere { center: [1.6, 0.0, 0.0], radius: 0.15 },
            Obstacle::Sphere { center: at(1.2), radius: 0.15 },
            Obstacle::Sphere { center: at(-1.2), radius: 0.15 },
        ],
        human_clearance: 0.0,
    }
}

#[test]
fn planner_cost_is_close_to_the_grid_optimum() {
    let model = RobotModel::planar_2dof();
    let scene = gate_scene();
    let grid = common::Grid2::new(&model, &scene, -3.0, 3.0, 0.05);
    let (s, g) = (grid.index(&[-1.0, 0.0]), grid.index(&[1.0, 0.0]));
    let oracle = grid.dijkstra(&model, &scene, s, common::weighted(&model))[g];
    assert!(oracle.is_finite() && oracle > 2.05);

    let cfg = PlannerConfig::default().with_seed(9).with_budget(Budget::iterations(4000));
    let nobody = HumanState::absent(0.0);
    let r = plan(&model, &scene, &nobody, &grid.config(s), &grid.config(g), &CostModel::WeightedLength, &cfg).unwrap();
    assert!(r.solved());
    assert!((r.cost - oracle).abs() <= 0.05 * oracle, "planner {} vs grid {oracle}", r.cost);
}

#[test]
fn safety_aware_plan_is_no_worse_than_the_straight_path() {
    let model = RobotModel::planar_2dof();
    let scene = Scene { static_obstacles: vec![], human_clearance: 0.05 };
    let human = HumanState::stationary(0.0, &[Vector3::new(2.3, 0.3, 0.0)]);
    let cm = CostModel::HampTime(SafetyCost::new(SafetyMode::Ssm(SsmParams::default()), 0.05));
    let (a, b) = (q(&[-1.0, 0.0]), q(&[1.0, 0.0]));
    let straight = path_cost(&model, &[a.clone(), b.clone()], &human, &cm).unwrap();
    let cfg = PlannerConfig::default().with_seed(2).with_budget(Budget::iterations(1500));
    let r = plan(&model, &scene, &human, &a, &b, &cm, &cfg).unwrap();
    assert!(r.solved());
    assert!(r.cost <= straight * (1.0 + 1e-12), "{} > {straight}", r.cost);
    assert!(r.cost < straight, "the human beside the straight sweep should be avoided");
    let recomputed = path_cost(&model, r.path.unwrap().waypoints(), &human, &cm).unwrap();
    assert!((recomputed - r.cost).abs() <= 1e-9 * r.cost);
}

fn set_config(count: usize) -> PathSetConfig {
    PathSetConfig { count, planner: PlannerConfig::default().with_seed(7), ..PathSetConfig::default() }
}

#[test]
fn path_set_of_one_is_the_plan() {
    let sc = replan_core::Scenario::bundled("short").unwrap().unwrap();
    let model = sc.model().unwrap();
    let nobody = HumanState::absent(0.0);
    let cfg = set_config(1);
    let set = plan_path_set(&model, &sc.scene, &nobody, &sc.start(), &sc.goal(), &CostModel::WeightedLength, &cfg).unwrap();
    let single = plan(&model, &sc.scene, &nobody, &sc.start(), &sc.goal(), &CostModel::WeightedLength, &cfg.planner).unwrap();
    assert!(set.complete);
    assert_eq!(set.paths, vec![single.path.unwrap()]);
}

#[test]
fn path_set_members_are_spread_apart() {
    let model = Arc::new(RobotModel::ur10e_like());
    let scene = Scene::empty();
    let nobody = HumanState::absent(0.0);
    let (a, b) = (q(&[-1.6, -0.5, 0.9, 0.0, 0.0, 0.0]), q(&[1.8, -0.5, 0.9, 0.0, 0.0, 0.0]));
    let cfg = set_config(3);
    let set = plan_path_set(&model, &scene, &nobody, &a, &b, &CostModel::WeightedLength, &cfg).unwrap();
    assert!(set.complete);
    assert_eq!(set.paths.len(), 3);
    for i in 0..3 {
        for j in i + 1..3 {
            let d = mean_tool_distance(&model, &set.paths[i], &set.paths[j]).unwrap();
            assert!(d > cfg.min_mean_distance, "paths {i} and {j}: {d}");
        }
    }
}

#[test]
fn walled_off_goal_yields_an_empty_set() {
    let model = RobotModel::planar_2dof();
    let scene = Scene {
        static_obstacles: vec![Obstacle::Box { min: [-0.05, 0.3, -0.1], max: [0.05, 0.5, 0.1] }],
        human_clearance: 0.0,
    };
    let mut cfg = set_config(3);
    cfg.planner.budget = Budget::iterations(400);
    let nobody = HumanState::absent(0.0);
    let set = plan_path_set(&model, &scene, &nobody, &q(&[0.0, 0.0]), &q(&[2.5, 0.0]), &CostModel::WeightedLength, &cfg)
        .unwrap();
    assert!(!set.complete);
    assert!(set.paths.is_empty());
}
