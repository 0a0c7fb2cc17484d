//! Human-aware path replanning for serial manipulators.

pub mod cost;
pub mod error;
pub mod executor;
pub mod kinematics;
pub mod path;
pub mod planner;
pub mod replanner;
pub mod safety;
pub mod sampling;
pub mod scenario;
pub mod world;

pub use cost::{connection_cost, path_cost, CostModel, SafetyCost};
pub use error::{Error, Result};
pub use executor::{
    parametrize, run_benchmark, run_episode, run_episode_with, EpisodeConfig, EpisodeMetrics, Rates, ScenarioAssets,
    Strategy, Trajectory,
};
pub use kinematics::{Configuration, RobotModel, RobotModelSpec};
pub use path::{ConnectionOrder, Path, PathPoint};
pub use planner::{plan, plan_path_set, Budget, PlanReport, PlannerConfig, Tree};
pub use replanner::{project_on_path, ReplanBudget, ReplanRequest, ReplanResult, Replanner, ReplannerConfig};
pub use safety::{execution_scale, lambda_at, PflParams, SafetyMode, SsmParams};
pub use sampling::{heuristic, sample_informed, InformedSet};
pub use scenario::Scenario;
pub use world::{check_config, check_connection, HumanScript, HumanState, Keypoint, Obstacle, Scene};
