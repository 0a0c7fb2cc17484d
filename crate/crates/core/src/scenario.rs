//! Benchmark scenarios: robot, static scene, scripted human, start and goal.

use std::path::Path as FsPath;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Configuration, RobotModel, RobotModelSpec};
use crate::safety::SsmParams;
use crate::world::{check_config, HumanScript, HumanState, Scene};

/// A bundled robot by name or a full model description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RobotSource {
    Builtin(String),
    Inline(Box<RobotModelSpec>),
}

impl RobotSource {
    pub fn build(&self) -> Result<RobotModel> {
        match self {
            RobotSource::Builtin(name) => match name.as_str() {
                "ur10e_like" => Ok(RobotModel::ur10e_like()),
                "planar_2dof" => Ok(RobotModel::planar_2dof()),
                other => Err(Error::Scenario(format!("unknown robot '{other}'"))),
            },
            RobotSource::Inline(spec) => RobotModel::new((**spec).clone()),
        }
    }
}

fn default_path_set_size() -> usize {
    3
}

fn default_timeout_factor() -> f64 {
    8.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub robot: RobotSource,
    pub q_start: Vec<f64>,
    pub q_goal: Vec<f64>,
    pub scene: Scene,
    pub human: HumanScript,
    pub safety: SsmParams,
    /// The human is already present when the initial path is planned.
    #[serde(default)]
    pub proactive: bool,
    #[serde(default)]
    pub planning_seed: u64,
    #[serde(default = "default_path_set_size")]
    pub path_set_size: usize,
    /// The human script runs on task time: its clock advances at the
    /// commanded speed fraction, so slower runs meet the same interaction.
    #[serde(default)]
    pub task_clock: bool,
    /// Episodes stop unfinished after this multiple of the reference duration.
    #[serde(default = "default_timeout_factor")]
    pub timeout_factor: f64,
}

pub const BUNDLED_SCENARIOS: [&str; 4] = ["short", "medium", "long", "proactive"];

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Loads a bundled scenario by name, or a file when `name` is a path.
    pub fn resolve(name: &str) -> Result<Self> {
        match Self::bundled(name) {
            Some(s) => s,
            None => Self::load(name),
        }
    }

    pub fn bundled(name: &str) -> Option<Result<Self>> {
        let text = match name {
            "short" => include_str!("../data/scenarios/short.json"),
            "medium" => include_str!("../data/scenarios/medium.json"),
            "long" => include_str!("../data/scenarios/long.json"),
            "proactive" => include_str!("../data/scenarios/proactive.json"),
            _ => return None,
        };
        Some(Self::from_json_str(text))
    }

    pub fn model(&self) -> Result<RobotModel> {
        self.robot.build()
    }

    pub fn start(&self) -> Configuration {
        DVector::from_row_slice(&self.q_start)
    }

    pub fn goal(&self) -> Configuration {
        DVector::from_row_slice(&self.q_goal)
    }

    /// Checks every field and that start and goal are collision free without
    /// the human.
    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        self.scene.validate()?;
        self.human.validate()?;
        self.safety.validate()?;
        let (s, g) = (self.start(), self.goal());
        model.check_dim(&s)?;
        model.check_dim(&g)?;
        if s == g {
            return Err(Error::Scenario("start and goal coincide".into()));
        }
        let nobody = HumanState::absent(0.0);
        if !check_config(&model, &s, &nobody, &self.scene) {
            return Err(Error::Scenario("start configuration is in collision or outside the joint limits".into()));
        }
        if !check_config(&model, &g, &nobody, &self.scene) {
            return Err(Error::Scenario("goal configuration is in collision or outside the joint limits".into()));
        }
        if self.path_set_size == 0 {
            return Err(Error::Scenario("path_set_size must be at least 1".into()));
        }
        if !(self.timeout_factor > 1.0) {
            return Err(Error::Scenario("timeout_factor must exceed 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_validate() {
        for name in BUNDLED_SCENARIOS {
            let s = Scenario::bundled(name).unwrap().unwrap();
            assert_eq!(s.name, name);
        }
        assert!(Scenario::bundled("nope").is_none());
    }

    #[test]
    fn rejects_colliding_start() {
        let mut s = Scenario::bundled("short").unwrap().unwrap();
        // Shoulder driven down through the table.
        s.q_start[1] = 1.4;
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_unknown_robot() {
        let mut s = Scenario::bundled("short").unwrap().unwrap();
        s.robot = RobotSource::Builtin("nope".into());
        assert!(s.validate().is_err());
    }
}
