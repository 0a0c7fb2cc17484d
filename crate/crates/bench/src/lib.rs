//! Shared fixtures for the micro-benchmarks.

use replan_core::executor::{AssetConfig, ScenarioAssets, Strategy};
use replan_core::{CostModel, HumanState, SafetyCost, SafetyMode, Scenario};

/// Bundled long scenario with its planned assets and the human mid-visit.
pub struct Fixture {
    pub scenario: Scenario,
    pub assets: ScenarioAssets,
    pub human: HumanState,
}

impl Fixture {
    pub fn long() -> Self {
        let scenario = Scenario::bundled("long").expect("bundled").expect("valid");
        let assets = ScenarioAssets::prepare(&scenario, &[Strategy::Marsha], &AssetConfig::default()).expect("assets");
        let human = scenario.human.sample(6.0);
        Self { scenario, assets, human }
    }

    pub fn marsha_cost(&self) -> CostModel {
        CostModel::MarshaTime(SafetyCost::new(SafetyMode::Ssm(self.scenario.safety), self.scenario.scene.human_clearance))
    }

    pub fn hamp_cost(&self) -> CostModel {
        CostModel::HampTime(SafetyCost::new(SafetyMode::Ssm(self.scenario.safety), self.scenario.scene.human_clearance))
    }
}
