//! Simulated execution of one episode: trajectory tracking with runtime speed
//! scaling, periodic human snapshots and periodic replanning, all driven by a
//! single simulated clock.

mod benchmark;
mod trajectory;

pub use benchmark::{
    quartiles, run_benchmark, summarize, write_metrics_csv, write_replan_csv, write_summary_csv, BenchmarkRow,
    SummaryRow, METRICS_HEADER,
};
pub use trajectory::{parametrize, reverses, Trajectory, TrajectoryState, REVERSAL_TOLERANCE};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cost::{path_cost, CostModel, SafetyCost};
use crate::error::{Error, Result};
use crate::kinematics::RobotModel;
use crate::path::{Path, PathPoint};
use crate::planner::{plan, plan_path_set, Budget, PathSetConfig};
use crate::replanner::{ReplanBudget, ReplanRequest, Replanner, ReplannerConfig};
use crate::safety::{MovingPoints, SafetyMode, SsmParams};
use crate::scenario::Scenario;
use crate::world::{check_config, check_connection, separation_from_points, HumanState};

/// Longest connection kept in executed and precomputed paths, rad.
pub const MAX_CONNECTION_LENGTH: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Initial path only, slowed by the safety layer.
    Dssm,
    /// Replanning on path length.
    Mars,
    /// Replanning on the safety-aware time cost.
    Marsha,
    /// Safety-aware offline path, no replanning.
    Hamp,
    /// Shortest offline path, no replanning.
    MinLen,
    /// Shortest offline path followed by safety-aware replanning.
    MarshaLen,
}

impl Strategy {
    pub const ALL: [Strategy; 6] =
        [Strategy::Dssm, Strategy::Mars, Strategy::Marsha, Strategy::Hamp, Strategy::MinLen, Strategy::MarshaLen];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Dssm => "dSSM",
            Strategy::Mars => "MARS",
            Strategy::Marsha => "MARSHA",
            Strategy::Hamp => "HAMP",
            Strategy::MinLen => "MIN-LEN",
            Strategy::MarshaLen => "MARSHA_LEN",
        }
    }

    pub fn replans(&self) -> bool {
        matches!(self, Strategy::Mars | Strategy::Marsha | Strategy::MarshaLen)
    }

    fn needs_hamp(&self, proactive: bool) -> bool {
        matches!(self, Strategy::Hamp) || (proactive && matches!(self, Strategy::Marsha))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_', '+'], "");
        Ok(match key.as_str() {
            "dssm" => Strategy::Dssm,
            "mars" | "marsdssm" => Strategy::Mars,
            "marsha" | "marshadssm" => Strategy::Marsha,
            "hamp" | "hampdssm" => Strategy::Hamp,
            "minlen" | "minlendssm" => Strategy::MinLen,
            "marshalen" | "marshalendssm" => Strategy::MarshaLen,
            _ => return Err(Error::InvalidParams(format!("unknown strategy '{s}'"))),
        })
    }
}

/// Loop rates of the executor, the human snapshot and the replanner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub execution_hz: f64,
    pub check_hz: f64,
    pub replan_hz: f64,
    pub replan_budget_ms: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self { execution_hz: 500.0, check_hz: 25.0, replan_hz: 5.0, replan_budget_ms: 200.0 }
    }
}

impl Rates {
    pub fn validate(&self) -> Result<()> {
        let all = [self.execution_hz, self.check_hz, self.replan_hz, self.replan_budget_ms];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParams("rates and budget must be positive".into()));
        }
        if !(self.execution_hz >= self.check_hz && self.check_hz >= self.replan_hz) {
            return Err(Error::InvalidParams("rates must satisfy execution ≥ check ≥ replan".into()));
        }
        Ok(())
    }

    fn ticks(&self, hz: f64) -> u64 {
        ((self.execution_hz / hz).round() as u64).max(1)
    }
}

/// Whether the replanning budget is counted in work units or wall time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BudgetMode {
    #[default]
    Simulated,
    WallClock,
}

/// Everything planned once per scenario and shared by its episodes.
#[derive(Clone, Debug)]
pub struct ScenarioAssets {
    pub model: RobotModel,
    /// Best path without a human; defines the reference duration.
    pub reference: Path,
    pub path_set: Vec<Path>,
    pub path_set_complete: bool,
    pub min_len: Path,
    pub hamp: Option<Path>,
}

/// Planning effort for scenario assets.
#[derive(Clone, Debug)]
pub struct AssetConfig {
    pub path_set: PathSetConfig,
    /// Budget of the safety-aware offline planner.
    pub hamp_budget: Budget,
}

impl Default for AssetConfig {
    fn default() -> Self {
        Self { path_set: PathSetConfig::default(), hamp_budget: Budget::iterations(1500) }
    }
}

impl ScenarioAssets {
    pub fn prepare(scenario: &Scenario, strategies: &[Strategy], cfg: &AssetConfig) -> Result<Self> {
        let model = scenario.model()?;
        let (start, goal) = (scenario.start(), scenario.goal());
        let nobody = HumanState::absent(0.0);
        let planner = cfg.path_set.planner.clone().with_seed(scenario.planning_seed);
        let reference = plan(&model, &scenario.scene, &nobody, &start, &goal, &CostModel::WeightedLength, &planner)?
            .path
            .ok_or_else(|| Error::Scenario("no human-free path between start and goal".into()))?;
        let min_len = plan(&model, &scenario.scene, &nobody, &start, &goal, &CostModel::PathLength, &planner)?
            .path
            .ok_or_else(|| Error::Scenario("no human-free path between start and goal".into()))?;
        let set_cfg = PathSetConfig { count: scenario.path_set_size, planner, ..cfg.path_set.clone() };
        let set = plan_path_set(&model, &scenario.scene, &nobody, &start, &goal, &CostModel::WeightedLength, &set_cfg)?;
        let path_set = set.paths.iter().map(|p| p.densify(MAX_CONNECTION_LENGTH)).collect();
        let hamp = if strategies.iter().any(|s| s.needs_hamp(scenario.proactive)) {
            let human = planning_human(scenario);
            let cm = CostModel::HampTime(SafetyCost::new(SafetyMode::Ssm(scenario.safety), scenario.scene.human_clearance));
            let hcfg = cfg.path_set.planner.clone().with_seed(scenario.planning_seed).with_budget(cfg.hamp_budget);
            let report = plan(&model, &scenario.scene, &human, &start, &goal, &cm, &hcfg)?;
            Some(report.path.ok_or_else(|| Error::Scenario("safety-aware planner found no path".into()))?)
        } else {
            None
        };
        Ok(Self { model, reference, path_set, path_set_complete: set.complete, min_len, hamp })
    }

    fn initial_path(&self, strategy: Strategy, proactive: bool) -> Result<Path> {
        let p = match strategy {
            Strategy::Hamp => self.hamp.as_ref(),
            Strategy::Marsha if proactive => self.hamp.as_ref(),
            Strategy::MinLen | Strategy::MarshaLen => Some(&self.min_len),
            _ => Some(&self.reference),
        };
        p.cloned().ok_or_else(|| Error::Scenario(format!("no initial path prepared for {strategy}")))
    }
}

/// Human state known to offline planners: the noise-free schedule at t = 0.
pub fn planning_human(scenario: &Scenario) -> HumanState {
    let mut script = scenario.human.clone();
    script.noise_amplitude = 0.0;
    script.time_jitter = 0.0;
    script.sample(0.0)
}

#[derive(Clone, Debug)]
pub struct EpisodeConfig {
    pub scenario: Arc<Scenario>,
    pub strategy: Strategy,
    pub rates: Rates,
    pub speed_fraction: f64,
    pub seed: u64,
    /// Replaces the scenario's safety parameters when set.
    pub safety: Option<SsmParams>,
    pub budget_mode: BudgetMode,
    pub record_trace: bool,
    pub replanner: ReplannerConfig,
    /// Free-form tag distinguishing variants of one scenario in a suite.
    pub label: String,
}

impl EpisodeConfig {
    pub fn new(scenario: Arc<Scenario>, strategy: Strategy, seed: u64) -> Self {
        Self {
            scenario,
            strategy,
            rates: Rates::default(),
            speed_fraction: 1.0,
            seed,
            safety: None,
            budget_mode: BudgetMode::Simulated,
            record_trace: false,
            replanner: ReplannerConfig::default(),
            label: String::new(),
        }
    }

    pub fn ssm(&self) -> SsmParams {
        self.safety.unwrap_or(self.scenario.safety)
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        self.ssm().validate()?;
        if !(self.speed_fraction > 0.0 && self.speed_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!("speed fraction {} outside (0, 1]", self.speed_fraction)));
        }
        Ok(())
    }

    fn replan_cost(&self) -> CostModel {
        match self.strategy {
            Strategy::Mars => CostModel::WeightedLength,
            _ => CostModel::MarshaTime(
                SafetyCost::new(SafetyMode::Ssm(self.ssm()), self.scenario.scene.human_clearance)
                    .with_speed_fraction(self.speed_fraction),
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EpisodeMetrics {
    pub completed: bool,
    /// Executed duration, s.
    pub exec_time: f64,
    pub exec_time_norm: f64,
    /// Mean of 100 × speed scale over the executed ticks.
    pub avg_scaling: f64,
    pub replan_calls: usize,
    pub replan_adoptions: usize,
    pub min_separation_observed: f64,
    /// Smallest separation at which the robot was moving towards the human.
    pub min_closing_separation: f64,
    /// Largest robot closing speed above its limit over all ticks, m/s.
    pub max_speed_excess: f64,
    /// Ticks where the robot moved although a closing pair was inside `C`.
    pub stop_violations: usize,
    /// Adoptions whose cost was not below the replaced remainder.
    pub acceptance_violations: usize,
    /// Adopted paths that fail collision checking against their snapshot.
    pub feasibility_violations: usize,
    /// Replan calls evaluating more connections than their candidate chains.
    pub lazy_violations: usize,
}

/// Diagnostics of one replanning call.
#[derive(Clone, Debug, Serialize)]
pub struct ReplanRecord {
    pub t: f64,
    pub elapsed_ms: f64,
    pub work: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub chain_connections: usize,
    pub solved: bool,
}

/// Costs of both sides of an adoption, recomputed outside the replanner.
#[derive(Clone, Debug, Serialize)]
pub struct AdoptionRecord {
    pub t: f64,
    pub previous_cost: f64,
    pub adopted_cost: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub tick: u64,
    pub t: f64,
    pub q: Vec<f64>,
    pub scale: f64,
    pub separation: f64,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub metrics: EpisodeMetrics,
    pub reference_duration: f64,
    pub replans: Vec<ReplanRecord>,
    pub adoptions: Vec<AdoptionRecord>,
    pub trace: Vec<TraceRow>,
}

fn seed_mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cost of the remainder of `path` from `p`, `+∞` when any connection is
/// blocked under `human`.
fn remainder_cost(model: &RobotModel, cfg: &EpisodeConfig, path: &Path, p: PathPoint, human: &HumanState, cm: &CostModel) -> Result<f64> {
    let Ok(rest) = path.tail_from(p) else { return Ok(0.0) };
    if !path_feasible(model, cfg, &rest, human) {
        return Ok(f64::INFINITY);
    }
    path_cost(model, rest.waypoints(), human, cm)
}

fn path_feasible(model: &RobotModel, cfg: &EpisodeConfig, path: &Path, human: &HumanState) -> bool {
    path.waypoints()
        .windows(2)
        .all(|w| check_connection(model, &w[0], &w[1], human, &cfg.scenario.scene, cfg.replanner.check_step))
}

pub fn run_episode(cfg: &EpisodeConfig) -> Result<EpisodeOutcome> {
    let assets = ScenarioAssets::prepare(&cfg.scenario, &[cfg.strategy], &AssetConfig::default())?;
    run_episode_with(cfg, &assets)
}

pub fn run_episode_with(cfg: &EpisodeConfig, assets: &ScenarioAssets) -> Result<EpisodeOutcome> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let model = &assets.model;
    let ssm = cfg.ssm();
    let mode = SafetyMode::Ssm(ssm);
    let clearance = sc.scene.human_clearance;
    let script = sc.human.with_seed(cfg.seed);
    let clock_rate = if sc.task_clock { cfg.speed_fraction } else { 1.0 };
    let human_at = |t: f64| {
        let mut h = script.sample(t * clock_rate);
        h.t = t;
        for k in &mut h.keypoints {
            k.velocity *= clock_rate;
        }
        h
    };

    let start = sc.start();
    if !check_config(model, &start, &human_at(0.0), &sc.scene) {
        return Err(Error::InfeasibleStart);
    }
    let reference = Trajectory::parametrize(model, &assets.reference, cfg.speed_fraction, 0.0)?;
    let t_ref = reference.duration();
    let timeout = sc.timeout_factor * t_ref;

    let mut path = assets.initial_path(cfg.strategy, sc.proactive)?.densify(MAX_CONNECTION_LENGTH);
    let mut traj = Trajectory::parametrize(model, &path, cfg.speed_fraction, 0.0)?;
    let cm = cfg.replan_cost();
    let mut replanner = cfg
        .strategy
        .replans()
        .then(|| Replanner::new(model.clone(), sc.scene.clone(), cfg.replanner.clone()));
    let budget = match cfg.budget_mode {
        BudgetMode::Simulated => ReplanBudget::from_millis(cfg.rates.replan_budget_ms),
        BudgetMode::WallClock => ReplanBudget::with_wall_clock(cfg.rates.replan_budget_ms),
    };

    let dt = 1.0 / cfg.rates.execution_hz;
    let check_every = cfg.rates.ticks(cfg.rates.check_hz);
    let replan_every = cfg.rates.ticks(cfg.rates.replan_hz);

    let mut m = EpisodeMetrics {
        min_separation_observed: f64::INFINITY,
        min_closing_separation: f64::INFINITY,
        max_speed_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut replans = Vec::new();
    let mut adoptions = Vec::new();
    let mut trace = Vec::new();
    let mut snapshot = human_at(0.0);
    let mut tau = 0.0;
    let mut tick: u64 = 0;
    let mut scale_sum = 0.0;

    loop {
        let t = tick as f64 * dt;
        if tau >= traj.duration() {
            m.completed = true;
            break;
        }
        if t > timeout {
            break;
        }
        if tick % check_every == 0 {
            snapshot = human_at(t);
        }
        if let Some(rp) = replanner.as_mut() {
            if tick % replan_every == 0 {
                let here = traj.sample(tau);
                let req = ReplanRequest {
                    current_path: &path,
                    progress: here.point,
                    path_set: &assets.path_set,
                    human: &snapshot,
                    budget,
                    cm: &cm,
                    seed: seed_mix(cfg.seed, tick),
                };
                let res = rp.replan(&req)?;
                m.replan_calls += 1;
                if res.stats.evaluations > res.stats.chain_connections {
                    m.lazy_violations += 1;
                }
                replans.push(ReplanRecord {
                    t,
                    elapsed_ms: res.stats.elapsed.as_secs_f64() * 1e3,
                    work: res.stats.work,
                    iterations: res.stats.iterations,
                    evaluations: res.stats.evaluations,
                    chain_connections: res.stats.chain_connections,
                    solved: res.solved,
                });
                if let (true, Some(new_path)) = (res.solved, res.path) {
                    let previous_cost = remainder_cost(model, cfg, &path, here.point, &snapshot, &cm)?;
                    let adopted_cost = path_cost(model, new_path.waypoints(), &snapshot, &cm)?;
                    let feasible = path_feasible(model, cfg, &new_path, &snapshot);
                    if !(adopted_cost < previous_cost) {
                        m.acceptance_violations += 1;
                    }
                    if !feasible {
                        m.feasibility_violations += 1;
                    }
                    adoptions.push(AdoptionRecord { t, previous_cost, adopted_cost, feasible });
                    m.replan_adoptions += 1;

                    // Keep the current speed when no joint has to turn around.
                    let next = new_path.densify(MAX_CONNECTION_LENGTH);
                    let w = next.waypoints();
                    let dir = &w[1] - &w[0];
                    let v0 = if reverses(&here.qdot, &dir) { 0.0 } else { here.speed };
                    traj = Trajectory::parametrize(model, &next, cfg.speed_fraction, v0)?;
                    path = next;
                    tau = 0.0;
                }
            }
        }

        let human = human_at(t);
        let state = traj.sample(tau);
        let chain = model.chain_state(&state.q)?;
        let moving = MovingPoints::new(model, &chain, &state.qdot);
        let scale = if human.is_empty() { 1.0 } else { moving.scale(&human, &mode, clearance) };
        audit(&moving, &human, &mode, clearance, ssm.c, scale, &mut m);
        let sep = separation_from_points(&chain.points, &human, clearance);
        if !human.is_empty() {
            m.min_separation_observed = m.min_separation_observed.min(sep);
        }
        if cfg.record_trace {
            trace.push(TraceRow { tick, t, q: state.q.iter().copied().collect(), scale, separation: sep });
        }
        scale_sum += scale;
        tau += dt * scale;
        tick += 1;
    }

    m.exec_time = tick as f64 * dt;
    m.exec_time_norm = m.exec_time / t_ref;
    m.avg_scaling = if tick > 0 { 100.0 * scale_sum / tick as f64 } else { 100.0 };
    if m.max_speed_excess == f64::NEG_INFINITY {
        m.max_speed_excess = 0.0;
    }
    Ok(EpisodeOutcome { metrics: m, reference_duration: t_ref, replans, adoptions, trace })
}

/// Checks the commanded motion of one tick against the speed limits.
fn audit(moving: &MovingPoints, human: &HumanState, mode: &SafetyMode, clearance: f64, c: f64, scale: f64, m: &mut EpisodeMetrics) {
    let mut stop_needed = false;
    for (r, r_dot) in moving.points.iter().zip(&moving.velocities) {
        for k in &human.keypoints {
            let d = k.position - r;
            let dist = d.norm();
            let nominal = if dist > 0.0 { r_dot.dot(&d) / dist } else { r_dot.norm() };
            let sep = dist - clearance;
            let actual = scale * nominal;
            m.max_speed_excess = m.max_speed_excess.max(actual - mode.vmax(sep));
            if actual > 0.0 {
                m.min_closing_separation = m.min_closing_separation.min(sep);
            }
            if nominal > 0.0 && sep <= c {
                stop_needed = true;
            }
        }
    }
    if stop_needed && scale > 0.0 {
        m.stop_violations += 1;
    }
}
