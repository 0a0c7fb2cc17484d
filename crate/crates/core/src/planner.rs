//! Informed RRT* over a configurable connection cost, plus diversified path
//! sets for the replanner.

use std::time::{Duration, Instant};

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha8Rng;

use crate::cost::{connection_cost, path_cost, slowest_joint_time, CostModel};
use crate::error::{Error, Result};
use crate::kinematics::{Configuration, RobotModel};
use crate::path::Path;
use crate::sampling::{sample_informed, InformedSet};
use crate::world::{check_config, check_connection, point_segment_distance, HumanState, Scene, DEFAULT_CHECK_STEP};

/// Stopping rule: an iteration cap, optionally combined with a wall-clock cap.
/// Without the wall-clock part the outcome depends only on the inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub iterations: usize,
    pub wall: Option<Duration>,
}

impl Budget {
    pub const fn iterations(iterations: usize) -> Self {
        Self { iterations, wall: None }
    }

    pub fn exhausted(&self, iterations: usize, started: Instant) -> bool {
        iterations >= self.iterations || self.wall.is_some_and(|w| started.elapsed() >= w)
    }
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub budget: Budget,
    pub seed: u64,
    pub extend_step: f64,
    pub check_step: f64,
    pub goal_connect_radius: f64,
    pub goal_bias: f64,
    /// Upper bound on the shrinking rewire radius, rad.
    pub rewire_radius_max: f64,
    pub max_neighbors: usize,
    pub shortcut: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            budget: Budget::iterations(3000),
            seed: 0,
            extend_step: 0.5,
            check_step: DEFAULT_CHECK_STEP,
            goal_connect_radius: 0.5,
            goal_bias: 0.05,
            rewire_radius_max: 1.0,
            max_neighbors: 24,
            shortcut: true,
        }
    }
}

impl PlannerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    fn validate(&self) -> Result<()> {
        let positive = [self.extend_step, self.check_step, self.goal_connect_radius, self.rewire_radius_max];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) || !(0.0..1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidParams("planner step sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub q: Configuration,
    pub parent: Option<usize>,
    pub edge_cost: Option<f64>,
    pub edge_valid: Option<bool>,
    pub hidden: bool,
    pub second_order: bool,
}

/// Rooted tree with per-edge caches and temporarily hidden branches.
#[derive(Clone, Debug)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    children: Vec<Vec<usize>>,
}

impl Tree {
    pub fn new(root: Configuration) -> Self {
        let node = TreeNode {
            q: root,
            parent: None,
            edge_cost: Some(0.0),
            edge_valid: Some(true),
            hidden: false,
            second_order: false,
        };
        Self { nodes: vec![node], children: vec![Vec::new()] }
    }

    pub fn root(&self) -> &Configuration {
        &self.nodes[0].q
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut TreeNode {
        &mut self.nodes[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn add(&mut self, q: Configuration, parent: usize) -> usize {
        let i = self.nodes.len();
        self.nodes.push(TreeNode {
            q,
            parent: Some(parent),
            edge_cost: None,
            edge_valid: None,
            hidden: false,
            second_order: false,
        });
        self.children.push(Vec::new());
        self.children[parent].push(i);
        i
    }

    pub fn add_second_order(&mut self, q: Configuration, parent: usize, cost: f64) -> usize {
        let i = self.add(q, parent);
        let n = &mut self.nodes[i];
        n.second_order = true;
        n.edge_cost = Some(cost);
        n.edge_valid = Some(true);
        i
    }

    /// Nodes available for growth: visible and not second-order.
    pub fn is_growable(&self, i: usize) -> bool {
        !self.nodes[i].hidden && !self.nodes[i].second_order
    }

    pub fn nearest(&self, q: &Configuration, accept: impl Fn(usize) -> bool) -> Option<usize> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            if !accept(i) {
                continue;
            }
            let d = (&n.q - q).norm_squared();
            if d < best_d {
                best_d = d;
                best = Some(i);
            }
        }
        best
    }

    /// Up to `k` accepted nodes within `radius`, closest first.
    pub fn near(&self, q: &Configuration, radius: f64, k: usize, accept: impl Fn(usize) -> bool) -> Vec<usize> {
        let r2 = radius * radius;
        let mut found: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| accept(*i))
            .map(|(i, n)| ((&n.q - q).norm_squared(), i))
            .filter(|(d, _)| *d <= r2)
            .collect();
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(k);
        found.into_iter().map(|(_, i)| i).collect()
    }

    /// Node indices from the root to `i`, both included.
    pub fn chain_to(&self, i: usize) -> Vec<usize> {
        let mut chain = vec![i];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    pub fn reparent(&mut self, i: usize, new_parent: usize, edge_cost: Option<f64>, edge_valid: Option<bool>) {
        if let Some(old) = self.nodes[i].parent {
            self.children[old].retain(|&c| c != i);
        }
        self.nodes[i].parent = Some(new_parent);
        self.nodes[i].edge_cost = edge_cost;
        self.nodes[i].edge_valid = edge_valid;
        self.children[new_parent].push(i);
    }

    /// `i` and all of its descendants.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut k = 0;
        while k < out.len() {
            out.extend_from_slice(&self.children[out[k]]);
            k += 1;
        }
        out
    }

    pub fn hide_subtree(&mut self, i: usize) {
        for j in self.subtree(i) {
            self.nodes[j].hidden = true;
        }
    }

    pub fn unhide_all(&mut self) {
        self.nodes.iter_mut().for_each(|n| n.hidden = false);
    }

    pub fn clear_edge_caches(&mut self) {
        for n in self.nodes.iter_mut().skip(1) {
            if !n.second_order {
                n.edge_cost = None;
                n.edge_valid = None;
            }
        }
    }

    /// Keeps the nodes whose whole root chain satisfies `keep`; drops
    /// second-order nodes. Indices are compacted.
    pub fn retain(&mut self, keep: impl Fn(&TreeNode) -> bool) {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        let mut order = vec![0usize];
        let mut k = 0;
        while k < order.len() {
            let i = order[k];
            k += 1;
            let n = &self.nodes[i];
            if i != 0 && (n.second_order || !keep(n)) {
                continue;
            }
            map[i] = nodes.len();
            let mut copy = n.clone();
            copy.parent = n.parent.map(|p| map[p]);
            nodes.push(copy);
            order.extend_from_slice(&self.children[i]);
        }
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                children[p].push(i);
            }
        }
        self.nodes = nodes;
        self.children = children;
    }
}

/// Soft penalty for moving the tool close to where earlier paths moved it.
#[derive(Clone, Debug)]
pub struct Diversity {
    /// Tool-point polylines of the paths to stay away from.
    traces: Vec<Vec<Vector3<f64>>>,
    pub weight: f64,
    /// Distance in metres beyond which no penalty applies.
    pub radius: f64,
}

/// Tool positions along `path`, sampled at most `step` rad apart.
pub fn tool_trace(model: &RobotModel, path: &Path, step: f64) -> Result<Vec<Vector3<f64>>> {
    path.densify(step).waypoints().iter().map(|q| tool_point(model, q)).collect()
}

fn tool_point(model: &RobotModel, q: &Configuration) -> Result<Vector3<f64>> {
    let pts = model.forward_points(q)?;
    Ok(pts[pts.len() - 1])
}

fn trace_distance(trace: &[Vector3<f64>], p: &Vector3<f64>) -> f64 {
    trace.windows(2).map(|w| point_segment_distance(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
}

/// Mean over `b`'s tool trace of the distance to `a`'s tool trace, m.
pub fn mean_tool_distance(model: &RobotModel, a: &Path, b: &Path) -> Result<f64> {
    let ta = tool_trace(model, a, 0.1)?;
    let tb = tool_trace(model, b, 0.1)?;
    Ok(tb.iter().map(|p| trace_distance(&ta, p)).sum::<f64>() / tb.len() as f64)
}

impl Diversity {
    pub fn new(model: &RobotModel, avoid: &[Path], weight: f64, radius: f64) -> Result<Self> {
        let traces = avoid.iter().map(|p| tool_trace(model, p, 0.1)).collect::<Result<_>>()?;
        Ok(Self { traces, weight, radius })
    }

    fn factor(&self, model: &RobotModel, a: &Configuration, b: &Configuration) -> Result<f64> {
        if self.traces.is_empty() {
            return Ok(1.0);
        }
        let probes = [0.25, 0.5, 0.75];
        let mut prox = 0.0;
        for t in probes {
            let p = tool_point(model, &(a + (b - a) * t))?;
            let d = self.traces.iter().map(|tr| trace_distance(tr, &p)).fold(f64::INFINITY, f64::min);
            prox += (1.0 - d / self.radius).max(0.0).powi(2);
        }
        Ok(1.0 + self.weight * prox / probes.len() as f64)
    }
}

#[derive(Clone, Debug)]
pub struct PlanReport {
    /// `None` when no solution was found within the budget.
    pub path: Option<Path>,
    /// Cost of `path` under the requested model, `+∞` without a path.
    pub cost: f64,
    pub iterations: usize,
    /// Incumbent cost after each improvement, in the order found.
    pub improvements: Vec<f64>,
    pub tree_size: usize,
}

impl PlanReport {
    pub fn solved(&self) -> bool {
        self.path.is_some()
    }
}

/// Lower bound on the cost of any path through `q` used for pruning and
/// informed sampling.
fn cost_bound(cm: &CostModel, model: &RobotModel, a: &Configuration, q: &Configuration, b: &Configuration) -> f64 {
    let w = model.qdot_max();
    match cm {
        CostModel::PathLength => (q - a).norm() + (b - q).norm(),
        CostModel::WeightedLength | CostModel::MarshaTime(_) => {
            crate::cost::weighted_length(a, q, w) + crate::cost::weighted_length(q, b, w)
        }
        CostModel::HampTime(_) => slowest_joint_time(a, q, w) + slowest_joint_time(q, b, w),
    }
}

struct Search<'a> {
    model: &'a RobotModel,
    scene: &'a Scene,
    human: &'a HumanState,
    cm: &'a CostModel,
    cfg: &'a PlannerConfig,
}

impl Search<'_> {
    fn edge_cost(&self, a: &Configuration, b: &Configuration) -> Result<f64> {
        connection_cost(self.model, a, b, self.human, self.cm)
    }

    fn valid(&self, a: &Configuration, b: &Configuration) -> bool {
        check_connection(self.model, a, b, self.human, self.scene, self.cfg.check_step)
    }

    fn sample<R: Rng>(&self, rng: &mut R, start: &Configuration, goal: &Configuration, c_best: f64) -> Result<Option<Configuration>> {
        let n = self.model.dof();
        if c_best.is_finite() {
            let set = InformedSet::new(self.model, start.clone(), goal.clone(), c_best);
            return Ok(match self.cm {
                CostModel::PathLength => Some(sample_informed(&set.unweighted(), rng)?),
                CostModel::WeightedLength | CostModel::MarshaTime(_) => Some(sample_informed(&set, rng)?),
                CostModel::HampTime(_) => {
                    // The slowest-joint bound is dominated by √n times the
                    // weighted Euclidean one, so sample the larger spheroid
                    // and reject against the tighter bound.
                    let wide = InformedSet { c_best: c_best * (n as f64).sqrt(), ..set };
                    let q = sample_informed(&wide, rng)?;
                    (cost_bound(self.cm, self.model, start, &q, goal) < c_best).then_some(q)
                }
            });
        }
        if rng.random::<f64>() < self.cfg.goal_bias {
            return Ok(Some(goal.clone()));
        }
        let set = InformedSet::new(self.model, start.clone(), goal.clone(), f64::INFINITY);
        Ok(Some(sample_informed(&set, rng)?))
    }

    fn shortcut(&self, mut wps: Vec<Configuration>) -> Result<Vec<Configuration>> {
        let mut i = 0;
        while i + 2 < wps.len() {
            let mut jumped = false;
            for j in (i + 2..wps.len()).rev() {
                let mut along = 0.0;
                for k in i..j {
                    along += self.edge_cost(&wps[k], &wps[k + 1])?;
                }
                let direct = self.edge_cost(&wps[i], &wps[j])?;
                if direct < along && self.valid(&wps[i], &wps[j]) {
                    wps.drain(i + 1..j);
                    jumped = true;
                    break;
                }
            }
            if !jumped {
                i += 1;
            }
        }
        Ok(wps)
    }

    fn run(&self, q_start: &Configuration, q_goal: &Configuration) -> Result<PlanReport> {
        let model = self.model;
        model.check_dim(q_start)?;
        model.check_dim(q_goal)?;
        self.cm.validate()?;
        self.cfg.validate()?;
        if !check_config(model, q_start, self.human, self.scene) || !check_config(model, q_goal, self.human, self.scene) {
            return Err(Error::InfeasibleStart);
        }
        if q_start == q_goal {
            return Err(Error::ZeroLengthConnection);
        }
        let started = Instant::now();
        let straight_optimal = !self.cm.is_human_aware() || self.human.is_empty();
        if straight_optimal && self.valid(q_start, q_goal) {
            let path = Path::new(vec![q_start.clone(), q_goal.clone()])?;
            let cost = path_cost(model, path.waypoints(), self.human, self.cm)?;
            return Ok(PlanReport { path: Some(path), cost, iterations: 0, improvements: vec![cost], tree_size: 1 });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut tree = Tree::new(q_start.clone());
        let mut ctc = vec![0.0f64];
        let mut goal_links: Vec<(usize, f64)> = Vec::new();
        let mut best_cost = f64::INFINITY;
        let mut best_link: Option<(usize, f64)> = None;
        let mut improvements = Vec::new();
        let dof = model.dof() as f64;
        // Shrinking radius with the joint box as the free-space volume.
        let ln_box: f64 = (0..model.dof()).map(|i| (model.q_max()[i] - model.q_min()[i]).ln()).sum();
        let gamma = 2.0 * (1.0 + 1.0 / dof).powf(1.0 / dof) * ((ln_box - crate::sampling::ln_unit_ball_volume(model.dof())) / dof).exp();

        // Straight connection first: it may already be a good incumbent.
        if self.valid(q_start, q_goal) {
            let c = self.edge_cost(q_start, q_goal)?;
            goal_links.push((0, c));
        }

        let mut iterations = 0;
        loop {
            // Incumbent update; rewiring may have lowered any goal link.
            let mut cand: Option<(usize, f64)> = None;
            let mut cand_cost = f64::INFINITY;
            for &(i, ec) in &goal_links {
                let c = ctc[i] + ec;
                if c < cand_cost {
                    cand_cost = c;
                    cand = Some((i, ec));
                }
            }
            if cand_cost < best_cost {
                best_cost = cand_cost;
                best_link = cand;
                improvements.push(best_cost);
            }
            if self.cfg.budget.exhausted(iterations, started) {
                break;
            }
            iterations += 1;

            let Some(q_rand) = self.sample(&mut rng, q_start, q_goal, best_cost)? else { continue };
            let Some(near_i) = tree.nearest(&q_rand, |_| true) else { continue };
            let q_near = &tree.node(near_i).q;
            let d = (&q_rand - q_near).norm();
            if d < 1e-9 {
                continue;
            }
            let q_new = if d > self.cfg.extend_step { q_near + (&q_rand - q_near) * (self.cfg.extend_step / d) } else { q_rand };
            if best_cost.is_finite() && cost_bound(self.cm, model, q_start, &q_new, q_goal) >= best_cost {
                continue;
            }
            if !self.valid(q_near, &q_new) {
                continue;
            }
            let n = tree.len() as f64;
            let radius = (gamma * ((n + 1.0).ln() / (n + 1.0)).powf(1.0 / dof)).min(self.cfg.rewire_radius_max).max(self.cfg.extend_step);
            let mut near = tree.near(&q_new, radius, self.cfg.max_neighbors, |_| true);
            if !near.contains(&near_i) {
                near.push(near_i);
            }
            let mut options = Vec::with_capacity(near.len());
            for &j in &near {
                let c = self.edge_cost(&tree.node(j).q, &q_new)?;
                options.push((ctc[j] + c, j, c));
            }
            options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut chosen = None;
            for &(total, j, c) in &options {
                if j == near_i || self.valid(&tree.node(j).q, &q_new) {
                    chosen = Some((total, j, c));
                    break;
                }
            }
            let Some((total, parent, c)) = chosen else { continue };
            let new_i = tree.add(q_new.clone(), parent);
            tree.node_mut(new_i).edge_cost = Some(c);
            tree.node_mut(new_i).edge_valid = Some(true);
            ctc.push(total);

            for &j in &near {
                if j == parent || j == 0 {
                    continue;
                }
                let c = self.edge_cost(&q_new, &tree.node(j).q)?;
                if ctc[new_i] + c < ctc[j] && self.valid(&q_new, &tree.node(j).q) {
                    tree.reparent(j, new_i, Some(c), Some(true));
                    let delta = ctc[new_i] + c - ctc[j];
                    for k in tree.subtree(j) {
                        ctc[k] += delta;
                    }
                }
            }

            if (q_goal - &q_new).norm() <= self.cfg.goal_connect_radius && self.valid(&q_new, q_goal) {
                let c = self.edge_cost(&q_new, q_goal)?;
                goal_links.push((new_i, c));
            }
        }

        let Some((last, _)) = best_link else {
            return Ok(PlanReport { path: None, cost: f64::INFINITY, iterations, improvements, tree_size: tree.len() });
        };
        let mut wps: Vec<Configuration> = tree.chain_to(last).into_iter().map(|i| tree.node(i).q.clone()).collect();
        wps.push(q_goal.clone());
        if self.cfg.shortcut {
            wps = self.shortcut(wps)?;
        }
        let path = Path::from_dedup(wps)?;
        let cost = path_cost(model, path.waypoints(), self.human, self.cm)?;
        if improvements.last().is_some_and(|&c| cost < c) {
            improvements.push(cost);
        }
        Ok(PlanReport { path: Some(path), cost, iterations, improvements, tree_size: tree.len() })
    }
}

/// Best path found within the budget under `cm`; `path: None` reports that
/// no solution exists within it.
#[allow(clippy::too_many_arguments)]
pub fn plan(
    model: &RobotModel,
    scene: &Scene,
    human: &HumanState,
    q_start: &Configuration,
    q_goal: &Configuration,
    cm: &CostModel,
    cfg: &PlannerConfig,
) -> Result<PlanReport> {
    Search { model, scene, human, cm, cfg }.run(q_start, q_goal)
}

#[derive(Clone, Debug)]
pub struct PathSetConfig {
    pub count: usize,
    /// Planner for the first, optimal path; its seed also drives the rest.
    pub planner: PlannerConfig,
    pub penalty_weight: f64,
    pub penalty_radius: f64,
    /// Minimum mean tool distance between any two returned paths, m.
    pub min_mean_distance: f64,
    pub attempts_per_path: usize,
    /// Random single-via candidates drawn per attempt.
    pub via_samples: usize,
    /// Local perturbation steps applied to the best candidate.
    pub refine_iterations: usize,
    /// Most interior waypoints of an alternative.
    pub max_vias: usize,
}

impl Default for PathSetConfig {
    fn default() -> Self {
        Self {
            count: 3,
            planner: PlannerConfig::default(),
            penalty_weight: 4.0,
            penalty_radius: 0.4,
            min_mean_distance: 0.1,
            attempts_per_path: 3,
            via_samples: 400,
            refine_iterations: 800,
            max_vias: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PathSet {
    pub paths: Vec<Path>,
    /// `false` when fewer than the requested number of paths were found.
    pub complete: bool,
}

struct ViaSearch<'a> {
    model: &'a RobotModel,
    scene: &'a Scene,
    human: &'a HumanState,
    cm: &'a CostModel,
    diversity: &'a Diversity,
    check_step: f64,
}

impl ViaSearch<'_> {
    /// Penalized cost of one connection, `None` when it is blocked.
    fn edge(&self, a: &Configuration, b: &Configuration) -> Result<Option<f64>> {
        if a == b || !check_connection(self.model, a, b, self.human, self.scene, self.check_step) {
            return Ok(None);
        }
        let c = connection_cost(self.model, a, b, self.human, self.cm)?;
        Ok(Some(c * self.diversity.factor(self.model, a, b)?))
    }

    fn total(&self, wps: &[Configuration]) -> Result<Option<f64>> {
        let mut sum = 0.0;
        for w in wps.windows(2) {
            match self.edge(&w[0], &w[1])? {
                Some(c) => sum += c,
                None => return Ok(None),
            }
        }
        Ok(Some(sum))
    }

    fn uniform<R: Rng>(&self, rng: &mut R) -> Configuration {
        let (lo, hi) = (self.model.q_min(), self.model.q_max());
        DVector::from_fn(lo.len(), |i, _| rng.random_range(lo[i]..hi[i]))
    }

    /// Best single-via path from random candidates, then random local moves
    /// that keep only improvements.
    fn run<R: Rng>(&self, rng: &mut R, s: &Configuration, g: &Configuration, cfg: &PathSetConfig) -> Result<Option<Path>> {
        let mut best: Option<(Vec<Configuration>, f64)> = None;
        for _ in 0..cfg.via_samples {
            let v = self.uniform(rng);
            let wps = vec![s.clone(), v, g.clone()];
            if let Some(c) = self.total(&wps)? {
                if best.as_ref().is_none_or(|b| c < b.1) {
                    best = Some((wps, c));
                }
            }
        }
        let Some((mut wps, mut cost)) = best else { return Ok(None) };
        let jitter = Normal::new(0.0, 0.25).map_err(|e| Error::InvalidParams(e.to_string()))?;
        for _ in 0..cfg.refine_iterations {
            let mut cand = wps.clone();
            let interior = cand.len() - 2;
            if interior < cfg.max_vias && rng.random_bool(0.25) {
                let k = rng.random_range(0..cand.len() - 1);
                let mid = (&cand[k] + &cand[k + 1]) * 0.5;
                cand.insert(k + 1, mid);
            } else if interior > 1 && rng.random_bool(0.1) {
                cand.remove(rng.random_range(1..cand.len() - 1));
            }
            let k = rng.random_range(1..cand.len() - 1);
            let moved = cand[k].map(|x| x + jitter.sample(rng));
            cand[k] = moved.zip_zip_map(self.model.q_min(), self.model.q_max(), |x, lo, hi| x.clamp(lo, hi));
            if let Some(c) = self.total(&cand)? {
                if c < cost {
                    wps = cand;
                    cost = c;
                }
            }
        }
        Ok(Some(Path::from_dedup(wps)?))
    }
}

/// `count` start-goal paths: the first optimal under `cm`, later ones found by
/// a via-point search on the cost inflated near the tool traces of earlier
/// paths.
pub fn plan_path_set(
    model: &RobotModel,
    scene: &Scene,
    human: &HumanState,
    q_start: &Configuration,
    q_goal: &Configuration,
    cm: &CostModel,
    cfg: &PathSetConfig,
) -> Result<PathSet> {
    if cfg.count == 0 {
        return Err(Error::InvalidParams("path set size must be at least 1".into()));
    }
    let first = plan(model, scene, human, q_start, q_goal, cm, &cfg.planner)?;
    let Some(first) = first.path else {
        return Ok(PathSet { paths: Vec::new(), complete: false });
    };
    let mut paths = vec![first];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.planner.seed ^ 0xd1ff_e7e5);
    let mut attempt = 0;
    while paths.len() < cfg.count && attempt < cfg.count * cfg.attempts_per_path {
        attempt += 1;
        let diversity = Diversity::new(model, &paths, cfg.penalty_weight, cfg.penalty_radius)?;
        let search = ViaSearch { model, scene, human, cm, diversity: &diversity, check_step: cfg.planner.check_step };
        let Some(p) = search.run(&mut rng, q_start, q_goal, cfg)? else { continue };
        let mut distinct = true;
        for o in &paths {
            distinct &= mean_tool_distance(model, o, &p)? > cfg.min_mean_distance;
        }
        if distinct {
            paths.push(p);
        }
    }
    let complete = paths.len() == cfg.count;
    Ok(PathSet { paths, complete })
}

/// Convenience for tests and callers holding plain slices.
pub fn configuration(values: &[f64]) -> Configuration {
    DVector::from_row_slice(values)
}
