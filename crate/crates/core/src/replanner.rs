//! Anytime replanning from the current configuration onto a set of
//! precomputed paths.
//!
//! Switch points on the current path are tried in order of estimated total
//! cost. From each one a persistent subtree grows lazily inside the informed
//! set towards nodes of the available paths: no collision checks or cost
//! evaluations happen during growth. Only once a branch reaches its target is
//! the chain validated and, if valid, costed. A new path is returned only when
//! it is cheaper than the remainder of the current path under the same human
//! snapshot.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{connection_cost, slowest_joint_time, weighted_length, CostModel};
use crate::error::Result;
use crate::kinematics::{Configuration, RobotModel};
use crate::path::{ConnectionOrder, Path, PathPoint};
use crate::planner::Tree;
use crate::sampling::{sample_informed, InformedSet};
use crate::world::{check_connection, HumanState, Scene, DEFAULT_CHECK_STEP};

#[derive(Clone, Debug)]
pub struct ReplannerConfig {
    pub check_step: f64,
    pub extend_step: f64,
    /// Capture radius around a target, rad.
    pub min_dist: f64,
    /// Growth iterations per target.
    pub max_iter: usize,
    /// Probability of steering straight at the target.
    pub target_bias: f64,
    /// Subtrees larger than this are reset to their root.
    pub max_tree_nodes: usize,
    /// Fraction of the current cost a candidate must save to be returned.
    pub min_relative_gain: f64,
}

impl Default for ReplannerConfig {
    fn default() -> Self {
        Self {
            check_step: DEFAULT_CHECK_STEP,
            extend_step: 0.3,
            min_dist: 0.05,
            max_iter: 500,
            target_bias: 0.2,
            max_tree_nodes: 1500,
            min_relative_gain: 0.03,
        }
    }
}

/// Work units per millisecond of nominal budget. One unit is roughly one
/// configuration check or one λ sample.
pub const WORK_PER_MS: usize = 200;

/// Replanning time budget. The work cap always applies; the wall-clock cap
/// only when set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplanBudget {
    pub work: usize,
    pub wall: Option<Duration>,
}

impl ReplanBudget {
    /// Deterministic budget equivalent to `ms` milliseconds.
    pub fn from_millis(ms: f64) -> Self {
        Self { work: (ms * WORK_PER_MS as f64).round() as usize, wall: None }
    }

    pub fn with_wall_clock(ms: f64) -> Self {
        Self { work: usize::MAX, wall: Some(Duration::from_secs_f64(ms / 1e3)) }
    }
}

#[derive(Clone, Debug)]
pub struct ReplanRequest<'a> {
    pub current_path: &'a Path,
    /// Where the robot is along `current_path`.
    pub progress: PathPoint,
    pub path_set: &'a [Path],
    pub human: &'a HumanState,
    pub budget: ReplanBudget,
    pub cm: &'a CostModel,
    pub seed: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ReplanStats {
    pub iterations: usize,
    pub work: usize,
    pub elapsed: Duration,
    /// Cost evaluations on tree connections.
    pub evaluations: usize,
    /// Connections on chains that reached a target and were validated.
    pub chain_connections: usize,
    /// Cost evaluations spent refreshing the current path and the path set.
    pub refresh_evaluations: usize,
    pub targets_tried: usize,
}

#[derive(Clone, Debug)]
pub struct ReplanResult {
    pub solved: bool,
    /// Path from the current configuration to the goal when solved.
    pub path: Option<Path>,
    pub cost: f64,
    /// Cost of the remainder of the current path, `+∞` when blocked.
    pub current_cost: f64,
    pub stats: ReplanStats,
}

/// Closest point of `path` to `state`, never behind `last`.
pub fn project_on_path(state: &Configuration, path: &Path, last: PathPoint) -> PathPoint {
    path.project(state, last)
}

/// Admissible lower bound on the cost between two configurations.
pub fn cost_lower_bound(cm: &CostModel, model: &RobotModel, a: &Configuration, b: &Configuration) -> f64 {
    match cm {
        CostModel::PathLength => (b - a).norm(),
        CostModel::WeightedLength | CostModel::MarshaTime(_) => weighted_length(a, b, model.qdot_max()),
        CostModel::HampTime(_) => slowest_joint_time(a, b, model.qdot_max()),
    }
}

/// Number of configurations `check_connection` may test on a connection.
fn check_samples(a: &Configuration, b: &Configuration, step: f64) -> usize {
    let d = (b - a).norm();
    let mut n = 1usize;
    while d / n as f64 > step && n < 1 << 30 {
        n *= 2;
    }
    n + 1
}

fn lambda_samples(cm: &CostModel, a: &Configuration, b: &Configuration) -> usize {
    match cm {
        CostModel::HampTime(s) | CostModel::MarshaTime(s) => s.samples_for((b - a).norm()),
        _ => 1,
    }
}

struct Ctx<'a> {
    model: &'a RobotModel,
    scene: &'a Scene,
    cfg: &'a ReplannerConfig,
    human: &'a HumanState,
    cm: &'a CostModel,
    budget: ReplanBudget,
    started: Instant,
    stats: ReplanStats,
}

impl Ctx<'_> {
    fn exhausted(&self) -> bool {
        self.stats.work >= self.budget.work || self.budget.wall.is_some_and(|w| self.started.elapsed() >= w)
    }

    fn valid(&mut self, a: &Configuration, b: &Configuration) -> bool {
        self.stats.work += check_samples(a, b, self.cfg.check_step);
        check_connection(self.model, a, b, self.human, self.scene, self.cfg.check_step)
    }

    fn cost(&mut self, a: &Configuration, b: &Configuration) -> Result<f64> {
        self.stats.work += lambda_samples(self.cm, a, b);
        connection_cost(self.model, a, b, self.human, self.cm)
    }

    fn bound(&self, a: &Configuration, b: &Configuration) -> f64 {
        cost_lower_bound(self.cm, self.model, a, b)
    }

    fn informed(&self, a: &Configuration, b: &Configuration, c_best: f64) -> InformedSet {
        let set = InformedSet::new(self.model, a.clone(), b.clone(), c_best);
        match self.cm {
            CostModel::PathLength => set.unweighted(),
            CostModel::HampTime(_) => {
                let n = self.model.dof() as f64;
                InformedSet { c_best: c_best * n.sqrt(), ..set }
            }
            _ => set,
        }
    }

    fn inside(&self, set: &InformedSet, a: &Configuration, q: &Configuration, b: &Configuration, c: f64) -> bool {
        if !c.is_finite() {
            return true;
        }
        match self.cm {
            CostModel::HampTime(_) => self.bound(a, q) + self.bound(q, b) < c,
            _ => set.contains(q),
        }
    }
}

/// Where a switch target came from; its tail is appended after the switch.
enum Source {
    Goal,
    PathSet(usize),
    Current,
}

/// A switch target with its cost-to-go under the current snapshot.
struct Target {
    q: Configuration,
    source: Source,
    index: usize,
    ctg: f64,
}

struct Found {
    chain: Vec<Configuration>,
    cost: f64,
}

/// Grows `tree` towards `target` inside `set`. Returns the validated chain from
/// the root to the target and its cost, or `None`.
fn grow_in_ellipsoid<R: Rng>(
    ctx: &mut Ctx<'_>,
    tree: &mut Tree,
    set: &InformedSet,
    c_local: f64,
    target: &Configuration,
    rng: &mut R,
) -> Result<Option<Found>> {
    let root = tree.root().clone();
    let step = ctx.cfg.extend_step;
    let mut root_blocked = false;
    for iter in 0..ctx.cfg.max_iter {
        if ctx.exhausted() {
            break;
        }
        ctx.stats.iterations += 1;
        ctx.stats.work += 1 + tree.len() / 64;
        let q_rand = if iter == 0 || rng.random::<f64>() < ctx.cfg.target_bias {
            target.clone()
        } else {
            match sample_informed(set, rng) {
                Ok(q) => q,
                Err(_) => break,
            }
        };
        let Some(near) = tree.nearest(&q_rand, |i| tree.is_growable(i)) else { break };
        let q_near = tree.node(near).q.clone();
        let d = (&q_rand - &q_near).norm();
        if d < 1e-12 {
            continue;
        }
        let q_new = if d > step { &q_near + (&q_rand - &q_near) * (step / d) } else { q_rand };
        let reached = (&q_new - target).norm() <= ctx.cfg.min_dist;
        let last = if reached && (&q_new - &q_near).norm() <= ctx.cfg.min_dist {
            near
        } else {
            if !ctx.inside(set, &root, &q_new, target, c_local) {
                continue;
            }
            tree.add(q_new, near)
        };
        if !reached {
            continue;
        }
        if last == 0 && root_blocked {
            continue;
        }

        // Validate the chain from the root, hiding the first broken branch.
        let chain = tree.chain_to(last);
        let mut broken = None;
        for w in chain.windows(2) {
            let child = w[1];
            let ok = match tree.node(child).edge_valid {
                Some(v) => v,
                None => {
                    let (a, b) = (tree.node(w[0]).q.clone(), tree.node(child).q.clone());
                    let v = ctx.valid(&a, &b);
                    tree.node_mut(child).edge_valid = Some(v);
                    v
                }
            };
            if !ok {
                broken = Some(child);
                break;
            }
        }
        if let Some(child) = broken {
            tree.hide_subtree(child);
            continue;
        }
        let q_last = tree.node(last).q.clone();
        if q_last != *target && !ctx.valid(&q_last, target) {
            if last == 0 {
                root_blocked = true;
            } else {
                tree.hide_subtree(last);
            }
            continue;
        }

        let mut wps: Vec<Configuration> = chain.iter().map(|&i| tree.node(i).q.clone()).collect();
        if q_last != *target {
            wps.push(target.clone());
        }
        let wps = shortcut(ctx, wps);
        let mut cost = 0.0;
        for w in wps.windows(2) {
            cost += ctx.cost(&w[0], &w[1])?;
            ctx.stats.evaluations += 1;
        }
        ctx.stats.chain_connections += wps.len() - 1;
        if q_last != *target {
            tree.add_second_order(target.clone(), last, f64::NAN);
        }
        return Ok(Some(Found { chain: wps, cost }));
    }
    Ok(None)
}

/// Greedy removal of intermediate waypoints with feasible direct connections.
fn shortcut(ctx: &mut Ctx<'_>, mut wps: Vec<Configuration>) -> Vec<Configuration> {
    let mut i = 0;
    while i + 2 < wps.len() {
        let mut jumped = false;
        for j in (i + 2..wps.len()).rev() {
            let (a, b) = (wps[i].clone(), wps[j].clone());
            if ctx.valid(&a, &b) {
                wps.drain(i + 1..j);
                jumped = true;
                break;
            }
        }
        if !jumped {
            i += 1;
        }
    }
    wps
}

/// Holds subtrees across calls; one instance per episode.
#[derive(Clone, Debug)]
pub struct Replanner {
    model: RobotModel,
    scene: Scene,
    cfg: ReplannerConfig,
    subtrees: Vec<Tree>,
}

impl Replanner {
    pub fn new(model: RobotModel, scene: Scene, cfg: ReplannerConfig) -> Self {
        Self { model, scene, cfg, subtrees: Vec::new() }
    }

    pub fn config(&self) -> &ReplannerConfig {
        &self.cfg
    }

    pub fn subtree_count(&self) -> usize {
        self.subtrees.len()
    }

    pub fn replan(&mut self, req: &ReplanRequest<'_>) -> Result<ReplanResult> {
        let model = &self.model;
        let cfg = &self.cfg;
        let mut ctx = Ctx {
            model,
            scene: &self.scene,
            cfg,
            human: req.human,
            cm: req.cm,
            budget: req.budget,
            started: Instant::now(),
            stats: ReplanStats::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);

        let not_solved = |current_cost: f64, mut stats: ReplanStats, started: Instant| {
            stats.elapsed = started.elapsed();
            ReplanResult { solved: false, path: None, cost: f64::INFINITY, current_cost, stats }
        };

        let Ok(mut current) = req.current_path.tail_from(req.progress) else {
            return Ok(not_solved(0.0, ctx.stats, ctx.started));
        };
        current.clear_caches();
        let goal = current.goal().clone();
        let m = current.connection_count();

        // Remaining path: validity up to the first blocked connection and the
        // cost of the valid prefix.
        let mut blocked = None;
        let mut costs = Vec::with_capacity(m);
        for i in 0..m {
            let (a, b) = (current.waypoints()[i].clone(), current.waypoints()[i + 1].clone());
            if !ctx.valid(&a, &b) {
                blocked = Some(i);
                break;
            }
            costs.push(ctx.cost(&a, &b)?);
            ctx.stats.refresh_evaluations += 1;
        }
        let current_cost = if blocked.is_some() { f64::INFINITY } else { costs.iter().sum() };
        let mut ctc = vec![0.0];
        for c in &costs {
            ctc.push(ctc.last().unwrap() + c);
        }
        let q1_count = blocked.map_or(m, |b| b + 1);
        let mut c_best = current_cost * (1.0 - cfg.min_relative_gain);

        // Candidate switch targets with their cost-to-go.
        let mut targets = Vec::new();
        targets.push(Target { q: goal.clone(), source: Source::Goal, index: 0, ctg: 0.0 });
        for (pi, p) in req.path_set.iter().enumerate() {
            if p.goal() != &goal {
                continue;
            }
            let wps = p.waypoints();
            let mut ctg = vec![f64::INFINITY; wps.len()];
            ctg[wps.len() - 1] = 0.0;
            for i in (0..wps.len() - 1).rev() {
                if ctx.exhausted() {
                    break;
                }
                if !ctx.valid(&wps[i], &wps[i + 1]) {
                    break;
                }
                ctg[i] = ctg[i + 1] + ctx.cost(&wps[i], &wps[i + 1])?;
                ctx.stats.refresh_evaluations += 1;
            }
            for i in 0..wps.len() - 1 {
                if ctg[i].is_finite() {
                    targets.push(Target { q: wps[i].clone(), source: Source::PathSet(pi), index: i, ctg: ctg[i] });
                }
            }
        }
        // Nodes of the current path beyond the blocked connection.
        if let Some(b) = blocked {
            let wps = current.waypoints();
            let mut tail = vec![f64::INFINITY; wps.len()];
            tail[wps.len() - 1] = 0.0;
            for i in (b + 1..wps.len() - 1).rev() {
                if ctx.exhausted() || !ctx.valid(&wps[i], &wps[i + 1]) {
                    break;
                }
                tail[i] = tail[i + 1] + ctx.cost(&wps[i], &wps[i + 1])?;
                ctx.stats.refresh_evaluations += 1;
            }
            for (i, &t) in tail.iter().enumerate().take(wps.len() - 1).skip(b + 1) {
                if t.is_finite() {
                    targets.push(Target { q: wps[i].clone(), source: Source::Current, index: i, ctg: t });
                }
            }
        }
        let q_curr = current.start().clone();
        let mut order: Vec<usize> = (0..targets.len()).collect();
        let key: Vec<f64> = targets.iter().map(|t| ctx.bound(&q_curr, &t.q) + ctx.bound(&t.q, &goal)).collect();
        order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));

        // Switch points, most promising first.
        let mut q1: Vec<usize> = (0..q1_count).collect();
        let sort_q1 = |q1: &mut Vec<usize>, c_best: f64, ctx: &Ctx<'_>| {
            let est: Vec<f64> = (0..q1_count).map(|i| ctc[i] + ctx.bound(&current.waypoints()[i], &goal)).collect();
            q1.retain(|&i| est[i] < c_best);
            q1.sort_by(|&a, &b| est[a].total_cmp(&est[b]).then(a.cmp(&b)));
        };
        sort_q1(&mut q1, c_best, &ctx);

        // Reuse subtrees rooted at switch points that are still on the path.
        let mut trees: Vec<Option<Tree>> = vec![None; q1_count];
        for mut t in std::mem::take(&mut self.subtrees) {
            if let Some(i) = (1..q1_count).find(|&i| current.waypoints()[i] == *t.root()) {
                if trees[i].is_none() {
                    t.unhide_all();
                    t.clear_edge_caches();
                    if t.len() > cfg.max_tree_nodes {
                        t = Tree::new(t.root().clone());
                    } else if c_best.is_finite() {
                        let (qs, g) = (q_curr.clone(), goal.clone());
                        let bound = |q: &Configuration| cost_lower_bound(req.cm, model, &qs, q) + cost_lower_bound(req.cm, model, q, &g);
                        t.retain(|n| bound(&n.q) < c_best);
                    } else {
                        t.retain(|_| true);
                    }
                    trees[i] = Some(t);
                }
            }
        }

        let mut best: Option<(usize, Vec<Configuration>, usize)> = None;
        let mut k = 0;
        'outer: while k < q1.len() {
            let n = q1[k];
            k += 1;
            let q_n = current.waypoints()[n].clone();
            let tree = trees[n].get_or_insert_with(|| Tree::new(q_n.clone()));
            for &ti in &order {
                if ctx.exhausted() {
                    break 'outer;
                }
                let t = &targets[ti];
                if t.q == q_n {
                    continue;
                }
                if ctc[n] + ctx.bound(&q_n, &t.q) + t.ctg >= c_best {
                    continue;
                }
                let c_local = c_best - ctc[n] - t.ctg;
                let set = ctx.informed(&q_n, &t.q, c_local);
                ctx.stats.targets_tried += 1;
                if let Some(found) = grow_in_ellipsoid(&mut ctx, tree, &set, c_local, &t.q, &mut rng)? {
                    let total = ctc[n] + found.cost + t.ctg;
                    if total < c_best {
                        c_best = total;
                        best = Some((n, found.chain, ti));
                        // Drop switch points that can no longer improve.
                        let mut rest = q1.split_off(k);
                        sort_q1(&mut rest, c_best, &ctx);
                        q1.extend(rest);
                        continue 'outer;
                    }
                }
            }
        }
        self.subtrees = trees.into_iter().skip(1).flatten().collect();

        let Some((n, chain, ti)) = best else {
            return Ok(not_solved(current_cost, ctx.stats, ctx.started));
        };
        // Assemble: current prefix, grown chain, then the target's own tail.
        let mut wps: Vec<Configuration> = current.waypoints()[..n].to_vec();
        let mut order_marks = vec![ConnectionOrder::Normal; n];
        let chain_len = chain.len();
        wps.extend(chain);
        order_marks.extend(std::iter::repeat_n(ConnectionOrder::Normal, chain_len.saturating_sub(2)));
        order_marks.push(ConnectionOrder::SecondOrder);
        let t = &targets[ti];
        let source = match t.source {
            Source::Goal => None,
            Source::Current => Some(&current),
            Source::PathSet(p) => Some(&req.path_set[p]),
        };
        if let Some(p) = source {
            wps.extend_from_slice(&p.waypoints()[t.index + 1..]);
            order_marks.extend_from_slice(&p.order()[t.index..]);
        }
        let path = Path::with_order(wps, order_marks)?;
        let mut stats = ctx.stats;
        stats.elapsed = ctx.started.elapsed();
        Ok(ReplanResult { solved: true, path: Some(path), cost: c_best, current_cost, stats })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::path_cost;
    use crate::planner::configuration as q;
    use crate::world::Obstacle;

    fn planar() -> RobotModel {
        RobotModel::planar_2dof()
    }

    fn request<'a>(
        path: &'a Path,
        set: &'a [Path],
        human: &'a HumanState,
        cm: &'a CostModel,
    ) -> ReplanRequest<'a> {
        ReplanRequest {
            current_path: path,
            progress: PathPoint::default(),
            path_set: set,
            human,
            budget: ReplanBudget::from_millis(200.0),
            cm,
            seed: 5,
        }
    }

    #[test]
    fn nothing_to_improve_on_a_straight_free_path() {
        let m = planar();
        let path = Path::new(vec![q(&[0.0, 0.0]), q(&[1.0, 0.5])]).unwrap();
        let human = HumanState::absent(0.0);
        let mut r = Replanner::new(m, Scene::empty(), ReplannerConfig::default());
        let res = r.replan(&request(&path, &[], &human, &CostModel::WeightedLength)).unwrap();
        assert!(!res.solved);
        assert_eq!(res.stats.evaluations, 0);
        assert!((res.current_cost - (1.25f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn blocked_path_switches_onto_feasible_detour() {
        let m = planar();
        // The human stands where the straight sweep passes with the elbow open.
        let human = HumanState::stationary(0.0, &[nalgebra::Vector3::new(1.0f64.cos() * 2.0, 1.0f64.sin() * 2.0, 0.0)]);
        let scene = Scene { static_obstacles: vec![], human_clearance: 0.2 };
        let straight = Path::new(vec![q(&[0.0, 0.0]), q(&[1.0, 0.0]), q(&[2.0, 0.0])]).unwrap();
        // Detour folds the elbow while passing.
        let detour = Path::new(vec![q(&[0.0, 0.0]), q(&[0.5, 1.2]), q(&[1.5, 1.2]), q(&[2.0, 0.0])]).unwrap();
        let cm = CostModel::WeightedLength;
        let mut r = Replanner::new(m.clone(), scene.clone(), ReplannerConfig::default());
        let set = vec![straight.clone(), detour.clone()];
        let res = r.replan(&request(&straight, &set, &human, &cm)).unwrap();
        assert!(res.solved);
        assert_eq!(res.current_cost, f64::INFINITY);
        let p = res.path.unwrap();
        for w in p.waypoints().windows(2) {
            assert!(check_connection(&m, &w[0], &w[1], &human, &scene, DEFAULT_CHECK_STEP));
        }
        assert_eq!(p.goal(), &q(&[2.0, 0.0]));
        let recomputed = path_cost(&m, p.waypoints(), &human, &cm).unwrap();
        assert!((recomputed - res.cost).abs() < 1e-9);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = planar();
        let human = HumanState::stationary(0.0, &[nalgebra::Vector3::new(1.0f64.cos() * 2.0, 1.0f64.sin() * 2.0, 0.0)]);
        let scene = Scene { static_obstacles: vec![], human_clearance: 0.2 };
        let straight = Path::new(vec![q(&[0.0, 0.0]), q(&[1.0, 0.0]), q(&[2.0, 0.0])]).unwrap();
        let cm = CostModel::WeightedLength;
        let run = || {
            let mut r = Replanner::new(m.clone(), scene.clone(), ReplannerConfig::default());
            r.replan(&request(&straight, &[], &human, &cm)).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.solved, b.solved);
        assert_eq!(a.path, b.path);
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        assert_eq!(a.stats.work, b.stats.work);
    }

    #[test]
    fn projection_helper_is_monotone() {
        let p = Path::new(vec![q(&[0.0, 0.0]), q(&[1.0, 0.0])]).unwrap();
        let a = project_on_path(&q(&[0.7, 0.2]), &p, PathPoint::default());
        let b = project_on_path(&q(&[0.1, 0.0]), &p, a);
        assert!((b.t - 0.7).abs() < 1e-12);
    }

    fn ctx<'a>(
        model: &'a RobotModel,
        scene: &'a Scene,
        cfg: &'a ReplannerConfig,
        human: &'a HumanState,
        cm: &'a CostModel,
    ) -> Ctx<'a> {
        Ctx {
            model,
            scene,
            cfg,
            human,
            cm,
            budget: ReplanBudget::from_millis(200.0),
            started: Instant::now(),
            stats: ReplanStats::default(),
        }
    }

    fn rng() -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(17)
    }

    #[test]
    fn single_extension_evaluates_only_its_chain() {
        let (m, scene, cfg, human) = (planar(), Scene::empty(), ReplannerConfig::default(), HumanState::absent(0.0));
        let cm = CostModel::WeightedLength;
        let mut c = ctx(&m, &scene, &cfg, &human, &cm);
        let (root, target) = (q(&[0.0, 0.0]), q(&[0.2, 0.1]));
        let set = c.informed(&root, &target, f64::INFINITY);
        let mut tree = Tree::new(root.clone());
        let found = grow_in_ellipsoid(&mut c, &mut tree, &set, f64::INFINITY, &target, &mut rng()).unwrap().unwrap();
        assert_eq!(found.chain, vec![root, target]);
        assert!(c.stats.iterations <= 2);
        assert_eq!(c.stats.evaluations, 1);
        assert_eq!(c.stats.chain_connections, 1);
        assert!((found.cost - 0.05f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn target_beyond_the_informed_set_fails() {
        let (m, scene, cfg, human) = (planar(), Scene::empty(), ReplannerConfig::default(), HumanState::absent(0.0));
        let cm = CostModel::WeightedLength;
        let mut c = ctx(&m, &scene, &cfg, &human, &cm);
        let (root, target) = (q(&[0.0, 0.0]), q(&[1.0, 0.0]));
        let set = c.informed(&root, &target, 0.9);
        let mut tree = Tree::new(root);
        let found = grow_in_ellipsoid(&mut c, &mut tree, &set, 0.9, &target, &mut rng()).unwrap();
        assert!(found.is_none());
        assert_eq!(c.stats.evaluations, 0);
    }

    #[test]
    fn blocked_branch_is_hidden_and_another_corridor_found() {
        // The sphere sits where the stretched arm passes; folding the elbow
        // either way clears it.
        let m = planar();
        let scene = Scene {
            static_obstacles: vec![Obstacle::Sphere { center: [1.5, 0.0, 0.0], radius: 0.25 }],
            human_clearance: 0.0,
        };
        let cfg = ReplannerConfig { max_iter: 5000, ..ReplannerConfig::default() };
        let (human, cm) = (HumanState::absent(0.0), CostModel::WeightedLength);
        let mut c = ctx(&m, &scene, &cfg, &human, &cm);
        let (root, target) = (q(&[-0.6, 0.0]), q(&[0.6, 0.0]));
        assert!(!check_connection(&m, &root, &target, &human, &scene, DEFAULT_CHECK_STEP));
        let set = c.informed(&root, &target, f64::INFINITY);
        let mut tree = Tree::new(root.clone());
        let found = grow_in_ellipsoid(&mut c, &mut tree, &set, f64::INFINITY, &target, &mut rng()).unwrap().unwrap();
        assert!((0..tree.len()).any(|i| tree.node(i).hidden));
        assert_eq!(found.chain.first(), Some(&root));
        assert_eq!(found.chain.last(), Some(&target));
        for w in found.chain.windows(2) {
            assert!(check_connection(&m, &w[0], &w[1], &human, &scene, DEFAULT_CHECK_STEP));
        }
        assert!(c.stats.evaluations <= c.stats.chain_connections);
    }

    #[test]
    fn sample_count_matches_dyadic_levels() {
        assert_eq!(check_samples(&q(&[0.0]), &q(&[0.0]), 0.05), 2);
        assert_eq!(check_samples(&q(&[0.0]), &q(&[0.05]), 0.05), 2);
        assert_eq!(check_samples(&q(&[0.0]), &q(&[0.1]), 0.05), 3);
        assert_eq!(check_samples(&q(&[0.0]), &q(&[1.0]), 0.05), 33);
    }
}
