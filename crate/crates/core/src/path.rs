//! Waypoint paths with per-connection caches.

use std::path::Path as FsPath;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cost::{connection_cost, CostModel};
use crate::error::{Error, Result};
use crate::kinematics::{Configuration, RobotModel};
use crate::world::{check_connection, HumanState, Scene};

/// How a connection entered the path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionOrder {
    #[default]
    Normal,
    /// Joins a grown subtree onto a node of another path.
    SecondOrder,
}

/// A position along a path: connection index and fraction in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PathPoint {
    pub segment: usize,
    pub t: f64,
}

impl PathPoint {
    fn key(&self) -> (usize, f64) {
        (self.segment, self.t)
    }

    pub fn is_after(&self, other: &PathPoint) -> bool {
        self.key() > other.key()
    }
}

#[derive(Clone, Debug)]
pub struct Path {
    waypoints: Vec<Configuration>,
    costs: Vec<Option<f64>>,
    valid: Vec<Option<bool>>,
    order: Vec<ConnectionOrder>,
}

impl PartialEq for Path {
    fn eq(&self, other: &Self) -> bool {
        self.waypoints == other.waypoints && self.order == other.order
    }
}

impl Path {
    pub fn new(waypoints: Vec<Configuration>) -> Result<Self> {
        let n = waypoints.len();
        Self::with_order(waypoints, vec![ConnectionOrder::Normal; n.saturating_sub(1)])
    }

    pub fn with_order(waypoints: Vec<Configuration>, order: Vec<ConnectionOrder>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::PathTooShort(waypoints.len()));
        }
        let dim = waypoints[0].len();
        for w in &waypoints {
            if w.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: w.len() });
            }
        }
        if waypoints.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::ZeroLengthConnection);
        }
        if order.len() != waypoints.len() - 1 {
            return Err(Error::InvalidParams("one order marker per connection".into()));
        }
        let m = waypoints.len() - 1;
        Ok(Self { waypoints, costs: vec![None; m], valid: vec![None; m], order })
    }

    /// Builds a path after dropping consecutive duplicates.
    pub fn from_dedup(mut waypoints: Vec<Configuration>) -> Result<Self> {
        waypoints.dedup();
        Self::new(waypoints)
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    pub fn start(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn goal(&self) -> &Configuration {
        self.waypoints.last().expect("paths have at least two waypoints")
    }

    pub fn dim(&self) -> usize {
        self.waypoints[0].len()
    }

    pub fn connection_count(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn order(&self) -> &[ConnectionOrder] {
        &self.order
    }

    pub fn cached_cost(&self, i: usize) -> Option<f64> {
        self.costs[i]
    }

    pub fn cached_validity(&self, i: usize) -> Option<bool> {
        self.valid[i]
    }

    pub fn clear_caches(&mut self) {
        self.costs.iter_mut().for_each(|c| *c = None);
        self.valid.iter_mut().for_each(|v| *v = None);
    }

    /// Joint-space length of every connection.
    pub fn segment_lengths(&self) -> Vec<f64> {
        self.waypoints.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Evaluates and caches connection costs that are not cached yet.
    pub fn evaluate_costs(&mut self, model: &RobotModel, human: &HumanState, cm: &CostModel) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.connection_count() {
            let c = match self.costs[i] {
                Some(c) => c,
                None => {
                    let c = connection_cost(model, &self.waypoints[i], &self.waypoints[i + 1], human, cm)?;
                    self.costs[i] = Some(c);
                    c
                }
            };
            total += c;
        }
        Ok(total)
    }

    /// Checks connections from `from` onwards and returns the index of the
    /// first invalid one, if any. Results are cached.
    pub fn first_invalid(
        &mut self,
        model: &RobotModel,
        human: &HumanState,
        scene: &Scene,
        step: f64,
        from: usize,
    ) -> Option<usize> {
        for i in from..self.connection_count() {
            let ok = match self.valid[i] {
                Some(v) => v,
                None => {
                    let v = check_connection(model, &self.waypoints[i], &self.waypoints[i + 1], human, scene, step);
                    self.valid[i] = Some(v);
                    v
                }
            };
            if !ok {
                return Some(i);
            }
        }
        None
    }

    pub fn point_at(&self, p: PathPoint) -> Configuration {
        let a = &self.waypoints[p.segment];
        let b = &self.waypoints[p.segment + 1];
        if p.t <= 0.0 {
            a.clone()
        } else if p.t >= 1.0 {
            b.clone()
        } else {
            a + (b - a) * p.t
        }
    }

    /// Closest point on the polyline, searching only at or after `from`.
    pub fn project(&self, q: &Configuration, from: PathPoint) -> PathPoint {
        let mut best = from;
        let mut best_d = (self.point_at(from) - q).norm_squared();
        for i in from.segment..self.connection_count() {
            let a = &self.waypoints[i];
            let d = &self.waypoints[i + 1] - a;
            let dd = d.norm_squared();
            let mut t = if dd > 0.0 { (q - a).dot(&d) / dd } else { 0.0 };
            t = t.clamp(0.0, 1.0);
            if i == from.segment {
                t = t.max(from.t);
            }
            let p = PathPoint { segment: i, t };
            let dist = (self.point_at(p) - q).norm_squared();
            if dist < best_d {
                best_d = dist;
                best = p;
            }
        }
        best
    }

    /// Remaining path from `p` to the goal, with `p` as first waypoint.
    pub fn tail_from(&self, p: PathPoint) -> Result<Path> {
        let q = self.point_at(p);
        let mut next = p.segment + 1;
        let mut order = Vec::new();
        let mut wps = vec![q.clone()];
        // Skip the next waypoint if the point sits on it.
        if self.waypoints[next] == q {
            next += 1;
        }
        if next > self.connection_count() {
            return Err(Error::PathTooShort(1));
        }
        order.push(self.order[next - 1]);
        for i in next..self.waypoints.len() {
            wps.push(self.waypoints[i].clone());
            if i + 1 < self.waypoints.len() {
                order.push(self.order[i]);
            }
        }
        let mut out = Path::with_order(wps, order)?;
        // Untouched connections keep their caches.
        let shift = next - 1;
        for j in 1..out.connection_count() {
            out.costs[j] = self.costs[j + shift];
            out.valid[j] = self.valid[j + shift];
        }
        Ok(out)
    }

    /// Splits connections longer than `max_len` into equal pieces.
    pub fn densify(&self, max_len: f64) -> Path {
        let mut wps = vec![self.waypoints[0].clone()];
        let mut order = Vec::new();
        for (i, w) in self.waypoints.windows(2).enumerate() {
            let d = (&w[1] - &w[0]).norm();
            let pieces = ((d / max_len).ceil() as usize).max(1);
            for k in 1..=pieces {
                let q = if k == pieces { w[1].clone() } else { &w[0] + (&w[1] - &w[0]) * (k as f64 / pieces as f64) };
                wps.push(q);
                order.push(self.order[i]);
            }
        }
        Path::with_order(wps, order).expect("densified path keeps distinct waypoints")
    }

    /// `n ≥ 2` points equally spaced by joint-space arc length.
    pub fn resample(&self, n: usize) -> Vec<Configuration> {
        let lens = self.segment_lengths();
        let total: f64 = lens.iter().sum();
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        let mut acc = 0.0;
        for k in 0..n {
            let s = total * k as f64 / (n - 1).max(1) as f64;
            while seg + 1 < lens.len() && acc + lens[seg] < s {
                acc += lens[seg];
                seg += 1;
            }
            let t = if lens[seg] > 0.0 { ((s - acc) / lens[seg]).clamp(0.0, 1.0) } else { 0.0 };
            out.push(self.point_at(PathPoint { segment: seg, t }));
        }
        out
    }

    /// Mean distance between arc-length matched points of two paths.
    pub fn mean_distance(&self, other: &Path, samples: usize) -> f64 {
        let a = self.resample(samples);
        let b = other.resample(samples);
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).sum::<f64>() / samples as f64
    }

    /// Distance from `q` to the nearest point of the polyline.
    pub fn distance_to(&self, q: &Configuration) -> f64 {
        let p = self.project(q, PathPoint::default());
        (self.point_at(p) - q).norm()
    }

    pub fn to_file(&self, cost_model: Option<&CostModel>, cost: Option<f64>) -> PathFile {
        PathFile {
            waypoints: self.waypoints.iter().map(|w| w.iter().copied().collect()).collect(),
            order: self.order.clone(),
            cost_model: cost_model.cloned(),
            cost,
        }
    }

    pub fn save(&self, path: impl AsRef<FsPath>, cost_model: Option<&CostModel>, cost: Option<f64>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file(cost_model, cost))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let file: PathFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        file.into_path()
    }
}

/// On-disk form of a path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathFile {
    pub waypoints: Vec<Vec<f64>>,
    #[serde(default)]
    pub order: Vec<ConnectionOrder>,
    #[serde(default)]
    pub cost_model: Option<CostModel>,
    #[serde(default)]
    pub cost: Option<f64>,
}

impl PathFile {
    pub fn into_path(self) -> Result<Path> {
        let wps: Vec<Configuration> = self.waypoints.into_iter().map(DVector::from_vec).collect();
        if self.order.is_empty() {
            Path::new(wps)
        } else {
            Path::with_order(wps, self.order)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Configuration {
        DVector::from_row_slice(x)
    }

    fn l_path() -> Path {
        Path::new(vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0])]).unwrap()
    }

    #[test]
    fn rejects_short_and_repeated() {
        assert!(matches!(Path::new(vec![v(&[0.0])]), Err(Error::PathTooShort(1))));
        assert!(matches!(Path::new(vec![v(&[0.0]), v(&[0.0])]), Err(Error::ZeroLengthConnection)));
        assert!(Path::from_dedup(vec![v(&[0.0]), v(&[0.0]), v(&[1.0])]).is_ok());
    }

    #[test]
    fn projection_cases() {
        let p = l_path();
        let at = p.project(&v(&[1.0, 0.0]), PathPoint::default());
        assert_eq!(p.point_at(at), v(&[1.0, 0.0]));
        let foot = p.project(&v(&[0.4, 0.3]), PathPoint::default());
        assert!((p.point_at(foot) - v(&[0.4, 0.0])).norm() < 1e-15);
        let past = p.project(&v(&[1.0, 5.0]), PathPoint::default());
        assert_eq!(p.point_at(past), v(&[1.0, 1.0]));
    }

    #[test]
    fn projection_never_moves_backwards() {
        let p = l_path();
        let from = PathPoint { segment: 1, t: 0.5 };
        let back = p.project(&v(&[0.2, 0.0]), from);
        assert!(!from.is_after(&back));
        assert_eq!(p.point_at(back), v(&[1.0, 0.5]));
    }

    #[test]
    fn tail_keeps_remaining_waypoints() {
        let p = l_path();
        let t = p.tail_from(PathPoint { segment: 0, t: 0.5 }).unwrap();
        assert_eq!(t.waypoints(), &[v(&[0.5, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0])]);
        let t = p.tail_from(PathPoint { segment: 0, t: 1.0 }).unwrap();
        assert_eq!(t.waypoints(), &[v(&[1.0, 0.0]), v(&[1.0, 1.0])]);
        assert!(p.tail_from(PathPoint { segment: 1, t: 1.0 }).is_err());
    }

    #[test]
    fn densify_and_resample() {
        let p = l_path().densify(0.3);
        assert_eq!(p.connection_count(), 8);
        assert!((p.length() - 2.0).abs() < 1e-12);
        let r = l_path().resample(5);
        assert!((&r[2] - v(&[1.0, 0.0])).norm() < 1e-12);
        assert!((&r[4] - v(&[1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let p = l_path();
        let text = serde_json::to_string(&p.to_file(Some(&CostModel::PathLength), Some(2.0))).unwrap();
        let back: PathFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.cost, Some(2.0));
        assert_eq!(back.into_path().unwrap(), p);
    }
}
