//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DVector;
use rand::Rng;

use replan_core::{check_connection, Configuration, RobotModel, RobotModelSpec, Scene};
use replan_core::{HumanState, Keypoint};

type Mat4 = [[f64; 4]; 4];

fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn translation(v: [f64; 3]) -> Mat4 {
    [[1.0, 0.0, 0.0, v[0]], [0.0, 1.0, 0.0, v[1]], [0.0, 0.0, 1.0, v[2]], [0.0, 0.0, 0.0, 1.0]]
}

/// Rotation by `angle` about the unit-normalized `axis` (Rodrigues).
fn rotation(axis: [f64; 3], angle: f64) -> Mat4 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y, 0.0],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x, 0.0],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Points of interest by explicit composition of 4×4 transforms: per joint a
/// translation, fixed roll-pitch-yaw (yaw·pitch·roll) and the joint rotation.
pub fn fk_oracle(spec: &RobotModelSpec, q: &[f64]) -> Vec<[f64; 3]> {
    let mut frames = Vec::new();
    let mut t = translation([0.0; 3]);
    for (j, &qi) in spec.joints.iter().zip(q) {
        let [r, p, y] = j.origin_rpy;
        let fixed = mul(&rotation([0.0, 0.0, 1.0], y), &mul(&rotation([0.0, 1.0, 0.0], p), &rotation([1.0, 0.0, 0.0], r)));
        t = mul(&t, &translation(j.origin_xyz));
        t = mul(&t, &fixed);
        t = mul(&t, &rotation(j.axis, qi));
        frames.push(t);
    }
    spec.poi
        .iter()
        .map(|poi| {
            let f = &frames[poi.link];
            let o = poi.offset;
            [0, 1, 2].map(|i| f[i][0] * o[0] + f[i][1] * o[1] + f[i][2] * o[2] + f[i][3])
        })
        .collect()
}

pub fn random_config<R: Rng>(model: &RobotModel, rng: &mut R) -> Configuration {
    DVector::from_iterator(
        model.dof(),
        (0..model.dof()).map(|i| rng.random_range(model.q_min()[i]..model.q_max()[i])),
    )
}

/// Central finite-difference Jacobian of one point of interest.
pub fn fd_jacobian(model: &RobotModel, q: &Configuration, poi: usize, h: f64) -> Vec<[f64; 3]> {
    (0..model.dof())
        .map(|i| {
            let (mut qp, mut qm) = (q.clone(), q.clone());
            qp[i] += h;
            qm[i] -= h;
            let (p, m) = (model.forward_points(&qp).unwrap()[poi], model.forward_points(&qm).unwrap()[poi]);
            [0, 1, 2].map(|k| (p[k] - m[k]) / (2.0 * h))
        })
        .collect()
}

/// Largest absolute deviation between analytic and finite-difference
/// Jacobians over `count` random configurations and all points of interest.
pub fn jacobian_fd_error<R: Rng>(model: &RobotModel, count: usize, rng: &mut R) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let q = random_config(model, rng);
        for poi in 0..model.poi_count() {
            let jac = model.point_jacobian(&q, poi).unwrap();
            for (i, col) in fd_jacobian(model, &q, poi, 1e-6).iter().enumerate() {
                for k in 0..3 {
                    worst = worst.max((jac[(k, i)] - col[k]).abs());
                }
            }
        }
    }
    worst
}

pub fn random_human<R: Rng>(rng: &mut R, count: usize, radius: f64) -> HumanState {
    let kps = (0..count)
        .map(|_| Keypoint {
            position: nalgebra::Vector3::new(
                rng.random_range(-radius..radius),
                rng.random_range(-radius..radius),
                rng.random_range(0.0..1.8),
            ),
            velocity: nalgebra::Vector3::new(
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-0.3..0.3),
            ),
        })
        .collect();
    HumanState::new(0.0, kps).unwrap()
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// A 2-DOF configuration grid with 16-connectivity. Edges are straight
/// connections that pass the collision check; their weight is supplied by the
/// caller.
pub struct Grid2 {
    pub lo: f64,
    pub spacing: f64,
    pub n: usize,
    pub free: Vec<bool>,
}

const MOVES: [(i64, i64); 16] = [
    (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1),
    (2, 1), (2, -1), (-2, 1), (-2, -1), (1, 2), (1, -2), (-1, 2), (-1, -2),
];

impl Grid2 {
    pub fn new(model: &RobotModel, scene: &Scene, lo: f64, hi: f64, spacing: f64) -> Self {
        let n = ((hi - lo) / spacing).round() as usize + 1;
        let nobody = HumanState::absent(0.0);
        let mut free = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                let q = DVector::from_vec(vec![lo + i as f64 * spacing, lo + j as f64 * spacing]);
                free[i * n + j] = replan_core::check_config(model, &q, &nobody, scene);
            }
        }
        Self { lo, spacing, n, free }
    }

    pub fn index(&self, q: &[f64; 2]) -> usize {
        let i = ((q[0] - self.lo) / self.spacing).round() as usize;
        let j = ((q[1] - self.lo) / self.spacing).round() as usize;
        i * self.n + j
    }

    pub fn config(&self, k: usize) -> Configuration {
        let (i, j) = (k / self.n, k % self.n);
        DVector::from_vec(vec![self.lo + i as f64 * self.spacing, self.lo + j as f64 * self.spacing])
    }

    /// Single-source shortest costs over collision-free edges.
    pub fn dijkstra(
        &self,
        model: &RobotModel,
        scene: &Scene,
        source: usize,
        weight: impl Fn(&Configuration, &Configuration) -> f64,
    ) -> Vec<f64> {
        let nobody = HumanState::absent(0.0);
        let mut dist = vec![f64::INFINITY; self.n * self.n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry(0.0, source));
        while let Some(Entry(d, k)) = heap.pop() {
            if d > dist[k] {
                continue;
            }
            let (i, j) = ((k / self.n) as i64, (k % self.n) as i64);
            let qa = self.config(k);
            for (di, dj) in MOVES {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= self.n as i64 || nj >= self.n as i64 {
                    continue;
                }
                let nk = ni as usize * self.n + nj as usize;
                if !self.free[nk] {
                    continue;
                }
                let qb = self.config(nk);
                let nd = d + weight(&qa, &qb);
                if nd < dist[nk] && check_connection(model, &qa, &qb, &nobody, scene, 0.01) {
                    dist[nk] = nd;
                    heap.push(Entry(nd, nk));
                }
            }
        }
        dist
    }
}

pub fn weighted(model: &RobotModel) -> impl Fn(&Configuration, &Configuration) -> f64 + '_ {
    move |a, b| (b - a).component_div(model.qdot_max()).norm()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
