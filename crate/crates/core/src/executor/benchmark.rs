//! Suites of episodes and their tabular output.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use super::{run_episode_with, AssetConfig, EpisodeConfig, EpisodeMetrics, ReplanRecord, ScenarioAssets, Strategy};
use crate::error::{Error, Result};

/// Column order of the per-episode metrics CSV.
pub const METRICS_HEADER: [&str; 18] = [
    "scenario",
    "variant",
    "strategy",
    "seed",
    "speed_fraction",
    "completed",
    "exec_time",
    "exec_time_norm",
    "avg_scaling",
    "replan_calls",
    "replan_adoptions",
    "min_separation",
    "min_closing_separation",
    "max_speed_excess",
    "stop_violations",
    "acceptance_violations",
    "lazy_violations",
    "error",
];

#[derive(Clone, Debug)]
pub struct BenchmarkRow {
    pub scenario: String,
    pub variant: String,
    pub strategy: Strategy,
    pub seed: u64,
    pub speed_fraction: f64,
    pub outcome: std::result::Result<EpisodeMetrics, String>,
    pub replans: Vec<ReplanRecord>,
}

impl BenchmarkRow {
    pub fn metrics(&self) -> Option<&EpisodeMetrics> {
        self.outcome.as_ref().ok()
    }
}

fn asset_key(cfg: &EpisodeConfig) -> String {
    let s = cfg.ssm();
    format!("{}|{}|{}|{}|{}", cfg.scenario.name, s.c, s.t_r, s.v_h, s.a_s)
}

/// Runs every configuration `repetitions` times with seeds `seed, seed + 1, …`.
/// Rows come back ordered by (scenario, variant, strategy, seed) whatever the
/// parallelism; a failing episode yields a row carrying its error.
pub fn run_benchmark(suite: &[EpisodeConfig], repetitions: usize, parallelism: usize) -> Result<Vec<BenchmarkRow>> {
    if suite.is_empty() {
        return Err(Error::InvalidParams("benchmark suite is empty".into()));
    }
    if repetitions == 0 {
        return Err(Error::InvalidParams("repetitions must be at least 1".into()));
    }
    for cfg in suite {
        cfg.validate()?;
    }

    let mut needs: BTreeMap<String, (EpisodeConfig, Vec<Strategy>)> = BTreeMap::new();
    for cfg in suite {
        let e = needs.entry(asset_key(cfg)).or_insert_with(|| (cfg.clone(), Vec::new()));
        e.1.push(cfg.strategy);
    }
    let jobs: Vec<EpisodeConfig> = suite
        .iter()
        .flat_map(|cfg| {
            (0..repetitions as u64).map(move |r| EpisodeConfig { seed: cfg.seed.wrapping_add(r), ..cfg.clone() })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;

    let assets: BTreeMap<String, std::result::Result<Arc<ScenarioAssets>, String>> = pool.install(|| {
        needs
            .into_par_iter()
            .map(|(key, (cfg, strategies))| {
                let mut sc = (*cfg.scenario).clone();
                sc.safety = cfg.ssm();
                let a = ScenarioAssets::prepare(&sc, &strategies, &AssetConfig::default())
                    .map(Arc::new)
                    .map_err(|e| e.to_string());
                (key, a)
            })
            .collect()
    });

    let mut rows: Vec<BenchmarkRow> = pool.install(|| {
        jobs.par_iter()
            .map(|cfg| {
                let result = match &assets[&asset_key(cfg)] {
                    Ok(a) => run_episode_with(cfg, a).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                let (outcome, replans) = match result {
                    Ok(o) => (Ok(o.metrics), o.replans),
                    Err(e) => (Err(e), Vec::new()),
                };
                BenchmarkRow {
                    scenario: cfg.scenario.name.clone(),
                    variant: cfg.label.clone(),
                    strategy: cfg.strategy,
                    seed: cfg.seed,
                    speed_fraction: cfg.speed_fraction,
                    outcome,
                    replans,
                }
            })
            .collect()
    });
    rows.sort_by(|a, b| {
        (&a.scenario, &a.variant, a.strategy, a.seed).cmp(&(&b.scenario, &b.variant, b.strategy, b.seed))
    });
    Ok(rows)
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_metrics_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        let head = [r.scenario.clone(), r.variant.clone(), r.strategy.to_string(), r.seed.to_string(), f(r.speed_fraction)];
        let tail: Vec<String> = match &r.outcome {
            Ok(m) => vec![
                m.completed.to_string(),
                f(m.exec_time),
                f(m.exec_time_norm),
                f(m.avg_scaling),
                m.replan_calls.to_string(),
                m.replan_adoptions.to_string(),
                f(m.min_separation_observed),
                f(m.min_closing_separation),
                format!("{:.3e}", m.max_speed_excess),
                m.stop_violations.to_string(),
                m.acceptance_violations.to_string(),
                m.lazy_violations.to_string(),
                String::new(),
            ],
            Err(e) => {
                let mut v = vec![String::new(); 12];
                v[0] = "false".into();
                v.push(e.clone());
                v
            }
        };
        w.write_record(head.iter().chain(tail.iter()))?;
    }
    w.flush()?;
    Ok(())
}

/// Wall-clock diagnostics of every replanning call; not reproducible.
pub fn write_replan_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario", "variant", "strategy", "seed", "t", "elapsed_ms", "work", "iterations", "evaluations",
        "chain_connections", "solved",
    ])?;
    for r in rows {
        for p in &r.replans {
            w.write_record([
                r.scenario.clone(),
                r.variant.clone(),
                r.strategy.to_string(),
                r.seed.to_string(),
                f(p.t),
                format!("{:.3}", p.elapsed_ms),
                p.work.to_string(),
                p.iterations.to_string(),
                p.evaluations.to_string(),
                p.chain_connections.to_string(),
                p.solved.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// First quartile, median and third quartile with linear interpolation
/// between order statistics.
pub fn quartiles(values: &[f64]) -> Option<[f64; 3]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Some([at(0.25), at(0.5), at(0.75)])
}

/// Aggregate of one (scenario, variant, strategy) group.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub variant: String,
    pub strategy: Strategy,
    pub episodes: usize,
    pub completed: usize,
    pub failed: usize,
    pub exec_time_norm_mean: f64,
    pub exec_time_norm_min: f64,
    pub exec_time_norm_quartiles: [f64; 3],
    pub exec_time_norm_max: f64,
    pub avg_scaling_mean: f64,
    pub avg_scaling_quartiles: [f64; 3],
}

pub fn summarize(rows: &[BenchmarkRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, Strategy), Vec<&BenchmarkRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.scenario.clone(), r.variant.clone(), r.strategy)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((scenario, variant, strategy), rs)| {
            let ms: Vec<&EpisodeMetrics> = rs.iter().filter_map(|r| r.metrics()).collect();
            let norm: Vec<f64> = ms.iter().map(|m| m.exec_time_norm).collect();
            let scal: Vec<f64> = ms.iter().map(|m| m.avg_scaling).collect();
            let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
            SummaryRow {
                scenario,
                variant,
                strategy,
                episodes: rs.len(),
                completed: ms.iter().filter(|m| m.completed).count(),
                failed: rs.len() - ms.len(),
                exec_time_norm_mean: mean(&norm),
                exec_time_norm_min: norm.iter().copied().fold(f64::INFINITY, f64::min),
                exec_time_norm_quartiles: quartiles(&norm).unwrap_or([f64::NAN; 3]),
                exec_time_norm_max: norm.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                avg_scaling_mean: mean(&scal),
                avg_scaling_quartiles: quartiles(&scal).unwrap_or([f64::NAN; 3]),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario", "variant", "strategy", "episodes", "completed", "failed", "exec_time_norm_mean", "exec_time_norm_min",
        "exec_time_norm_q1", "exec_time_norm_median", "exec_time_norm_q3", "exec_time_norm_max", "avg_scaling_mean",
        "avg_scaling_q1", "avg_scaling_median", "avg_scaling_q3",
    ])?;
    for s in summary {
        let mut rec = vec![
            s.scenario.clone(),
            s.variant.clone(),
            s.strategy.to_string(),
            s.episodes.to_string(),
            s.completed.to_string(),
            s.failed.to_string(),
            f(s.exec_time_norm_mean),
            f(s.exec_time_norm_min),
        ];
        rec.extend(s.exec_time_norm_quartiles.iter().map(|x| f(*x)));
        rec.push(f(s.exec_time_norm_max));
        rec.push(f(s.avg_scaling_mean));
        rec.extend(s.avg_scaling_quartiles.iter().map(|x| f(*x)));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}
