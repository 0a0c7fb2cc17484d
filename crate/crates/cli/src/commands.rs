use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use replan_core::executor::{
    planning_human, run_episode_with, summarize, write_metrics_csv, write_replan_csv, write_summary_csv, AssetConfig,
    BenchmarkRow, BudgetMode, EpisodeConfig, Rates, ScenarioAssets, Strategy, SummaryRow,
};
use replan_core::safety::bundled_ssm_sets;
use replan_core::scenario::BUNDLED_SCENARIOS;
use replan_core::{path_cost, plan, run_benchmark, Budget, CostModel, PlannerConfig, SafetyCost, SafetyMode, Scenario};

use crate::error::{io_err, CliError, CliResult};
use crate::manifest::RunManifest;
use crate::plot::{box_plot_svg, Panel};
use crate::{BenchArgs, Command, ExecArgs, PlanArgs, ReplayArgs, SweepArgs, ValidateArgs};

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Plan(a) => cmd_plan(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn load_scenario(name: &str) -> CliResult<Scenario> {
    if Scenario::bundled(name).is_none() && !FsPath::new(name).exists() {
        return Err(CliError::Usage(format!(
            "'{name}' is neither a bundled scenario ({}) nor a file",
            BUNDLED_SCENARIOS.join(", ")
        )));
    }
    Scenario::resolve(name).map_err(|e| CliError::Usage(format!("scenario '{name}': {e}")))
}

fn parse_strategy(s: &str) -> CliResult<Strategy> {
    s.parse().map_err(|_| {
        let known: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
        CliError::Usage(format!("unknown strategy '{s}' (expected one of {})", known.join(", ")))
    })
}

fn parse_strategies(list: &[String], default: &[Strategy]) -> CliResult<Vec<Strategy>> {
    if list.is_empty() {
        return Ok(default.to_vec());
    }
    let mut out = Vec::new();
    for s in list {
        let st = parse_strategy(s)?;
        if !out.contains(&st) {
            out.push(st);
        }
    }
    Ok(out)
}

fn parse_rates(exec: &ExecArgs) -> CliResult<Rates> {
    let parts: Vec<f64> = exec
        .rates
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--rates '{}' is not a list of numbers", exec.rates)))?;
    let [execution_hz, check_hz, replan_hz] = parts[..] else {
        return Err(CliError::Usage("--rates takes three values: execution,check,replan".into()));
    };
    let rates = Rates { execution_hz, check_hz, replan_hz, replan_budget_ms: exec.budget_ms };
    rates.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(rates)
}

fn check_fraction(f: f64) -> CliResult<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("speed fraction {f} outside (0, 1]")))
    }
}

fn ssm_set(k: usize) -> CliResult<replan_core::SsmParams> {
    let sets = bundled_ssm_sets();
    k.checked_sub(1)
        .and_then(|i| sets.get(i).copied())
        .ok_or_else(|| CliError::Usage(format!("SSM set {k} outside 1–{}", sets.len())))
}

fn prepare_dir(dir: &FsPath) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))
}

fn create(path: &FsPath) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(format!("creating {}", path.display())))
}

fn write_text(path: &FsPath, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(io_err(format!("writing {}", path.display())))
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn scenario_inputs(scenarios: &[&Scenario]) -> CliResult<Vec<String>> {
    let mut v: Vec<String> = scenarios.iter().map(|s| serde_json::to_string(s)).collect::<Result<_, _>>()?;
    v.push(serde_json::to_string(&bundled_ssm_sets())?);
    Ok(v)
}

fn cost_model(name: &str, sc: &Scenario) -> CliResult<CostModel> {
    let safety = SafetyCost::new(SafetyMode::Ssm(sc.safety), sc.scene.human_clearance);
    Ok(match name.to_ascii_lowercase().as_str() {
        "length" => CostModel::PathLength,
        "weighted" => CostModel::WeightedLength,
        "hamp" => CostModel::HampTime(safety),
        "marsha" => CostModel::MarshaTime(safety),
        other => {
            return Err(CliError::Usage(format!("unknown cost model '{other}' (expected length, weighted, hamp or marsha)")))
        }
    })
}

#[derive(Serialize)]
struct PlanReportFile {
    scenario: String,
    cost_model: String,
    cost: f64,
    iterations: usize,
    waypoints: usize,
    /// The path evaluated under every cost model against the same human.
    costs: BTreeMap<String, f64>,
    path_file: String,
}

fn cmd_plan(a: PlanArgs) -> CliResult<()> {
    let sc = load_scenario(&a.scenario)?;
    let cm = cost_model(&a.cost, &sc)?;
    if a.iterations == 0 {
        return Err(CliError::Usage("--iterations must be positive".into()));
    }
    let wall = match a.budget_ms {
        Some(ms) if ms > 0.0 && ms.is_finite() => Some(Duration::from_secs_f64(ms / 1e3)),
        Some(ms) => return Err(CliError::Usage(format!("--budget-ms {ms} must be positive"))),
        None => None,
    };
    let dir = a.out.out;
    prepare_dir(&dir)?;

    let model = sc.model()?;
    let human = planning_human(&sc);
    let cfg = PlannerConfig::default()
        .with_seed(a.seed.unwrap_or(sc.planning_seed))
        .with_budget(Budget { iterations: a.iterations, wall });
    let report = plan(&model, &sc.scene, &human, &sc.start(), &sc.goal(), &cm, &cfg)?;
    let Some(path) = report.path else {
        return Err(CliError::NoSolution(format!(
            "no collision-free path for '{}' within {} iterations",
            sc.name, report.iterations
        )));
    };

    let mut costs = BTreeMap::new();
    for name in ["length", "weighted", "hamp", "marsha"] {
        costs.insert(name.to_string(), path_cost(&model, path.waypoints(), &human, &cost_model(name, &sc)?)?);
    }
    let file = dir.join("path.json");
    path.save(&file, Some(&cm), Some(report.cost))?;
    let out = PlanReportFile {
        scenario: sc.name.clone(),
        cost_model: a.cost.to_ascii_lowercase(),
        cost: report.cost,
        iterations: report.iterations,
        waypoints: path.waypoints().len(),
        costs,
        path_file: file.display().to_string(),
    };
    let text = serde_json::to_string_pretty(&out)? + "\n";
    write_text(&dir.join("plan_report.json"), &text)?;
    print!("{text}");

    let mut m = RunManifest::new("plan", &dir, &scenario_inputs(&[&sc])?);
    m.scenarios = vec![a.scenario];
    m.seeds = vec![cfg.seed];
    m.write(&dir)
}

fn cmd_replay(a: ReplayArgs) -> CliResult<()> {
    let sc = Arc::new(load_scenario(&a.scenario)?);
    let strategy = parse_strategy(&a.strategy)?;
    let rates = parse_rates(&a.exec)?;
    check_fraction(a.speed_fraction)?;
    let safety = a.ssm_set.map(ssm_set).transpose()?;
    let dir = a.out.out;
    prepare_dir(&dir)?;

    let mut cfg = EpisodeConfig::new(sc.clone(), strategy, a.seed);
    cfg.rates = rates;
    cfg.speed_fraction = a.speed_fraction;
    cfg.safety = safety;
    cfg.record_trace = true;
    cfg.budget_mode = if a.exec.wall_clock { BudgetMode::WallClock } else { BudgetMode::Simulated };
    let mut prepared = (*sc).clone();
    prepared.safety = cfg.ssm();
    let assets = ScenarioAssets::prepare(&prepared, &[strategy], &AssetConfig::default())?;
    let outcome = run_episode_with(&cfg, &assets)?;

    let mut w = create(&dir.join("trace.csv"))?;
    let dof = assets.model.dof();
    let q_cols: Vec<String> = (1..=dof).map(|j| format!("q{j}")).collect();
    writeln!(w, "tick,t,{},scale,separation", q_cols.join(",")).map_err(io_err("writing trace.csv"))?;
    for r in &outcome.trace {
        let q: Vec<String> = r.q.iter().map(|x| format!("{x:.6}")).collect();
        writeln!(w, "{},{:.6},{},{:.6},{:.6}", r.tick, r.t, q.join(","), r.scale, r.separation)
            .map_err(io_err("writing trace.csv"))?;
    }
    w.flush().map_err(io_err("writing trace.csv"))?;

    let mut w = create(&dir.join("adoptions.csv"))?;
    writeln!(w, "t,previous_cost,adopted_cost,feasible").map_err(io_err("writing adoptions.csv"))?;
    for r in &outcome.adoptions {
        writeln!(w, "{:.6},{:.6},{:.6},{}", r.t, r.previous_cost, r.adopted_cost, r.feasible)
            .map_err(io_err("writing adoptions.csv"))?;
    }
    w.flush().map_err(io_err("writing adoptions.csv"))?;

    let row = BenchmarkRow {
        scenario: sc.name.clone(),
        variant: String::new(),
        strategy,
        seed: a.seed,
        speed_fraction: a.speed_fraction,
        outcome: Ok(outcome.metrics.clone()),
        replans: outcome.replans,
    };
    write_metrics_csv(std::slice::from_ref(&row), create(&dir.join("metrics.csv"))?)?;
    println!("{}", serde_json::to_string_pretty(&outcome.metrics)?);

    let mut m = RunManifest::new("replay", &dir, &scenario_inputs(&[&sc])?);
    m.scenarios = vec![a.scenario];
    m.strategies = vec![strategy.to_string()];
    m.repetitions = 1;
    m.seeds = vec![a.seed];
    m.speed_fractions = vec![a.speed_fraction];
    m.write(&dir)
}

/// One block of a suite file: strategies × speed fractions on one scenario.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteEntry {
    scenario: String,
    strategies: Vec<String>,
    #[serde(default = "one")]
    speed_fractions: Vec<f64>,
    #[serde(default)]
    label: Option<String>,
    /// Bundled SSM set replacing the scenario's parameters.
    #[serde(default)]
    ssm_set: Option<usize>,
}

fn one() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    runs: Vec<SuiteEntry>,
    #[serde(default)]
    repetitions: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

const DEFAULT_STRATEGIES: [Strategy; 3] = [Strategy::Dssm, Strategy::Mars, Strategy::Marsha];

fn speed_label(f: f64) -> String {
    format!("speed{f:.2}")
}

struct Suite {
    configs: Vec<EpisodeConfig>,
    scenarios: Vec<Arc<Scenario>>,
    repetitions: usize,
    seed: u64,
}

fn build_suite(a: &BenchArgs, rates: Rates) -> CliResult<Suite> {
    let entries: Vec<SuiteEntry>;
    let (mut reps, mut seed) = (None, None);
    if let Some(file) = &a.suite {
        let text = std::fs::read_to_string(file).map_err(io_err(format!("reading {}", file.display())))?;
        let s: SuiteFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("suite file {}: {e}", file.display())))?;
        reps = s.repetitions;
        seed = s.seed;
        entries = s.runs;
    } else {
        let names = if a.scenario.is_empty() { vec!["long".to_string()] } else { a.scenario.clone() };
        entries = names
            .into_iter()
            .map(|scenario| SuiteEntry {
                scenario,
                strategies: a.strategy.clone(),
                speed_fractions: if a.speed_fraction.is_empty() { one() } else { a.speed_fraction.clone() },
                label: None,
                ssm_set: None,
            })
            .collect();
    }
    if entries.is_empty() {
        return Err(CliError::Usage("the suite has no runs".into()));
    }
    let repetitions = a.reps.or(reps).unwrap_or(20);
    if repetitions == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let seed = a.seed.or(seed).unwrap_or(0);

    let mut loaded: BTreeMap<String, Arc<Scenario>> = BTreeMap::new();
    let mut configs = Vec::new();
    for e in &entries {
        let sc = match loaded.get(&e.scenario) {
            Some(s) => s.clone(),
            None => {
                let s = Arc::new(load_scenario(&e.scenario)?);
                loaded.insert(e.scenario.clone(), s.clone());
                s
            }
        };
        let strategies = parse_strategies(&e.strategies, &DEFAULT_STRATEGIES)?;
        let safety = e.ssm_set.map(ssm_set).transpose()?;
        if e.speed_fractions.is_empty() {
            return Err(CliError::Usage(format!("run on '{}' lists no speed fractions", e.scenario)));
        }
        for &f in &e.speed_fractions {
            check_fraction(f)?;
            for &st in &strategies {
                let mut cfg = EpisodeConfig::new(sc.clone(), st, seed);
                cfg.rates = rates;
                cfg.speed_fraction = f;
                cfg.safety = safety;
                cfg.budget_mode = if a.exec.wall_clock { BudgetMode::WallClock } else { BudgetMode::Simulated };
                cfg.label = e.label.clone().unwrap_or_else(|| speed_label(f));
                configs.push(cfg);
            }
        }
    }
    Ok(Suite { configs, scenarios: loaded.into_values().collect(), repetitions, seed })
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    let rates = parse_rates(&a.exec)?;
    let suite = build_suite(&a, rates)?;
    let parallel = a.parallel.unwrap_or_else(default_parallelism);
    if parallel == 0 {
        return Err(CliError::Usage("--parallel must be at least 1".into()));
    }
    let dir = a.out.out;
    prepare_dir(&dir)?;
    let rows = run_benchmark(&suite.configs, suite.repetitions, parallel)?;

    let scenarios: Vec<&Scenario> = suite.scenarios.iter().map(|s| s.as_ref()).collect();
    let mut m = RunManifest::new("bench", &dir, &scenario_inputs(&scenarios)?);
    fill_manifest(&mut m, &suite.configs, suite.repetitions, suite.seed);
    write_outputs(&dir, &rows, &m)
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let rates = parse_rates(&a.exec)?;
    let sc = Arc::new(load_scenario(&a.scenario)?);
    let strategies = parse_strategies(&a.strategy, &DEFAULT_STRATEGIES)?;
    check_fraction(a.speed_fraction)?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let parallel = a.parallel.unwrap_or_else(default_parallelism);
    if parallel == 0 {
        return Err(CliError::Usage("--parallel must be at least 1".into()));
    }
    let dir = a.out.out;
    prepare_dir(&dir)?;

    let configs = sweep_configs(&sc, &strategies, a.speed_fraction, a.seed, rates, a.exec.wall_clock);
    let rows = run_benchmark(&configs, a.reps, parallel)?;
    let mut m = RunManifest::new("sweep", &dir, &scenario_inputs(&[&sc])?);
    fill_manifest(&mut m, &configs, a.reps, a.seed);
    write_outputs(&dir, &rows, &m)
}

/// One configuration per (bundled SSM set, strategy), labelled `ssm01`…`ssm16`.
pub fn sweep_configs(
    sc: &Arc<Scenario>,
    strategies: &[Strategy],
    speed_fraction: f64,
    seed: u64,
    rates: Rates,
    wall_clock: bool,
) -> Vec<EpisodeConfig> {
    let mut out = Vec::new();
    for (k, set) in bundled_ssm_sets().into_iter().enumerate() {
        for &st in strategies {
            let mut cfg = EpisodeConfig::new(sc.clone(), st, seed);
            cfg.rates = rates;
            cfg.speed_fraction = speed_fraction;
            cfg.safety = Some(set);
            cfg.budget_mode = if wall_clock { BudgetMode::WallClock } else { BudgetMode::Simulated };
            cfg.label = format!("ssm{:02}", k + 1);
            out.push(cfg);
        }
    }
    out
}

fn fill_manifest(m: &mut RunManifest, configs: &[EpisodeConfig], repetitions: usize, seed: u64) {
    let mut scen: Vec<String> = Vec::new();
    let mut strat: Vec<String> = Vec::new();
    let mut fracs: Vec<f64> = Vec::new();
    for c in configs {
        if !scen.contains(&c.scenario.name) {
            scen.push(c.scenario.name.clone());
        }
        if !strat.contains(&c.strategy.to_string()) {
            strat.push(c.strategy.to_string());
        }
        if !fracs.contains(&c.speed_fraction) {
            fracs.push(c.speed_fraction);
        }
    }
    m.scenarios = scen;
    m.strategies = strat;
    m.repetitions = repetitions;
    m.seeds = (0..repetitions as u64).map(|r| seed.wrapping_add(r)).collect();
    m.speed_fractions = fracs;
}

fn write_outputs(dir: &FsPath, rows: &[BenchmarkRow], manifest: &RunManifest) -> CliResult<()> {
    write_metrics_csv(rows, create(&dir.join("metrics.csv"))?)?;
    write_replan_csv(rows, create(&dir.join("replans.csv"))?)?;
    let summary = summarize(rows);
    write_summary_csv(&summary, create(&dir.join("summary.csv"))?)?;
    write_plots(&dir.join("plots"), rows, &summary)?;
    manifest.write(dir)?;
    print_summary(&summary);

    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        return Err(CliError::EpisodeFailure { failed, total: rows.len() });
    }
    Ok(())
}

fn write_plots(dir: &FsPath, rows: &[BenchmarkRow], summary: &[SummaryRow]) -> CliResult<()> {
    prepare_dir(dir)?;
    let mut groups: Vec<(String, String)> = summary.iter().map(|s| (s.scenario.clone(), s.variant.clone())).collect();
    groups.dedup();
    for (scenario, variant) in groups {
        let strategies: Vec<Strategy> =
            summary.iter().filter(|s| s.scenario == scenario && s.variant == variant).map(|s| s.strategy).collect();
        let collect = |f: fn(&replan_core::EpisodeMetrics) -> f64| -> Vec<(String, Vec<f64>)> {
            strategies
                .iter()
                .map(|&st| {
                    let v = rows
                        .iter()
                        .filter(|r| r.scenario == scenario && r.variant == variant && r.strategy == st)
                        .filter_map(|r| r.metrics().map(f))
                        .collect();
                    (st.to_string(), v)
                })
                .collect()
        };
        let panels = [
            Panel { title: "normalized execution time".into(), range: None, groups: collect(|m| m.exec_time_norm) },
            Panel { title: "average scaling [%]".into(), range: Some((0.0, 100.0)), groups: collect(|m| m.avg_scaling) },
        ];
        let title = if variant.is_empty() { scenario.clone() } else { format!("{scenario} ({variant})") };
        let file: PathBuf = dir.join(format!("{}.svg", file_stem(&scenario, &variant)));
        write_text(&file, &box_plot_svg(&title, &panels))?;
    }
    Ok(())
}

fn file_stem(scenario: &str, variant: &str) -> String {
    let raw = if variant.is_empty() { scenario.to_string() } else { format!("{scenario}_{variant}") };
    raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

fn print_summary(summary: &[SummaryRow]) {
    println!(
        "{:<12} {:<10} {:<11} {:>4} {:>6} {:>10} {:>10} {:>10}",
        "scenario", "variant", "strategy", "n", "failed", "norm_mean", "norm_med", "scal_mean"
    );
    for s in summary {
        println!(
            "{:<12} {:<10} {:<11} {:>4} {:>6} {:>10.4} {:>10.4} {:>10.2}",
            s.scenario,
            s.variant,
            s.strategy.to_string(),
            s.episodes,
            s.failed,
            s.exec_time_norm_mean,
            s.exec_time_norm_quartiles[1],
            s.avg_scaling_mean
        );
    }
}

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    let mut bad = Vec::new();
    for name in &a.scenario {
        match load_scenario(name) {
            Ok(s) => println!("ok      {name} ({} joints, {} human tracks)", s.start().len(), s.human.tracks.len()),
            Err(e) => {
                println!("invalid {name}: {e}");
                bad.push(name.clone());
            }
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("invalid scenarios: {}", bad.join(", "))))
    }
}
