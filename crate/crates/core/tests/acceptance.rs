//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use wsnsim::config::{SimConfig, Strategy, TrafficMode};
use wsnsim::energy::RadioModel;
use wsnsim::net::{deploy, NeighborGraph, Node, Position};
use wsnsim::rng::seeded_rng;
use wsnsim::sim::{run, run_with_positions, SimResult, Simulation, TerminationReason};
use wsnsim::strategy::{brute_force_min_route, select_next_hop_he, select_route_mecrt, EnergySnapshot};
use wsnsim::sweep::{sweep, SweepSpec};

const SEEDS: u64 = 30;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn within_budget(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    let ok = elapsed < budget;
    Outcome::new(
        outcome.pass && ok,
        format!("{}; runtime {:.2?} (budget {:?})", outcome.detail, elapsed, budget),
    )
}

fn seeded_runs(strategy: Strategy) -> Vec<SimResult> {
    (1..=SEEDS)
        .into_par_iter()
        .map(|seed| run(&SimConfig { strategy, seed, ..SimConfig::default() }).expect("valid config"))
        .collect()
}

struct TableOneRuns {
    he: Vec<SimResult>,
    mecrt: Vec<SimResult>,
    minhop: Vec<SimResult>,
    elapsed_he_mecrt: Duration,
}

fn table_one_runs() -> &'static TableOneRuns {
    static RUNS: OnceLock<TableOneRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let he = seeded_runs(Strategy::He);
        let mecrt = seeded_runs(Strategy::Mecrt);
        let elapsed_he_mecrt = start.elapsed();
        let minhop = seeded_runs(Strategy::MinHop);
        TableOneRuns { he, mecrt, minhop, elapsed_he_mecrt }
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_termination(runs: &[SimResult]) -> f64 {
    mean(runs.iter().map(|r| r.lifetime_termination as f64))
}

fn mean_residual(runs: &[SimResult], round: u64) -> f64 {
    mean(runs.iter().map(|r| r.residual_at(round)))
}

fn mean_dead(runs: &[SimResult], round: u64) -> f64 {
    mean(runs.iter().map(|r| r.dead_at(round) as f64))
}

fn criterion_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let model = RadioModel::default();
    let mut mismatches = Vec::new();
    let mut worst_rel = 0.0f64;
    for i in 0..200u64 {
        let n = 1 + (i % 9) as usize;
        let config = SimConfig { node_count: n, seed: 1000 + i, ..SimConfig::default() };
        let mut rng = seeded_rng(config.seed);
        let mut nodes = deploy(&config, &mut rng);
        for node in &mut nodes {
            node.residual_j = rng.gen_range(0.01..=config.initial_energy_j);
        }
        let graph = NeighborGraph::build(&nodes, &config);
        let snap = EnergySnapshot::new(&nodes);
        let source = (i as usize * 7) % n;
        let fast = select_route_mecrt(&graph, snap, source, &config, &model).expect("alive source");
        let exact = brute_force_min_route(&graph, snap, source, &config, &model).expect("small instance");
        let rel = (fast.predicted_network_j - exact.predicted_network_j).abs() / exact.predicted_network_j;
        worst_rel = worst_rel.max(rel);
        if rel > 1e-12 || fast.nodes != exact.nodes {
            mismatches.push(i);
        }
    }
    within_budget(
        Outcome::new(
            mismatches.is_empty(),
            format!("200 instances, worst relative gap {worst_rel:e}, mismatching instances {mismatches:?}"),
        ),
        start.elapsed(),
        Duration::from_secs(10),
    )
}

fn criterion_conservation() -> Outcome {
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for strategy in Strategy::ALL {
        let r = run(&SimConfig { strategy, ..SimConfig::default() }).expect("valid config");
        let drained = r.initial_total_j - r.final_residual_j();
        let summed: f64 = r.rounds.iter().map(|m| m.network_j_consumed).sum();
        let err = (drained - summed).abs();
        worst = worst.max(err);
        details.push(format!("{strategy}: |Δ|={err:.3e} J over {} rounds", r.rounds.len()));
    }
    Outcome::new(worst <= 1e-9, details.join(", "))
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_wsnsim"))
        .args(args)
        .output()
        .expect("spawn wsnsim")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_default()
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let d = |name: &str| dir.path().join(name);
    let s = |p: &Path| p.to_str().expect("utf8 path").to_string();
    let mut failures = Vec::new();
    for strategy in ["he", "mecrt", "minhop"] {
        let (a, b) = (d(&format!("{strategy}_a")), d(&format!("{strategy}_b")));
        for out in [&a, &b] {
            let o = run_cli(&["run", "--strategy", strategy, "--seed", "7", "--trace", "--out", &s(out)]);
            if !o.status.success() {
                failures.push(format!("run {strategy} exited {:?}", o.status.code()));
            }
        }
        for file in ["rounds.csv", "trace.csv"] {
            let (x, y) = (read(&a.join(file)), read(&b.join(file)));
            if x.is_empty() || x != y {
                failures.push(format!("{strategy}/{file} differs"));
            }
        }
    }
    let (a, b) = (d("sweep_a"), d("sweep_b"));
    for out in [&a, &b] {
        let o = run_cli(&[
            "sweep", "--nodes", "10,20", "--strategies", "he,mecrt,minhop", "--seeds", "3", "--out", &s(out),
        ]);
        if !o.status.success() {
            failures.push(format!("sweep exited {:?}", o.status.code()));
        }
    }
    for file in ["sweep.csv", "aggregate.csv", "curves.csv"] {
        let (x, y) = (read(&a.join(file)), read(&b.join(file)));
        if x.is_empty() || x != y {
            failures.push(format!("sweep/{file} differs"));
        }
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            "run (3 strategies, with trace) and sweep outputs byte-identical across invocations".to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn criterion_fig3() -> Outcome {
    let runs = table_one_runs();
    let he_term = mean_termination(&runs.he);
    let mecrt_term = mean_termination(&runs.mecrt);
    let horizon = he_term.floor() as u64;
    let violations: Vec<u64> = (0..=horizon)
        .filter(|&r| mean_residual(&runs.mecrt, r) < mean_residual(&runs.he, r))
        .collect();
    let pass = violations.is_empty() && mecrt_term >= he_term;
    within_budget(
        Outcome::new(
            pass,
            format!(
                "residual MECRT >= HE at {}/{} rounds (first violation {:?}); mean termination MECRT {mecrt_term:.1} vs HE {he_term:.1}",
                horizon + 1 - violations.len() as u64,
                horizon + 1,
                violations.first()
            ),
        ),
        runs.elapsed_he_mecrt,
        Duration::from_secs(60),
    )
}

fn criterion_fig4() -> Outcome {
    let runs = table_one_runs();
    let mut non_monotone = 0;
    for r in runs.he.iter().chain(&runs.mecrt) {
        if r.rounds.windows(2).any(|w| w[1].cumulative_dead < w[0].cumulative_dead) {
            non_monotone += 1;
        }
    }
    let horizon = runs
        .he
        .iter()
        .chain(&runs.mecrt)
        .map(|r| r.lifetime_termination)
        .max()
        .unwrap_or(0);
    let start = (0..=horizon).find(|&r| mean_dead(&runs.he, r) > 0.0 || mean_dead(&runs.mecrt, r) > 0.0);
    let mut violations = Vec::new();
    if let Some(start) = start {
        for r in start..=horizon {
            if mean_dead(&runs.he, r) < mean_dead(&runs.mecrt, r) {
                violations.push(r);
            }
        }
    }
    let detail = match (start, violations.first(), violations.last()) {
        (Some(s), Some(first), Some(last)) => format!(
            "deaths start at round {s}; HE mean dead < MECRT at {} rounds ({first}..={last}), e.g. round {first}: HE {:.3} vs MECRT {:.3}; HE >= MECRT from round {} on",
            violations.len(),
            mean_dead(&runs.he, *first),
            mean_dead(&runs.mecrt, *first),
            last + 1
        ),
        (Some(s), _, _) => format!("deaths start at round {s}; HE mean dead >= MECRT at every later round"),
        (None, _, _) => "no deaths observed".to_string(),
    };
    Outcome::new(
        violations.is_empty() && non_monotone == 0 && start.is_some(),
        format!("{detail}; runs with non-monotone dead count: {non_monotone}"),
    )
}

fn criterion_fig2() -> Outcome {
    let runs = table_one_runs();
    let mecrt = mean_termination(&runs.mecrt);
    let minhop = mean_termination(&runs.minhop);
    Outcome::new(
        mecrt >= minhop,
        format!("mean termination MECRT {mecrt:.1} vs MINHOP {minhop:.1}"),
    )
}

fn criterion_fig5() -> Outcome {
    let start = Instant::now();
    let spec = SweepSpec {
        node_counts: vec![10, 25, 50, 100, 150],
        strategies: vec![Strategy::He, Strategy::Mecrt],
        seeds: (1..=SEEDS).collect(),
        checkpoint_every: 100,
    };
    let table = sweep(&SimConfig::default(), &spec).expect("sweep");
    let life = |n: usize, s: Strategy| {
        table
            .aggregates
            .iter()
            .find(|a| a.n == n && a.strategy == s)
            .map(|a| a.mean_life_term)
            .expect("aggregate row")
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for &n in &spec.node_counts {
        let (he, mecrt) = (life(n, Strategy::He), life(n, Strategy::Mecrt));
        if n >= 25 && mecrt < he {
            ok = false;
        }
        parts.push(format!("N={n}: MECRT {mecrt:.0} / HE {he:.0}"));
    }
    let gap = |n| (life(n, Strategy::Mecrt) - life(n, Strategy::He)) / life(n, Strategy::He);
    let (gap10, gap100) = (gap(10), gap(100));
    ok &= gap10 < gap100;
    within_budget(
        Outcome::new(
            ok,
            format!("{}; relative gap N=10 {gap10:.3} < N=100 {gap100:.3}", parts.join(", ")),
        ),
        start.elapsed(),
        Duration::from_secs(300),
    )
}

fn criterion_hand_computed() -> Outcome {
    let per_round = 2.3728e-3;
    let mut parts = Vec::new();
    let mut ok = true;
    for mode in [TrafficMode::RandomSource, TrafficMode::EventPoint] {
        let config = SimConfig { node_count: 1, traffic_mode: mode, ..SimConfig::default() };
        let r = run_with_positions(&config, &[Position::new(25.0, 50.0)]).expect("valid");
        let deliveries: Vec<f64> = r.rounds.iter().filter(|m| m.delivered).map(|m| m.network_j_consumed).collect();
        // The last delivery overdraws and is clamped to whatever charge remained.
        let full = &deliveries[..deliveries.len().saturating_sub(1)];
        let worst = full.iter().map(|c| (c - per_round).abs()).fold(0.0, f64::max);
        ok &= deliveries.len() == 211
            && worst <= 1e-7
            && r.termination_reason == TerminationReason::NoAliveNodes;
        parts.push(format!(
            "{mode}: {} deliveries, worst per-round deviation {worst:.2e} J, ended {}",
            deliveries.len(),
            r.termination_reason.as_str()
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn criterion_invariants() -> Outcome {
    let start = Instant::now();
    let instances = 1000u64;
    let failures: Vec<String> = (0..instances)
        .into_par_iter()
        .filter_map(|i| check_instance(i).err().map(|e| format!("instance {i}: {e}")))
        .collect();
    let detail = if failures.is_empty() {
        format!("{instances} randomized instances: adjacency symmetry, HE hop bound, cache monotonicity, monotone decay and deaths, HE scale invariance all held")
    } else {
        format!("{} failures, first: {}", failures.len(), failures[0])
    };
    within_budget(
        Outcome::new(failures.is_empty(), detail),
        start.elapsed(),
        Duration::from_secs(30),
    )
}

fn check_instance(i: u64) -> Result<(), String> {
    let mut rng = seeded_rng(0xACCE_97A1 ^ i);
    let strategy = Strategy::ALL[(i % 3) as usize];
    let config = SimConfig {
        node_count: rng.gen_range(1..=16),
        seed: rng.gen(),
        strategy,
        traffic_mode: if rng.gen_bool(0.5) { TrafficMode::EventPoint } else { TrafficMode::RandomSource },
        initial_energy_j: rng.gen_range(0.005..=0.05),
        max_rounds: 400,
        ..SimConfig::default()
    };
    let mut sim = Simulation::new(config.clone()).map_err(|e| e.to_string())?;
    let mut last_residual = sim.initial_total_j();
    let mut last_dead = 0;
    let mut cache_sizes = sim.network().cache.sizes();
    while sim.termination().is_none() {
        let alive_before = sim.network().alive_count();
        let m = sim.step().map_err(|e| e.to_string())?;
        if m.total_residual_j > last_residual {
            return Err(format!("residual rose at round {}", m.round));
        }
        if m.cumulative_dead < last_dead {
            return Err(format!("dead count fell at round {}", m.round));
        }
        if m.hops > alive_before {
            return Err(format!("{} hops with {alive_before} alive nodes", m.hops));
        }
        let sizes = sim.network().cache.sizes();
        if sizes.iter().zip(&cache_sizes).any(|(a, b)| a < b) {
            return Err(format!("cache shrank at round {}", m.round));
        }
        let graph = &sim.network().graph;
        let n = sim.nodes().len();
        for u in 0..n {
            for nb in graph.neighbors(u) {
                if !graph.are_adjacent(nb.id, u) {
                    return Err(format!("asymmetric edge {u}-{}", nb.id));
                }
                if nb.distance_m > config.tx_range_m {
                    return Err(format!("edge {u}-{} beyond range", nb.id));
                }
            }
        }
        last_residual = m.total_residual_j;
        last_dead = m.cumulative_dead;
        cache_sizes = sizes;
    }
    check_he_scale_invariance(sim.nodes(), &config, &mut rng)
}

fn check_he_scale_invariance(nodes: &[Node], config: &SimConfig, rng: &mut impl Rng) -> Result<(), String> {
    let fresh = deploy(config, rng);
    for set in [nodes.to_vec(), fresh] {
        let mut set = set;
        for node in set.iter_mut().filter(|n| n.alive) {
            node.residual_j = rng.gen_range(1e-4..=0.5);
        }
        let k: f64 = rng.gen_range(1e-3..=1e3);
        let scaled: Vec<Node> = set.iter().map(|n| Node { residual_j: n.residual_j * k, ..n.clone() }).collect();
        let graph = NeighborGraph::build(&set, config);
        for current in 0..set.len() {
            let mut visited = vec![false; set.len()];
            visited[current] = true;
            let a = select_next_hop_he(&graph, EnergySnapshot::new(&set), current, &visited);
            let b = select_next_hop_he(&graph, EnergySnapshot::new(&scaled), current, &visited);
            if a != b {
                return Err(format!("HE choice changed under scaling by {k} at node {current}"));
            }
        }
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 oracle equivalence", criterion_oracle_equivalence),
        ("2 conservation", criterion_conservation),
        ("3 determinism", criterion_determinism),
        ("4 energy decay trend (HE vs MECRT)", criterion_fig3),
        ("5 node death trend (HE vs MECRT)", criterion_fig4),
        ("6 energy-aware vs min-hop lifetime", criterion_fig2),
        ("7 node-count sweep trend", criterion_fig5),
        ("8 single-node hand computation", criterion_hand_computed),
        ("9 invariant suite", criterion_invariants),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {}", outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
