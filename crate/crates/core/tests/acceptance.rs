//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Every tolerance and time limit is pinned below.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use metamodel::ann::{
    activate, attempt_rng, layered_milieu, perceptron_update, train, LayeredTopology, Strategy, TrainingConfig,
};
use metamodel::autoprog::{compile_and_run, emit, generate_source, interpret, AmpDocument, Backend, ToolchainConfig};
use metamodel::ca::{ca_system, parse_state, RuleNumber};
use metamodel::search::{attempt_statistics, exhaustive_rule_search, random_rule_search, SearchOptions, SearchProblem};
use metamodel::{demodulate, match_score, EntityTuple, MetastableSystem};
use rand::seq::SliceRandom;
use rand::Rng;

const INIT: &str = "0000000000000001000000000000000";
const TARGET: &str = "1101011001111101000000000000000";
const STEPS: u64 = 15;

const RUN_LIMIT: Duration = Duration::from_millis(10);
const ENUMERATE_LIMIT: Duration = Duration::from_secs(1);
const SEARCH_LIMIT: Duration = Duration::from_secs(30);
const TRAIN_LIMIT: Duration = Duration::from_secs(300);
const SWEEP_LIMIT: Duration = Duration::from_secs(120);

/// Size of the solution set found by the exhaustive oracle.
const SOLUTION_COUNT: usize = 1;
const SEARCH_RUNS: u64 = 200;
const SEARCH_BUDGET: usize = 5000;
const SEARCH_WINDOW: usize = 1000;
const MIN_SUCCESS_RATE: f64 = 0.9;
const ANN_LAYERS: usize = 15;
const ANN_WIDTH: usize = 31;
const MIN_ANN_MATCH: f64 = 0.9;
const ANN_SEED: u64 = 2024;
const SWEEP_CA: usize = 50;
const SWEEP_ANN: usize = 10;
const SWEEP_SEED: u64 = 7;
const PROPERTY_CASES: u64 = 200;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn state(text: &str) -> EntityTuple {
    parse_state(text).unwrap()
}

fn rule_110_reproduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("run.txt");
    let args: Vec<String> =
        ["metamodel", "--output", path.to_str().unwrap(), "ca-run", "--rule", "110", "--init", INIT, "--steps", "15"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    let start = Instant::now();
    let code = metamodel::cli::run(args);
    let elapsed = start.elapsed();
    check(code == 0, format!("ca-run exit code {code}"))?;
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    check(lines.len() == 16, format!("{} lines, expected 16", lines.len()))?;
    check(lines[15] == TARGET, format!("final state {}", lines[15]))?;

    let binary = std::process::Command::new(env!("CARGO_BIN_EXE_metamodel"))
        .args(["ca-run", "--rule", "110", "--init", INIT, "--steps", "15"])
        .output()
        .map_err(|e| e.to_string())?;
    check(binary.stdout == text.as_bytes(), "binary output differs")?;
    within(elapsed, RUN_LIMIT)?;
    Ok(format!("final state bit-exact, {elapsed:.2?} < {RUN_LIMIT:?}"))
}

fn exhaustive_oracle() -> Outcome {
    let problem = SearchProblem::ring(state(INIT), state(TARGET), STEPS).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let solutions = exhaustive_rule_search(&problem).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(solutions.contains(&RuleNumber::new(110)), "rule 110 missing")?;
    check(solutions.len() == SOLUTION_COUNT, format!("|S| = {}, pinned {SOLUTION_COUNT}", solutions.len()))?;
    within(elapsed, ENUMERATE_LIMIT)?;
    let listed: Vec<String> = solutions.iter().map(|r| r.to_string()).collect();
    Ok(format!("S = {{{}}}, |S| = {SOLUTION_COUNT}, {elapsed:.2?} < {ENUMERATE_LIMIT:?}", listed.join(", ")))
}

fn search_statistics() -> Outcome {
    let problem = SearchProblem::ring(state(INIT), state(TARGET), STEPS).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut reports = Vec::new();
    for seed in 0..SEARCH_RUNS {
        let report =
            random_rule_search(&problem, &SearchOptions::new(SEARCH_BUDGET, seed)).map_err(|e| e.to_string())?;
        check(report.solution.is_none() || report.solution == Some(RuleNumber::new(110)), "solution outside S")?;
        reports.push(report);
    }
    let elapsed = start.elapsed();
    let stats = attempt_statistics(&reports).map_err(|e| e.to_string())?;
    let early = reports.iter().filter(|r| r.succeeded() && r.attempts() <= SEARCH_WINDOW).count();
    let rate = early as f64 / SEARCH_RUNS as f64;
    check(
        rate >= MIN_SUCCESS_RATE,
        format!("success rate within {SEARCH_WINDOW} attempts {rate:.3} < {MIN_SUCCESS_RATE}"),
    )?;
    within(elapsed, SEARCH_LIMIT)?;
    Ok(format!(
        "{early}/{SEARCH_RUNS} solved within {SEARCH_WINDOW} (rate {rate:.3} >= {MIN_SUCCESS_RATE}), attempts min {} median {} max {}, {elapsed:.2?} < {SEARCH_LIMIT:?}",
        stats.min, stats.median, stats.max
    ))
}

fn ann_experiment() -> Outcome {
    let config = TrainingConfig::default();
    check(config.rate == 0.1 && config.epochs == 200 && config.budget == 100_000, "defaults changed")?;
    check(config.strategy == Strategy::OutputLayerOnly, "default strategy changed")?;
    check(config.init_low == -1.0 && config.init_high == 1.0, "default initial range changed")?;
    let topology = layered_milieu(ANN_LAYERS, ANN_WIDTH).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let report = train(&topology, &state(INIT), &state(TARGET), &config, ANN_SEED).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(report.best_match >= MIN_ANN_MATCH, format!("best match {:.9} < {MIN_ANN_MATCH}", report.best_match))?;
    within(elapsed, TRAIN_LIMIT)?;
    let flag = if report.exact() { ", FLAG exact match reached (above the reported ~0.9)" } else { "" };
    Ok(format!(
        "best match {:.9} >= {MIN_ANN_MATCH} at attempt {} of {}{flag}, {elapsed:.2?} < {TRAIN_LIMIT:?}",
        report.best_match, report.best_attempt, report.attempts
    ))
}

fn random_ann_system(rng: &mut impl Rng) -> (MetastableSystem, u64) {
    let layers = rng.gen_range(2..=6);
    let width = rng.gen_range(2..=12);
    let mut net = layered_milieu(layers, width).unwrap();
    net.randomize(rng, -1.0, 1.0);
    let input: Vec<u8> = (0..width).map(|_| rng.gen_range(0..=1)).collect();
    let system = net.system(&EntityTuple::from_bits(&input).unwrap()).unwrap();
    (system, (layers - 1) as u64)
}

fn codegen_sweep() -> Outcome {
    let mut rng = attempt_rng(SWEEP_SEED, 0);
    let mut docs = Vec::new();
    for _ in 0..SWEEP_CA {
        let cells: Vec<u8> = (0..31).map(|_| rng.gen_range(0..=1)).collect();
        let system = ca_system(RuleNumber::new(rng.gen()), EntityTuple::from_bits(&cells).unwrap()).unwrap();
        docs.push((system, STEPS));
    }
    for _ in 0..SWEEP_ANN {
        docs.push(random_ann_system(&mut rng));
    }
    let start = Instant::now();
    let mut expected = Vec::new();
    for (system, steps) in &docs {
        let doc = emit(system, *steps, None).map_err(|e| e.to_string())?;
        let parsed = AmpDocument::parse(&doc.to_text()).map_err(|e| e.to_string())?;
        check(parsed == doc, "AMP text round trip changed the document")?;
        let trajectory = interpret(&parsed).map_err(|e| e.to_string())?;
        check(trajectory == system.run(*steps).map_err(|e| e.to_string())?, "interpreter round trip differs")?;
        expected.push((doc, trajectory));
    }
    let Some(config) = ToolchainConfig::detect() else {
        return Ok(format!("SKIPPED compile step (no toolchain); {} interpreter round trips bit-exact", docs.len()));
    };
    let results: Vec<Result<bool, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = expected
            .chunks(8)
            .map(|chunk| {
                let config = &config;
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|(doc, trajectory)| {
                            let program = generate_source(doc, Backend::C).map_err(|e| e.to_string())?;
                            let compiled = compile_and_run(&program.text(), config).map_err(|e| e.to_string())?;
                            Ok(compiled == *trajectory)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let elapsed = start.elapsed();
    let mut equal = 0;
    for r in results {
        if r? {
            equal += 1;
        }
    }
    check(equal == docs.len(), format!("{equal}/{} programs bit-exact", docs.len()))?;
    within(elapsed, SWEEP_LIMIT)?;
    Ok(format!("{SWEEP_CA} CA + {SWEEP_ANN} ANN programs bit-exact, {elapsed:.2?} < {SWEEP_LIMIT:?}"))
}

fn random_ca(rng: &mut impl Rng, p: usize) -> MetastableSystem {
    let cells: Vec<u8> = (0..p).map(|_| rng.gen_range(0..=1)).collect();
    ca_system(RuleNumber::new(rng.gen()), EntityTuple::from_bits(&cells).unwrap()).unwrap()
}

fn property_suites() -> Outcome {
    let mut rng = attempt_rng(99, 0);
    for _ in 0..PROPERTY_CASES {
        let p = rng.gen_range(3..=40);
        let a: Vec<u8> = (0..p).map(|_| rng.gen_range(0..=1)).collect();
        let b: Vec<u8> = (0..p).map(|_| rng.gen_range(0..=1)).collect();
        let (ta, tb) = (EntityTuple::from_bits(&a).unwrap(), EntityTuple::from_bits(&b).unwrap());
        let ab = match_score(&ta, &tb).unwrap();
        let equal = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        check(match_score(&ta, &ta).unwrap() == 1.0, "match(x, x) != 1")?;
        check(ab == match_score(&tb, &ta).unwrap(), "match not symmetric")?;
        check(ab == equal as f64 / p as f64 && (0.0..=1.0).contains(&ab), "match != equal/p")?;

        let system = random_ca(&mut rng, p);
        let restored = demodulate(&system).remodulate().map_err(|e| e.to_string())?;
        check(restored == system, "modulate/demodulate round trip")?;

        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(&mut rng);
        check(system.step_in_order(&order).unwrap() == system.step().unwrap(), "synchronous order dependence")?;

        let k = rng.gen_range(0..p);
        let shifted = ca_system(match_rule(&system), system.initial().rotated(k)).unwrap();
        let steps = rng.gen_range(0..=20);
        check(
            shifted.run_to_end(steps).unwrap() == system.run_to_end(steps).unwrap().rotated(k),
            "shift equivariance",
        )?;

        let w: f64 = rng.gen_range(-2.0..2.0);
        let r: f64 = rng.gen_range(0.0..1.0);
        let y = rng.gen_range(0..=1u8);
        let x = rng.gen_range(0..=1) as f64;
        check(perceptron_update(w, r, y, y, x) == w, "update with y = a_j changed the weight")?;
        check(perceptron_update(w, r, y, 1 - y, 0.0) == w, "update with a_i = 0 changed the weight")?;
    }
    check(activate(0.5).unwrap() == 1, "activation at 0.5")?;
    check(activate(0.5 - f64::EPSILON / 2.0).unwrap() == 0, "activation just below 0.5")?;

    let problem = SearchProblem::ring(state(INIT), state(TARGET), STEPS).unwrap();
    let mut options = SearchOptions::new(300, 11);
    let first = random_rule_search(&problem, &options).unwrap();
    check(first == random_rule_search(&problem, &options).unwrap(), "search not deterministic")?;
    options.parallel = true;
    check(first == random_rule_search(&problem, &options).unwrap(), "parallel search differs")?;

    let net: LayeredTopology = layered_milieu(4, 6).unwrap();
    let (input, target) = (state("101100"), state("010111"));
    let mut config = TrainingConfig { budget: 20, epochs: 5, ..TrainingConfig::default() };
    let one = train(&net, &input, &target, &config, 5).unwrap();
    check(one == train(&net, &input, &target, &config, 5).unwrap(), "training not deterministic")?;
    config.parallel = true;
    check(one == train(&net, &input, &target, &config, 5).unwrap(), "parallel training differs")?;
    Ok(format!("{PROPERTY_CASES} seeded cases per property, all exact"))
}

fn match_rule(system: &MetastableSystem) -> RuleNumber {
    match system.phi() {
        metamodel::UpdateFunction::RuleTable(t) => t.rule_number(),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("rule-110 reproduction", rule_110_reproduction),
        ("exhaustive oracle", exhaustive_oracle),
        ("stochastic search statistics", search_statistics),
        ("ANN experiment", ann_experiment),
        ("codegen equivalence sweep", codegen_sweep),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
