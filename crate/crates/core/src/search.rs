//! Search for an unknown update rule: draw a candidate, bind it into a
//! system, run it, and compare the final state with the target.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autoprog::{self, AutoprogError, ToolchainConfig};
use crate::ca::{ring_milieu, rule_table, RuleNumber};
use crate::error::Error;
use crate::milieu::MilieuMatrix;
use crate::parallel::{attempt_rng, first_success};
use crate::state::{match_score, EntityTuple, StateSet};
use crate::system::{modulate, MetastableSystem, Schedule, SystemSpec, Unknowns, UpdateFunction};
use crate::trajectory::format_real;

/// Known parameters of a rule-search problem; the rule is the unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchProblem {
    initial: EntityTuple,
    milieu: MilieuMatrix,
    steps: u64,
    target: EntityTuple,
    threshold: f64,
}

impl SearchProblem {
    /// Ring lattice problem with an exact-match threshold.
    pub fn ring(initial: EntityTuple, target: EntityTuple, steps: u64) -> Result<Self, Error> {
        let milieu = ring_milieu(initial.len())?;
        Self::new(initial, milieu, target, steps, 1.0)
    }

    pub fn new(
        initial: EntityTuple,
        milieu: MilieuMatrix,
        target: EntityTuple,
        steps: u64,
        threshold: f64,
    ) -> Result<Self, Error> {
        if target.len() != initial.len() {
            return Err(Error::DimensionMismatch(format!(
                "target has {} entities, initial state has {}",
                target.len(),
                initial.len()
            )));
        }
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!("threshold {threshold} is outside (0, 1]")));
        }
        let problem = Self { initial, milieu, steps, target, threshold };
        // Any rule will do to check the milieu fits an elementary rule.
        problem.system(RuleNumber::new(0))?;
        Ok(problem)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, Error> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!("threshold {threshold} is outside (0, 1]")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn initial(&self) -> &EntityTuple {
        &self.initial
    }

    pub fn target(&self) -> &EntityTuple {
        &self.target
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The candidate system for `rule`.
    pub fn system(&self, rule: RuleNumber) -> Result<MetastableSystem, Error> {
        let spec = SystemSpec::new(StateSet::Boolean, self.initial.len(), Schedule::SynchronousAll)
            .with_unknowns(Unknowns { update: true, ..Unknowns::default() });
        modulate(spec, UpdateFunction::RuleTable(rule_table(rule)), self.milieu.clone(), self.initial.clone())
    }

    /// Match of `rule`'s final state against the target, run in-process.
    pub fn score(&self, rule: RuleNumber) -> Result<f64, Error> {
        let end = self.system(rule)?.run_to_end(self.steps)?;
        match_score(&end, &self.target)
    }

    /// Match of `rule` computed by generating, building and running a
    /// model program.
    pub fn score_via_codegen(&self, rule: RuleNumber, config: &ToolchainConfig) -> Result<f64, AutoprogError> {
        let doc = autoprog::emit(&self.system(rule)?, self.steps, Some(&self.target))?;
        let program = autoprog::generate_source(&doc, config.backend)?;
        let trajectory = autoprog::compile_and_run(&program.text(), config)?;
        let end = trajectory.last().ok_or_else(|| AutoprogError::OutputParse("empty trajectory".into()))?;
        Ok(match_score(end, &self.target)?)
    }
}

/// Where candidate systems are executed.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Route {
    #[default]
    Interpreter,
    Codegen(ToolchainConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub budget: usize,
    pub seed: u64,
    /// Never draw a rule twice (at most 256 attempts). Off by default: plain
    /// random search draws with replacement.
    pub dedup: bool,
    pub route: Route,
    pub parallel: bool,
}

impl SearchOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self { budget, seed, dedup: false, route: Route::Interpreter, parallel: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptRecord {
    /// 1-based.
    pub attempt: usize,
    pub rule: RuleNumber,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub seed: u64,
    pub log: Vec<AttemptRecord>,
    /// Rule of the successful attempt (always the last one logged).
    pub solution: Option<RuleNumber>,
}

impl SearchReport {
    pub fn attempts(&self) -> usize {
        self.log.len()
    }

    pub fn succeeded(&self) -> bool {
        self.solution.is_some()
    }

    /// Highest-scoring attempt, earliest on ties.
    pub fn best(&self) -> Option<AttemptRecord> {
        self.log.iter().copied().fold(None, |best: Option<AttemptRecord>, r| match best {
            Some(b) if b.score >= r.score => Some(b),
            _ => Some(r),
        })
    }

    /// Line-oriented log: `attempt <k> rule <n> match <score>` per attempt,
    /// then `solution <n> attempts <k>` or `exhausted best <n> match <score>`.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            let _ = writeln!(out, "{}", attempt_line(r));
        }
        let _ = writeln!(out, "{}", self.final_line());
        out
    }

    pub fn final_line(&self) -> String {
        match (self.solution, self.best()) {
            (Some(rule), _) => format!("solution {rule} attempts {}", self.attempts()),
            (None, Some(best)) => format!("exhausted best {} match {}", best.rule, format_real(best.score)),
            (None, None) => "exhausted best none match 0.000000000".to_string(),
        }
    }
}

pub fn attempt_line(r: &AttemptRecord) -> String {
    format!("attempt {} rule {} match {}", r.attempt, r.rule, format_real(r.score))
}

/// Rule drawn at 0-based attempt `index`.
pub fn drawn_rule(seed: u64, index: usize, permutation: Option<&[u8]>) -> RuleNumber {
    match permutation {
        Some(perm) => RuleNumber::new(perm[index]),
        None => RuleNumber::new(attempt_rng(seed, index).gen()),
    }
}

fn rule_permutation(seed: u64) -> Vec<u8> {
    let mut perm: Vec<u8> = (0..=255).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    perm.shuffle(&mut rng);
    perm
}

/// Draw rules uniformly at random, without selection, until one meets the
/// threshold or the budget is spent.
pub fn random_rule_search(problem: &SearchProblem, options: &SearchOptions) -> Result<SearchReport, AutoprogError> {
    if options.budget == 0 {
        return Err(Error::InvalidConfig("budget must be at least 1".into()).into());
    }
    if let Route::Codegen(config) = &options.route {
        config.validate()?;
    }
    let permutation = options.dedup.then(|| rule_permutation(options.seed));
    let budget = if options.dedup { options.budget.min(256) } else { options.budget };

    let log = first_success(
        budget,
        options.parallel,
        |index| {
            let rule = drawn_rule(options.seed, index, permutation.as_deref());
            let score = match &options.route {
                Route::Interpreter => problem.score(rule)?,
                Route::Codegen(config) => problem.score_via_codegen(rule, config)?,
            };
            Ok::<_, AutoprogError>(AttemptRecord { attempt: index + 1, rule, score })
        },
        |r| r.score >= problem.threshold,
    )?;
    let solution = log.last().filter(|r| r.score >= problem.threshold).map(|r| r.rule);
    Ok(SearchReport { seed: options.seed, log, solution })
}

/// Every rule meeting the threshold, by evaluating all 256 in ascending order.
pub fn exhaustive_rule_search(problem: &SearchProblem) -> Result<Vec<RuleNumber>, Error> {
    let mut solutions = Vec::new();
    for rule in RuleNumber::all() {
        if problem.score(rule)? >= problem.threshold {
            solutions.push(rule);
        }
    }
    Ok(solutions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptStatistics {
    pub runs: usize,
    pub min: usize,
    pub median: f64,
    pub max: usize,
    pub successes: usize,
    pub success_rate: f64,
}

pub fn attempt_statistics(reports: &[SearchReport]) -> Result<AttemptStatistics, Error> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: Vec<usize> = reports.iter().map(SearchReport::attempts).collect();
    counts.sort_unstable();
    let n = counts.len();
    let median = if n % 2 == 1 { counts[n / 2] as f64 } else { (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0 };
    let successes = reports.iter().filter(|r| r.succeeded()).count();
    Ok(AttemptStatistics {
        runs: n,
        min: counts[0],
        median,
        max: counts[n - 1],
        successes,
        success_rate: successes as f64 / n as f64,
    })
}
