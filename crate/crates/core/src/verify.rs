//! Randomized correctness suites shared by the CLI and the test suite:
//! bisimulation of the two MDPs on random triples, and soundness of the
//! direct MDP against brute-force enumeration on small instances.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bq_mdp::{self, check_bisimulation, random_triple, rollout_direct, rollout_reduced, REWARD_TOLERANCE};
use crate::direct_mdp::{enumerate_trajectories, Action};
use crate::error::Result;
use crate::oracles::feasible_set;
use crate::problems::generate::{generate, GeneratorConfig};
use crate::problems::{Problem, ProblemInstance, ProblemKind};
use crate::solution::{PartialSolution, SolutionKind, Step};

/// Absolute tolerance between a trajectory's summed rewards and the
/// objective difference they telescope to.
pub const TELESCOPING_TOLERANCE: f64 = 1e-12;

/// Objective ties closer than this count as equal when comparing optima.
pub const OPTIMUM_TOLERANCE: f64 = 1e-9;

const ENUMERATION_BUDGET: usize = 20_000_000;
const MAX_FAILURE_NOTES: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub problem: ProblemKind,
    pub cases: usize,
    pub failed: usize,
    /// The first few failures, described.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &'static str, problem: ProblemKind) -> Self {
        SuiteReport { suite, problem, cases: 0, failed: 0, notes: Vec::new() }
    }

    fn record(&mut self, case: usize, failure: Option<String>) {
        self.cases += 1;
        if let Some(f) = failure {
            self.failed += 1;
            if self.notes.len() < MAX_FAILURE_NOTES {
                self.notes.push(format!("case {case}: {f}"));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.cases > 0
    }
}

/// Instance size giving `decisions` construction steps.
pub fn size_for_decisions(kind: ProblemKind, decisions: usize) -> usize {
    match kind {
        ProblemKind::Tsp | ProblemKind::Atsp => decisions + 1,
        ProblemKind::Cvrp | ProblemKind::Op | ProblemKind::Kp => decisions,
    }
}

/// `cases` random (instance, partial solution, step) triples on instances
/// with 3 to 11 decisions; half of the steps are drawn among allowed ones.
pub fn bisimulation_suite(kind: ProblemKind, cases: usize, seed: u64, gen: &GeneratorConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("bisimulation", kind);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = size_for_decisions(kind, 3 + case % 9);
        let inst = generate(kind, n, seed, case as u64, gen)?;
        let (partial, z) = random_triple(&inst, 0.5, &mut rng)?;
        let r = check_bisimulation(&inst, &partial, z)?;
        let failure = (!r.passed())
            .then(|| format!("{:?} at {partial} + {z}: {}", r.first_failure(), r.detail.unwrap_or_default()));
        report.record(case, failure);
    }
    Ok(report)
}

fn key(x: &PartialSolution) -> Vec<Step> {
    x.steps().collect()
}

type ReducedPolicy = Box<dyn Fn(&ProblemInstance) -> Action>;

/// Deterministic reduced-state policies used to compare rollouts.
fn fixed_policies() -> Vec<ReducedPolicy> {
    vec![
        Box::new(|s: &ProblemInstance| bq_mdp::allowed_actions(s)[0]),
        Box::new(|s: &ProblemInstance| *bq_mdp::allowed_actions(s).last().expect("live state")),
        Box::new(|s: &ProblemInstance| {
            let a = bq_mdp::allowed_actions(s);
            a[(s.decision_count() * 2_654_435_761 + 7) % a.len()]
        }),
    ]
}

fn soundness_case(inst: &ProblemInstance) -> Result<Option<String>> {
    let trajs = enumerate_trajectories(inst, ENUMERATION_BUDGET)?;
    let feasible = feasible_set(inst, ENUMERATION_BUDGET)?;
    let outcomes: BTreeSet<Vec<Step>> = trajs.iter().map(|t| key(&t.outcome)).collect();
    let brute: BTreeSet<Vec<Step>> = feasible.iter().map(key).collect();
    if outcomes != brute {
        return Ok(Some(format!("{} trajectory outcomes vs {} feasible solutions", outcomes.len(), brute.len())));
    }
    let f0 = inst.objective(&PartialSolution::empty(inst.solution_kind()));
    for t in &trajs {
        let expected = f0 - inst.objective(&t.outcome);
        if (t.total_return() - expected).abs() > TELESCOPING_TOLERANCE {
            return Ok(Some(format!("return {} of {} differs from {expected}", t.total_return(), t.outcome)));
        }
    }
    let best_return = trajs.iter().map(|t| t.total_return()).fold(f64::NEG_INFINITY, f64::max);
    let best_by_return: BTreeSet<Vec<Step>> =
        trajs.iter().filter(|t| t.total_return() >= best_return - OPTIMUM_TOLERANCE).map(|t| key(&t.outcome)).collect();
    let f_star = feasible.iter().map(|x| inst.objective(x)).fold(f64::INFINITY, f64::min);
    let argmin: BTreeSet<Vec<Step>> =
        feasible.iter().filter(|x| inst.objective(x) <= f_star + OPTIMUM_TOLERANCE).map(key).collect();
    if best_by_return != argmin {
        return Ok(Some(format!("{} max-return outcomes vs {} minimizers", best_by_return.len(), argmin.len())));
    }
    for (k, policy) in fixed_policies().iter().enumerate() {
        let reduced = rollout_reduced(inst, policy)?;
        let direct = rollout_direct(inst, policy)?;
        let same = reduced.len() == direct.len()
            && reduced.iter().zip(&direct).all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= REWARD_TOLERANCE);
        if !same {
            return Ok(Some(format!("policy {k}: reduced rollout {reduced:?} vs lifted direct rollout {direct:?}")));
        }
    }
    Ok(None)
}

/// `cases` random instances with 1 to `max_decisions` decisions: outcome
/// sets, optimal outcomes and rollouts of the two MDPs are compared.
pub fn soundness_suite(
    kind: ProblemKind,
    cases: usize,
    max_decisions: usize,
    seed: u64,
    gen: &GeneratorConfig,
) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("soundness", kind);
    let lo = if kind.solution_kind() == SolutionKind::Set { 1 } else { 2 };
    for case in 0..cases {
        let decisions = lo + case % (max_decisions.max(lo) - lo + 1);
        let inst = generate(kind, size_for_decisions(kind, decisions), seed, case as u64, gen)?;
        report.record(case, soundness_case(&inst)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let gen = GeneratorConfig::default();
        for kind in ProblemKind::ALL {
            let b = bisimulation_suite(kind, 20, 5, &gen).unwrap();
            assert!(b.passed(), "{b:?}");
            let s = soundness_suite(kind, 4, 4, 5, &gen).unwrap();
            assert!(s.passed(), "{s:?}");
        }
    }
}
