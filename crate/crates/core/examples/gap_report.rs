//! Compares a nearest-neighbour heuristic with exact solutions in a gap table.

use bqco::io::report::{attach_references, format_table, natural_value, summarize};
use bqco::io::ResultRecord;
use bqco::oracles;
use bqco::problems::generate::{generate_many, GeneratorConfig};
use bqco::problems::{Problem, ProblemInstance};
use bqco::{PartialSolution, ProblemKind, SolutionKind, Step};

fn nearest_neighbour(inst: &ProblemInstance) -> PartialSolution {
    let ProblemInstance::Tsp(p) = inst else { unreachable!() };
    let mut state = p.clone();
    let mut partial = PartialSolution::empty(SolutionKind::Sequence);
    while !state.is_complete() {
        let at = state.origin();
        let next = *state.active().iter().min_by(|&&a, &&b| state.dist(at, a).total_cmp(&state.dist(at, b))).unwrap();
        partial = partial.push(Step::Node(next));
        state = state.reduce(Step::Node(next)).unwrap().0;
    }
    partial
}

fn record(index: usize, inst: &ProblemInstance, partial: &PartialSolution) -> ResultRecord {
    ResultRecord {
        index,
        solution: oracles::to_solution(inst, partial),
        value: natural_value(inst.kind(), inst.objective(partial)),
        log_prob: None,
        reference: None,
        gap: None,
    }
}

fn main() -> bqco::Result<()> {
    let insts = generate_many(ProblemKind::Tsp, 12, 50, 4, &GeneratorConfig::default())?;
    let mut refs = Vec::new();
    let mut exact = Vec::new();
    let mut heuristic = Vec::new();
    for (index, inst) in insts.iter().enumerate() {
        let (partial, objective) = oracles::solve(inst)?;
        refs.push(Some(natural_value(ProblemKind::Tsp, objective)));
        exact.push(record(index, inst, &partial));
        heuristic.push(record(index, inst, &nearest_neighbour(inst)));
    }
    let mut rows = Vec::new();
    for (label, mut results) in [("exact", exact), ("nearest neighbour", heuristic)] {
        attach_references(ProblemKind::Tsp.sense(), &mut results, &refs)?;
        rows.push((label.to_string(), summarize(&results, 0.0)));
    }
    print!("{}", format_table(&rows));
    Ok(())
}
