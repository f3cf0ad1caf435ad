//! Solves one instance of every problem exactly.

use std::time::Instant;

use bqco::io::natural_value;
use bqco::oracles;
use bqco::problems::generate::{generate, GeneratorConfig};
use bqco::{Problem, ProblemKind};

fn main() -> bqco::Result<()> {
    let gen = GeneratorConfig::default();
    for (kind, n) in [
        (ProblemKind::Tsp, 15),
        (ProblemKind::Atsp, 12),
        (ProblemKind::Cvrp, 8),
        (ProblemKind::Op, 9),
        (ProblemKind::Kp, 60),
    ] {
        let inst = generate(kind, n, 7, 0, &gen)?;
        let start = Instant::now();
        let (partial, objective) = oracles::solve(&inst)?;
        println!(
            "{kind:<5} n={n:<3} value {:>8.4}  {:?}  {:.1} ms",
            natural_value(kind, objective),
            oracles::to_solution(&inst, &partial),
            start.elapsed().as_secs_f64() * 1e3
        );
        assert!(inst.is_feasible(&partial));
    }
    Ok(())
}
