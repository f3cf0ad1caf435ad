//! Runs small bisimulation and soundness suites for every problem.

use bqco::problems::generate::GeneratorConfig;
use bqco::verify::{bisimulation_suite, soundness_suite};
use bqco::ProblemKind;

fn main() -> bqco::Result<()> {
    let gen = GeneratorConfig::default();
    for kind in ProblemKind::ALL {
        let b = bisimulation_suite(kind, 200, 1, &gen)?;
        let s = soundness_suite(kind, 20, 5, 1, &gen)?;
        println!(
            "{kind:<5} bisimulation {}/{}  soundness {}/{}",
            b.cases - b.failed,
            b.cases,
            s.cases - s.failed,
            s.cases
        );
        for note in b.notes.iter().chain(&s.notes) {
            println!("  {note}");
        }
    }
    Ok(())
}
