//! Reduces an instance step by step and checks it against the direct MDP.

use bqco::bq_mdp::{check_bisimulation, phi_by_fold, random_triple};
use bqco::problems::generate::{generate, GeneratorConfig};
use bqco::{Problem, ProblemKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bqco::Result<()> {
    let gen = GeneratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in ProblemKind::ALL {
        let inst = generate(kind, 7, 2, 0, &gen)?;
        let (partial, z) = random_triple(&inst, 0.5, &mut rng)?;
        let (reduced, reward) = phi_by_fold(&inst, &partial)?;
        let report = check_bisimulation(&inst, &partial, z)?;
        println!(
            "{kind:<5} x = {partial:<20} z = {z:<6} reduced decisions {} reward so far {reward:>8.4} bisimilar {}",
            reduced.decision_count(),
            report.passed()
        );
    }
    Ok(())
}
