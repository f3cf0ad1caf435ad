//! Enumerates every trajectory of the direct MDP on a tiny CVRP instance.

use bqco::direct_mdp::enumerate_trajectories;
use bqco::problems::generate::{generate, GeneratorConfig};
use bqco::{Problem, ProblemKind};

fn main() -> bqco::Result<()> {
    let inst = generate(ProblemKind::Cvrp, 3, 1, 0, &GeneratorConfig::default())?;
    let trajs = enumerate_trajectories(&inst, 100_000)?;
    println!("{} trajectories", trajs.len());
    for t in &trajs {
        println!(
            "{:<24} return {:>8.4}  objective {:.4}",
            t.outcome.to_string(),
            t.total_return(),
            inst.objective(&t.outcome)
        );
    }
    let best = trajs.iter().max_by(|a, b| a.total_return().total_cmp(&b.total_return())).unwrap();
    println!("best return reaches {}", best.outcome);
    Ok(())
}
