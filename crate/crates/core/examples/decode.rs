//! Trains a small CVRP policy, then decodes with greedy, beam and k-nearest restriction.

use bqco::imitation::{solution_to_trajectory, train, Demonstration, TrainConfig};
use bqco::io::natural_value;
use bqco::oracles;
use bqco::problems::generate::{generate_many, GeneratorConfig};
use bqco::problems::ObserveOptions;
use bqco::search::{beam_search, greedy, BeamSelection};
use bqco::{Problem, ProblemKind};

fn main() -> bqco::Result<()> {
    let gen = GeneratorConfig::default();
    let demos = generate_many(ProblemKind::Cvrp, 8, 1000, 1, &gen)?
        .into_iter()
        .map(|instance| {
            let (partial, _) = oracles::solve(&instance)?;
            let trajectory = solution_to_trajectory(&instance, &oracles::to_solution(&instance, &partial), false)?;
            Ok(Demonstration { instance, trajectory })
        })
        .collect::<bqco::Result<Vec<_>>>()?;
    let cfg = TrainConfig { epochs: 5, d_model: 32, d_ff: 64, layers: 2, ..Default::default() };
    let (model, _) = train(&demos, &[], &cfg, |m| println!("epoch {} loss {:.3}", m.epoch, m.loss))?;

    for inst in generate_many(ProblemKind::Cvrp, 8, 3, 2, &gen)? {
        let (_, best) = oracles::solve(&inst)?;
        let plain = ObserveOptions::default();
        let near = ObserveOptions { knn: Some(4), ..Default::default() };
        let g = greedy(&model, &inst, &plain)?;
        let b = beam_search(&model, &inst, 8, &plain, BeamSelection::BestObjective)?;
        let k = greedy(&model, &inst, &near)?;
        println!("optimum {:.4}", natural_value(inst.kind(), best));
        println!("  greedy   {:.4}  {}", g.objective, g.partial);
        println!("  beam 8   {:.4}  {}", b.objective, b.partial);
        println!("  greedy k=4 {:.4}  {}", k.objective, k.partial);
    }
    Ok(())
}
