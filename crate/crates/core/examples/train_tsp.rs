//! Trains a TSP policy on exact solutions and reports held-out greedy gaps.
//!
//! `cargo run --release --example train_tsp -- [train_count] [epochs]`

use bqco::imitation::{held_out_gap, solution_to_trajectory, train, Demonstration, TrainConfig};
use bqco::oracles;
use bqco::problems::generate::{generate_many, GeneratorConfig};
use bqco::problems::{ObserveOptions, ProblemKind};

fn main() -> bqco::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let count = args.first().copied().unwrap_or(2000);
    let epochs = args.get(1).copied().unwrap_or(10);
    let gen = GeneratorConfig::default();

    let insts = generate_many(ProblemKind::Tsp, 10, count, 1, &gen)?;
    let demos: Vec<Demonstration> = insts
        .into_iter()
        .map(|instance| {
            let (partial, _) = oracles::solve(&instance)?;
            let solution = oracles::to_solution(&instance, &partial);
            let trajectory = solution_to_trajectory(&instance, &solution, false)?;
            Ok(Demonstration { instance, trajectory })
        })
        .collect::<bqco::Result<_>>()?;
    let held_out: Vec<_> = generate_many(ProblemKind::Tsp, 10, 200, 2, &gen)?
        .into_iter()
        .map(|i| {
            let v = oracles::solve(&i)?.1;
            Ok((i, v))
        })
        .collect::<bqco::Result<_>>()?;

    let cfg = TrainConfig { epochs, ..Default::default() };
    let (model, _) = train(&demos, &held_out, &cfg, |m| {
        println!(
            "epoch {:>3}  loss {:.4}  acc {:.3}  gap {:.2}%  {:.0}s",
            m.epoch,
            m.loss,
            m.accuracy,
            100.0 * m.gap.unwrap_or(f64::NAN),
            m.wall_time
        );
    })?;

    let larger: Vec<_> = generate_many(ProblemKind::Tsp, 20, 20, 3, &gen)?
        .into_iter()
        .map(|i| {
            let v = oracles::solve(&i)?.1;
            Ok((i, v))
        })
        .collect::<bqco::Result<_>>()?;
    let gap = held_out_gap(&model, &larger, &ObserveOptions::default())?;
    println!("zero-shot N=20 greedy gap {:.2}%", 100.0 * gap);
    Ok(())
}
