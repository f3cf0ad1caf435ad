use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bqco::bq_mdp::rollout_reduced;
use bqco::direct_mdp::{enumerate_trajectories, Action};
use bqco::oracles;
use bqco::policy::gradcheck::randomize_residuals;
use bqco::policy::{PolicyConfig, PolicyModel};
use bqco::problems::generate::{generate, GeneratorConfig};
use bqco::problems::ObserveOptions;
use bqco::search::{beam_search, greedy, greedy_many, BeamSelection};
use bqco::{Problem, ProblemInstance, ProblemKind};

fn model(kind: ProblemKind, seed: u64) -> PolicyModel {
    let sample = generate(kind, 5, 0, 0, &GeneratorConfig::default()).unwrap();
    let d_in = sample.observe(&ObserveOptions::default()).features.ncols();
    let cfg = PolicyConfig {
        d_in,
        d_model: 16,
        heads: 2,
        d_ff: 16,
        layers: 2,
        out: kind.heads(),
        graph_conv: kind == ProblemKind::Atsp,
    };
    let mut m = PolicyModel::new(cfg, seed).unwrap();
    randomize_residuals(&mut m, &mut ChaCha8Rng::seed_from_u64(seed));
    m
}

/// Next step of an optimal completion of the reduced state.
fn oracle_policy(state: &ProblemInstance) -> Action {
    let (best, _) = oracles::solve(state).unwrap();
    let first = best.steps().next().expect("a live state has a non-empty optimum");
    Action::Step(first)
}

#[test]
fn following_the_optimal_first_step_of_each_tail_is_optimal() {
    let gen = GeneratorConfig::default();
    for kind in ProblemKind::ALL {
        for i in 0..30 {
            let inst = generate(kind, 6, 9, i, &gen).unwrap();
            let rollout = rollout_reduced(&inst, oracle_policy).unwrap();
            let total: f64 = rollout.iter().map(|(_, r)| r).sum();
            let (_, optimum) = oracles::solve(&inst).unwrap();
            assert!((-total - optimum).abs() < 1e-9, "{kind} #{i}: {} vs {optimum}", -total);
        }
    }
}

#[test]
fn wide_beam_finds_the_optimum() {
    let gen = GeneratorConfig::default();
    for kind in ProblemKind::ALL {
        let m = model(kind, 3);
        for i in 0..10 {
            let inst = generate(kind, 5, 13, i, &gen).unwrap();
            let width = enumerate_trajectories(&inst, 1_000_000).unwrap().len();
            let d = beam_search(&m, &inst, width, &ObserveOptions::default(), BeamSelection::BestObjective).unwrap();
            let (_, optimum) = oracles::solve(&inst).unwrap();
            assert!(inst.is_feasible(&d.partial));
            assert!((d.objective - optimum).abs() < 1e-9, "{kind} #{i}: {} vs {optimum}", d.objective);
        }
    }
}

#[test]
fn decoders_return_feasible_solutions_with_consistent_scores() {
    let gen = GeneratorConfig::default();
    for kind in ProblemKind::ALL {
        let m = model(kind, 4);
        let insts: Vec<_> = (0..40).map(|i| generate(kind, 4 + (i as usize % 8), 21, i, &gen).unwrap()).collect();
        for knn in [None, Some(3)] {
            let opts = ObserveOptions { knn, ..Default::default() };
            let batched = greedy_many(&m, &insts, &opts).unwrap();
            for (inst, b) in insts.iter().zip(&batched) {
                let g = greedy(&m, inst, &opts).unwrap();
                assert_eq!(&g, b);
                assert!(inst.is_feasible(&g.partial));
                assert_eq!(g.objective, inst.objective(&g.partial));
                assert!(g.log_prob <= 0.0);
                let beam = beam_search(&m, inst, 4, &opts, BeamSelection::BestLogProb).unwrap();
                assert!(inst.is_feasible(&beam.partial));
                assert!(beam.log_prob <= 0.0);
                let one = beam_search(&m, inst, 1, &opts, BeamSelection::BestObjective).unwrap();
                assert_eq!(one, g);
            }
        }
    }
}
