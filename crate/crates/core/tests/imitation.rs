use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bqco::imitation::{sample_subinstance, solution_to_trajectory, train, training_pair, Demonstration, TrainConfig};
use bqco::oracles;
use bqco::problems::generate::{generate, GeneratorConfig};
use bqco::problems::ObserveOptions;
use bqco::{Problem, ProblemKind};

fn demos(kind: ProblemKind, count: usize, seed: u64, sizes: std::ops::RangeInclusive<usize>) -> Vec<Demonstration> {
    let gen = GeneratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count as u64)
        .map(|i| {
            let instance = generate(kind, rng.random_range(sizes.clone()), seed, i, &gen).unwrap();
            let (partial, _) = oracles::solve(&instance).unwrap();
            let trajectory =
                solution_to_trajectory(&instance, &oracles::to_solution(&instance, &partial), false).unwrap();
            Demonstration { instance, trajectory }
        })
        .collect()
}

#[test]
fn expert_targets_are_always_allowed() {
    for kind in ProblemKind::ALL {
        let pool = demos(kind, 200, 17, 4..=10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut checked = 0;
        while checked < 100_000 {
            let d = &pool[rng.random_range(0..pool.len())];
            if d.trajectory.is_empty() {
                continue;
            }
            let n = rng.random_range(1..=d.trajectory.len());
            let sub = sample_subinstance(&d.instance, &d.trajectory, n, &mut rng).unwrap();
            let (obs, target) = training_pair(&sub, &ObserveOptions::default()).unwrap();
            assert!((target.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(target.iter().zip(&obs.mask).all(|(t, m)| *t == 0.0 || *m), "{kind}: target on a masked action");
            checked += 1;
        }
    }
}

#[test]
fn expert_sub_path_solves_its_sub_instance() {
    for kind in ProblemKind::ALL {
        let pool = demos(kind, 100, 23, 4..=9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in pool.iter().filter(|d| !d.trajectory.is_empty()) {
            for _ in 0..20 {
                let n = rng.random_range(1..=d.trajectory.len());
                let sub = sample_subinstance(&d.instance, &d.trajectory, n, &mut rng).unwrap();
                let mut state = sub.state.clone();
                for &z in &d.trajectory[sub.position..sub.position + n] {
                    assert!(state.allowed_steps().contains(&z), "{kind}: expert step {z} not allowed");
                    state = state.reduce(z).unwrap().0;
                }
                if kind != ProblemKind::Kp && kind != ProblemKind::Op {
                    assert!(state.is_complete(), "{kind}: sub-path leaves work undone");
                }
            }
        }
    }
}

#[test]
fn small_set_can_be_memorized() {
    let set = demos(ProblemKind::Tsp, 100, 31, 8..=8);
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 64,
        lr: 2e-3,
        all_steps: true,
        d_model: 32,
        heads: 4,
        d_ff: 64,
        layers: 2,
        ..Default::default()
    };
    let (_, log) = train(&set, &[], &cfg, |_| {}).unwrap();
    let last = log.last().unwrap();
    assert!(last.accuracy > 0.95, "accuracy {} loss {}", last.accuracy, last.loss);
    assert!(last.loss < log[0].loss);
}

#[test]
fn training_is_reproducible() {
    let set = demos(ProblemKind::Cvrp, 60, 41, 5..=7);
    let cfg =
        TrainConfig { epochs: 3, batch_size: 16, d_model: 16, heads: 2, d_ff: 16, layers: 1, ..Default::default() };
    let (a, la) = train(&set, &[], &cfg, |_| {}).unwrap();
    let (b, lb) = train(&set, &[], &cfg, |_| {}).unwrap();
    assert_eq!(a.params, b.params);
    let losses = |l: &[bqco::imitation::EpochMetrics]| l.iter().map(|m| (m.loss, m.accuracy)).collect::<Vec<_>>();
    assert_eq!(losses(&la), losses(&lb));
}
