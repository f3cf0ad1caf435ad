//! Random instance generators. Every instance draws from its own stream of
//! a seeded ChaCha generator, so instance `i` of a file does not depend on
//! how many instances precede it or on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::atsp::CostMatrix;
use super::kp::Item;
use super::routing::euclid;
use super::{Knapsack, PathAtsp, PathCvrp, PathOp, PathTsp, ProblemInstance, ProblemKind};
use crate::error::{CopError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// CVRP vehicle capacity; `None` picks the size-dependent default.
    pub cvrp_capacity: Option<u32>,
    /// OP distance budget; `None` picks `2 * sqrt(N / 100)`.
    pub op_budget: Option<f64>,
    pub kp_capacity: f64,
    /// ATSP multiplicative noise is uniform on `[1, 1 + atsp_noise]`.
    pub atsp_noise: f64,
    pub atsp_id_dim: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { cvrp_capacity: None, op_budget: None, kp_capacity: 25.0, atsp_noise: 0.2, atsp_id_dim: 2 }
    }
}

pub fn cvrp_capacity(n: usize) -> u32 {
    match n {
        100 => 50,
        200 => 80,
        500 => 100,
        1000 => 250,
        _ => (30.0 + n as f64 / 4.0).round() as u32,
    }
}

pub fn op_budget(n: usize) -> f64 {
    2.0 * (n as f64 / 100.0).sqrt()
}

/// Generator for instance `index` of a file seeded with `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn unit_interval_open_low(rng: &mut impl Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn coords(rng: &mut impl Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
}

/// Closed tour over `n` nodes, starting at node 0.
pub fn tsp(rng: &mut impl Rng, n: usize) -> Result<PathTsp> {
    PathTsp::closed(coords(rng, n), 0)
}

pub fn atsp(rng: &mut impl Rng, n: usize, noise: f64, id_dim: usize) -> Result<PathAtsp> {
    let pts = coords(rng, n);
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = euclid(pts[i], pts[j]) * (1.0 + noise * rng.random::<f64>());
            }
        }
    }
    let ids = (0..n).map(|_| (0..id_dim).map(|_| rng.random::<f64>()).collect()).collect();
    PathAtsp::new(CostMatrix::new(rows)?, ids, 0, 0)
}

/// Depot at node 0 followed by `n` customers with demands in 1..=9.
pub fn cvrp(rng: &mut impl Rng, n: usize, capacity: u32) -> Result<PathCvrp> {
    let pts = coords(rng, n + 1);
    let demands = std::iter::once(0).chain((0..n).map(|_| rng.random_range(1..=9))).collect();
    PathCvrp::new(pts, demands, 0, capacity)
}

/// Depot at node 0 followed by `n` nodes with prizes in (0, 1].
pub fn op(rng: &mut impl Rng, n: usize, budget: f64) -> Result<PathOp> {
    let pts = coords(rng, n + 1);
    let prizes = std::iter::once(0.0).chain((0..n).map(|_| unit_interval_open_low(rng))).collect();
    PathOp::new(pts, prizes, 0, budget)
}

pub fn kp(rng: &mut impl Rng, n: usize, capacity: f64) -> Result<Knapsack> {
    let items = (0..n)
        .map(|_| {
            let weight = unit_interval_open_low(rng);
            let value = unit_interval_open_low(rng);
            Item { weight, value }
        })
        .collect();
    Knapsack::new(items, capacity)
}

/// Instance `index` of a reproducible collection.
pub fn generate(kind: ProblemKind, n: usize, seed: u64, index: u64, cfg: &GeneratorConfig) -> Result<ProblemInstance> {
    let min = if kind == ProblemKind::Kp { 1 } else { 2 };
    if n < min {
        return Err(CopError::Config(format!("{kind} needs at least {min} nodes, got {n}")));
    }
    let mut rng = instance_rng(seed, index);
    Ok(match kind {
        ProblemKind::Tsp => tsp(&mut rng, n)?.into(),
        ProblemKind::Atsp => atsp(&mut rng, n, cfg.atsp_noise, cfg.atsp_id_dim)?.into(),
        ProblemKind::Cvrp => {
            let capacity = cfg.cvrp_capacity.unwrap_or_else(|| cvrp_capacity(n));
            if capacity < 9 {
                return Err(CopError::Config(format!("capacity {capacity} is below the largest demand 9")));
            }
            cvrp(&mut rng, n, capacity)?.into()
        }
        ProblemKind::Op => op(&mut rng, n, cfg.op_budget.unwrap_or_else(|| op_budget(n)))?.into(),
        ProblemKind::Kp => kp(&mut rng, n, cfg.kp_capacity)?.into(),
    })
}

/// `count` instances, generated in parallel and returned in index order.
pub fn generate_many(
    kind: ProblemKind,
    n: usize,
    count: usize,
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<Vec<ProblemInstance>> {
    use rayon::prelude::*;
    (0..count as u64).into_par_iter().map(|i| generate(kind, n, seed, i, cfg)).collect()
}
