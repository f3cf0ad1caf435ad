//! Imitation learning from exact solutions.
//!
//! An expert solution is turned into a construction order, then each epoch
//! draws one sub-path per solution: the instance is reduced along a random
//! prefix, the part of the trajectory after the sub-path is cut away, and
//! the policy is trained to predict the next expert step of the resulting
//! sub-instance.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CopError, Result};
use crate::policy::{backward, forward, learning_rate, Adam, AdamConfig, PolicyConfig, PolicyModel};
use crate::problems::{
    Knapsack, Observation, ObserveOptions, PathAtsp, PathCvrp, PathOp, PathTsp, Problem, ProblemInstance, Solution,
};
use crate::search::{argmax, greedy_many};
use crate::solution::{PartialSolution, SolutionKind, Step};

/// Slack added to budgets and capacities of cut sub-instances.
pub const CUT_SLACK: f64 = 1e-9;

/// Forward/backward chunk size.
const CHUNK: usize = 32;

/// Evaluation chunk size for held-out greedy rollouts.
pub const EVAL_CHUNK: usize = 64;

/// Canonical construction order of a feasible solution.
///
/// Routes keep their stored order (reversed when `reverse` is set and the
/// tour is closed), CVRP subtours are sorted by ascending remaining capacity
/// at their end, and knapsack items by index.
pub fn solution_to_trajectory(inst: &ProblemInstance, solution: &Solution, reverse: bool) -> Result<Vec<Step>> {
    let stored = crate::oracles::from_solution(inst, solution)?;
    let steps: Vec<Step> = match (inst, solution) {
        (ProblemInstance::Cvrp(p), Solution::Tours(tours)) => {
            let mut tours: Vec<&Vec<usize>> = tours.iter().filter(|t| !t.is_empty()).collect();
            let left = |t: &Vec<usize>| p.capacity() - t.iter().map(|&c| p.demands()[c]).sum::<u32>();
            tours.sort_by_key(|t| left(t));
            tours
                .iter()
                .enumerate()
                .flat_map(|(k, t)| {
                    t.iter().enumerate().map(move |(i, &node)| Step::Delivery { node, via_depot: i == 0 && k > 0 })
                })
                .collect()
        }
        (ProblemInstance::Kp(_), _) => {
            let mut items: Vec<Step> = stored.steps().collect();
            items.sort();
            items
        }
        (ProblemInstance::Tsp(p), _) if reverse && p.origin() == p.destination() => {
            let mut s: Vec<Step> = stored.steps().collect();
            s.reverse();
            s
        }
        _ => stored.steps().collect(),
    };
    let partial = PartialSolution::from_steps(inst.solution_kind(), steps.iter().copied());
    if !inst.is_feasible(&partial) {
        return Err(CopError::InfeasibleSolution(partial.to_string()));
    }
    Ok(steps)
}

/// An instance with its expert construction order.
#[derive(Clone, Debug)]
pub struct Demonstration {
    pub instance: ProblemInstance,
    pub trajectory: Vec<Step>,
}

/// A reduced sub-instance with its expert next steps.
#[derive(Clone, Debug)]
pub struct SubInstance {
    pub state: ProblemInstance,
    /// One step for routing problems, every remaining expert item for KP.
    pub targets: Vec<Step>,
    pub position: usize,
}

fn cut(state: &ProblemInstance, sub: &[Step], suffix: &[Step]) -> Result<ProblemInstance> {
    let idx = |s: &[Step]| s.iter().map(Step::index).collect::<Vec<_>>();
    let rest = |active: &[usize]| {
        let gone = idx(suffix);
        active.iter().copied().filter(|a| !gone.contains(a)).collect::<Vec<_>>()
    };
    Ok(match state {
        ProblemInstance::Tsp(s) => {
            let dest = suffix.first().map_or(s.destination(), Step::index);
            PathTsp::with_active(s.coords().clone(), s.origin(), dest, idx(sub))?.into()
        }
        ProblemInstance::Atsp(s) => {
            let dest = suffix.first().map_or(s.destination(), Step::index);
            PathAtsp::with_active(s.costs().clone(), s.ids().clone(), s.origin(), dest, idx(sub))?.into()
        }
        ProblemInstance::Cvrp(s) => PathCvrp::with_state(
            s.coords().clone(),
            s.demands().clone(),
            s.depot(),
            s.origin(),
            s.capacity(),
            s.remaining(),
            idx(sub),
        )?
        .into(),
        ProblemInstance::Op(s) if !suffix.is_empty() => {
            let mut tail = idx(suffix);
            tail.push(s.destination());
            let budget = s.budget() - s.path_length_between(&tail) + CUT_SLACK;
            PathOp::with_state(s.coords().clone(), s.prizes().clone(), s.origin(), tail[0], budget, rest(s.active()))?
                .into()
        }
        ProblemInstance::Kp(s) if !suffix.is_empty() => {
            let capacity = s.capacity() - s.weight(&idx(suffix)) + CUT_SLACK;
            Knapsack::with_state(s.items().clone(), capacity, rest(s.active()))?.into()
        }
        other => other.clone(),
    })
}

/// Sub-instance covering expert steps `position..position + n`.
pub fn subinstance_at(inst: &ProblemInstance, trajectory: &[Step], position: usize, n: usize) -> Result<SubInstance> {
    if n == 0 || position + n > trajectory.len() {
        return Err(CopError::TrajectoryTooShort { needed: position + n.max(1), available: trajectory.len() });
    }
    let mut state = inst.clone();
    for &z in &trajectory[..position] {
        state = state.reduce(z)?.0;
    }
    let sub = &trajectory[position..position + n];
    let state = cut(&state, sub, &trajectory[position + n..])?;
    let targets = if inst.solution_kind() == SolutionKind::Set { sub.to_vec() } else { vec![sub[0]] };
    Ok(SubInstance { state, targets, position })
}

/// Sub-path of `n` expert steps at a uniformly drawn position.
pub fn sample_subinstance(
    inst: &ProblemInstance,
    trajectory: &[Step],
    n: usize,
    rng: &mut impl Rng,
) -> Result<SubInstance> {
    if n == 0 || n > trajectory.len() {
        return Err(CopError::TrajectoryTooShort { needed: n.max(1), available: trajectory.len() });
    }
    let position = rng.random_range(0..=trajectory.len() - n);
    subinstance_at(inst, trajectory, position, n)
}

/// Policy input and target distribution of a sub-instance.
pub fn training_pair(sub: &SubInstance, opts: &ObserveOptions) -> Result<(Observation, Vec<f64>)> {
    let obs = sub.state.observe(opts);
    let mut target = vec![0.0; obs.mask.len()];
    let w = 1.0 / sub.targets.len() as f64;
    for &z in &sub.targets {
        match obs.action_index(z) {
            Some(i) if obs.mask[i] => target[i] = w,
            _ => return Err(crate::problems::illegal(z, "expert step is masked in its sub-instance")),
        }
    }
    Ok((obs, target))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lr: f64,
    pub decay: f64,
    pub decay_every: usize,
    /// Smallest sub-path length drawn per batch.
    pub min_subpath: usize,
    /// Largest sub-path length; defaults to the longest trajectory.
    pub max_subpath: Option<usize>,
    /// Train on every position of every trajectory each epoch instead of
    /// one sampled sub-path per solution.
    pub all_steps: bool,
    /// Reverse closed TSP tours with probability one half.
    pub sample_orientation: bool,
    pub d_model: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub layers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let policy = PolicyConfig::default();
        TrainConfig {
            epochs: 30,
            batch_size: 256,
            seed: 0,
            lr: adam.lr,
            decay: adam.decay,
            decay_every: adam.decay_every,
            min_subpath: 4,
            max_subpath: None,
            all_steps: false,
            sample_orientation: false,
            d_model: policy.d_model,
            heads: policy.heads,
            d_ff: policy.d_ff,
            layers: policy.layers,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(CopError::Config("epochs and batch_size must be positive".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 || self.decay.is_nan() || self.decay <= 0.0 {
            return Err(CopError::Config("lr and decay must be positive".into()));
        }
        if self.min_subpath == 0 || self.max_subpath.is_some_and(|m| m < self.min_subpath) {
            return Err(CopError::Config("need 1 <= min_subpath <= max_subpath".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, decay: self.decay, decay_every: self.decay_every, ..Default::default() }
    }

    /// Network sized by this config with inputs matching `sample`.
    pub fn policy(&self, sample: &ProblemInstance) -> PolicyConfig {
        PolicyConfig {
            d_in: sample.observe(&ObserveOptions::default()).features.ncols(),
            d_model: self.d_model,
            heads: self.heads,
            d_ff: self.d_ff,
            layers: self.layers,
            out: sample.kind().heads(),
            graph_conv: sample.kind() == crate::problems::ProblemKind::Atsp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    /// Fraction of samples whose argmax is an expert step.
    pub accuracy: f64,
    pub lr: f64,
    /// Mean greedy gap on the held-out set, when one is given.
    pub gap: Option<f64>,
    pub wall_time: f64,
}

/// Signed optimality gap of a minimization-form objective.
pub fn gap(objective: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        return if objective == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (objective - reference) / reference.abs()
}

/// Mean greedy gap of `model` on instances with reference objectives.
pub fn held_out_gap(model: &PolicyModel, set: &[(ProblemInstance, f64)], opts: &ObserveOptions) -> Result<f64> {
    let insts: Vec<ProblemInstance> = set.iter().map(|(i, _)| i.clone()).collect();
    let chunks: Vec<Vec<f64>> = insts
        .par_chunks(EVAL_CHUNK)
        .zip(set.par_chunks(EVAL_CHUNK))
        .map(|(chunk, refs)| {
            let out = greedy_many(model, chunk, opts)?;
            Ok(out.iter().zip(refs).map(|(d, (_, r))| gap(d.objective, *r)).collect())
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = chunks.into_iter().flatten().collect();
    Ok(gaps.iter().sum::<f64>() / gaps.len().max(1) as f64)
}

struct Chunk {
    loss: f64,
    correct: usize,
    grads: Vec<f64>,
}

/// One optimizer step on `pairs`; returns summed loss and correct count.
fn train_batch(
    model: &mut PolicyModel,
    adam: &mut Adam,
    pairs: &[(Observation, Vec<f64>)],
    lr: f64,
) -> Result<(f64, usize)> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, (o, _)) in pairs.iter().enumerate() {
        groups.entry(o.tokens()).or_default().push(i);
    }
    let chunks: Vec<&[usize]> = groups.values().flat_map(|g| g.chunks(CHUNK)).collect();
    let frozen = &*model;
    let results: Vec<Chunk> = chunks
        .par_iter()
        .map(|idx| {
            let obs: Vec<&Observation> = idx.iter().map(|&i| &pairs[i].0).collect();
            let targets: Vec<Vec<f64>> = idx.iter().map(|&i| pairs[i].1.clone()).collect();
            let tape = forward(frozen, &obs)?;
            let correct = tape
                .log_probs
                .iter()
                .zip(&obs)
                .zip(&targets)
                .filter(|((lp, o), t)| argmax(lp, &o.mask).is_some_and(|a| t[a] > 0.0))
                .count();
            let (loss, mut grads) = backward(frozen, &tape, &targets)?;
            let k = idx.len() as f64;
            grads.iter_mut().for_each(|g| *g *= k);
            Ok(Chunk { loss: loss * k, correct, grads })
        })
        .collect::<Result<_>>()?;
    let mut grads = vec![0.0; model.params.len()];
    let (mut loss, mut correct) = (0.0, 0);
    for c in results {
        loss += c.loss;
        correct += c.correct;
        grads.iter_mut().zip(&c.grads).for_each(|(g, v)| *g += v);
    }
    let inv = 1.0 / pairs.len() as f64;
    grads.iter_mut().for_each(|g| *g *= inv);
    adam.step(&mut model.params, &grads, lr);
    Ok((loss, correct))
}

/// Sub-instances of one epoch, already grouped in batches.
fn epoch_batches(demos: &[Demonstration], cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<SubInstance>>> {
    let longest = demos.iter().map(|d| d.trajectory.len()).max().unwrap_or(0);
    let mut order: Vec<usize> = (0..demos.len()).collect();
    order.shuffle(rng);
    if cfg.all_steps {
        let mut subs = Vec::new();
        for &i in &order {
            let d = &demos[i];
            for p in 0..d.trajectory.len() {
                subs.push(subinstance_at(&d.instance, &d.trajectory, p, d.trajectory.len() - p)?);
            }
        }
        return Ok(subs.chunks(cfg.batch_size).map(<[_]>::to_vec).collect());
    }
    let hi = cfg.max_subpath.unwrap_or(longest).max(cfg.min_subpath);
    let mut batches = Vec::new();
    for ids in order.chunks(cfg.batch_size) {
        let n = rng.random_range(cfg.min_subpath..=hi);
        let mut batch = Vec::with_capacity(ids.len());
        for &i in ids {
            let d = &demos[i];
            if d.trajectory.is_empty() {
                continue;
            }
            let mut traj = d.trajectory.clone();
            if cfg.sample_orientation && rng.random_bool(0.5) {
                if let ProblemInstance::Tsp(p) = &d.instance {
                    if p.origin() == p.destination() {
                        traj.reverse();
                    }
                }
            }
            batch.push(sample_subinstance(&d.instance, &traj, n.min(traj.len()), rng)?);
        }
        if !batch.is_empty() {
            batches.push(batch);
        }
    }
    Ok(batches)
}

/// Trains a fresh policy on `demos`. `on_epoch` sees the metrics of every
/// epoch as soon as it ends.
pub fn train(
    demos: &[Demonstration],
    held_out: &[(ProblemInstance, f64)],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(PolicyModel, Vec<EpochMetrics>)> {
    cfg.validate()?;
    let first = demos.first().ok_or_else(|| CopError::Config("empty dataset".into()))?;
    let kind = first.instance.kind();
    if let Some(d) = demos.iter().find(|d| d.instance.kind() != kind) {
        return Err(CopError::ProblemMismatch { expected: kind.to_string(), got: d.instance.kind().to_string() });
    }
    let mut model = PolicyModel::new(cfg.policy(&first.instance), cfg.seed)?;
    let adam_cfg = cfg.adam();
    let mut adam = Adam::new(adam_cfg.clone(), model.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let opts = ObserveOptions::default();
    let start = Instant::now();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = learning_rate(&adam_cfg, epoch);
        let batches = epoch_batches(demos, cfg, &mut rng)?;
        let (mut loss, mut correct, mut seen) = (0.0, 0, 0);
        for batch in batches {
            let pairs: Vec<(Observation, Vec<f64>)> =
                batch.par_iter().map(|s| training_pair(s, &opts)).collect::<Result<_>>()?;
            let (l, c) = train_batch(&mut model, &mut adam, &pairs, lr)?;
            loss += l;
            correct += c;
            seen += pairs.len();
        }
        let gap = if held_out.is_empty() { None } else { Some(held_out_gap(&model, held_out, &opts)?) };
        let m = EpochMetrics {
            epoch: epoch + 1,
            loss: loss / seen.max(1) as f64,
            accuracy: correct as f64 / seen.max(1) as f64,
            lr,
            gap,
            wall_time: start.elapsed().as_secs_f64(),
        };
        on_epoch(&m);
        log.push(m);
    }
    Ok((model, log))
}
