//! Decoding a trained policy: greedy rollouts, beam search and sampling,
//! all run on reduced states. A k-nearest-neighbour restriction only
//! changes what the model sees through [`ObserveOptions::knn`]; the
//! environment keeps the full instance.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CopError, Result};
use crate::policy::{forward, PolicyModel};
use crate::problems::{Observation, ObserveOptions, Problem, ProblemInstance};
use crate::solution::{PartialSolution, Step};

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub partial: PartialSolution,
    /// Objective on the original instance (minimization form).
    pub objective: f64,
    /// Sum of the log-probabilities of the chosen actions.
    pub log_prob: f64,
}

/// How beam search picks its answer among completed beams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamSelection {
    #[default]
    BestObjective,
    BestLogProb,
}

/// Index of the largest allowed log-probability, lowest index on ties.
pub fn argmax(log_probs: &[f64], mask: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (&lp, &m)) in log_probs.iter().zip(mask).enumerate() {
        if m && best.is_none_or(|b| lp > log_probs[b]) {
            best = Some(i);
        }
    }
    best
}

/// Observation of a live state, or `None` when the rollout stops there:
/// nothing is allowed, or the restricted view masks everything on a state
/// that may legally stop.
fn observe_live(state: &ProblemInstance, opts: &ObserveOptions) -> Result<Option<Observation>> {
    if state.is_terminal() {
        return Ok(None);
    }
    let obs = state.observe(opts);
    if obs.allowed_count() == 0 {
        return if state.is_complete() { Ok(None) } else { Err(CopError::AllMasked) };
    }
    Ok(Some(obs))
}

struct Live {
    id: usize,
    state: ProblemInstance,
    partial: PartialSolution,
    log_prob: f64,
}

fn finish(inst: &ProblemInstance, live: Live) -> Decoded {
    Decoded { objective: inst.objective(&live.partial), partial: live.partial, log_prob: live.log_prob }
}

/// Forward passes over `items`, batched by token count. Returns the
/// observation and log-probabilities of each item, in input order.
fn score_batch(model: &PolicyModel, items: Vec<Observation>) -> Result<Vec<(Observation, Vec<f64>)>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, o) in items.iter().enumerate() {
        groups.entry(o.tokens()).or_default().push(i);
    }
    let mut log_probs: Vec<Option<Vec<f64>>> = vec![None; items.len()];
    for idx in groups.values() {
        let batch: Vec<&Observation> = idx.iter().map(|&i| &items[i]).collect();
        let tape = forward(model, &batch)?;
        for (&i, lp) in idx.iter().zip(tape.log_probs) {
            log_probs[i] = Some(lp);
        }
    }
    Ok(items.into_iter().zip(log_probs).map(|(o, lp)| (o, lp.expect("scored"))).collect())
}

/// Greedy rollout of one instance.
pub fn greedy(model: &PolicyModel, inst: &ProblemInstance, opts: &ObserveOptions) -> Result<Decoded> {
    Ok(greedy_many(model, std::slice::from_ref(inst), opts)?.remove(0))
}

/// Greedy rollouts of several instances in lockstep. States with the same
/// token count share forward passes.
pub fn greedy_many(model: &PolicyModel, insts: &[ProblemInstance], opts: &ObserveOptions) -> Result<Vec<Decoded>> {
    let mut done: Vec<Option<Decoded>> = vec![None; insts.len()];
    let mut live: Vec<Live> = insts
        .iter()
        .enumerate()
        .map(|(id, inst)| Live {
            id,
            state: inst.clone(),
            partial: PartialSolution::empty(inst.solution_kind()),
            log_prob: 0.0,
        })
        .collect();
    while !live.is_empty() {
        let mut pending = Vec::new();
        let mut observations = Vec::new();
        for l in live {
            match observe_live(&l.state, opts)? {
                Some(o) => {
                    observations.push(o);
                    pending.push(l);
                }
                None => {
                    let id = l.id;
                    done[id] = Some(finish(&insts[id], l));
                }
            }
        }
        let scored = score_batch(model, observations)?;
        live = Vec::with_capacity(pending.len());
        for (mut l, (obs, lp)) in pending.into_iter().zip(scored) {
            let a = argmax(&lp, &obs.mask).ok_or(CopError::AllMasked)?;
            let step = obs.actions[a].ok_or(CopError::AllMasked)?;
            l.state = l.state.reduce(step)?.0;
            l.partial = l.partial.push(step);
            l.log_prob += lp[a];
            live.push(l);
        }
    }
    Ok(done.into_iter().map(|d| d.expect("every rollout finishes")).collect())
}

/// Beam search of width `width`. Candidates are ranked by cumulative
/// log-probability, then by the last step's log-probability, then by beam
/// order and action index, so width 1 follows the greedy rollout exactly.
pub fn beam_search(
    model: &PolicyModel,
    inst: &ProblemInstance,
    width: usize,
    opts: &ObserveOptions,
    selection: BeamSelection,
) -> Result<Decoded> {
    if width == 0 {
        return Err(CopError::Config("beam width must be at least 1".into()));
    }
    let mut beams =
        vec![Live { id: 0, state: inst.clone(), partial: PartialSolution::empty(inst.solution_kind()), log_prob: 0.0 }];
    let mut completed: Vec<Live> = Vec::new();
    while !beams.is_empty() {
        let mut pending = Vec::new();
        let mut observations = Vec::new();
        for b in beams {
            match observe_live(&b.state, opts)? {
                Some(o) => {
                    observations.push(o);
                    pending.push(b);
                }
                None => completed.push(b),
            }
        }
        let scored = score_batch(model, observations)?;
        // (score, step log-prob, beam, action)
        let mut candidates: Vec<(f64, f64, usize, usize)> = Vec::new();
        for (bi, (b, (obs, lp))) in pending.iter().zip(&scored).enumerate() {
            for (a, (&l, &m)) in lp.iter().zip(&obs.mask).enumerate() {
                if m {
                    candidates.push((b.log_prob + l, l, bi, a));
                }
            }
        }
        candidates
            .sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.total_cmp(&x.1)).then(x.2.cmp(&y.2)).then(x.3.cmp(&y.3)));
        candidates.truncate(width);
        beams = Vec::with_capacity(candidates.len());
        for (score, _, bi, a) in candidates {
            let parent = &pending[bi];
            let step: Step = scored[bi].0.actions[a].ok_or(CopError::AllMasked)?;
            beams.push(Live {
                id: 0,
                state: parent.state.reduce(step)?.0,
                partial: parent.partial.push(step),
                log_prob: score,
            });
        }
    }
    let decoded: Vec<Decoded> = completed.into_iter().map(|l| finish(inst, l)).collect();
    let pick = match selection {
        BeamSelection::BestObjective => decoded.iter().enumerate().min_by(|(i, a), (j, b)| {
            a.objective.total_cmp(&b.objective).then(b.log_prob.total_cmp(&a.log_prob)).then(i.cmp(j))
        }),
        BeamSelection::BestLogProb => {
            decoded.iter().enumerate().min_by(|(i, a), (j, b)| b.log_prob.total_cmp(&a.log_prob).then(i.cmp(j)))
        }
    };
    let i = pick.map(|(i, _)| i).ok_or(CopError::DeadEnd)?;
    Ok(decoded.into_iter().nth(i).expect("index in range"))
}

/// Rollout sampling each action from the policy distribution.
pub fn sample_rollout(
    model: &PolicyModel,
    inst: &ProblemInstance,
    opts: &ObserveOptions,
    rng: &mut impl Rng,
) -> Result<(Decoded, Vec<ProblemInstance>)> {
    let mut state = inst.clone();
    let mut partial = PartialSolution::empty(inst.solution_kind());
    let mut log_prob = 0.0;
    let mut visited = vec![state.clone()];
    while let Some(obs) = observe_live(&state, opts)? {
        let tape = forward(model, &[&obs])?;
        let lp = &tape.log_probs[0];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for (i, (&l, &m)) in lp.iter().zip(&obs.mask).enumerate() {
            if m {
                acc += l.exp();
                pick = Some(i);
                if u < acc {
                    break;
                }
            }
        }
        let a = pick.ok_or(CopError::AllMasked)?;
        let step = obs.actions[a].ok_or(CopError::AllMasked)?;
        state = state.reduce(step)?.0;
        partial = partial.push(step);
        log_prob += lp[a];
        visited.push(state.clone());
    }
    Ok((Decoded { objective: inst.objective(&partial), partial, log_prob }, visited))
}
