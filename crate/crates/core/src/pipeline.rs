//! End-to-end steps behind the command-line verbs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imitation::{solution_to_trajectory, Demonstration, EVAL_CHUNK};
use crate::io::{natural_value, DatasetRecord, InstanceRecord, ResultRecord};
use crate::oracles;
use crate::policy::PolicyModel;
use crate::problems::generate::{generate_many, GeneratorConfig};
use crate::problems::{ObserveOptions, Problem, ProblemInstance, ProblemKind};
use crate::search::{beam_search, greedy_many, BeamSelection, Decoded};

/// Exact solutions of `insts`, in input order.
pub fn solve_all(insts: &[ProblemInstance]) -> Result<Vec<ResultRecord>> {
    insts
        .par_iter()
        .enumerate()
        .map(|(index, inst)| {
            let (partial, objective) = oracles::solve(inst)?;
            Ok(ResultRecord {
                index,
                solution: oracles::to_solution(inst, &partial),
                value: natural_value(inst.kind(), objective),
                log_prob: None,
                reference: None,
                gap: None,
            })
        })
        .collect()
}

/// Generated instances paired with exact solutions.
pub fn make_dataset(
    kind: ProblemKind,
    n: usize,
    count: usize,
    seed: u64,
    gen: &GeneratorConfig,
) -> Result<Vec<DatasetRecord>> {
    let insts = generate_many(kind, n, count, seed, gen)?;
    insts
        .par_iter()
        .map(|inst| {
            let (partial, objective) = oracles::solve(inst)?;
            let proven = match inst {
                ProblemInstance::Kp(p) => oracles::kp_exact(p).2,
                _ => true,
            };
            Ok(DatasetRecord {
                instance: InstanceRecord::from(inst),
                solution: oracles::to_solution(inst, &partial),
                value: natural_value(kind, objective),
                proven,
            })
        })
        .collect()
}

/// Expert trajectories of dataset records.
pub fn demonstrations(pairs: &[(ProblemInstance, DatasetRecord)]) -> Result<Vec<Demonstration>> {
    pairs
        .par_iter()
        .map(|(instance, r)| {
            let trajectory = solution_to_trajectory(instance, &r.solution, false)?;
            Ok(Demonstration { instance: instance.clone(), trajectory })
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Beam width; greedy decoding when `None`.
    pub beam: Option<usize>,
    /// Candidate restriction to the `k` nodes nearest the origin.
    pub knn: Option<usize>,
    pub selection: BeamSelection,
}

fn record(index: usize, inst: &ProblemInstance, d: &Decoded) -> ResultRecord {
    ResultRecord {
        index,
        solution: oracles::to_solution(inst, &d.partial),
        value: natural_value(inst.kind(), d.objective),
        log_prob: Some(d.log_prob),
        reference: None,
        gap: None,
    }
}

/// Decodes every instance with the policy, in input order.
pub fn evaluate(model: &PolicyModel, insts: &[ProblemInstance], opts: &EvalOptions) -> Result<Vec<ResultRecord>> {
    let observe = ObserveOptions { knn: opts.knn, ..Default::default() };
    let decoded: Vec<Decoded> = match opts.beam {
        None => insts
            .par_chunks(EVAL_CHUNK)
            .map(|chunk| greedy_many(model, chunk, &observe))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect(),
        Some(width) => insts
            .par_iter()
            .map(|inst| beam_search(model, inst, width, &observe, opts.selection))
            .collect::<Result<_>>()?,
    };
    Ok(insts.iter().zip(&decoded).enumerate().map(|(i, (inst, d))| record(i, inst, d)).collect())
}
