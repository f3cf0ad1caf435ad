//! The direct MDP of a single instance: states are partial solutions that
//! can still be completed, a step appends one element, and the neutral
//! action stops on a feasible solution.
//!
//! Guards are evaluated with the problem's closed-form predicates on the
//! original instance, never through `reduce`, so this engine serves as the
//! reference semantics for the reduced MDP.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CopError, Result};
use crate::problems::Problem;
use crate::solution::{PartialSolution, Step};

/// A construction step or the neutral (stop-and-stay) action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Neutral,
    Step(Step),
}

impl Action {
    pub fn step(self) -> Option<Step> {
        match self {
            Action::Step(z) => Some(z),
            Action::Neutral => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Neutral => f.write_str("ε"),
            Action::Step(z) => write!(f, "{z}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DirectState<P> {
    pub instance: P,
    pub partial: PartialSolution,
}

impl<P: Problem> DirectState<P> {
    pub fn initial(instance: P) -> Self {
        let partial = PartialSolution::empty(instance.solution_kind());
        DirectState { instance, partial }
    }
}

#[derive(Clone, Debug)]
pub struct Transition<S> {
    pub action: Action,
    pub reward: f64,
    pub next: S,
}

/// Steps that would grow `partial`. Re-adding an element already in a set
/// leaves it unchanged and is not offered as a step.
pub fn allowed_actions<P: Problem>(s: &DirectState<P>) -> Result<Vec<Action>> {
    let mut out = Vec::new();
    if s.instance.is_feasible(&s.partial) {
        out.push(Action::Neutral);
    }
    let mut scratch = s.partial.clone();
    for z in s.instance.step_universe() {
        if !s.partial.contains(&z) && extendable_with(&s.instance, &mut scratch, z) {
            out.push(Action::Step(z));
        }
    }
    if out.is_empty() {
        return Err(CopError::DeadEnd);
    }
    Ok(out)
}

/// `is_extendable(partial.push(z))` without copying; `partial` is restored.
fn extendable_with<P: Problem>(instance: &P, partial: &mut PartialSolution, z: Step) -> bool {
    match partial {
        PartialSolution::Sequence(seq) => {
            seq.push(z);
            let ok = instance.is_extendable(partial);
            if let PartialSolution::Sequence(seq) = partial {
                seq.pop();
            }
            ok
        }
        PartialSolution::Set(set) => {
            set.insert(z);
            let ok = instance.is_extendable(partial);
            if let PartialSolution::Set(set) = partial {
                set.remove(&z);
            }
            ok
        }
    }
}

/// Whether the guard of `step` holds at `s`.
pub fn step_allowed<P: Problem>(s: &DirectState<P>, step: Step) -> bool {
    !s.partial.contains(&step) && s.instance.is_extendable(&s.partial.push(step))
}

pub fn apply<P: Problem>(s: &DirectState<P>, action: Action) -> Result<Transition<DirectState<P>>> {
    match action {
        Action::Neutral => {
            if !s.instance.is_feasible(&s.partial) {
                return Err(CopError::IllegalNeutral);
            }
            Ok(Transition { action, reward: 0.0, next: s.clone() })
        }
        Action::Step(z) => {
            if !step_allowed(s, z) {
                return Err(CopError::IllegalStep {
                    step: z,
                    reason: format!("{} cannot be completed", s.partial.push(z)),
                });
            }
            let partial = s.partial.push(z);
            let reward = s.instance.objective(&s.partial) - s.instance.objective(&partial);
            Ok(Transition { action, reward, next: DirectState { instance: s.instance.clone(), partial } })
        }
    }
}

/// One trajectory from ε up to (excluding) its first neutral action.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub rewards: Vec<f64>,
    pub outcome: PartialSolution,
}

impl Trajectory {
    pub fn total_return(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Every trajectory of the direct MDP from ε, by depth-first search.
/// `node_budget` caps the number of visited search nodes.
pub fn enumerate_trajectories<P: Problem>(instance: &P, node_budget: usize) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    let mut visited = 0usize;
    let root = DirectState::initial(instance.clone());
    let f0 = instance.objective(&root.partial);
    let mut path = Trajectory { steps: Vec::new(), rewards: Vec::new(), outcome: root.partial.clone() };
    walk(&root, f0, &mut path, &mut out, &mut visited, node_budget)?;
    Ok(out)
}

/// Depth-first walk; `s` is reused for every node and `f` is its objective.
fn walk<P: Problem>(
    s: &DirectState<P>,
    f: f64,
    path: &mut Trajectory,
    out: &mut Vec<Trajectory>,
    visited: &mut usize,
    budget: usize,
) -> Result<()> {
    *visited += 1;
    if *visited > budget {
        return Err(CopError::BudgetExceeded { budget });
    }
    for action in allowed_actions(s)? {
        match action {
            Action::Neutral => {
                out.push(Trajectory {
                    steps: path.steps.clone(),
                    rewards: path.rewards.clone(),
                    outcome: s.partial.clone(),
                });
            }
            Action::Step(z) => {
                let next = DirectState { instance: s.instance.clone(), partial: s.partial.push(z) };
                let f_next = s.instance.objective(&next.partial);
                path.steps.push(z);
                path.rewards.push(f - f_next);
                walk(&next, f_next, path, out, visited, budget)?;
                path.steps.pop();
                path.rewards.pop();
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::cvrp::PathCvrp;
    use crate::problems::kp::{Item, Knapsack};
    use crate::problems::PathTsp;

    fn tsp3() -> PathTsp {
        PathTsp::closed(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]], 0).unwrap()
    }

    #[test]
    fn fresh_tsp_state_offers_steps_only() {
        let tsp = PathTsp::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]], 0, 3).unwrap();
        let acts = allowed_actions(&DirectState::initial(tsp)).unwrap();
        assert_eq!(acts, vec![Action::Step(Step::Node(1)), Action::Step(Step::Node(2))]);
    }

    #[test]
    fn complete_tour_offers_only_neutral() {
        let mut s = DirectState::initial(tsp3());
        for n in [1, 2, 3] {
            s = apply(&s, Action::Step(Step::Node(n))).unwrap().next;
        }
        assert_eq!(allowed_actions(&s).unwrap(), vec![Action::Neutral]);
        let t = apply(&s, Action::Neutral).unwrap();
        assert_eq!(t.reward, 0.0);
        assert_eq!(t.next.partial, s.partial);
    }

    #[test]
    fn step_reward_is_negative_distance() {
        let s = DirectState::initial(tsp3());
        let t = apply(&s, Action::Step(Step::Node(2))).unwrap();
        assert!((t.reward + 2f64.sqrt()).abs() < 1e-15);
        assert!(apply(&s, Action::Neutral).is_err());
    }

    #[test]
    fn cvrp_capacity_guard() {
        // remaining 2, demands {3, 1}: node 1 has demand 3, node 2 demand 1
        let coords = std::sync::Arc::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let demands = std::sync::Arc::new(vec![0, 3, 1, 0]);
        let p = PathCvrp::with_state(coords, demands, 0, 3, 5, 2, vec![1, 2]).unwrap();
        let mut acts = allowed_actions(&DirectState::initial(p)).unwrap();
        acts.sort();
        let d = |node, via_depot| Action::Step(Step::Delivery { node, via_depot });
        let mut expected = vec![d(1, true), d(2, false), d(2, true)];
        expected.sort();
        assert_eq!(acts, expected);
    }

    #[test]
    fn kp_pick_reward_is_value() {
        let kp = Knapsack::new(vec![Item { weight: 0.5, value: 0.7 }], 1.0).unwrap();
        let t = apply(&DirectState::initial(kp), Action::Step(Step::Item(0))).unwrap();
        assert_eq!(t.reward, 0.7);
    }

    #[test]
    fn three_customers_give_six_trajectories() {
        let all = enumerate_trajectories(&tsp3(), 1000).unwrap();
        assert_eq!(all.len(), 6);
        for t in &all {
            assert!((t.total_return() + tsp3().objective(&t.outcome)).abs() < 1e-12);
        }
        assert!(matches!(enumerate_trajectories(&tsp3(), 5), Err(CopError::BudgetExceeded { .. })));
    }
}
