//! The reduced MDP whose states are instances: a step replaces the
//! instance by its tail subproblem. [`check_bisimulation`] verifies on
//! concrete triples that this MDP and the direct one commute through Φ.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

use crate::direct_mdp::{self, Action, DirectState, Transition};
use crate::error::{CopError, Result};
use crate::problems::Problem;
use crate::solution::{PartialSolution, Step};

/// Absolute tolerance of the reward legs.
pub const REWARD_TOLERANCE: f64 = 1e-9;

pub fn reduce<P: Problem>(inst: &P, z: Step) -> Result<(P, f64)> {
    inst.reduce(z)
}

/// Φ in closed form.
pub fn phi<P: Problem>(inst: &P, partial: &PartialSolution) -> Result<P> {
    inst.phi(partial)
}

/// Φ as the left fold of `reduce` over the canonical step decomposition.
pub fn phi_by_fold<P: Problem>(inst: &P, partial: &PartialSolution) -> Result<(P, f64)> {
    let mut state = inst.clone();
    let mut total = 0.0;
    for z in partial.steps() {
        let (next, r) = state.reduce(z)?;
        state = next;
        total += r;
    }
    Ok((state, total))
}

/// Actions available in a reduced state: every allowed step, plus the
/// neutral action when the empty solution is feasible.
pub fn allowed_actions<P: Problem>(inst: &P) -> Vec<Action> {
    let mut out: Vec<Action> = Vec::new();
    if inst.is_complete() {
        out.push(Action::Neutral);
    }
    out.extend(inst.allowed_steps().into_iter().map(Action::Step));
    out
}

pub fn apply<P: Problem>(inst: &P, action: Action) -> Result<Transition<P>> {
    match action {
        Action::Neutral if inst.is_complete() => Ok(Transition { action, reward: 0.0, next: inst.clone() }),
        Action::Neutral => Err(CopError::IllegalNeutral),
        Action::Step(z) => {
            if !inst.allowed_steps().contains(&z) {
                return Err(CopError::IllegalStep { step: z, reason: "guard fails on the reduced instance".into() });
            }
            let (next, reward) = inst.reduce(z)?;
            Ok(Transition { action, reward, next })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Leg {
    StateCommutation,
    RewardEquality,
    GuardEquivalence,
    NeutralDiagram,
}

#[derive(Clone, Debug, Serialize)]
pub struct BisimulationReport {
    pub state_commutation: bool,
    pub reward_equality: bool,
    pub guard_equivalence: bool,
    pub neutral_diagram: bool,
    pub detail: Option<String>,
}

impl BisimulationReport {
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<Leg> {
        [
            (self.state_commutation, Leg::StateCommutation),
            (self.reward_equality, Leg::RewardEquality),
            (self.guard_equivalence, Leg::GuardEquivalence),
            (self.neutral_diagram, Leg::NeutralDiagram),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, leg)| leg)
    }
}

/// Checks the commutation diagram for `partial` and `z` on `inst`.
///
/// The reduced side reaches Φ(x) by folding `reduce`, while the direct side
/// uses closed-form objectives, guards and Φ. Errors only when `partial`
/// cannot be completed.
pub fn check_bisimulation<P: Problem>(inst: &P, partial: &PartialSolution, z: Step) -> Result<BisimulationReport> {
    if !inst.is_extendable(partial) {
        return Err(CopError::NotExtendable(partial.to_string()));
    }
    let mut report = BisimulationReport {
        state_commutation: true,
        reward_equality: true,
        guard_equivalence: true,
        neutral_diagram: true,
        detail: None,
    };
    let mut detail: Option<String> = None;
    let mut note = |msg: String| {
        detail.get_or_insert(msg);
    };

    let reduced = match phi_by_fold(inst, partial) {
        Ok((state, _)) => state,
        Err(e) => {
            report.guard_equivalence = false;
            report.detail = Some(format!("reduce rejected a step of {partial}: {e}"));
            return Ok(report);
        }
    };
    let direct = DirectState { instance: inst.clone(), partial: partial.clone() };

    let direct_guard = direct_mdp::step_allowed(&direct, z);
    let reduced_guard = reduced.allowed_steps().contains(&z);
    let reduce_result = reduced.reduce(z);
    let mut guard_ok = direct_guard == reduced_guard && reduce_result.is_ok() == reduced_guard;

    if direct_guard && reduced_guard {
        let extended = partial.push(z);
        let (next, reward) = reduce_result.expect("guard holds");
        match inst.phi(&extended) {
            Ok(closed) if closed.same_state(&next) => {}
            Ok(_) => {
                report.state_commutation = false;
                note(format!("Φ({extended}) differs from Φ({partial}) reduced by {z}"));
            }
            Err(e) => {
                guard_ok = false;
                note(format!("closed-form Φ failed: {e}"));
            }
        }
        let direct_reward = inst.objective(partial) - inst.objective(&extended);
        if (direct_reward - reward).abs() > REWARD_TOLERANCE {
            report.reward_equality = false;
            note(format!("reward {direct_reward} on the direct side, {reward} after reduce"));
        }
    }
    if !guard_ok {
        report.guard_equivalence = false;
        note(format!("guard of {z}: direct {direct_guard}, reduced {reduced_guard}"));
    }

    if inst.is_feasible(partial) != reduced.is_complete() {
        report.neutral_diagram = false;
        note(format!("neutral action: direct {}, reduced {}", inst.is_feasible(partial), reduced.is_complete()));
    }
    report.detail = detail;
    Ok(report)
}

/// Random partial solution reachable in the direct MDP, with a step that is
/// allowed with probability `allowed_bias` and arbitrary otherwise.
pub fn random_triple<P: Problem>(inst: &P, allowed_bias: f64, rng: &mut impl Rng) -> Result<(PartialSolution, Step)> {
    let mut s = DirectState::initial(inst.clone());
    let target = rng.random_range(0..=inst.decision_count());
    for _ in 0..target {
        let steps: Vec<Step> = direct_mdp::allowed_actions(&s)?.into_iter().filter_map(Action::step).collect();
        let Some(&z) = steps.choose(rng) else { break };
        s = direct_mdp::apply(&s, Action::Step(z))?.next;
    }
    let allowed: Vec<Step> = direct_mdp::allowed_actions(&s)?.into_iter().filter_map(Action::step).collect();
    let z = match allowed.choose(rng) {
        Some(&z) if rng.random_bool(allowed_bias) => z,
        _ => *inst.step_universe().choose(rng).expect("nonempty step universe"),
    };
    Ok((s.partial, z))
}

/// Action and reward sequence of a rollout, ending with the neutral action.
pub type Rollout = Vec<(Action, f64)>;

/// Rolls out a policy on reduced states in the reduced MDP. When nothing
/// is allowed the environment emits the neutral action itself.
pub fn rollout_reduced<P: Problem>(inst: &P, policy: impl Fn(&P) -> Action) -> Result<Rollout> {
    let mut state = inst.clone();
    let mut out = Vec::new();
    for _ in 0..=inst.decision_count() {
        let action = if state.is_terminal() { Action::Neutral } else { policy(&state) };
        let t = apply(&state, action)?;
        out.push((action, t.reward));
        if action == Action::Neutral {
            return Ok(out);
        }
        state = t.next;
    }
    Err(CopError::DeadEnd)
}

/// Rolls out the same policy in the direct MDP, lifting each direct state
/// to its reduced state through closed-form Φ.
pub fn rollout_direct<P: Problem>(inst: &P, policy: impl Fn(&P) -> Action) -> Result<Rollout> {
    let mut s = DirectState::initial(inst.clone());
    let mut out = Vec::new();
    for _ in 0..=inst.decision_count() {
        let lifted = inst.phi(&s.partial)?;
        let action = if lifted.is_terminal() { Action::Neutral } else { policy(&lifted) };
        let t = direct_mdp::apply(&s, action)?;
        out.push((action, t.reward));
        if action == Action::Neutral {
            return Ok(out);
        }
        s = t.next;
    }
    Err(CopError::DeadEnd)
}
