//! Solution-space algebra: steps, partial solutions and their monoid.
//!
//! Two monoid shapes are supported. Routing problems build partial solutions
//! as sequences of steps composed by concatenation; the knapsack builds item
//! sets composed by union. In both cases the empty partial solution is the
//! neutral element.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{CopError, Result};

/// Atomic construction step. Never the neutral element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Step {
    /// Visit a node (path-TSP, path-ATSP, path-OP).
    Node(usize),
    /// Serve a CVRP customer, optionally returning to the depot first.
    Delivery { node: usize, via_depot: bool },
    /// Put an item in the knapsack.
    Item(usize),
}

impl Step {
    /// Node or item index carried by the step.
    pub fn index(&self) -> usize {
        match *self {
            Step::Node(i) | Step::Item(i) => i,
            Step::Delivery { node, .. } => node,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Step::Node(i) => write!(f, "n{i}"),
            Step::Delivery { node, via_depot: false } => write!(f, "d{node}"),
            Step::Delivery { node, via_depot: true } => write!(f, "D>{node}"),
            Step::Item(i) => write!(f, "i{i}"),
        }
    }
}

/// Which monoid a problem's partial solutions live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionKind {
    Sequence,
    Set,
}

/// Element of the solution-space monoid.
///
/// Sets are kept sorted so that equality is canonical. Any empty partial
/// solution is the neutral element, whatever its kind.
#[derive(Clone, Debug, Eq, Serialize, Deserialize)]
pub enum PartialSolution {
    Sequence(Vec<Step>),
    Set(BTreeSet<Step>),
}

impl PartialEq for PartialSolution {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (PartialSolution::Sequence(a), PartialSolution::Sequence(b)) => a == b,
            (PartialSolution::Set(a), PartialSolution::Set(b)) => a == b,
            _ => self.is_empty() && other.is_empty(),
        }
    }
}

impl Hash for PartialSolution {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            _ if self.is_empty() => 0u8.hash(state),
            PartialSolution::Sequence(v) => {
                1u8.hash(state);
                v.hash(state);
            }
            PartialSolution::Set(s) => {
                2u8.hash(state);
                s.hash(state);
            }
        }
    }
}

impl PartialSolution {
    pub fn empty(kind: SolutionKind) -> Self {
        match kind {
            SolutionKind::Sequence => PartialSolution::Sequence(Vec::new()),
            SolutionKind::Set => PartialSolution::Set(BTreeSet::new()),
        }
    }

    pub fn unit(kind: SolutionKind, step: Step) -> Self {
        Self::from_steps(kind, [step])
    }

    /// Composes the steps in order, `z1 ∘ z2 ∘ ... ∘ zn`.
    pub fn from_steps(kind: SolutionKind, steps: impl IntoIterator<Item = Step>) -> Self {
        match kind {
            SolutionKind::Sequence => PartialSolution::Sequence(steps.into_iter().collect()),
            SolutionKind::Set => PartialSolution::Set(steps.into_iter().collect()),
        }
    }

    pub fn kind(&self) -> SolutionKind {
        match self {
            PartialSolution::Sequence(_) => SolutionKind::Sequence,
            PartialSolution::Set(_) => SolutionKind::Set,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        match self {
            PartialSolution::Sequence(s) => s.len(),
            PartialSolution::Set(s) => s.len(),
        }
    }

    /// Steps in construction order (ascending for sets).
    pub fn steps(&self) -> Box<dyn Iterator<Item = Step> + '_> {
        match self {
            PartialSolution::Sequence(s) => Box::new(s.iter().copied()),
            PartialSolution::Set(s) => Box::new(s.iter().copied()),
        }
    }

    pub fn last(&self) -> Option<Step> {
        match self {
            PartialSolution::Sequence(s) => s.last().copied(),
            PartialSolution::Set(s) => s.last().copied(),
        }
    }

    pub fn contains(&self, step: &Step) -> bool {
        match self {
            PartialSolution::Sequence(s) => s.contains(step),
            PartialSolution::Set(s) => s.contains(step),
        }
    }

    /// `self ∘ other`.
    ///
    /// Panics when both operands are non-empty and belong to different
    /// monoids; composition is only defined within one solution space.
    pub fn compose(&self, other: &PartialSolution) -> PartialSolution {
        match (self, other) {
            (_, y) if self.is_empty() => y.clone(),
            (x, _) if other.is_empty() => x.clone(),
            (PartialSolution::Sequence(a), PartialSolution::Sequence(b)) => {
                PartialSolution::Sequence(a.iter().chain(b).copied().collect())
            }
            (PartialSolution::Set(a), PartialSolution::Set(b)) => PartialSolution::Set(a.union(b).copied().collect()),
            _ => panic!("cannot compose partial solutions from different solution spaces"),
        }
    }

    /// `self ∘ z`.
    pub fn push(&self, step: Step) -> PartialSolution {
        let mut out = self.clone();
        match &mut out {
            PartialSolution::Sequence(s) => s.push(step),
            PartialSolution::Set(s) => {
                s.insert(step);
            }
        }
        out
    }

    /// Is `self` a prefix of `other` in the monoid order, i.e. does some `y`
    /// satisfy `self ∘ y = other`?
    pub fn is_prefix_of(&self, other: &PartialSolution) -> bool {
        match (self, other) {
            _ if self.is_empty() => true,
            (PartialSolution::Sequence(a), PartialSolution::Sequence(b)) => b.starts_with(a),
            (PartialSolution::Set(a), PartialSolution::Set(b)) => a.is_subset(b),
            _ => false,
        }
    }
}

impl fmt::Display for PartialSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close) = match self {
            PartialSolution::Sequence(_) => ("[", "]"),
            PartialSolution::Set(_) => ("{", "}"),
        };
        f.write_str(open)?;
        for (i, s) in self.steps().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(close)
    }
}

/// Enumerates every step sequence of length at most `max_len` whose
/// composition equals `x`.
///
/// Candidate steps are drawn from the steps of `x` itself, which is complete
/// for both monoids: a decomposition can only use steps that occur in `x`.
/// `node_budget` caps the number of search-tree nodes visited.
pub fn step_decompositions(x: &PartialSolution, max_len: usize, node_budget: usize) -> Result<Vec<Vec<Step>>> {
    let alphabet: Vec<Step> = {
        let mut v: Vec<Step> = x.steps().collect();
        v.sort();
        v.dedup();
        v
    };
    let mut out = Vec::new();
    let mut visited = 0usize;
    let mut prefix = Vec::new();
    let start = PartialSolution::empty(x.kind());
    decompose(x, &alphabet, max_len, node_budget, &mut visited, &mut prefix, &start, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn decompose(
    target: &PartialSolution,
    alphabet: &[Step],
    max_len: usize,
    budget: usize,
    visited: &mut usize,
    prefix: &mut Vec<Step>,
    current: &PartialSolution,
    out: &mut Vec<Vec<Step>>,
) -> Result<()> {
    *visited += 1;
    if *visited > budget {
        return Err(CopError::BudgetExceeded { budget });
    }
    if current == target {
        out.push(prefix.clone());
    }
    if prefix.len() == max_len {
        return Ok(());
    }
    for &z in alphabet {
        let next = current.push(z);
        if next.is_prefix_of(target) {
            prefix.push(z);
            decompose(target, alphabet, max_len, budget, visited, prefix, &next, out)?;
            prefix.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[usize]) -> PartialSolution {
        PartialSolution::from_steps(SolutionKind::Sequence, v.iter().map(|&i| Step::Node(i)))
    }

    fn set(v: &[usize]) -> PartialSolution {
        PartialSolution::from_steps(SolutionKind::Set, v.iter().map(|&i| Step::Item(i)))
    }

    #[test]
    fn neutral_element_on_both_sides() {
        let e = PartialSolution::empty(SolutionKind::Sequence);
        assert_eq!(e.compose(&seq(&[1, 2])), seq(&[1, 2]));
        assert_eq!(seq(&[1, 2]).compose(&e), seq(&[1, 2]));
        let e = PartialSolution::empty(SolutionKind::Set);
        assert_eq!(e.compose(&set(&[4])), set(&[4]));
        assert_eq!(PartialSolution::empty(SolutionKind::Set), PartialSolution::empty(SolutionKind::Sequence));
    }

    #[test]
    fn concatenation_and_associativity() {
        assert_eq!(seq(&[0, 1]).compose(&seq(&[2])), seq(&[0, 1, 2]));
        let (a, b, c) = (seq(&[0]), seq(&[1]), seq(&[2]));
        assert_eq!(a.compose(&b).compose(&c), a.compose(&b.compose(&c)));
    }

    #[test]
    fn set_equality_ignores_insertion_order() {
        assert_eq!(set(&[3, 1]).compose(&set(&[2])), set(&[2, 3]).compose(&set(&[1])));
    }

    #[test]
    fn decompositions_of_empty_is_the_empty_sequence() {
        let d = step_decompositions(&seq(&[]), 4, 1000).unwrap();
        assert_eq!(d, vec![Vec::<Step>::new()]);
    }

    #[test]
    fn sequence_decomposition_is_unique() {
        let d = step_decompositions(&seq(&[0, 1]), 4, 1000).unwrap();
        assert_eq!(d, vec![vec![Step::Node(0), Step::Node(1)]]);
    }

    #[test]
    fn set_decompositions_are_all_orders() {
        let d = step_decompositions(&set(&[1, 2]), 2, 1000).unwrap();
        assert_eq!(d, vec![vec![Step::Item(1), Step::Item(2)], vec![Step::Item(2), Step::Item(1)]]);
        let d = step_decompositions(&set(&[0, 1, 2, 3]), 4, 100_000).unwrap();
        assert_eq!(d.len(), 24);
    }

    #[test]
    fn decomposition_budget() {
        let err = step_decompositions(&set(&[0, 1, 2, 3, 4, 5]), 6, 50).unwrap_err();
        assert!(matches!(err, CopError::BudgetExceeded { .. }));
    }

    #[test]
    #[should_panic]
    fn mixed_monoids_panic() {
        let _ = seq(&[1]).compose(&set(&[1]));
    }
}
