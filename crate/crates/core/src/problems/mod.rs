//! Concrete problem definitions.
//!
//! Every problem is expressed in a tail-recursive, parametric form: an
//! instance is an index view over shared geometry plus a few scalar
//! registers, and reducing it by one step yields another instance of the
//! same class. Each type implements [`Problem`], which bundles two views of
//! the same problem:
//!
//! * the *reduced* view used by the quotiented MDP (`allowed_steps`,
//!   `reduce`, `is_complete`, `observe`), and
//! * the *direct* view over the original instance and a partial solution
//!   (`objective`, `is_extendable`, `is_feasible`, `phi`), evaluated in
//!   closed form without going through `reduce`.
//!
//! Keeping the two views independent is what makes the bisimulation checks
//! in [`crate::bq_mdp`] meaningful.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{CopError, Result};
use crate::solution::{PartialSolution, SolutionKind, Step};

pub mod atsp;
pub mod cvrp;
pub mod generate;
pub mod kp;
pub mod op;
mod routing;
pub mod tsp;

pub use atsp::PathAtsp;
pub use cvrp::PathCvrp;
pub use kp::Knapsack;
pub use op::PathOp;
pub use tsp::PathTsp;

/// Absolute tolerance used when comparing floating registers (budgets,
/// remaining capacities) of two reduced instances.
pub const REGISTER_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Tsp,
    Atsp,
    Cvrp,
    Op,
    Kp,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] =
        [ProblemKind::Tsp, ProblemKind::Atsp, ProblemKind::Cvrp, ProblemKind::Op, ProblemKind::Kp];

    pub fn sense(self) -> Sense {
        match self {
            ProblemKind::Op | ProblemKind::Kp => Sense::Maximize,
            _ => Sense::Minimize,
        }
    }

    pub fn solution_kind(self) -> SolutionKind {
        match self {
            ProblemKind::Kp => SolutionKind::Set,
            _ => SolutionKind::Sequence,
        }
    }

    /// Number of input channels of the feature matrix, without the optional
    /// random-identifier channel.
    pub fn feature_dim(self, atsp_id_dim: usize) -> usize {
        match self {
            ProblemKind::Tsp => 2,
            ProblemKind::Atsp => atsp_id_dim,
            ProblemKind::Cvrp | ProblemKind::Op => 4,
            ProblemKind::Kp => 3,
        }
    }

    /// Scores per node produced by the policy head.
    pub fn heads(self) -> usize {
        match self {
            ProblemKind::Cvrp => 2,
            _ => 1,
        }
    }

    /// Whether rows 0 and 1 of an observation carry origin and destination.
    pub fn has_endpoints(self) -> bool {
        !matches!(self, ProblemKind::Kp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Tsp => "tsp",
            ProblemKind::Atsp => "atsp",
            ProblemKind::Cvrp => "cvrp",
            ProblemKind::Op => "op",
            ProblemKind::Kp => "kp",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = CopError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsp" => Ok(ProblemKind::Tsp),
            "atsp" => Ok(ProblemKind::Atsp),
            "cvrp" => Ok(ProblemKind::Cvrp),
            "op" => Ok(ProblemKind::Op),
            "kp" => Ok(ProblemKind::Kp),
            other => Err(CopError::Config(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// How the ATSP cost matrix is turned into graph-convolution edge weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeNormalization {
    /// Row-wise min-max to [0, 1], then `1 - x`, zero diagonal.
    #[default]
    RowMinMax,
    /// `RowMinMax` followed by dividing each row by its sum.
    RowStochastic,
}

/// Options controlling how an instance is presented to the policy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObserveOptions {
    /// Restrict the candidate nodes to the `k` nearest the origin.
    pub knn: Option<usize>,
    /// Append one random-identifier channel, derived from this salt.
    pub node_id_salt: Option<u64>,
    pub edge_normalization: EdgeNormalization,
}

/// Policy input for one reduced state.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// One row per token, one column per input channel.
    pub features: Array2<f64>,
    /// Graph-convolution weights between tokens (ATSP only).
    pub edge_weights: Option<Array2<f64>>,
    /// Original node (or item) index of each token.
    pub nodes: Vec<usize>,
    pub endpoints: bool,
    /// Actions per token.
    pub heads: usize,
    /// `mask[row * heads + head]` is true when the action is allowed.
    pub mask: Vec<bool>,
    pub actions: Vec<Option<Step>>,
}

impl Observation {
    pub fn tokens(&self) -> usize {
        self.features.nrows()
    }

    pub fn action_index(&self, step: Step) -> Option<usize> {
        self.actions.iter().position(|a| *a == Some(step))
    }

    pub fn allowed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Behavioral contract shared by the five problems.
pub trait Problem: Clone + fmt::Debug + Send + Sync + Sized {
    fn kind(&self) -> ProblemKind;

    fn solution_kind(&self) -> SolutionKind {
        self.kind().solution_kind()
    }

    /// Steps `z` with a non-empty tail feasible set after `z`.
    fn allowed_steps(&self) -> Vec<Step>;

    /// Tail subproblem after `step`, with the transition reward
    /// `f(ε) - f(z) = -f(z)`.
    fn reduce(&self, step: Step) -> Result<(Self, f64)>;

    /// True iff the empty partial solution is feasible for this instance.
    fn is_complete(&self) -> bool;

    /// Nodes or items still open for decision.
    fn decision_count(&self) -> usize;

    fn observe(&self, opts: &ObserveOptions) -> Observation;

    /// Canonical equality of reduced states; floating registers compare
    /// within [`REGISTER_TOLERANCE`].
    fn same_state(&self, other: &Self) -> bool;

    /// Every step that could be named on this instance, allowed or not.
    fn step_universe(&self) -> Vec<Step>;

    /// Objective of a partial solution, with `f(ε) = 0`.
    fn objective(&self, partial: &PartialSolution) -> f64;

    /// Whether `partial` can still be extended into a feasible solution.
    fn is_extendable(&self, partial: &PartialSolution) -> bool;

    /// Whether `partial` is itself a feasible solution.
    fn is_feasible(&self, partial: &PartialSolution) -> bool;

    /// Tail subproblem induced by `partial`, computed in closed form.
    fn phi(&self, partial: &PartialSolution) -> Result<Self>;

    /// No step is allowed any more; rollouts emit the neutral action.
    fn is_terminal(&self) -> bool {
        self.allowed_steps().is_empty()
    }
}

/// Tagged union over the five problems.
#[derive(Clone, Debug)]
pub enum ProblemInstance {
    Tsp(PathTsp),
    Atsp(PathAtsp),
    Cvrp(PathCvrp),
    Op(PathOp),
    Kp(Knapsack),
}

macro_rules! dispatch {
    ($self:expr, $inner:ident => $body:expr) => {
        match $self {
            ProblemInstance::Tsp($inner) => $body,
            ProblemInstance::Atsp($inner) => $body,
            ProblemInstance::Cvrp($inner) => $body,
            ProblemInstance::Op($inner) => $body,
            ProblemInstance::Kp($inner) => $body,
        }
    };
}

macro_rules! dispatch_wrap {
    ($self:expr, $inner:ident => $body:expr) => {
        match $self {
            ProblemInstance::Tsp($inner) => $body.map(ProblemInstance::Tsp),
            ProblemInstance::Atsp($inner) => $body.map(ProblemInstance::Atsp),
            ProblemInstance::Cvrp($inner) => $body.map(ProblemInstance::Cvrp),
            ProblemInstance::Op($inner) => $body.map(ProblemInstance::Op),
            ProblemInstance::Kp($inner) => $body.map(ProblemInstance::Kp),
        }
    };
}

impl Problem for ProblemInstance {
    fn kind(&self) -> ProblemKind {
        dispatch!(self, p => p.kind())
    }

    fn allowed_steps(&self) -> Vec<Step> {
        dispatch!(self, p => p.allowed_steps())
    }

    fn reduce(&self, step: Step) -> Result<(Self, f64)> {
        match self {
            ProblemInstance::Tsp(p) => p.reduce(step).map(|(n, r)| (ProblemInstance::Tsp(n), r)),
            ProblemInstance::Atsp(p) => p.reduce(step).map(|(n, r)| (ProblemInstance::Atsp(n), r)),
            ProblemInstance::Cvrp(p) => p.reduce(step).map(|(n, r)| (ProblemInstance::Cvrp(n), r)),
            ProblemInstance::Op(p) => p.reduce(step).map(|(n, r)| (ProblemInstance::Op(n), r)),
            ProblemInstance::Kp(p) => p.reduce(step).map(|(n, r)| (ProblemInstance::Kp(n), r)),
        }
    }

    fn is_complete(&self) -> bool {
        dispatch!(self, p => p.is_complete())
    }

    fn decision_count(&self) -> usize {
        dispatch!(self, p => p.decision_count())
    }

    fn observe(&self, opts: &ObserveOptions) -> Observation {
        dispatch!(self, p => p.observe(opts))
    }

    fn same_state(&self, other: &Self) -> bool {
        match (self, other) {
            (ProblemInstance::Tsp(a), ProblemInstance::Tsp(b)) => a.same_state(b),
            (ProblemInstance::Atsp(a), ProblemInstance::Atsp(b)) => a.same_state(b),
            (ProblemInstance::Cvrp(a), ProblemInstance::Cvrp(b)) => a.same_state(b),
            (ProblemInstance::Op(a), ProblemInstance::Op(b)) => a.same_state(b),
            (ProblemInstance::Kp(a), ProblemInstance::Kp(b)) => a.same_state(b),
            _ => false,
        }
    }

    fn step_universe(&self) -> Vec<Step> {
        dispatch!(self, p => p.step_universe())
    }

    fn objective(&self, partial: &PartialSolution) -> f64 {
        dispatch!(self, p => p.objective(partial))
    }

    fn is_extendable(&self, partial: &PartialSolution) -> bool {
        dispatch!(self, p => p.is_extendable(partial))
    }

    fn is_feasible(&self, partial: &PartialSolution) -> bool {
        dispatch!(self, p => p.is_feasible(partial))
    }

    fn phi(&self, partial: &PartialSolution) -> Result<Self> {
        dispatch_wrap!(self, p => p.phi(partial))
    }
}

impl From<PathTsp> for ProblemInstance {
    fn from(p: PathTsp) -> Self {
        ProblemInstance::Tsp(p)
    }
}
impl From<PathAtsp> for ProblemInstance {
    fn from(p: PathAtsp) -> Self {
        ProblemInstance::Atsp(p)
    }
}
impl From<PathCvrp> for ProblemInstance {
    fn from(p: PathCvrp) -> Self {
        ProblemInstance::Cvrp(p)
    }
}
impl From<PathOp> for ProblemInstance {
    fn from(p: PathOp) -> Self {
        ProblemInstance::Op(p)
    }
}
impl From<Knapsack> for ProblemInstance {
    fn from(p: Knapsack) -> Self {
        ProblemInstance::Kp(p)
    }
}

/// Solution of an original instance in its natural form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solution {
    /// Visit order of the customers, endpoints excluded.
    Route(Vec<usize>),
    /// CVRP subtours, each a customer sequence between two depot visits.
    Tours(Vec<Vec<usize>>),
    /// Picked knapsack items.
    Items(Vec<usize>),
}

/// Stable splitmix64, used for node identifiers and per-instance seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pseudo-random identifier in [0, 1) for node `node` under `salt`.
pub fn node_identifier(salt: u64, node: usize) -> f64 {
    (splitmix64(salt ^ splitmix64(node as u64)) >> 11) as f64 / (1u64 << 53) as f64
}

/// Appends the optional identifier channel to `features`.
pub(crate) fn with_identifier(features: Array2<f64>, nodes: &[usize], salt: Option<u64>) -> Array2<f64> {
    let Some(salt) = salt else { return features };
    let (rows, cols) = features.dim();
    let mut out = Array2::zeros((rows, cols + 1));
    out.slice_mut(ndarray::s![.., ..cols]).assign(&features);
    for (r, &node) in nodes.iter().enumerate() {
        out[[r, cols]] = node_identifier(salt, node);
    }
    out
}

pub(crate) fn illegal(step: Step, reason: impl Into<String>) -> CopError {
    CopError::IllegalStep { step, reason: reason.into() }
}
