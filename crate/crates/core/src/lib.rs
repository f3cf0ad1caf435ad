//! Combinatorial optimization problems as Markov decision processes.
//!
//! Problems are built step by step from a monoid of partial solutions
//! ([`solution`]). Each problem can be explored either through a direct
//! MDP whose states are partial solutions ([`direct_mdp`]) or through a
//! reduced MDP whose states are the remaining subproblems ([`bq_mdp`]).
//! A small attention policy ([`policy`]) is trained by imitation of exact
//! solutions ([`oracles`], [`imitation`]) and decoded greedily or with beam
//! search ([`search`]). [`io`] handles files, benchmarks and rendering.

pub mod bq_mdp;
pub mod direct_mdp;
pub mod error;
pub mod imitation;
pub mod io;
pub mod oracles;
pub mod pipeline;
pub mod policy;
pub mod problems;
pub mod search;
pub mod solution;
pub mod verify;

pub use error::{CopError, Result};
pub use problems::{Problem, ProblemInstance, ProblemKind};
pub use solution::{PartialSolution, SolutionKind, Step};
