//! Path-OP: collect as much prize as possible on a path from the origin to
//! the destination whose length stays within the remaining budget.
//!
//! A node is reachable when going there and then straight to the
//! destination fits the budget; the boundary itself counts as reachable.

use std::sync::Arc;

use ndarray::Array2;

use super::routing::{all_except, distinct_active, euclid, nearest, node_steps, token_nodes, without};
use super::{illegal, with_identifier, Observation, ObserveOptions, Problem, ProblemKind, REGISTER_TOLERANCE};
use crate::error::{CopError, Result};
use crate::solution::{PartialSolution, Step};

#[derive(Clone, Debug)]
pub struct PathOp {
    coords: Arc<Vec<[f64; 2]>>,
    prizes: Arc<Vec<f64>>,
    origin: usize,
    destination: usize,
    budget: f64,
    active: Vec<usize>,
}

impl PathOp {
    /// Plain OP: a tour from and back to `depot`.
    pub fn new(coords: Vec<[f64; 2]>, prizes: Vec<f64>, depot: usize, budget: f64) -> Result<Self> {
        let active = all_except(coords.len(), &[depot]);
        Self::with_state(Arc::new(coords), Arc::new(prizes), depot, depot, budget, active)
    }

    pub fn with_state(
        coords: Arc<Vec<[f64; 2]>>,
        prizes: Arc<Vec<f64>>,
        origin: usize,
        destination: usize,
        budget: f64,
        mut active: Vec<usize>,
    ) -> Result<Self> {
        let n = coords.len();
        if prizes.len() != n {
            return Err(CopError::Config("one prize per node".into()));
        }
        if origin >= n || destination >= n {
            return Err(CopError::Config(format!("endpoint out of range for {n} nodes")));
        }
        if !budget.is_finite() || budget < euclid(coords[origin], coords[destination]) {
            return Err(CopError::Config("budget must cover the direct origin-destination leg".into()));
        }
        active.sort_unstable();
        active.dedup();
        if active.iter().any(|&a| a >= n || a == origin || a == destination) {
            return Err(CopError::Config("active set must exclude endpoints and stay in range".into()));
        }
        Ok(PathOp { coords, prizes, origin, destination, budget, active })
    }

    pub fn coords(&self) -> &Arc<Vec<[f64; 2]>> {
        &self.coords
    }

    pub fn prizes(&self) -> &Arc<Vec<f64>> {
        &self.prizes
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        euclid(self.coords[a], self.coords[b])
    }

    pub fn reachable(&self, node: usize) -> bool {
        self.dist(self.origin, node) + self.dist(node, self.destination) <= self.budget
    }

    /// Length of origin -> `order` -> destination.
    pub fn path_length(&self, order: &[usize]) -> f64 {
        let mut prev = self.origin;
        let mut total = 0.0;
        for &n in order {
            total += self.dist(prev, n);
            prev = n;
        }
        total + self.dist(prev, self.destination)
    }

    /// Length of the polyline through `nodes`.
    pub fn path_length_between(&self, nodes: &[usize]) -> f64 {
        nodes.windows(2).map(|w| self.dist(w[0], w[1])).sum()
    }

    pub fn prize(&self, order: &[usize]) -> f64 {
        order.iter().map(|&n| self.prizes[n]).sum()
    }
}

impl Problem for PathOp {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Op
    }

    fn allowed_steps(&self) -> Vec<Step> {
        self.active.iter().filter(|&&i| self.reachable(i)).map(|&i| Step::Node(i)).collect()
    }

    fn reduce(&self, step: Step) -> Result<(Self, f64)> {
        let Step::Node(j) = step else { return Err(illegal(step, "path-OP steps are nodes")) };
        let active = without(&self.active, j).ok_or_else(|| illegal(step, "node is not active"))?;
        if !self.reachable(j) {
            return Err(illegal(step, "node cannot be reached within the budget"));
        }
        let next = PathOp {
            coords: Arc::clone(&self.coords),
            prizes: Arc::clone(&self.prizes),
            origin: j,
            destination: self.destination,
            budget: self.budget - self.dist(self.origin, j),
            active,
        };
        Ok((next, self.prizes[j]))
    }

    fn is_complete(&self) -> bool {
        true
    }

    fn decision_count(&self) -> usize {
        self.active.len()
    }

    fn observe(&self, opts: &ObserveOptions) -> Observation {
        let origin = self.coords[self.origin];
        let candidates = nearest(&self.active, opts.knn, |c| euclid(origin, self.coords[c]));
        let nodes = token_nodes(self.origin, self.destination, &candidates);
        let mut features = Array2::zeros((nodes.len(), 4));
        for (r, &n) in nodes.iter().enumerate() {
            features[[r, 0]] = self.coords[n][0];
            features[[r, 1]] = self.coords[n][1];
            features[[r, 2]] = if r < 2 { 0.0 } else { self.prizes[n] };
            features[[r, 3]] = self.budget;
        }
        let mask = nodes.iter().enumerate().map(|(r, &n)| r >= 2 && self.reachable(n)).collect();
        let actions = (0..nodes.len()).map(|r| (r >= 2).then(|| Step::Node(nodes[r]))).collect();
        Observation {
            features: with_identifier(features, &nodes, opts.node_id_salt),
            edge_weights: None,
            nodes,
            endpoints: true,
            heads: 1,
            mask,
            actions,
        }
    }

    fn same_state(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.coords, &other.coords) || self.coords == other.coords)
            && self.prizes == other.prizes
            && self.origin == other.origin
            && self.destination == other.destination
            && (self.budget - other.budget).abs() <= REGISTER_TOLERANCE
            && self.active == other.active
    }

    fn step_universe(&self) -> Vec<Step> {
        (0..self.node_count()).map(Step::Node).collect()
    }

    fn objective(&self, partial: &PartialSolution) -> f64 {
        match node_steps(partial) {
            Some(nodes) => -nodes.iter().map(|&n| self.prizes[n]).sum::<f64>(),
            None => f64::NAN,
        }
    }

    fn is_extendable(&self, partial: &PartialSolution) -> bool {
        node_steps(partial)
            .is_some_and(|nodes| distinct_active(&nodes, &self.active) && self.path_length(&nodes) <= self.budget)
    }

    fn is_feasible(&self, partial: &PartialSolution) -> bool {
        self.is_extendable(partial)
    }

    fn phi(&self, partial: &PartialSolution) -> Result<Self> {
        if !self.is_extendable(partial) {
            return Err(CopError::NotExtendable(partial.to_string()));
        }
        let nodes = node_steps(partial).expect("extendable");
        let mut prev = self.origin;
        let mut travelled = 0.0;
        for &n in &nodes {
            travelled += self.dist(prev, n);
            prev = n;
        }
        Ok(PathOp {
            coords: Arc::clone(&self.coords),
            prizes: Arc::clone(&self.prizes),
            origin: prev,
            destination: self.destination,
            budget: self.budget - travelled,
            active: self.active.iter().copied().filter(|a| !nodes.contains(a)).collect(),
        })
    }
}
