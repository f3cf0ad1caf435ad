//! Euclidean path-TSP: shortest origin-to-destination path through every
//! active node. A closed tour is the special case `origin == destination`.

use std::sync::Arc;

use ndarray::Array2;

use super::routing::{all_except, distinct_active, euclid, nearest, node_steps, token_nodes, without};
use super::{illegal, with_identifier, Observation, ObserveOptions, Problem, ProblemKind};
use crate::error::{CopError, Result};
use crate::solution::{PartialSolution, Step};

#[derive(Clone, Debug)]
pub struct PathTsp {
    coords: Arc<Vec<[f64; 2]>>,
    origin: usize,
    destination: usize,
    active: Vec<usize>,
}

impl PathTsp {
    /// Path instance visiting every node other than the two endpoints.
    pub fn new(coords: Vec<[f64; 2]>, origin: usize, destination: usize) -> Result<Self> {
        let active = all_except(coords.len(), &[origin, destination]);
        Self::with_active(Arc::new(coords), origin, destination, active)
    }

    /// Closed tour starting and ending at `start`.
    pub fn closed(coords: Vec<[f64; 2]>, start: usize) -> Result<Self> {
        Self::new(coords, start, start)
    }

    pub fn with_active(
        coords: Arc<Vec<[f64; 2]>>,
        origin: usize,
        destination: usize,
        mut active: Vec<usize>,
    ) -> Result<Self> {
        let n = coords.len();
        if origin >= n || destination >= n {
            return Err(CopError::Config(format!("endpoint out of range for {n} nodes")));
        }
        active.sort_unstable();
        active.dedup();
        if active.iter().any(|&a| a >= n || a == origin || a == destination) {
            return Err(CopError::Config("active set must exclude endpoints and stay in range".into()));
        }
        Ok(PathTsp { coords, origin, destination, active })
    }

    pub fn coords(&self) -> &Arc<Vec<[f64; 2]>> {
        &self.coords
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn destination(&self) -> usize {
        self.destination
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
}

impl Problem for PathTsp {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Tsp
    }

    fn allowed_steps(&self) -> Vec<Step> {
        self.active.iter().map(|&i| Step::Node(i)).collect()
    }

    fn reduce(&self, step: Step) -> Result<(Self, f64)> {
        let Step::Node(j) = step else { return Err(illegal(step, "path-TSP steps are nodes")) };
        let active = without(&self.active, j).ok_or_else(|| illegal(step, "node is not active"))?;
        let mut cost = self.dist(self.origin, j);
        if active.is_empty() {
            cost += self.dist(j, self.destination);
        }
        let next = PathTsp { coords: Arc::clone(&self.coords), origin: j, destination: self.destination, active };
        Ok((next, -cost))
    }

    fn is_complete(&self) -> bool {
        self.active.is_empty()
    }

    fn decision_count(&self) -> usize {
        self.active.len()
    }

    fn observe(&self, opts: &ObserveOptions) -> Observation {
        let origin = self.coords[self.origin];
        let candidates = nearest(&self.active, opts.knn, |c| euclid(origin, self.coords[c]));
        let nodes = token_nodes(self.origin, self.destination, &candidates);
        let mut features = Array2::zeros((nodes.len(), 2));
        for (r, &n) in nodes.iter().enumerate() {
            features[[r, 0]] = self.coords[n][0];
            features[[r, 1]] = self.coords[n][1];
        }
        let mask = (0..nodes.len()).map(|r| r >= 2).collect();
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
            && self.origin == other.origin
            && self.destination == other.destination
            && self.active == other.active
    }

    fn step_universe(&self) -> Vec<Step> {
        (0..self.node_count()).map(Step::Node).collect()
    }

    fn objective(&self, partial: &PartialSolution) -> f64 {
        let Some(nodes) = node_steps(partial) else { return f64::NAN };
        if nodes.is_empty() {
            return 0.0;
        }
        let mut prev = self.origin;
        let mut total = 0.0;
        for &n in &nodes {
            total += self.dist(prev, n);
            prev = n;
        }
        if nodes.len() == self.active.len() {
            total += self.dist(prev, self.destination);
        }
        total
    }

    fn is_extendable(&self, partial: &PartialSolution) -> bool {
        node_steps(partial).is_some_and(|nodes| distinct_active(&nodes, &self.active))
    }

    fn is_feasible(&self, partial: &PartialSolution) -> bool {
        self.is_extendable(partial) && partial.len() == self.active.len()
    }

    fn phi(&self, partial: &PartialSolution) -> Result<Self> {
        let nodes = node_steps(partial)
            .filter(|n| distinct_active(n, &self.active))
            .ok_or_else(|| CopError::NotExtendable(partial.to_string()))?;
        let origin = nodes.last().copied().unwrap_or(self.origin);
        let active = self.active.iter().copied().filter(|a| !nodes.contains(a)).collect();
        Ok(PathTsp { coords: Arc::clone(&self.coords), origin, destination: self.destination, active })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solution::SolutionKind;

    fn square() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]
    }

    fn route(v: &[usize]) -> PartialSolution {
        PartialSolution::from_steps(SolutionKind::Sequence, v.iter().map(|&i| Step::Node(i)))
    }

    #[test]
    fn closed_square_tour_has_perimeter_four() {
        let tsp = PathTsp::closed(square(), 0).unwrap();
        assert_eq!(tsp.objective(&route(&[1, 2, 3])), 4.0);
        assert!(tsp.is_feasible(&route(&[1, 2, 3])));
    }

    #[test]
    fn reduce_moves_origin_and_rewards_negative_distance() {
        let tsp = PathTsp::closed(square(), 0).unwrap();
        let (next, reward) = tsp.reduce(Step::Node(2)).unwrap();
        assert_eq!(next.origin(), 2);
        assert_eq!(next.active(), &[1, 3]);
        assert!((reward + 2f64.sqrt()).abs() < 1e-15);
        assert!(tsp.reduce(Step::Node(0)).is_err());
        assert!(next.reduce(Step::Node(2)).is_err());
    }

    #[test]
    fn endpoints_are_masked() {
        let tsp = PathTsp::new(square(), 0, 3).unwrap();
        let obs = tsp.observe(&ObserveOptions::default());
        assert_eq!(obs.nodes, vec![0, 3, 1, 2]);
        assert_eq!(obs.mask, vec![false, false, true, true]);
        assert_eq!(obs.features.dim(), (4, 2));
    }

    #[test]
    fn identifier_channel_is_appended() {
        let tsp = PathTsp::closed(square(), 0).unwrap();
        let opts = ObserveOptions { node_id_salt: Some(7), ..Default::default() };
        let obs = tsp.observe(&opts);
        assert_eq!(obs.features.ncols(), 3);
        assert!(obs.features.column(2).iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn knn_keeps_nearest_in_index_order() {
        let coords = vec![[0.0, 0.0], [0.9, 0.9], [0.1, 0.0], [0.5, 0.5], [0.0, 0.2]];
        let tsp = PathTsp::closed(coords, 0).unwrap();
        let obs = tsp.observe(&ObserveOptions { knn: Some(2), ..Default::default() });
        assert_eq!(obs.nodes, vec![0, 0, 2, 4]);
        let full = tsp.observe(&ObserveOptions { knn: Some(10), ..Default::default() });
        assert_eq!(full, tsp.observe(&ObserveOptions::default()));
    }
}
