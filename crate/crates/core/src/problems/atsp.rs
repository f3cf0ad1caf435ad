//! Asymmetric path-TSP over an explicit cost matrix.
//!
//! Nodes carry no geometric features, so each one gets a random identifier
//! vector; the cost matrix enters the policy through graph-convolution edge
//! weights instead.

use std::sync::Arc;

use ndarray::Array2;

use super::routing::{all_except, distinct_active, nearest, node_steps, token_nodes, without};
use super::{illegal, with_identifier, EdgeNormalization, Observation, ObserveOptions, Problem, ProblemKind};
use crate::error::{CopError, Result};
use crate::solution::{PartialSolution, Step};

#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CopError::Config("cost matrix must be square".into()));
        }
        let costs: Vec<f64> = rows.into_iter().flatten().collect();
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(CopError::Config("costs must be finite and nonnegative".into()));
        }
        if (0..n).any(|i| costs[i * n + i] != 0.0) {
            return Err(CopError::Config("cost matrix diagonal must be zero".into()));
        }
        Ok(CostMatrix { n, costs })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.costs[from * self.n + to]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.costs.chunks(self.n.max(1)).map(|c| c.to_vec()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PathAtsp {
    costs: Arc<CostMatrix>,
    ids: Arc<Vec<Vec<f64>>>,
    origin: usize,
    destination: usize,
    active: Vec<usize>,
}

impl PathAtsp {
    pub fn new(costs: CostMatrix, ids: Vec<Vec<f64>>, origin: usize, destination: usize) -> Result<Self> {
        let active = all_except(costs.len(), &[origin, destination]);
        Self::with_active(Arc::new(costs), Arc::new(ids), origin, destination, active)
    }

    pub fn with_active(
        costs: Arc<CostMatrix>,
        ids: Arc<Vec<Vec<f64>>>,
        origin: usize,
        destination: usize,
        mut active: Vec<usize>,
    ) -> Result<Self> {
        let n = costs.len();
        if ids.len() != n || ids.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(CopError::Config("one identifier vector of equal length per node".into()));
        }
        if origin >= n || destination >= n {
            return Err(CopError::Config(format!("endpoint out of range for {n} nodes")));
        }
        active.sort_unstable();
        active.dedup();
        if active.iter().any(|&a| a >= n || a == origin || a == destination) {
            return Err(CopError::Config("active set must exclude endpoints and stay in range".into()));
        }
        Ok(PathAtsp { costs, ids, origin, destination, active })
    }

    pub fn costs(&self) -> &Arc<CostMatrix> {
        &self.costs
    }

    pub fn ids(&self) -> &Arc<Vec<Vec<f64>>> {
        &self.ids
    }

    pub fn id_dim(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
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
        self.costs.len()
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.costs.get(a, b)
    }

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

/// Edge weights between observation tokens.
pub fn edge_weights(costs: &CostMatrix, nodes: &[usize], norm: EdgeNormalization) -> Array2<f64> {
    let n = nodes.len();
    let mut w = Array2::zeros((n, n));
    for a in 0..n {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for b in (0..n).filter(|&b| b != a) {
            let c = costs.get(nodes[a], nodes[b]);
            lo = lo.min(c);
            hi = hi.max(c);
        }
        let span = hi - lo;
        for b in (0..n).filter(|&b| b != a) {
            let c = costs.get(nodes[a], nodes[b]);
            let scaled = if span > 0.0 { (c - lo) / span } else { 0.0 };
            w[[a, b]] = 1.0 - scaled;
        }
        if norm == EdgeNormalization::RowStochastic {
            let sum: f64 = w.row(a).sum();
            if sum > 0.0 {
                w.row_mut(a).mapv_inplace(|v| v / sum);
            }
        }
    }
    w
}

impl Problem for PathAtsp {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Atsp
    }

    fn allowed_steps(&self) -> Vec<Step> {
        self.active.iter().map(|&i| Step::Node(i)).collect()
    }

    fn reduce(&self, step: Step) -> Result<(Self, f64)> {
        let Step::Node(j) = step else { return Err(illegal(step, "path-ATSP steps are nodes")) };
        let active = without(&self.active, j).ok_or_else(|| illegal(step, "node is not active"))?;
        let mut cost = self.dist(self.origin, j);
        if active.is_empty() {
            cost += self.dist(j, self.destination);
        }
        let next = PathAtsp {
            costs: Arc::clone(&self.costs),
            ids: Arc::clone(&self.ids),
            origin: j,
            destination: self.destination,
            active,
        };
        Ok((next, -cost))
    }

    fn is_complete(&self) -> bool {
        self.active.is_empty()
    }

    fn decision_count(&self) -> usize {
        self.active.len()
    }

    fn observe(&self, opts: &ObserveOptions) -> Observation {
        let candidates = nearest(&self.active, opts.knn, |c| self.dist(self.origin, c));
        let nodes = token_nodes(self.origin, self.destination, &candidates);
        let k = self.id_dim();
        let mut features = Array2::zeros((nodes.len(), k));
        for (r, &n) in nodes.iter().enumerate() {
            for (c, &v) in self.ids[n].iter().enumerate() {
                features[[r, c]] = v;
            }
        }
        let mask = (0..nodes.len()).map(|r| r >= 2).collect();
        let actions = (0..nodes.len()).map(|r| (r >= 2).then(|| Step::Node(nodes[r]))).collect();
        Observation {
            features: with_identifier(features, &nodes, opts.node_id_salt),
            edge_weights: Some(edge_weights(&self.costs, &nodes, opts.edge_normalization)),
            nodes,
            endpoints: true,
            heads: 1,
            mask,
            actions,
        }
    }

    fn same_state(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.costs, &other.costs) || self.costs == other.costs)
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
        Ok(PathAtsp {
            costs: Arc::clone(&self.costs),
            ids: Arc::clone(&self.ids),
            origin,
            destination: self.destination,
            active,
        })
    }
}
