//! Path-CVRP: the vehicle starts at an origin with some remaining capacity,
//! must serve every active customer and finish at the depot.
//!
//! A step either drives straight to the next customer or returns to the
//! depot first to refill, so the policy scores two actions per node.

use std::sync::Arc;

use ndarray::Array2;

use super::routing::{euclid, nearest, token_nodes, without};
use super::{illegal, with_identifier, Observation, ObserveOptions, Problem, ProblemKind};
use crate::error::{CopError, Result};
use crate::solution::{PartialSolution, Step};

#[derive(Clone, Debug)]
pub struct PathCvrp {
    coords: Arc<Vec<[f64; 2]>>,
    demands: Arc<Vec<u32>>,
    depot: usize,
    origin: usize,
    capacity: u32,
    remaining: u32,
    active: Vec<usize>,
}

impl PathCvrp {
    /// Plain CVRP: start at the depot with a full vehicle, every other node
    /// is a customer.
    pub fn new(coords: Vec<[f64; 2]>, demands: Vec<u32>, depot: usize, capacity: u32) -> Result<Self> {
        let active = (0..coords.len()).filter(|&i| i != depot).collect();
        Self::with_state(Arc::new(coords), Arc::new(demands), depot, depot, capacity, capacity, active)
    }

    pub fn with_state(
        coords: Arc<Vec<[f64; 2]>>,
        demands: Arc<Vec<u32>>,
        depot: usize,
        origin: usize,
        capacity: u32,
        remaining: u32,
        mut active: Vec<usize>,
    ) -> Result<Self> {
        let n = coords.len();
        if demands.len() != n {
            return Err(CopError::Config("one demand per node, depot included".into()));
        }
        if depot >= n || origin >= n {
            return Err(CopError::Config(format!("depot/origin out of range for {n} nodes")));
        }
        if remaining > capacity {
            return Err(CopError::Config("remaining capacity exceeds full capacity".into()));
        }
        active.sort_unstable();
        active.dedup();
        if active.iter().any(|&a| a >= n || a == depot || a == origin) {
            return Err(CopError::Config("customers must exclude depot and origin".into()));
        }
        if let Some(&a) = active.iter().find(|&&a| demands[a] > capacity) {
            return Err(CopError::Config(format!("demand of customer {a} exceeds capacity")));
        }
        Ok(PathCvrp { coords, demands, depot, origin, capacity, remaining, active })
    }

    pub fn coords(&self) -> &Arc<Vec<[f64; 2]>> {
        &self.coords
    }

    pub fn demands(&self) -> &Arc<Vec<u32>> {
        &self.demands
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
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

    /// Route as a node sequence from the origin to the final depot visit,
    /// depot refills included.
    pub fn flatten(&self, partial: &PartialSolution) -> Option<Vec<usize>> {
        let deliveries = deliveries(partial)?;
        let mut seq = vec![self.origin];
        for &(node, via_depot) in &deliveries {
            if via_depot {
                seq.push(self.depot);
            }
            seq.push(node);
        }
        if !deliveries.is_empty() && deliveries.len() == self.active.len() {
            seq.push(self.depot);
        }
        Some(seq)
    }

    /// Total length of a node sequence.
    pub fn route_length(&self, seq: &[usize]) -> f64 {
        seq.windows(2).map(|w| self.dist(w[0], w[1])).sum()
    }

    /// Subtours of a feasible solution, in construction order.
    pub fn subtours(&self, partial: &PartialSolution) -> Option<Vec<Vec<usize>>> {
        let mut tours: Vec<Vec<usize>> = Vec::new();
        for (node, via) in deliveries(partial)? {
            if via || tours.is_empty() {
                tours.push(Vec::new());
            }
            tours.last_mut().expect("pushed above").push(node);
        }
        Some(tours)
    }

    /// Customer demand as seen by the policy: zero at origin and depot.
    fn demand_feature(&self, row: usize, node: usize) -> f64 {
        if row < 2 {
            0.0
        } else {
            self.demands[node] as f64 / self.capacity as f64
        }
    }
}

fn deliveries(partial: &PartialSolution) -> Option<Vec<(usize, bool)>> {
    if partial.is_empty() {
        return Some(Vec::new());
    }
    match partial {
        PartialSolution::Sequence(s) => s
            .iter()
            .map(|z| match *z {
                Step::Delivery { node, via_depot } => Some((node, via_depot)),
                _ => None,
            })
            .collect(),
        PartialSolution::Set(_) => None,
    }
}

impl Problem for PathCvrp {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Cvrp
    }

    fn allowed_steps(&self) -> Vec<Step> {
        let mut steps = Vec::with_capacity(2 * self.active.len());
        for &j in &self.active {
            let d = self.demands[j];
            if d <= self.remaining {
                steps.push(Step::Delivery { node: j, via_depot: false });
            }
            if d <= self.capacity {
                steps.push(Step::Delivery { node: j, via_depot: true });
            }
        }
        steps
    }

    fn reduce(&self, step: Step) -> Result<(Self, f64)> {
        let Step::Delivery { node: j, via_depot } = step else {
            return Err(illegal(step, "path-CVRP steps are deliveries"));
        };
        let active = without(&self.active, j).ok_or_else(|| illegal(step, "customer is not active"))?;
        let d = self.demands[j];
        let (cost, remaining) = if via_depot {
            if d > self.capacity {
                return Err(illegal(step, "demand exceeds full capacity"));
            }
            (self.dist(self.origin, self.depot) + self.dist(self.depot, j), self.capacity - d)
        } else {
            if d > self.remaining {
                return Err(illegal(step, "demand exceeds remaining capacity"));
            }
            (self.dist(self.origin, j), self.remaining - d)
        };
        let cost = if active.is_empty() { cost + self.dist(j, self.depot) } else { cost };
        let next = PathCvrp {
            coords: Arc::clone(&self.coords),
            demands: Arc::clone(&self.demands),
            depot: self.depot,
            origin: j,
            capacity: self.capacity,
            remaining,
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
        let origin = self.coords[self.origin];
        let candidates = nearest(&self.active, opts.knn, |c| euclid(origin, self.coords[c]));
        let nodes = token_nodes(self.origin, self.depot, &candidates);
        let load = self.remaining as f64 / self.capacity as f64;
        let mut features = Array2::zeros((nodes.len(), 4));
        let mut mask = Vec::with_capacity(2 * nodes.len());
        let mut actions = Vec::with_capacity(2 * nodes.len());
        for (r, &n) in nodes.iter().enumerate() {
            features[[r, 0]] = self.coords[n][0];
            features[[r, 1]] = self.coords[n][1];
            features[[r, 2]] = self.demand_feature(r, n);
            features[[r, 3]] = load;
            for via_depot in [false, true] {
                let limit = if via_depot { self.capacity } else { self.remaining };
                let ok = r >= 2 && self.demands[n] <= limit;
                mask.push(ok);
                actions.push((r >= 2).then_some(Step::Delivery { node: n, via_depot }));
            }
        }
        Observation {
            features: with_identifier(features, &nodes, opts.node_id_salt),
            edge_weights: None,
            nodes,
            endpoints: true,
            heads: 2,
            mask,
            actions,
        }
    }

    fn same_state(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.coords, &other.coords) || self.coords == other.coords)
            && self.demands == other.demands
            && self.depot == other.depot
            && self.origin == other.origin
            && self.capacity == other.capacity
            && self.remaining == other.remaining
            && self.active == other.active
    }

    fn step_universe(&self) -> Vec<Step> {
        (0..self.node_count())
            .flat_map(|node| [false, true].map(|via_depot| Step::Delivery { node, via_depot }))
            .collect()
    }

    fn objective(&self, partial: &PartialSolution) -> f64 {
        match self.flatten(partial) {
            Some(seq) => self.route_length(&seq),
            None => f64::NAN,
        }
    }

    /// Every segment between depot visits carries at most `capacity`; the
    /// first segment already carries what was served before the origin.
    fn is_extendable(&self, partial: &PartialSolution) -> bool {
        let steps = match partial {
            PartialSolution::Sequence(s) => s.as_slice(),
            PartialSolution::Set(s) if s.is_empty() => &[],
            PartialSolution::Set(_) => return false,
        };
        let mut segment = u64::from(self.capacity - self.remaining);
        for (k, z) in steps.iter().enumerate() {
            let Step::Delivery { node, via_depot } = *z else { return false };
            if self.active.binary_search(&node).is_err() || steps[..k].iter().any(|y| y.index() == node) {
                return false;
            }
            if via_depot {
                segment = 0;
            }
            segment += u64::from(self.demands[node]);
            if segment > u64::from(self.capacity) {
                return false;
            }
        }
        true
    }

    fn is_feasible(&self, partial: &PartialSolution) -> bool {
        self.is_extendable(partial) && partial.len() == self.active.len()
    }

    fn phi(&self, partial: &PartialSolution) -> Result<Self> {
        if !self.is_extendable(partial) {
            return Err(CopError::NotExtendable(partial.to_string()));
        }
        let deliveries = deliveries(partial).expect("extendable");
        let visited: Vec<usize> = deliveries.iter().map(|&(n, _)| n).collect();
        let last_refill = deliveries.iter().rposition(|&(_, via)| via);
        let served: u32 = match last_refill {
            Some(k) => deliveries[k..].iter().map(|&(n, _)| self.demands[n]).sum(),
            None => (self.capacity - self.remaining) + visited.iter().map(|&n| self.demands[n]).sum::<u32>(),
        };
        Ok(PathCvrp {
            coords: Arc::clone(&self.coords),
            demands: Arc::clone(&self.demands),
            depot: self.depot,
            origin: visited.last().copied().unwrap_or(self.origin),
            capacity: self.capacity,
            remaining: self.capacity - served,
            active: self.active.iter().copied().filter(|a| !visited.contains(a)).collect(),
        })
    }
}
