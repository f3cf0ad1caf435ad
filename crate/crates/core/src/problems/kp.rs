//! 0/1 knapsack. Solutions are item sets, so every ordering of the same
//! picks reaches the same reduced state.

use std::sync::Arc;

use ndarray::Array2;

use super::routing::{nearest, without};
use super::{illegal, with_identifier, Observation, ObserveOptions, Problem, ProblemKind, REGISTER_TOLERANCE};
use crate::error::{CopError, Result};
use crate::solution::{PartialSolution, SolutionKind, Step};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Item {
    pub weight: f64,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Knapsack {
    items: Arc<Vec<Item>>,
    capacity: f64,
    /// Undecided items that still fit, ascending.
    active: Vec<usize>,
}

impl Knapsack {
    pub fn new(items: Vec<Item>, capacity: f64) -> Result<Self> {
        let all = (0..items.len()).collect();
        Self::with_state(Arc::new(items), capacity, all)
    }

    /// Items heavier than `capacity` are dropped from `active`.
    pub fn with_state(items: Arc<Vec<Item>>, capacity: f64, mut active: Vec<usize>) -> Result<Self> {
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(CopError::Config("capacity must be finite and nonnegative".into()));
        }
        if items.iter().any(|it| !(it.weight.is_finite() && it.weight > 0.0 && it.value.is_finite())) {
            return Err(CopError::Config("item weights must be positive and values finite".into()));
        }
        active.sort_unstable();
        active.dedup();
        if active.iter().any(|&a| a >= items.len()) {
            return Err(CopError::Config("active item out of range".into()));
        }
        active.retain(|&a| items[a].weight <= capacity);
        Ok(Knapsack { items, capacity, active })
    }

    pub fn items(&self) -> &Arc<Vec<Item>> {
        &self.items
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn value(&self, picked: &[usize]) -> f64 {
        picked.iter().map(|&i| self.items[i].value).sum()
    }

    pub fn weight(&self, picked: &[usize]) -> f64 {
        picked.iter().map(|&i| self.items[i].weight).sum()
    }

    fn ratio(&self, i: usize) -> f64 {
        self.items[i].value / self.items[i].weight
    }
}

fn item_steps(partial: &PartialSolution) -> Option<Vec<usize>> {
    if partial.is_empty() {
        return Some(Vec::new());
    }
    match partial {
        PartialSolution::Set(s) => s
            .iter()
            .map(|z| match *z {
                Step::Item(i) => Some(i),
                _ => None,
            })
            .collect(),
        PartialSolution::Sequence(_) => None,
    }
}

impl Problem for Knapsack {
    fn kind(&self) -> ProblemKind {
        ProblemKind::Kp
    }

    fn solution_kind(&self) -> SolutionKind {
        SolutionKind::Set
    }

    fn allowed_steps(&self) -> Vec<Step> {
        self.active.iter().map(|&i| Step::Item(i)).collect()
    }

    fn reduce(&self, step: Step) -> Result<(Self, f64)> {
        let Step::Item(i) = step else { return Err(illegal(step, "knapsack steps are items")) };
        let mut active = without(&self.active, i).ok_or_else(|| illegal(step, "item is not available"))?;
        let capacity = self.capacity - self.items[i].weight;
        active.retain(|&a| self.items[a].weight <= capacity);
        let next = Knapsack { items: Arc::clone(&self.items), capacity, active };
        Ok((next, self.items[i].value))
    }

    fn is_complete(&self) -> bool {
        true
    }

    fn decision_count(&self) -> usize {
        self.active.len()
    }

    fn observe(&self, opts: &ObserveOptions) -> Observation {
        let nodes = nearest(&self.active, opts.knn, |i| -self.ratio(i));
        let mut features = Array2::zeros((nodes.len(), 3));
        for (r, &i) in nodes.iter().enumerate() {
            features[[r, 0]] = self.items[i].value;
            features[[r, 1]] = self.items[i].weight;
            features[[r, 2]] = self.capacity;
        }
        Observation {
            features: with_identifier(features, &nodes, opts.node_id_salt),
            edge_weights: None,
            mask: vec![true; nodes.len()],
            actions: nodes.iter().map(|&i| Some(Step::Item(i))).collect(),
            nodes,
            endpoints: false,
            heads: 1,
        }
    }

    fn same_state(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.items, &other.items) || self.items == other.items)
            && (self.capacity - other.capacity).abs() <= REGISTER_TOLERANCE
            && self.active == other.active
    }

    fn step_universe(&self) -> Vec<Step> {
        (0..self.item_count()).map(Step::Item).collect()
    }

    fn objective(&self, partial: &PartialSolution) -> f64 {
        match item_steps(partial) {
            Some(picked) => -self.value(&picked),
            None => f64::NAN,
        }
    }

    fn is_extendable(&self, partial: &PartialSolution) -> bool {
        item_steps(partial).is_some_and(|picked| {
            picked.iter().all(|i| self.active.binary_search(i).is_ok()) && self.weight(&picked) <= self.capacity
        })
    }

    fn is_feasible(&self, partial: &PartialSolution) -> bool {
        self.is_extendable(partial)
    }

    fn phi(&self, partial: &PartialSolution) -> Result<Self> {
        if !self.is_extendable(partial) {
            return Err(CopError::NotExtendable(partial.to_string()));
        }
        let picked = item_steps(partial).expect("extendable");
        let capacity = self.capacity - self.weight(&picked);
        let active =
            self.active.iter().copied().filter(|a| !picked.contains(a) && self.items[*a].weight <= capacity).collect();
        Ok(Knapsack { items: Arc::clone(&self.items), capacity, active })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp() -> Knapsack {
        let items = [(0.5, 1.0), (0.3, 0.9), (0.4, 0.2), (1.5, 9.0)]
            .iter()
            .map(|&(weight, value)| Item { weight, value })
            .collect();
        Knapsack::new(items, 1.0).unwrap()
    }

    fn picks(v: &[usize]) -> PartialSolution {
        PartialSolution::from_steps(SolutionKind::Set, v.iter().map(|&i| Step::Item(i)))
    }

    #[test]
    fn oversized_items_are_filtered() {
        let k = kp();
        assert_eq!(k.active(), &[0, 1, 2]);
        let (next, reward) = k.reduce(Step::Item(0)).unwrap();
        assert_eq!(reward, 1.0);
        assert_eq!(next.active(), &[1, 2]);
        let (last, _) = next.reduce(Step::Item(1)).unwrap();
        assert!(last.active().is_empty());
        assert!(last.is_terminal());
    }

    #[test]
    fn pick_order_does_not_matter() {
        let k = kp();
        let (a, _) = k.reduce(Step::Item(0)).unwrap();
        let (a, _) = a.reduce(Step::Item(1)).unwrap();
        let (b, _) = k.reduce(Step::Item(1)).unwrap();
        let (b, _) = b.reduce(Step::Item(0)).unwrap();
        assert!(a.same_state(&b));
        assert!(a.same_state(&k.phi(&picks(&[1, 0])).unwrap()));
    }

    #[test]
    fn knn_prefers_high_ratio() {
        let obs = kp().observe(&ObserveOptions { knn: Some(2), ..Default::default() });
        assert_eq!(obs.nodes, vec![0, 1]);
        assert!(!obs.endpoints);
        assert_eq!(obs.features.dim(), (2, 3));
    }

    #[test]
    fn overweight_set_is_not_extendable() {
        let k = kp();
        assert!(k.is_extendable(&picks(&[0, 1])));
        assert!(!k.is_extendable(&picks(&[0, 1, 2])));
        assert!(!k.is_extendable(&picks(&[3])));
        assert_eq!(k.objective(&picks(&[0, 1])), -1.9);
    }
}
