//! Helpers shared by the origin/destination routing problems.

use crate::solution::{PartialSolution, Step};

pub(crate) fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// `active` without `node`, or `None` when `node` is not active.
pub(crate) fn without(active: &[usize], node: usize) -> Option<Vec<usize>> {
    let pos = active.binary_search(&node).ok()?;
    let mut out = Vec::with_capacity(active.len() - 1);
    out.extend_from_slice(&active[..pos]);
    out.extend_from_slice(&active[pos + 1..]);
    Some(out)
}

/// Node indices of a sequence of `Step::Node`s, `None` if any step has
/// another shape.
pub(crate) fn node_steps(partial: &PartialSolution) -> Option<Vec<usize>> {
    if partial.is_empty() {
        return Some(Vec::new());
    }
    match partial {
        PartialSolution::Sequence(s) => s
            .iter()
            .map(|z| match *z {
                Step::Node(i) => Some(i),
                _ => None,
            })
            .collect(),
        PartialSolution::Set(_) => None,
    }
}

/// True iff `nodes` are pairwise distinct members of the sorted `active`.
pub(crate) fn distinct_active(nodes: &[usize], active: &[usize]) -> bool {
    let mut seen = Vec::with_capacity(nodes.len());
    for &n in nodes {
        if active.binary_search(&n).is_err() || seen.contains(&n) {
            return false;
        }
        seen.push(n);
    }
    true
}

/// The `k` candidates with smallest `key`, returned in ascending index
/// order. Ties on the key go to the lower index. `k >= len` returns the
/// input unchanged.
pub(crate) fn nearest(candidates: &[usize], k: Option<usize>, key: impl Fn(usize) -> f64) -> Vec<usize> {
    match k {
        Some(k) if k < candidates.len() => {
            let mut keyed: Vec<(f64, usize)> = candidates.iter().map(|&c| (key(c), c)).collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut kept: Vec<usize> = keyed[..k].iter().map(|&(_, c)| c).collect();
            kept.sort_unstable();
            kept
        }
        _ => candidates.to_vec(),
    }
}

/// Token order of a routing observation: origin, destination, candidates.
pub(crate) fn token_nodes(origin: usize, destination: usize, candidates: &[usize]) -> Vec<usize> {
    let mut nodes = Vec::with_capacity(candidates.len() + 2);
    nodes.push(origin);
    nodes.push(destination);
    nodes.extend_from_slice(candidates);
    nodes
}

/// Customers of the instance: every node except the given endpoints.
pub(crate) fn all_except(n: usize, excluded: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !excluded.contains(i)).collect()
}
