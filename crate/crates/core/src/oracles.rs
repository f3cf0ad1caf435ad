//! Exact solvers for small instances and brute-force references.
//!
//! The exact solvers produce the expert data for imitation. The brute-force
//! functions enumerate solutions directly and exist to audit the solvers.
//! Ties are broken toward the lowest node index.

use crate::error::{CopError, Result};
use crate::problems::cvrp::PathCvrp;
use crate::problems::kp::Knapsack;
use crate::problems::{PathAtsp, PathOp, PathTsp, Problem, ProblemInstance, Solution};
use crate::solution::{PartialSolution, SolutionKind, Step};

pub const HELD_KARP_LIMIT: usize = 22;
pub const CVRP_LIMIT: usize = 10;
pub const OP_LIMIT: usize = 10;
/// Weight resolution of the knapsack table.
pub const KP_GRID: f64 = 1e-4;
/// Node cap of the knapsack proof search.
pub const KP_SEARCH_LIMIT: usize = 20_000_000;

/// Shortest Hamiltonian path `origin -> nodes -> destination`.
pub fn held_karp_path(
    origin: usize,
    destination: usize,
    nodes: &[usize],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<(Vec<usize>, f64)> {
    let k = nodes.len();
    if k > HELD_KARP_LIMIT {
        return Err(CopError::SizeLimit { size: k, limit: HELD_KARP_LIMIT });
    }
    if k == 0 {
        return Ok((Vec::new(), cost(origin, destination)));
    }
    let table = PrefixTable::build(origin, nodes, &cost);
    let full = (1usize << k) - 1;
    let (last, total) = table.close(full, |j| cost(nodes[j], destination));
    Ok((table.order(full, last, nodes, &cost), total))
}

/// `best[mask * k + last]`: shortest path from the origin through `mask`
/// ending at `last`.
struct PrefixTable {
    k: usize,
    best: Vec<f64>,
}

impl PrefixTable {
    fn build(origin: usize, nodes: &[usize], cost: &impl Fn(usize, usize) -> f64) -> Self {
        let k = nodes.len();
        let mut best = vec![f64::INFINITY; (1usize << k) * k];
        for j in 0..k {
            best[(1 << j) * k + j] = cost(origin, nodes[j]);
        }
        let arc: Vec<f64> = (0..k * k).map(|e| cost(nodes[e / k], nodes[e % k])).collect();
        for mask in 1usize..(1 << k) {
            if mask.count_ones() < 2 {
                continue;
            }
            for last in 0..k {
                if mask & (1 << last) == 0 {
                    continue;
                }
                let prev_mask = mask ^ (1 << last);
                let mut b = f64::INFINITY;
                for prev in 0..k {
                    if prev_mask & (1 << prev) != 0 {
                        let c = best[prev_mask * k + prev] + arc[prev * k + last];
                        if c < b {
                            b = c;
                        }
                    }
                }
                best[mask * k + last] = b;
            }
        }
        PrefixTable { k, best }
    }

    fn get(&self, mask: usize, last: usize) -> f64 {
        self.best[mask * self.k + last]
    }

    /// Best last node and total when closing `mask` with `tail(last)`.
    fn close(&self, mask: usize, tail: impl Fn(usize) -> f64) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for last in 0..self.k {
            if mask & (1 << last) != 0 {
                let c = self.get(mask, last) + tail(last);
                if c < best.1 {
                    best = (last, c);
                }
            }
        }
        best
    }

    /// Node order of the path stored for `(mask, last)`.
    fn order(
        &self,
        mut mask: usize,
        mut last: usize,
        nodes: &[usize],
        cost: &impl Fn(usize, usize) -> f64,
    ) -> Vec<usize> {
        let mut rev = vec![nodes[last]];
        while mask.count_ones() > 1 {
            let prev_mask = mask ^ (1 << last);
            let target = self.get(mask, last);
            let prev = (0..self.k)
                .find(|&p| prev_mask & (1 << p) != 0 && self.get(prev_mask, p) + cost(nodes[p], nodes[last]) == target)
                .expect("table is consistent");
            rev.push(nodes[prev]);
            mask = prev_mask;
            last = prev;
        }
        rev.reverse();
        rev
    }
}

pub fn tsp_exact(p: &PathTsp) -> Result<(Vec<usize>, f64)> {
    held_karp_path(p.origin(), p.destination(), p.active(), |a, b| p.dist(a, b))
}

pub fn atsp_exact(p: &PathAtsp) -> Result<(Vec<usize>, f64)> {
    held_karp_path(p.origin(), p.destination(), p.active(), |a, b| p.dist(a, b))
}

/// Optimal item set: a table over the weight grid with weights rounded up
/// gives a feasible incumbent, then a depth-first search with the
/// fractional bound over the true weights proves or improves it.
/// Returns the picked items (ascending), their value and whether the search
/// finished within [`KP_SEARCH_LIMIT`] nodes.
pub fn kp_exact(p: &Knapsack) -> (Vec<usize>, f64, bool) {
    let items = p.items();
    let ids = p.active();
    let units = |w: f64| (w / KP_GRID - 1e-9).ceil().max(0.0) as usize;
    let cap = (p.capacity() / KP_GRID + 1e-9).floor() as usize;
    let n = ids.len();

    let mut table = vec![0.0f64; cap + 1];
    let mut take = vec![false; n * (cap + 1)];
    for (r, &i) in ids.iter().enumerate() {
        let w = units(items[i].weight);
        let v = items[i].value;
        for c in (w..=cap).rev() {
            let cand = table[c - w] + v;
            if cand > table[c] {
                table[c] = cand;
                take[r * (cap + 1) + c] = true;
            }
        }
    }
    let mut picked = Vec::new();
    let mut c = cap;
    for r in (0..n).rev() {
        if take[r * (cap + 1) + c] {
            picked.push(ids[r]);
            c -= units(items[ids[r]].weight);
        }
    }
    picked.sort_unstable();
    let incumbent = p.value(&picked);

    let mut order: Vec<usize> = ids.to_vec();
    order.sort_by(|&a, &b| {
        let ra = items[a].value / items[a].weight;
        let rb = items[b].value / items[b].weight;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut search =
        KpSearch { p, order, best_value: incumbent, best: picked, current: Vec::new(), nodes: 0, exhausted: false };
    search.dfs(0, p.capacity(), 0.0);
    let mut best = search.best;
    best.sort_unstable();
    let value = p.value(&best);
    (best, value, !search.exhausted)
}

struct KpSearch<'a> {
    p: &'a Knapsack,
    order: Vec<usize>,
    best_value: f64,
    best: Vec<usize>,
    current: Vec<usize>,
    nodes: usize,
    exhausted: bool,
}

impl KpSearch<'_> {
    fn bound(&self, from: usize, mut room: f64, value: f64) -> f64 {
        let items = self.p.items();
        let mut b = value;
        for &i in &self.order[from..] {
            let it = items[i];
            if it.weight <= room {
                room -= it.weight;
                b += it.value;
            } else {
                return b + it.value * room / it.weight;
            }
        }
        b
    }

    fn dfs(&mut self, from: usize, room: f64, value: f64) {
        self.nodes += 1;
        if self.nodes > KP_SEARCH_LIMIT {
            self.exhausted = true;
            return;
        }
        if value > self.best_value {
            let mut cand = self.current.clone();
            cand.sort_unstable();
            let exact = self.p.value(&cand);
            if exact > self.best_value {
                self.best_value = exact;
                self.best = cand;
            }
        }
        if from == self.order.len() || self.bound(from, room, value) <= self.best_value + 1e-12 {
            return;
        }
        let i = self.order[from];
        let w = self.p.items()[i].weight;
        if w <= room {
            self.current.push(i);
            self.dfs(from + 1, room - w, value + self.p.items()[i].value);
            self.current.pop();
        }
        self.dfs(from + 1, room, value);
    }
}

/// Per-subset shortest closed tours from the depot, and shortest paths from
/// the origin ending at the depot.
fn cvrp_segments(p: &PathCvrp) -> (Vec<f64>, Vec<f64>) {
    let nodes = p.active();
    let k = nodes.len();
    let depot = p.depot();
    let cost = |a: usize, b: usize| p.dist(a, b);
    let from_depot = PrefixTable::build(depot, nodes, &cost);
    let from_origin = if p.origin() == depot { None } else { Some(PrefixTable::build(p.origin(), nodes, &cost)) };
    let mut tour = vec![f64::INFINITY; 1 << k];
    let mut first = vec![f64::INFINITY; 1 << k];
    tour[0] = 0.0;
    first[0] = p.dist(p.origin(), depot);
    for mask in 1usize..(1 << k) {
        let demand: u32 = (0..k).filter(|j| mask & (1 << j) != 0).map(|j| p.demands()[nodes[j]]).sum();
        if demand <= p.capacity() {
            tour[mask] = from_depot.close(mask, |j| p.dist(nodes[j], depot)).1;
        }
        if demand <= p.remaining() {
            first[mask] = match &from_origin {
                Some(t) => t.close(mask, |j| p.dist(nodes[j], depot)).1,
                None => tour[mask],
            };
        }
    }
    (tour, first)
}

/// Optimal CVRP route. The first subtour leaves from the origin with the
/// remaining capacity; later ones are full tours from the depot. Returns the
/// steps in construction order and the objective.
pub fn cvrp_exact(p: &PathCvrp) -> Result<(PartialSolution, f64)> {
    let nodes = p.active();
    let k = nodes.len();
    if k > CVRP_LIMIT {
        return Err(CopError::SizeLimit { size: k, limit: CVRP_LIMIT });
    }
    if k == 0 {
        return Ok((PartialSolution::empty(SolutionKind::Sequence), 0.0));
    }
    let (tour, first) = cvrp_segments(p);
    let full = (1usize << k) - 1;
    // rest[mask]: cheapest cover of `mask` by full tours, and the chosen tour
    let mut rest = vec![(f64::INFINITY, 0usize); 1 << k];
    rest[0] = (0.0, 0);
    for mask in 1usize..=full {
        let low = mask & mask.wrapping_neg();
        let others = mask ^ low;
        let mut sub = others;
        loop {
            let s = sub | low;
            let c = tour[s] + rest[mask ^ s].0;
            if c < rest[mask].0 {
                rest[mask] = (c, s);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }
    let mut head = (f64::INFINITY, 0usize);
    let mut s = full;
    loop {
        let c = first[s] + rest[full ^ s].0;
        if c < head.0 {
            head = (c, s);
        }
        if s == 0 {
            break;
        }
        s = (s - 1) & full;
    }
    if !head.0.is_finite() {
        return Err(CopError::InfeasibleSolution("no capacity-feasible route".into()));
    }

    let cost = |a: usize, b: usize| p.dist(a, b);
    let subset_nodes = |m: usize| -> Vec<usize> { (0..k).filter(|j| m & (1 << j) != 0).map(|j| nodes[j]).collect() };
    let mut steps = Vec::new();
    if head.1 != 0 {
        let (order, _) = held_karp_path(p.origin(), p.depot(), &subset_nodes(head.1), cost)?;
        steps.extend(order.iter().map(|&node| Step::Delivery { node, via_depot: false }));
    }
    let mut left = full ^ head.1;
    while left != 0 {
        let s = rest[left].1;
        let (order, _) = held_karp_path(p.depot(), p.depot(), &subset_nodes(s), cost)?;
        for (i, &node) in order.iter().enumerate() {
            steps.push(Step::Delivery { node, via_depot: i == 0 });
        }
        left ^= s;
    }
    let partial = PartialSolution::Sequence(steps);
    let value = p.objective(&partial);
    Ok((partial, value))
}

/// Maximum-prize OP route. Returns the visit order and the collected prize.
pub fn op_exact(p: &PathOp) -> Result<(Vec<usize>, f64)> {
    let nodes = p.active();
    let k = nodes.len();
    if k > OP_LIMIT {
        return Err(CopError::SizeLimit { size: k, limit: OP_LIMIT });
    }
    let cost = |a: usize, b: usize| p.dist(a, b);
    let table = PrefixTable::build(p.origin(), nodes, &cost);
    let mut best: (f64, usize, usize) = (0.0, 0, usize::MAX);
    for mask in 1usize..(1 << k) {
        let prize: f64 = (0..k).filter(|j| mask & (1 << j) != 0).map(|j| p.prizes()[nodes[j]]).sum();
        if prize <= best.0 {
            continue;
        }
        let (last, len) = table.close(mask, |j| p.dist(nodes[j], p.destination()));
        if len <= p.budget() {
            best = (prize, mask, last);
        }
    }
    if best.1 == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let order = table.order(best.1, best.2, nodes, &cost);
    let value = p.prize(&order);
    Ok((order, value))
}

/// Exact solution of any instance as steps, with its objective value.
pub fn solve(inst: &ProblemInstance) -> Result<(PartialSolution, f64)> {
    let seq = |order: Vec<usize>| PartialSolution::Sequence(order.into_iter().map(Step::Node).collect());
    let partial = match inst {
        ProblemInstance::Tsp(p) => seq(tsp_exact(p)?.0),
        ProblemInstance::Atsp(p) => seq(atsp_exact(p)?.0),
        ProblemInstance::Cvrp(p) => cvrp_exact(p)?.0,
        ProblemInstance::Op(p) => seq(op_exact(p)?.0),
        ProblemInstance::Kp(p) => {
            PartialSolution::from_steps(SolutionKind::Set, kp_exact(p).0.into_iter().map(Step::Item))
        }
    };
    let value = inst.objective(&partial);
    Ok((partial, value))
}

/// Natural form of a partial solution.
pub fn to_solution(inst: &ProblemInstance, partial: &PartialSolution) -> Solution {
    match inst {
        ProblemInstance::Cvrp(p) => Solution::Tours(p.subtours(partial).unwrap_or_default()),
        ProblemInstance::Kp(_) => Solution::Items(partial.steps().map(|z| z.index()).collect()),
        _ => Solution::Route(partial.steps().map(|z| z.index()).collect()),
    }
}

/// Steps of a solution in its stored order.
pub fn from_solution(inst: &ProblemInstance, solution: &Solution) -> Result<PartialSolution> {
    let partial = match (inst, solution) {
        (ProblemInstance::Cvrp(_), Solution::Tours(tours)) => PartialSolution::Sequence(
            tours
                .iter()
                .enumerate()
                .flat_map(|(t, tour)| {
                    tour.iter().enumerate().map(move |(i, &node)| Step::Delivery { node, via_depot: i == 0 && t > 0 })
                })
                .collect(),
        ),
        (ProblemInstance::Kp(_), Solution::Items(items)) => {
            PartialSolution::from_steps(SolutionKind::Set, items.iter().map(|&i| Step::Item(i)))
        }
        (ProblemInstance::Tsp(_) | ProblemInstance::Atsp(_) | ProblemInstance::Op(_), Solution::Route(r)) => {
            PartialSolution::Sequence(r.iter().map(|&n| Step::Node(n)).collect())
        }
        _ => return Err(CopError::ProblemMismatch { expected: inst.kind().to_string(), got: format!("{solution:?}") }),
    };
    if !inst.is_feasible(&partial) {
        return Err(CopError::InfeasibleSolution(partial.to_string()));
    }
    Ok(partial)
}

/// Minimum over all visit orders, by exhaustive permutation.
pub fn brute_force_path(origin: usize, destination: usize, nodes: &[usize], cost: impl Fn(usize, usize) -> f64) -> f64 {
    fn rec(
        prev: usize,
        acc: f64,
        left: &mut Vec<usize>,
        dest: usize,
        cost: &impl Fn(usize, usize) -> f64,
        best: &mut f64,
    ) {
        if left.is_empty() {
            *best = best.min(acc + cost(prev, dest));
            return;
        }
        for i in 0..left.len() {
            let n = left.swap_remove(i);
            rec(n, acc + cost(prev, n), left, dest, cost, best);
            left.push(n);
            let last = left.len() - 1;
            left.swap(i, last);
        }
    }
    let mut best = f64::INFINITY;
    rec(origin, 0.0, &mut nodes.to_vec(), destination, &cost, &mut best);
    best
}

/// Best value over all item subsets.
pub fn brute_force_kp(p: &Knapsack) -> f64 {
    let ids = p.active();
    let mut best: f64 = 0.0;
    for mask in 0u64..(1 << ids.len()) {
        let picked: Vec<usize> = (0..ids.len()).filter(|j| mask & (1 << j) != 0).map(|j| ids[j]).collect();
        if p.weight(&picked) <= p.capacity() {
            best = best.max(p.value(&picked));
        }
    }
    best
}

/// Minimum CVRP route length over every ordering of customers and every
/// placement of depot refills, pruned only by capacity and by the running
/// length.
pub fn brute_force_cvrp(p: &PathCvrp) -> f64 {
    struct Ctx<'a> {
        p: &'a PathCvrp,
        best: f64,
    }
    fn rec(ctx: &mut Ctx, at: usize, load_left: u32, acc: f64, left: &mut Vec<usize>) {
        if acc >= ctx.best {
            return;
        }
        let p = ctx.p;
        if left.is_empty() {
            ctx.best = ctx.best.min(acc + p.dist(at, p.depot()));
            return;
        }
        for i in 0..left.len() {
            let n = left[i];
            let d = p.demands()[n];
            left.remove(i);
            if d <= load_left {
                rec(ctx, n, load_left - d, acc + p.dist(at, n), left);
            }
            let via = acc + p.dist(at, p.depot()) + p.dist(p.depot(), n);
            rec(ctx, n, p.capacity() - d, via, left);
            left.insert(i, n);
        }
    }
    if p.active().is_empty() {
        return 0.0;
    }
    let mut ctx = Ctx { p, best: f64::INFINITY };
    rec(&mut ctx, p.origin(), p.remaining(), 0.0, &mut p.active().to_vec());
    ctx.best
}

/// Largest prize over every budget-feasible visit order.
pub fn brute_force_op(p: &PathOp) -> f64 {
    fn rec(p: &PathOp, at: usize, used: f64, prize: f64, left: &mut Vec<usize>, best: &mut f64) {
        *best = best.max(prize);
        for i in 0..left.len() {
            let n = left.remove(i);
            let used_n = used + p.dist(at, n);
            if used_n + p.dist(n, p.destination()) <= p.budget() {
                rec(p, n, used_n, prize + p.prizes()[n], left, best);
            }
            left.insert(i, n);
        }
    }
    let mut best = 0.0;
    rec(p, p.origin(), 0.0, 0.0, &mut p.active().to_vec(), &mut best);
    best
}

/// Every feasible solution, found by enumerating step sequences with
/// distinct indices (or item subsets) and testing the feasibility predicate
/// alone. Sets are returned once each.
pub fn feasible_set<P: Problem>(inst: &P, node_budget: usize) -> Result<Vec<PartialSolution>> {
    let universe = inst.step_universe();
    let mut out = Vec::new();
    let mut visited = 0usize;
    match inst.solution_kind() {
        SolutionKind::Set => {
            if universe.len() > 24 {
                return Err(CopError::SizeLimit { size: universe.len(), limit: 24 });
            }
            for mask in 0u64..(1 << universe.len()) {
                visited += 1;
                if visited > node_budget {
                    return Err(CopError::BudgetExceeded { budget: node_budget });
                }
                let x = PartialSolution::from_steps(
                    SolutionKind::Set,
                    (0..universe.len()).filter(|j| mask & (1 << j) != 0).map(|j| universe[j]),
                );
                if inst.is_feasible(&x) {
                    out.push(x);
                }
            }
        }
        SolutionKind::Sequence => {
            let max_len = inst.decision_count();
            let mut stack = vec![Vec::<Step>::new()];
            while let Some(seq) = stack.pop() {
                visited += 1;
                if visited > node_budget {
                    return Err(CopError::BudgetExceeded { budget: node_budget });
                }
                let x = PartialSolution::Sequence(seq.clone());
                if inst.is_feasible(&x) {
                    out.push(x);
                }
                if seq.len() < max_len {
                    for &z in universe.iter().rev() {
                        if seq.iter().all(|s| s.index() != z.index()) {
                            let mut next = seq.clone();
                            next.push(z);
                            stack.push(next);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
