//! Small combinatorial optimizers: cliques, set covers, packings, LP covers.
//!
//! Exact routines use bitmask branch-and-bound and are meant for desk-scale
//! instances; greedy routines are deterministic (ties broken by index).

use crate::error::{Error, Result};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Largest graph handled by the exact clique search.
pub const CLIQUE_LIMIT: usize = 128;
/// Largest ground set handled by exact covers.
pub const COVER_LIMIT: usize = 64;

/// Maximum-weight clique. `adj[i]` has bit j set iff i and j are adjacent.
/// Weights must be positive. Returns indices in increasing order.
pub fn max_weight_clique(adj: &[u128], weights: &[f64]) -> Result<Vec<usize>> {
    let n = adj.len();
    if n > CLIQUE_LIMIT {
        return Err(Error::ExactCap {
            size: n,
            cap: CLIQUE_LIMIT,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let all: u128 = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut best = Vec::new();
    let mut best_w = 0.0;
    let mut current = Vec::new();
    clique_search(adj, weights, all, 0.0, &mut current, &mut best, &mut best_w);
    best.sort_unstable();
    Ok(best)
}

/// Maximum-cardinality clique.
pub fn max_clique(adj: &[u128]) -> Result<Vec<usize>> {
    max_weight_clique(adj, &vec![1.0; adj.len()])
}

fn color_bound(adj: &[u128], weights: &[f64], mut cand: u128) -> f64 {
    // Greedy coloring: each color class is an independent set, so a clique
    // takes at most one vertex (the heaviest) from each class.
    let mut bound = 0.0;
    while cand != 0 {
        let mut class = cand;
        let mut heaviest: f64 = 0.0;
        let mut used = 0u128;
        while class != 0 {
            let v = class.trailing_zeros() as usize;
            used |= 1u128 << v;
            heaviest = heaviest.max(weights[v]);
            class &= !(1u128 << v);
            class &= !adj[v];
        }
        bound += heaviest;
        cand &= !used;
    }
    bound
}

fn clique_search(
    adj: &[u128],
    weights: &[f64],
    cand: u128,
    weight: f64,
    current: &mut Vec<usize>,
    best: &mut Vec<usize>,
    best_w: &mut f64,
) {
    if cand == 0 {
        if weight > *best_w + 1e-12 {
            *best_w = weight;
            *best = current.clone();
        }
        return;
    }
    if weight + color_bound(adj, weights, cand) <= *best_w + 1e-12 {
        return;
    }
    let mut rest = cand;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        if weight + color_bound(adj, weights, rest) <= *best_w + 1e-12 {
            return;
        }
        current.push(v);
        clique_search(adj, weights, rest & adj[v], weight + weights[v], current, best, best_w);
        current.pop();
        rest &= !(1u128 << v);
    }
}

/// Maximum-weight independent set (exact), via cliques of the complement.
pub fn max_weight_independent_set(conflict: &[u128], weights: &[f64]) -> Result<Vec<usize>> {
    let n = conflict.len();
    let all: u128 = if n >= 128 { u128::MAX } else { (1u128 << n) - 1 };
    let comp: Vec<u128> = conflict
        .iter()
        .enumerate()
        .map(|(i, &c)| !c & all & !(1u128 << i))
        .collect();
    max_weight_clique(&comp, weights)
}

/// Greedy independent set: heaviest first, ties by index.
pub fn greedy_independent_set(conflict: &dyn Fn(usize, usize) -> bool, weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&j| !conflict(i, j)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// A set-cover instance: `sets[i]` lists the elements it covers.
#[derive(Clone, Debug)]
pub struct CoverInstance {
    pub elements: usize,
    pub sets: Vec<Vec<usize>>,
    pub costs: Vec<f64>,
}

impl CoverInstance {
    pub fn check_coverable(&self) -> Result<()> {
        let mut seen = vec![false; self.elements];
        for s in &self.sets {
            for &e in s {
                seen[e] = true;
            }
        }
        if let Some(e) = seen.iter().position(|&b| !b) {
            return Err(Error::Infeasible(format!("element {e} lies in no candidate set")));
        }
        Ok(())
    }

    pub fn cost_of(&self, chosen: &[usize]) -> f64 {
        chosen.iter().map(|&i| self.costs[i]).sum()
    }
}

/// Exact minimum-cost set cover by branch-and-bound (costs nonnegative).
pub fn exact_set_cover(inst: &CoverInstance) -> Result<Vec<usize>> {
    if inst.elements > COVER_LIMIT {
        return Err(Error::ExactCap {
            size: inst.elements,
            cap: COVER_LIMIT,
        });
    }
    inst.check_coverable()?;
    if inst.elements == 0 {
        return Ok(Vec::new());
    }
    let masks: Vec<u64> = inst
        .sets
        .iter()
        .map(|s| s.iter().fold(0u64, |m, &e| m | (1u64 << e)))
        .collect();
    let full: u64 = if inst.elements == 64 {
        u64::MAX
    } else {
        (1u64 << inst.elements) - 1
    };
    // Covering sets per element, cheapest first.
    let mut by_elem: Vec<Vec<usize>> = vec![Vec::new(); inst.elements];
    for (i, &m) in masks.iter().enumerate() {
        for (e, list) in by_elem.iter_mut().enumerate() {
            if m >> e & 1 == 1 {
                list.push(i);
            }
        }
    }
    for list in &mut by_elem {
        list.sort_by(|&a, &b| inst.costs[a].total_cmp(&inst.costs[b]).then(a.cmp(&b)));
    }
    // Start from the greedy solution as incumbent.
    let greedy = greedy_set_cover(inst)?;
    let mut best_cost = inst.cost_of(&greedy);
    let mut best = greedy;
    let mut cur = Vec::new();
    cover_search(inst, &masks, &by_elem, full, 0, 0.0, &mut cur, &mut best, &mut best_cost);
    best.sort_unstable();
    Ok(best)
}

fn cover_lower_bound(inst: &CoverInstance, masks: &[u64], by_elem: &[Vec<usize>], uncovered: u64) -> f64 {
    // Each uncovered element pays at least min over its sets of cost / new coverage.
    let mut lb = 0.0;
    let mut rest = uncovered;
    while rest != 0 {
        let e = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let mut m = f64::INFINITY;
        for &s in &by_elem[e] {
            let gain = (masks[s] & uncovered).count_ones() as f64;
            m = m.min(inst.costs[s] / gain);
        }
        lb += m;
    }
    lb
}

#[allow(clippy::too_many_arguments)]
fn cover_search(
    inst: &CoverInstance,
    masks: &[u64],
    by_elem: &[Vec<usize>],
    full: u64,
    covered: u64,
    cost: f64,
    cur: &mut Vec<usize>,
    best: &mut Vec<usize>,
    best_cost: &mut f64,
) {
    if covered == full {
        if cost < *best_cost - 1e-15 * best_cost.abs().max(1.0) {
            *best_cost = cost;
            *best = cur.clone();
        }
        return;
    }
    let uncovered = full & !covered;
    if cost + cover_lower_bound(inst, masks, by_elem, uncovered) >= *best_cost - 1e-15 * best_cost.abs().max(1.0) {
        return;
    }
    // Branch on the uncovered element with fewest useful sets.
    let mut pick = usize::MAX;
    let mut fewest = usize::MAX;
    let mut rest = uncovered;
    while rest != 0 {
        let e = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        if by_elem[e].len() < fewest {
            fewest = by_elem[e].len();
            pick = e;
        }
    }
    for &s in &by_elem[pick] {
        cur.push(s);
        cover_search(
            inst,
            masks,
            by_elem,
            full,
            covered | masks[s],
            cost + inst.costs[s],
            cur,
            best,
            best_cost,
        );
        cur.pop();
    }
}

#[derive(PartialEq)]
struct Cand {
    ratio: f64,
    idx: usize,
    gain: usize,
}
impl Eq for Cand {}
impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on ratio, then index.
        other
            .ratio
            .total_cmp(&self.ratio)
            .then(other.idx.cmp(&self.idx))
    }
}
impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy weighted set cover: repeatedly take the set of least cost per newly
/// covered element (lazy evaluation, ties by index).
pub fn greedy_set_cover(inst: &CoverInstance) -> Result<Vec<usize>> {
    inst.check_coverable()?;
    let mut covered = vec![false; inst.elements];
    let mut left = inst.elements;
    let mut heap = BinaryHeap::new();
    for (i, s) in inst.sets.iter().enumerate() {
        if !s.is_empty() {
            heap.push(Cand {
                ratio: inst.costs[i] / s.len() as f64,
                idx: i,
                gain: s.len(),
            });
        }
    }
    let mut chosen = Vec::new();
    while left > 0 {
        let c = heap
            .pop()
            .ok_or_else(|| Error::Infeasible("greedy cover ran out of sets".into()))?;
        let gain = inst.sets[c.idx].iter().filter(|&&e| !covered[e]).count();
        if gain == 0 {
            continue;
        }
        if gain != c.gain {
            heap.push(Cand {
                ratio: inst.costs[c.idx] / gain as f64,
                idx: c.idx,
                gain,
            });
            continue;
        }
        for &e in &inst.sets[c.idx] {
            if !covered[e] {
                covered[e] = true;
                left -= 1;
            }
        }
        chosen.push(c.idx);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Optimal value of the fractional cover LP
/// `min sum c_i cost_i  s.t.  sum_{i : e in S_i} c_i >= 1,  c >= 0`.
/// Returns the value and the weights `c_i`.
pub fn fractional_cover(inst: &CoverInstance) -> Result<(f64, Vec<f64>)> {
    inst.check_coverable()?;
    if inst.elements == 0 {
        return Ok((0.0, vec![0.0; inst.sets.len()]));
    }
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = inst
        .costs
        .iter()
        .map(|&c| p.add_var(c, (0.0, f64::INFINITY)))
        .collect();
    let mut rows: Vec<Vec<(minilp::Variable, f64)>> = vec![Vec::new(); inst.elements];
    for (i, s) in inst.sets.iter().enumerate() {
        for &e in s {
            rows[e].push((vars[i], 1.0));
        }
    }
    for row in rows {
        p.add_constraint(&row[..], ComparisonOp::Ge, 1.0);
    }
    let sol = p
        .solve()
        .map_err(|e| Error::Infeasible(format!("fractional cover LP: {e}")))?;
    let c = vars.iter().map(|&v| sol[v]).collect();
    Ok((sol.objective(), c))
}

/// Fewest sets whose union has mass strictly above `target` (exact search).
pub fn exact_partial_cover(sets: &[Vec<usize>], mass: &[f64], target: f64) -> Result<Option<Vec<usize>>> {
    if mass.len() > COVER_LIMIT {
        return Err(Error::ExactCap {
            size: mass.len(),
            cap: COVER_LIMIT,
        });
    }
    let masks: Vec<u64> = sets
        .iter()
        .map(|s| s.iter().fold(0u64, |m, &e| m | (1u64 << e)))
        .collect();
    let mass_of = |m: u64| -> f64 {
        let mut s = 0.0;
        let mut r = m;
        while r != 0 {
            let e = r.trailing_zeros() as usize;
            r &= r - 1;
            s += mass[e];
        }
        s
    };
    let all = masks.iter().fold(0u64, |a, &m| a | m);
    if mass_of(all) <= target {
        return Ok(None);
    }
    for count in 1..=sets.len() {
        let mut cur = Vec::new();
        if partial_search(&masks, &mass_of, target, count, 0, 0, &mut cur) {
            return Ok(Some(cur));
        }
    }
    Ok(None)
}

fn partial_search(
    masks: &[u64],
    mass_of: &dyn Fn(u64) -> f64,
    target: f64,
    left: usize,
    start: usize,
    covered: u64,
    cur: &mut Vec<usize>,
) -> bool {
    if mass_of(covered) > target {
        return true;
    }
    if left == 0 {
        return false;
    }
    // Bound: the `left` largest marginal gains.
    let mut gains: Vec<f64> = masks[start..]
        .iter()
        .map(|&m| mass_of(m & !covered))
        .collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    let possible: f64 = gains.iter().take(left).sum();
    if mass_of(covered) + possible <= target {
        return false;
    }
    for i in start..masks.len() {
        if masks[i] & !covered == 0 {
            continue;
        }
        cur.push(i);
        if partial_search(masks, mass_of, target, left - 1, i + 1, covered | masks[i], cur) {
            return true;
        }
        cur.pop();
    }
    false
}

/// Greedy partial cover: add the set with the largest uncovered mass until the
/// covered mass exceeds `target`. Returns `None` if the sets cannot reach it.
pub fn greedy_partial_cover(sets: &[Vec<usize>], mass: &[f64], target: f64) -> Option<Vec<usize>> {
    let mut covered = vec![false; mass.len()];
    let mut total = 0.0;
    let mut chosen = Vec::new();
    // Lazy greedy on marginal mass.
    let mut heap: BinaryHeap<(OrdF, std::cmp::Reverse<usize>)> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| (OrdF(s.iter().map(|&e| mass[e]).sum()), std::cmp::Reverse(i)))
        .collect();
    while total <= target {
        let (OrdF(g), std::cmp::Reverse(i)) = heap.pop()?;
        let fresh: f64 = sets[i].iter().filter(|&&e| !covered[e]).map(|&e| mass[e]).sum();
        if fresh <= 0.0 {
            continue;
        }
        if fresh < g {
            heap.push((OrdF(fresh), std::cmp::Reverse(i)));
            continue;
        }
        for &e in &sets[i] {
            if !covered[e] {
                covered[e] = true;
                total += mass[e];
            }
        }
        chosen.push(i);
    }
    Some(chosen)
}

#[derive(PartialEq, Clone, Copy, Debug)]
struct OrdF(f64);
impl Eq for OrdF {}
impl PartialOrd for OrdF {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<u128> {
        let mut adj = vec![0u128; n];
        for &(a, b) in edges {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        adj
    }

    fn brute_clique(adj: &[u128], w: &[f64]) -> f64 {
        let n = adj.len();
        let mut best: f64 = 0.0;
        for m in 0u32..(1 << n) {
            let ok = (0..n).all(|i| {
                m >> i & 1 == 0 || (0..n).all(|j| j == i || m >> j & 1 == 0 || adj[i] >> j & 1 == 1)
            });
            if ok {
                best = best.max((0..n).filter(|&i| m >> i & 1 == 1).map(|i| w[i]).sum());
            }
        }
        best
    }

    #[test]
    fn clique_on_cycle() {
        let adj = adjacency(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        assert_eq!(max_clique(&adj).unwrap().len(), 2);
        let adj = adjacency(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]);
        assert_eq!(max_clique(&adj).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn odd_cover_fractional_beats_integral() {
        // Three elements, three sets each covering two: integral 2, fractional 1.5.
        let inst = CoverInstance {
            elements: 3,
            sets: vec![vec![0, 1], vec![1, 2], vec![0, 2]],
            costs: vec![1.0; 3],
        };
        let exact = exact_set_cover(&inst).unwrap();
        assert_eq!(inst.cost_of(&exact), 2.0);
        let (v, c) = fractional_cover(&inst).unwrap();
        assert!((v - 1.5).abs() < 1e-9);
        assert!(c.iter().all(|&x| (x - 0.5).abs() < 1e-9));
    }

    #[test]
    fn partial_cover_counts() {
        let sets: Vec<Vec<usize>> = (0..8).map(|i| vec![i]).collect();
        let mass = vec![0.125; 8];
        assert_eq!(exact_partial_cover(&sets, &mass, 0.5).unwrap().unwrap().len(), 5);
        assert_eq!(exact_partial_cover(&sets, &mass, 0.45).unwrap().unwrap().len(), 4);
        assert_eq!(greedy_partial_cover(&sets, &mass, 0.5).unwrap().len(), 5);
        assert!(exact_partial_cover(&sets, &mass, 1.0).unwrap().is_none());
    }

    proptest! {
        #[test]
        fn clique_matches_brute_force(n in 1usize..9, bits in any::<u64>(), ws in proptest::collection::vec(0.1f64..3.0, 9)) {
            let mut edges = Vec::new();
            let mut b = 0;
            for i in 0..n { for j in i+1..n { if bits >> (b % 64) & 1 == 1 { edges.push((i,j)); } b += 1; } }
            let adj = adjacency(n, &edges);
            let w = &ws[..n];
            let c = max_weight_clique(&adj, w).unwrap();
            let got: f64 = c.iter().map(|&i| w[i]).sum();
            prop_assert!((got - brute_clique(&adj, w)).abs() < 1e-9);
        }

        #[test]
        fn exact_cover_matches_brute_force(
            n in 1usize..7,
            raw in proptest::collection::vec((any::<u8>(), 0.1f64..5.0), 1..8),
        ) {
            let mut sets: Vec<Vec<usize>> = raw.iter().map(|(m, _)| (0..n).filter(|e| m >> e & 1 == 1).collect()).collect();
            let mut costs: Vec<f64> = raw.iter().map(|&(_, c)| c).collect();
            for e in 0..n { sets.push(vec![e]); costs.push(10.0); }
            let inst = CoverInstance { elements: n, sets, costs };
            let exact = inst.cost_of(&exact_set_cover(&inst).unwrap());
            let mut best = f64::INFINITY;
            let m = inst.sets.len();
            for pick in 0u32..(1 << m) {
                let mut cov = vec![false; n];
                for i in 0..m { if pick >> i & 1 == 1 { for &e in &inst.sets[i] { cov[e] = true; } } }
                if cov.iter().all(|&b| b) {
                    best = best.min((0..m).filter(|i| pick >> i & 1 == 1).map(|i| inst.costs[i]).sum());
                }
            }
            prop_assert!((exact - best).abs() < 1e-9);
            let greedy = inst.cost_of(&greedy_set_cover(&inst).unwrap());
            prop_assert!(greedy >= exact - 1e-9);
            let (lp, _) = fractional_cover(&inst).unwrap();
            prop_assert!(lp <= exact + 1e-7);
        }
    }
}
