//! Held–Karp 1-tree potentials, α-nearness and candidate lists on the
//! transformed (2n-node) graph.
//!
//! The special node of the 1-tree is the depot's original node `d`. Every
//! fixed pair `(i, i+n)` is forced into the tree, so the spanning tree over
//! the remaining nodes is computed on n super-nodes: one per fixed pair, plus
//! the lone dummy `d+n`. The special node takes its fixed edge and its
//! cheapest other edge.

use std::fmt::Write as _;

use crate::instance::{Cost, TransformedInstance, INFINITE_COST};
use crate::tour::Node;

pub const MAX_CANDIDATES: usize = 6;
pub const DEFAULT_ASCENT_ITERATIONS: usize = 1000;

/// Minimum 1-tree under potentials `pi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneTree {
    pub pi: Vec<Cost>,
    /// Σ over tree edges of `cost + π_u + π_v`, minus `2 Σ π`.
    pub lower_bound: Cost,
    pub edges: Vec<(Node, Node)>,
    pub degree: Vec<u32>,
    /// Ascent steps taken.
    pub iterations: usize,
    special: Node,
    /// π-cost of the special node's non-fixed edge.
    special_edge: Cost,
    /// Contracted tree: `(neighbor super-node, π-cost)` lists.
    adjacency: Vec<Vec<(usize, Cost)>>,
}

impl OneTree {
    pub fn is_tour(&self) -> bool {
        self.degree.iter().all(|&d| d == 2)
    }

    pub fn special(&self) -> Node {
        self.special
    }

    fn pi_cost(&self, inst: &TransformedInstance, u: Node, v: Node) -> Cost {
        inst.cost(u, v) + self.pi[u] + self.pi[v]
    }

    /// `α(v, w)` for every addable `w`: the increase in 1-tree length when
    /// the edge `(v, w)` is forced in.
    pub fn alpha_row(&self, inst: &TransformedInstance, v: Node) -> Vec<(Node, Cost)> {
        let n = inst.n();
        let candidates = (0..n).filter(|&j| j != v % n).map(|j| if inst.is_original(v) { j + n } else { j });
        if v == self.special {
            return candidates.map(|w| (w, self.pi_cost(inst, v, w) - self.special_edge)).collect();
        }
        let beta = self.path_maxima(v % n);
        candidates
            .map(|w| {
                let a = if w == self.special {
                    self.pi_cost(inst, v, w) - self.special_edge
                } else {
                    self.pi_cost(inst, v, w) - beta[w % n]
                };
                (w, a)
            })
            .collect()
    }

    /// Largest edge on the contracted tree path from `root` to every super-node.
    fn path_maxima(&self, root: usize) -> Vec<Cost> {
        let mut beta = vec![Cost::MIN; self.adjacency.len()];
        let mut stack = vec![(root, usize::MAX)];
        while let Some((u, parent)) = stack.pop() {
            for &(w, c) in &self.adjacency[u] {
                if w != parent {
                    beta[w] = if u == root { c } else { beta[u].max(c) };
                    stack.push((w, u));
                }
            }
        }
        beta
    }
}

/// π-cost of the cheapest realisation of the super-edge between stops `p`
/// and `q`, with its transformed endpoints.
#[inline]
fn super_edge(inst: &TransformedInstance, pi: &[Cost], p: usize, q: usize) -> (Cost, Node, Node) {
    let base = inst.base();
    let n = base.n();
    let d = base.depot();
    let out = |p: usize, q: usize| base.travel(p, q) + pi[p] + pi[q + n];
    if p == d {
        (out(q, d), q, d + n)
    } else if q == d {
        (out(p, d), p, d + n)
    } else {
        let a = out(p, q);
        let b = out(q, p);
        if a <= b {
            (a, p, q + n)
        } else {
            (b, q, p + n)
        }
    }
}

/// Buffers for repeated spanning-tree computations.
#[derive(Default)]
struct PrimScratch {
    rest: Vec<usize>,
    cost: Vec<Cost>,
    from: Vec<usize>,
    /// `(parent, child)` stop pairs in insertion order.
    links: Vec<(usize, usize)>,
}

/// Prim on the contracted graph; the tree lands in `scratch.links`.
fn spanning_tree(inst: &TransformedInstance, pi: &[Cost], scratch: &mut PrimScratch) {
    let n = inst.n();
    let d = inst.base().depot();
    let PrimScratch { rest, cost, from, links } = scratch;
    links.clear();
    // Parallel arrays over the stops not yet in the tree: stop, cheapest
    // connection so far and where it comes from.
    rest.clear();
    rest.extend((0..n).filter(|&q| q != d));
    let pi_out = &pi[..n];
    let pi_in = &pi[n..];
    // Start at the depot: its lone dummy only takes arcs into d, and no
    // later step has to special-case it.
    let into_d = inst.arrivals(d);
    cost.clear();
    cost.extend(rest.iter().map(|&q| into_d[q] + pi_out[q] + pi_in[d]));
    from.clear();
    from.resize(rest.len(), d);
    let mut arg = argmin(rest, cost);
    while !rest.is_empty() {
        let q = rest.swap_remove(arg);
        cost.swap_remove(arg);
        let p = from.swap_remove(arg);
        links.push((p, q));
        let current = q;
        let (pc, pcn) = (pi_out[current], pi_in[current]);
        let row = inst.departures(current);
        let col = inst.arrivals(current);
        arg = 0;
        let mut arg_key = (INFINITE_COST, usize::MAX);
        for (k, ((&q, c), f)) in rest.iter().zip(cost.iter_mut()).zip(from.iter_mut()).enumerate() {
            // super_edge(current, q).0, spelled out for the hot loop
            let e = (row[q] + pc + pi_in[q]).min(col[q] + pi_out[q] + pcn);
            if e < *c {
                *c = e;
                *f = current;
            }
            if (*c, q) < arg_key {
                arg_key = (*c, q);
                arg = k;
            }
        }
    }
}

fn argmin(rest: &[usize], cost: &[Cost]) -> usize {
    (0..rest.len()).min_by_key(|&k| (cost[k], rest[k])).unwrap_or(0)
}

/// The special node's cheapest non-fixed edge `(j + n, π-cost)`.
fn special_edge(inst: &TransformedInstance, pi: &[Cost]) -> Option<(Node, Cost)> {
    let n = inst.n();
    let d = inst.base().depot();
    (0..n)
        .filter(|&j| j != d)
        .map(|j| (inst.cost(d, j + n) + pi[d] + pi[j + n], j))
        .min()
        .map(|(c, j)| (j + n, c))
}

/// Lower bound of the 1-tree in `links`; fills `degree`.
fn bound_and_degree(inst: &TransformedInstance, pi: &[Cost], links: &[(usize, usize)], degree: &mut [u32]) -> Cost {
    let d = inst.base().depot();
    degree.fill(1);
    // the fixed edges cost 0 and add up to Σπ, which the -2Σπ halves
    let mut total: Cost = -pi.iter().sum::<Cost>();
    for &(p, q) in links {
        let (c, u, v) = super_edge(inst, pi, p, q);
        degree[u] += 1;
        degree[v] += 1;
        total += c;
    }
    if let Some((w, c)) = special_edge(inst, pi) {
        degree[d] += 1;
        degree[w] += 1;
        total += c;
    }
    total
}

/// Minimum 1-tree with potentials `pi` (Prim on the contracted graph).
pub fn minimum_one_tree(inst: &TransformedInstance, pi: &[Cost]) -> OneTree {
    let n = inst.n();
    let size = inst.size();
    let d = inst.base().depot();
    let mut scratch = PrimScratch::default();
    spanning_tree(inst, pi, &mut scratch);
    let mut degree = vec![0u32; size];
    let lower_bound = bound_and_degree(inst, pi, &scratch.links, &mut degree);

    let mut edges: Vec<(Node, Node)> = (0..n).map(|i| (i, i + n)).collect();
    let mut adjacency = vec![Vec::new(); n];
    for &(p, q) in &scratch.links {
        let (c, u, v) = super_edge(inst, pi, p, q);
        edges.push((u.min(v), u.max(v)));
        adjacency[p].push((q, c));
        adjacency[q].push((p, c));
    }
    let special = special_edge(inst, pi);
    if let Some((w, _)) = special {
        edges.push((d.min(w), d.max(w)));
    }
    OneTree {
        pi: pi.to_vec(),
        lower_bound,
        edges,
        degree,
        iterations: 0,
        special: d,
        special_edge: special.map_or(0, |(_, c)| c),
        adjacency,
    }
}

/// Greedy nearest-neighbour tour length from the depot, used to size the
/// first ascent step.
fn nearest_neighbor_length(inst: &TransformedInstance) -> Cost {
    let base = inst.base();
    let n = base.n();
    let mut visited = vec![false; n];
    let mut at = base.depot();
    visited[at] = true;
    let mut len = 0;
    for _ in 1..n {
        let next = (0..n).filter(|&j| !visited[j]).min_by_key(|&j| (base.travel(at, j), j)).expect("unvisited");
        len += base.travel(at, next);
        visited[next] = true;
        at = next;
    }
    len + base.travel(at, base.depot())
}

/// Subgradient ascent on the potentials. Returns the 1-tree of the best
/// lower bound seen; `iterations = 0` gives the plain minimum 1-tree.
pub fn held_karp_ascent(inst: &TransformedInstance, iterations: usize) -> OneTree {
    let size = inst.size();
    let mut pi = vec![0; size];
    let first = minimum_one_tree(inst, &pi);
    if inst.n() < 3 || iterations == 0 || first.is_tour() {
        return first;
    }
    let mut degree = first.degree.clone();
    let mut best_bound = first.lower_bound;
    let mut best_pi = pi.clone();
    let mut scratch = PrimScratch::default();
    let upper = nearest_neighbor_length(inst);
    let norm: Cost = degree.iter().map(|&g| (g as Cost - 2).pow(2)).sum();
    let mut step = ((upper - first.lower_bound) / norm.max(1)).max(1);
    let initial_period = size;
    let mut period = initial_period;
    let mut steps = 0;
    let mut idle_periods = 0;
    'ascent: while step > 0 && steps < iterations {
        let mut improved = false;
        let mut k = 0;
        while k < period {
            if steps >= iterations {
                break 'ascent;
            }
            for v in 0..size {
                pi[v] += step * (degree[v] as Cost - 2);
            }
            spanning_tree(inst, &pi, &mut scratch);
            let bound = bound_and_degree(inst, &pi, &scratch.links, &mut degree);
            steps += 1;
            k += 1;
            if bound > best_bound {
                best_bound = bound;
                best_pi.copy_from_slice(&pi);
                improved = true;
                if degree.iter().all(|&g| g == 2) {
                    break 'ascent;
                }
                if k == period {
                    period *= 2;
                }
            }
        }
        if improved {
            idle_periods = 0;
        } else {
            idle_periods += 1;
            step /= 2;
            if idle_periods >= 3 {
                break;
            }
        }
    }
    let mut best = minimum_one_tree(inst, &best_pi);
    best.iterations = steps;
    best
}

/// Static per-node candidate lists, ordered by (α, cost, node index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateGraph {
    cand: Vec<Vec<(Node, Cost)>>,
}

impl CandidateGraph {
    pub fn from_lists(cand: Vec<Vec<(Node, Cost)>>) -> CandidateGraph {
        CandidateGraph { cand }
    }

    pub fn candidates(&self, v: Node) -> impl ExactSizeIterator<Item = Node> + '_ {
        self.cand[v].iter().map(|&(w, _)| w)
    }

    pub fn with_alpha(&self, v: Node) -> &[(Node, Cost)] {
        &self.cand[v]
    }

    pub fn len(&self) -> usize {
        self.cand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cand.is_empty()
    }

    /// One `v: w(α) w(α) ...` line per node, 0-based transformed indices.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (v, list) in self.cand.iter().enumerate() {
            let _ = write!(out, "{v}:");
            for (w, a) in list {
                let _ = write!(out, " {w}({a})");
            }
            out.push('\n');
        }
        out
    }
}

pub fn build_candidates(inst: &TransformedInstance, tree: &OneTree, max_candidates: usize) -> CandidateGraph {
    let cand = (0..inst.size())
        .map(|v| {
            let mut row = tree.alpha_row(inst, v);
            row.sort_by_key(|&(w, a)| (a, inst.cost(v, w), w));
            row.truncate(max_candidates);
            row
        })
        .collect();
    CandidateGraph { cand }
}

/// Ascent followed by candidate selection.
pub fn generate(inst: &TransformedInstance, iterations: usize, max_candidates: usize) -> (OneTree, CandidateGraph) {
    let tree = held_karp_ascent(inst, iterations);
    log::debug!("ascent: {} steps, lower bound {}", tree.iterations, tree.lower_bound);
    let cand = build_candidates(inst, &tree, max_candidates);
    (tree, cand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{atsp_to_tsp, RoutingInstance};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(n: usize, seed: u64, max: Cost) -> TransformedInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0 } else { rng.random_range(1..=max) }).collect())
            .collect();
        atsp_to_tsp(&RoutingInstance::new("r", m, vec![]).unwrap())
    }

    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let up = parent[x];
            parent[x] = r;
            x = up;
        }
        r
    }

    /// Minimum 1-tree π-cost by Kruskal on the explicit 2n-node graph, with
    /// every fixed edge forced and optionally one more edge forced.
    fn kruskal_one_tree(inst: &TransformedInstance, pi: &[Cost], forced: Option<(Node, Node)>) -> Cost {
        let size = inst.size();
        let s = inst.base().depot();
        let dc = |u: Node, v: Node| inst.cost(u, v) + pi[u] + pi[v];
        let mut parent: Vec<usize> = (0..size).collect();
        let mut total = dc(s, inst.partner(s));
        let mut special_second = None;
        let mut forced_list: Vec<(Node, Node)> = inst.fixed_edges().filter(|&(a, b)| a != s && b != s).collect();
        if let Some((a, b)) = forced {
            if a == s || b == s {
                if !inst.is_fixed(a, b) {
                    special_second = Some(dc(a, b));
                }
            } else if !inst.is_fixed(a, b) {
                forced_list.push((a, b));
            }
        }
        for (a, b) in forced_list {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            assert_ne!(ra, rb);
            parent[ra] = rb;
            total += dc(a, b);
        }
        let mut all: Vec<(Cost, Node, Node)> = Vec::new();
        for u in 0..size {
            for v in u + 1..size {
                if u != s && v != s && inst.cost(u, v) < INFINITE_COST && !inst.is_fixed(u, v) {
                    all.push((dc(u, v), u, v));
                }
            }
        }
        all.sort();
        for (c, u, v) in all {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
                total += c;
            }
        }
        total
            + special_second.unwrap_or_else(|| {
                (0..size)
                    .filter(|&w| w != s && !inst.is_fixed(s, w) && inst.cost(s, w) < INFINITE_COST)
                    .map(|w| dc(s, w))
                    .min()
                    .unwrap()
            })
    }

    fn tree_cost(tree: &OneTree) -> Cost {
        tree.lower_bound + 2 * tree.pi.iter().sum::<Cost>()
    }

    fn brute_force_optimum(inst: &TransformedInstance) -> Cost {
        let base = inst.base();
        let n = base.n();
        let mut rest: Vec<usize> = (1..n).collect();
        let mut best = Cost::MAX;
        permute(&mut rest, 0, &mut |p| {
            let mut order = vec![0];
            order.extend_from_slice(p);
            best = best.min(base.tour_length(&order));
        });
        best
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn zero_iterations_is_plain_minimum_one_tree() {
        let inst = random_instance(7, 3, 100);
        let tree = held_karp_ascent(&inst, 0);
        assert!(tree.pi.iter().all(|&p| p == 0));
        assert_eq!(tree.lower_bound, kruskal_one_tree(&inst, &tree.pi, None));
        assert_eq!(tree.edges.len(), inst.size());
        assert_eq!(tree.iterations, 0);
    }

    #[test]
    fn cyclic_instance_is_a_fixed_point() {
        // i → i+1 costs 1, everything else 50: the 1-tree is the cycle.
        let n = 6;
        let m = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0 } else if j == (i + 1) % n { 1 } else { 50 }).collect())
            .collect();
        let inst = atsp_to_tsp(&RoutingInstance::new("c", m, vec![]).unwrap());
        let tree = held_karp_ascent(&inst, 1000);
        assert!(tree.is_tour());
        assert_eq!(tree.lower_bound, 6);
        assert_eq!(tree.iterations, 0);
    }

    #[test]
    fn two_stops() {
        let inst = atsp_to_tsp(&RoutingInstance::new("2", vec![vec![0, 5], vec![7, 0]], vec![]).unwrap());
        let tree = held_karp_ascent(&inst, 10);
        assert_eq!(tree.lower_bound, 12);
        assert!(tree.is_tour());
    }

    #[test]
    fn alpha_matches_forced_edge_oracle() {
        for seed in 0..20 {
            let inst = random_instance(6, seed, 60);
            for iters in [0, 50] {
                let tree = held_karp_ascent(&inst, iters);
                let base = kruskal_one_tree(&inst, &tree.pi, None);
                assert_eq!(base, tree_cost(&tree), "seed {seed}");
                for v in 0..inst.size() {
                    for (w, a) in tree.alpha_row(&inst, v) {
                        let forced = kruskal_one_tree(&inst, &tree.pi, Some((v, w)));
                        assert_eq!(a, forced - base, "seed {seed} iters {iters} edge ({v},{w})");
                    }
                }
            }
        }
    }

    #[test]
    fn tree_edges_have_zero_alpha_and_are_candidates() {
        let inst = random_instance(9, 11, 200);
        let (tree, cand) = generate(&inst, 200, MAX_CANDIDATES);
        for &(u, v) in &tree.edges {
            if inst.is_fixed(u, v) {
                continue;
            }
            let a = tree.alpha_row(&inst, u).into_iter().find(|&(w, _)| w == v).unwrap().1;
            assert_eq!(a, 0);
            assert!(cand.candidates(u).any(|w| w == v) || cand.candidates(v).any(|w| w == u));
        }
    }

    #[test]
    fn small_instance_lists_every_neighbor() {
        let inst = random_instance(4, 5, 30);
        let (_, cand) = generate(&inst, 100, 6);
        for v in 0..inst.size() {
            let list: Vec<(Node, Cost)> = cand.with_alpha(v).to_vec();
            assert_eq!(list.len(), 3);
            for &(w, _) in &list {
                assert_eq!(inst.is_original(v), !inst.is_original(w));
                assert_ne!(w, inst.partner(v));
            }
            let keys: Vec<_> = list.iter().map(|&(w, a)| (a, inst.cost(v, w), w)).collect();
            assert!(keys.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn dump_format() {
        let inst = random_instance(3, 1, 10);
        let (_, cand) = generate(&inst, 0, 6);
        let text = cand.dump();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("0: "));
        assert!(text.contains('('));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lower_bound_never_exceeds_optimum(seed in 0u64..10_000, n in 3usize..7) {
            let inst = random_instance(n, seed, 500);
            let opt = brute_force_optimum(&inst);
            for iters in [0, 10, 1000] {
                let tree = held_karp_ascent(&inst, iters);
                prop_assert!(tree.lower_bound <= opt);
                prop_assert_eq!(tree.edges.len(), inst.size());
            }
        }

        #[test]
        fn ascent_never_lowers_the_bound(seed in 0u64..10_000, n in 3usize..12) {
            let inst = random_instance(n, seed, 1000);
            let plain = held_karp_ascent(&inst, 0).lower_bound;
            let tree = held_karp_ascent(&inst, 300);
            prop_assert!(tree.lower_bound >= plain);
            for v in 0..inst.size() {
                prop_assert!(tree.alpha_row(&inst, v).iter().all(|&(_, a)| a >= 0));
            }
        }
    }
}
