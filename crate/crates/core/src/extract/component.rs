//! Component paths of driven routes and the precedence constraints they imply.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::penalty::{Constraint, Level, Unit};

/// Strongly connected components of a unit-transition digraph, in path order.
pub type ComponentPath = Vec<BTreeSet<String>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrecedenceMode {
    /// Consecutive components of the pruned path only.
    ComponentPath,
    /// Every ordered pair of components of the pruned path.
    Transitive,
}

/// Builds the component path of a walk over units (one entry per stop, the
/// depot left out). Repeated entries are harmless.
pub fn component_path(walk: &[&str]) -> Result<ComponentPath> {
    if walk.is_empty() {
        return Err(Error::InvalidArgument("walk visits no zone".into()));
    }
    let arcs: Vec<(&str, &str)> = walk.windows(2).filter(|w| w[0] != w[1]).map(|w| (w[0], w[1])).collect();
    condense(walk, &arcs)
}

/// Contracts the strongly connected components of a digraph on `units` and
/// returns them in path order. Fails when the condensation is not a path.
pub fn condense(units: &[&str], arcs: &[(&str, &str)]) -> Result<ComponentPath> {
    let mut g: DiGraph<&str, ()> = DiGraph::new();
    let mut node = BTreeMap::new();
    for &z in units.iter().chain(arcs.iter().flat_map(|(a, b)| [a, b])) {
        node.entry(z).or_insert_with(|| g.add_node(z));
    }
    for &(a, b) in arcs {
        let (a, b) = (node[a], node[b]);
        if a != b && g.find_edge(a, b).is_none() {
            g.add_edge(a, b, ());
        }
    }
    // tarjan_scc lists components in reverse topological order
    let mut sccs = tarjan_scc(&g);
    sccs.reverse();
    let mut comp_of = vec![0; g.node_count()];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            comp_of[v.index()] = c;
        }
    }
    // The condensation is a path iff every arc joins consecutive components
    // and every consecutive pair is joined.
    let mut linked = vec![false; sccs.len().saturating_sub(1)];
    for e in g.raw_edges() {
        let (ca, cb) = (comp_of[e.source().index()], comp_of[e.target().index()]);
        if ca == cb {
            continue;
        }
        if cb != ca + 1 {
            return Err(Error::InvalidArgument(format!(
                "zone graph condenses to a DAG that is not a path ({} → {})",
                g[e.source()],
                g[e.target()]
            )));
        }
        linked[ca] = true;
    }
    if let Some(c) = linked.iter().position(|&l| !l) {
        return Err(Error::InvalidArgument(format!("components {c} and {} are not joined", c + 1)));
    }
    Ok(sccs
        .into_iter()
        .map(|c| c.into_iter().map(|v| g[v].to_string()).collect())
        .collect())
}

/// Precedence constraints from a reference path restricted to `units`.
/// Components without any unit of `units` are dropped first.
pub fn precedence_constraints(
    units: &BTreeSet<String>,
    path: &[BTreeSet<String>],
    mode: PrecedenceMode,
    level: Level,
    weight: u64,
) -> Vec<Constraint> {
    let pruned: Vec<Vec<&String>> = path
        .iter()
        .map(|c| c.iter().filter(|z| units.contains(*z)).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();
    let mut out = Vec::new();
    for i in 0..pruned.len() {
        let last = match mode {
            PrecedenceMode::ComponentPath => (i + 2).min(pruned.len()),
            PrecedenceMode::Transitive => pruned.len(),
        };
        for later in &pruned[i + 1..last] {
            for a in &pruned[i] {
                for b in later {
                    out.push(Constraint::precedence(Unit::at(level, *a), Unit::at(level, *b), weight));
                }
            }
        }
    }
    out
}
