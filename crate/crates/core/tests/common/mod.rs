//! Oracles and generators shared by the integration and acceptance tests.
//! Nothing here calls into the penalty evaluator or the 1-tree code it
//! checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use penroute::instance::{Cost, RoutingInstance, Stop, TimeWindow, TransformedInstance, INFINITE_COST};
use penroute::penalty::{Constraint, ConstraintKind, ConstraintSet, Level, PenaltyBreakdown, Unit, ZoneGroup};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const DEPOT: &str = "\u{0}depot";

/// Unit of `stop` at `level`, by name.
fn unit_name(inst: &RoutingInstance, cs: &ConstraintSet, level: Level, stop: usize) -> String {
    if stop == inst.depot() {
        return DEPOT.to_string();
    }
    let zone = inst.stops()[stop].zone.clone().expect("zoned stop");
    if level == Level::Zone {
        return zone;
    }
    cs.groups
        .iter()
        .find(|g| g.level == level && g.zones.contains(&zone))
        .map_or(zone, |g| g.name.clone())
}

/// Block sequence of one level: consecutive equal units merged.
fn blocks(inst: &RoutingInstance, cs: &ConstraintSet, level: Level, stops: &[usize]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for &s in stops {
        let u = unit_name(inst, cs, level, s);
        if out.last() != Some(&u) {
            out.push(u);
        }
    }
    out
}

fn visit(blocks: &[String], unit: &str) -> usize {
    // last block of the unit; absent units sit with the depot at 0
    blocks.iter().rposition(|b| b == unit).unwrap_or(0)
}

fn violated(c: &Constraint, inst: &RoutingInstance, cs: &ConstraintSet, stops: &[usize]) -> bool {
    let b = blocks(inst, cs, c.a.level, stops);
    let (va, vb) = (visit(&b, &c.a.name) as i64, visit(&b, &c.b.name) as i64);
    let ok = match c.kind {
        ConstraintKind::Neighbor => (va - vb).abs() == 1,
        ConstraintKind::Path => vb - va == 1,
        ConstraintKind::Precedence => va < vb,
    };
    !ok
}

/// Straightforward per-constraint evaluation of a closed tour given as
/// stops from the depot.
pub fn naive_penalty(inst: &RoutingInstance, cs: &ConstraintSet, stops: &[usize]) -> PenaltyBreakdown {
    let mut out = PenaltyBreakdown::default();
    for c in &cs.singles {
        if violated(c, inst, cs, stops) {
            match c.kind {
                ConstraintKind::Neighbor => out.neighbor += c.weight,
                ConstraintKind::Path => out.path += c.weight,
                ConstraintKind::Precedence => out.precedence += c.weight,
            }
        }
    }
    for d in &cs.disjunctions {
        out.disjunction += d
            .iter()
            .map(|c| if violated(c, inst, cs, stops) { c.weight } else { 0 })
            .min()
            .unwrap_or(0);
    }
    let excess = |level: Level| {
        let b = blocks(inst, cs, level, stops);
        let distinct: BTreeSet<&String> = b.iter().filter(|u| *u != DEPOT).collect();
        (b.len() - 1 - distinct.len()) as u64
    };
    if let Some(rho) = cs.cluster_penalty {
        out.cluster += rho * excess(Level::Zone);
    }
    if let Some(rho) = cs.group_cluster_penalty {
        for level in [Level::Super, Level::SuperSuper, Level::Top] {
            if cs.groups.iter().any(|g| g.level == level) {
                out.cluster += rho * excess(level);
            }
        }
    }
    if cs.time_windows {
        out.lateness = naive_lateness(inst, stops) as u64;
    }
    out
}

/// Leave the depot at 0; wait for a window to open; service; drive.
pub fn naive_lateness(inst: &RoutingInstance, stops: &[usize]) -> Cost {
    let n = stops.len();
    let st = inst.stops();
    let mut t: Cost = 0;
    let mut late = 0;
    for k in 0..n {
        let p = stops[k];
        let s = stops[(k + 1) % n];
        if let Some(w) = st[p].time_window {
            t = t.max(w.earliest);
        }
        t += st[p].service_time + inst.travel(p, s);
        if let Some(w) = st[s].time_window {
            late += (t - w.latest).max(0);
        }
    }
    late
}

/// A small zoned instance with groups, time windows and a random mix of
/// constraints of every kind.
pub fn random_constrained_case(rng: &mut ChaCha8Rng) -> (RoutingInstance, ConstraintSet) {
    let n = rng.random_range(6..=14);
    let z = rng.random_range(2..=5usize);
    let zones: Vec<String> = (0..z).map(|i| format!("Z{i}")).collect();
    let mut stops = Vec::new();
    for i in 0..n {
        let mut s = Stop::new(i);
        if i == 0 {
            s.is_depot = true;
        } else {
            // the first z stops cover every zone
            s.zone = Some(zones[if i <= z { i - 1 } else { rng.random_range(0..z) }].clone());
            s.service_time = rng.random_range(0..60);
            if rng.random_bool(0.3) {
                let a = rng.random_range(0..2000);
                s.time_window = Some(TimeWindow {
                    earliest: a,
                    latest: a + rng.random_range(0..600),
                });
            }
        }
        stops.push(s);
    }
    let m = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0 } else { rng.random_range(1..300) }).collect())
        .collect();
    let inst = RoutingInstance::new("case", m, stops).unwrap();

    // super groups: a random split, one zone possibly left on its own
    let mut shuffled = zones.clone();
    shuffled.shuffle(rng);
    let cut = rng.random_range(1..=z);
    let mut groups = vec![ZoneGroup {
        level: Level::Super,
        name: "G0".into(),
        zones: shuffled[..cut].to_vec(),
    }];
    if cut + 1 < z {
        groups.push(ZoneGroup {
            level: Level::Super,
            name: "G1".into(),
            zones: shuffled[cut..z - 1].to_vec(),
        });
    }
    if rng.random_bool(0.5) {
        groups.push(ZoneGroup {
            level: Level::Top,
            name: "T0".into(),
            zones: zones.clone(),
        });
    }
    let mut super_units: Vec<String> = groups.iter().filter(|g| g.level == Level::Super).map(|g| g.name.clone()).collect();
    for zn in &zones {
        if !groups.iter().any(|g| g.level == Level::Super && g.zones.contains(zn)) {
            super_units.push(zn.clone());
        }
    }

    let random_constraint = |rng: &mut ChaCha8Rng| -> Option<Constraint> {
        let (level, pool) = if rng.random_bool(0.7) || super_units.len() < 2 {
            (Level::Zone, &zones)
        } else {
            (Level::Super, &super_units)
        };
        let a = pool[rng.random_range(0..pool.len())].clone();
        let b = pool[rng.random_range(0..pool.len())].clone();
        if a == b {
            return None;
        }
        let kind = [ConstraintKind::Neighbor, ConstraintKind::Path, ConstraintKind::Precedence][rng.random_range(0..3)];
        let weight = [1, 1000][rng.random_range(0..2)];
        Some(Constraint::new(kind, Unit::at(level, a), Unit::at(level, b), weight))
    };
    let singles = (0..rng.random_range(0..12)).filter_map(|_| random_constraint(rng)).collect();
    let disjunctions = (0..rng.random_range(0..4))
        .map(|_| (0..rng.random_range(1..4)).filter_map(|_| random_constraint(rng)).collect::<Vec<_>>())
        .filter(|d| !d.is_empty())
        .collect();
    let cs = ConstraintSet {
        singles,
        disjunctions,
        groups,
        cluster_penalty: rng.random_bool(0.5).then_some(1000),
        group_cluster_penalty: rng.random_bool(0.5).then_some(7),
        time_windows: rng.random_bool(0.7),
        transforms: vec![],
    };
    (inst, cs)
}

/// Random stop order starting at the depot.
pub fn random_stops(inst: &RoutingInstance, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let d = inst.depot();
    let mut rest: Vec<usize> = (0..inst.n()).filter(|&i| i != d).collect();
    rest.shuffle(rng);
    std::iter::once(d).chain(rest).collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Minimum spanning tree weight over all transformed nodes except
/// `special`, with every fixed pair not touching it and `forced` included.
fn forced_tree(inst: &TransformedInstance, pi: &[Cost], special: usize, forced: Option<(usize, usize)>) -> Cost {
    let size = inst.size();
    let pc = |u: usize, v: usize| inst.cost(u, v) + pi[u] + pi[v];
    let mut parent: Vec<usize> = (0..size).collect();
    let mut total = 0;
    let mut take = |u: usize, v: usize, parent: &mut Vec<usize>| {
        let (a, b) = (find(parent, u), find(parent, v));
        if a != b {
            parent[a] = b;
            total += pc(u, v);
            true
        } else {
            false
        }
    };
    let n = inst.n();
    for i in 0..n {
        if i != special && i + n != special {
            assert!(take(i, i + n, &mut parent));
        }
    }
    if let Some((u, v)) = forced {
        assert!(take(u, v, &mut parent));
    }
    let mut edges: Vec<(Cost, usize, usize)> = Vec::new();
    for u in 0..size {
        for v in u + 1..size {
            if u != special && v != special && inst.cost(u, v) < INFINITE_COST {
                edges.push((pc(u, v), u, v));
            }
        }
    }
    edges.sort();
    for (_, u, v) in edges {
        take(u, v, &mut parent);
    }
    total
}

/// α(v, w) by definition: the 1-tree with (v, w) forced in, minus the
/// minimum 1-tree. The special node keeps its fixed edge and one more.
pub fn forced_alpha(inst: &TransformedInstance, pi: &[Cost], special: usize, v: usize, w: usize) -> Cost {
    let pc = |u: usize, x: usize| inst.cost(u, x) + pi[u] + pi[x];
    let partner = inst.partner(special);
    let best_other = (0..inst.size())
        .filter(|&x| x != special && x != partner && inst.cost(special, x) < INFINITE_COST)
        .map(|x| pc(special, x))
        .min()
        .unwrap();
    if v == special || w == special {
        let x = if v == special { w } else { v };
        return pc(special, x) - best_other;
    }
    forced_tree(inst, pi, special, Some((v, w))) - forced_tree(inst, pi, special, None)
}

/// Zones in first-visit block order.
pub fn zone_order(inst: &RoutingInstance, stops: &[usize]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for &s in stops {
        if let Some(z) = &inst.stops()[s].zone {
            if out.last() != Some(z) {
                out.push(z.clone());
            }
        }
    }
    out
}

/// Distinct units per name, for quick summaries.
pub fn count_by<T: Ord + Clone>(items: impl IntoIterator<Item = T>) -> BTreeMap<T, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i).or_insert(0) += 1;
    }
    m
}
