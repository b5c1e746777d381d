//! Multi-level clusters induced by zone-id symbols, and the constraints
//! derived from their sorted order.

use std::collections::{BTreeMap, BTreeSet};

use crate::penalty::{Constraint, Level, Unit, ZoneGroup, GROUP_WEIGHT, PATH_WEIGHT};

use super::route::TrainingRoute;
use super::zone_id::{Symbol, SymbolSet, ZoneId};

/// Symbol selections `S ⊃ T ⊃ U` for super, super-super and top clusters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Hierarchy {
    pub s: SymbolSet,
    pub t: SymbolSet,
    pub u: SymbolSet,
}

impl Default for Hierarchy {
    /// `S = {Γ, x, Δ}`, `T = {Γ, x}`, `U = {Γ}`.
    fn default() -> Self {
        Hierarchy {
            s: SymbolSet::of(&[Symbol::Gamma, Symbol::X, Symbol::Delta]),
            t: SymbolSet::of(&[Symbol::Gamma, Symbol::X]),
            u: SymbolSet::of(&[Symbol::Gamma]),
        }
    }
}

impl Hierarchy {
    /// All 24 nested chains, ordered by the symbol order Γ, x, y, Δ (the
    /// first chain is `{Γ,x,y} ⊃ {Γ,x} ⊃ {Γ}`).
    pub fn chains() -> Vec<Hierarchy> {
        fn subsets(of: SymbolSet, k: usize) -> Vec<SymbolSet> {
            let syms: Vec<Symbol> = of.symbols().collect();
            let mut out = Vec::new();
            for mask in 0u32..1 << syms.len() {
                if mask.count_ones() as usize == k {
                    let pick: Vec<Symbol> = (0..syms.len()).filter(|i| mask & (1 << i) != 0).map(|i| syms[i]).collect();
                    out.push(pick);
                }
            }
            out.sort();
            out.into_iter().map(|p| SymbolSet::of(&p)).collect()
        }
        let mut out = Vec::with_capacity(24);
        for s in subsets(SymbolSet::FULL, 3) {
            for t in subsets(s, 2) {
                for u in subsets(t, 1) {
                    out.push(Hierarchy { s, t, u });
                }
            }
        }
        out
    }

    /// The symbol outside `S`.
    pub fn unique(&self) -> Symbol {
        SymbolSet::FULL.minus(self.s).symbols().next().expect("|S| = 3")
    }

    pub fn symbols(&self, level: Level) -> SymbolSet {
        match level {
            Level::Zone => SymbolSet::FULL,
            Level::Super => self.s,
            Level::SuperSuper => self.t,
            Level::Top => self.u,
        }
    }

    /// Unit of `zone` at `level`. Zones whose id does not parse stay
    /// singletons at every level.
    pub fn unit(&self, level: Level, zone: &str) -> String {
        match ZoneId::parse(zone) {
            Ok(id) if level != Level::Zone => id.group_name(self.symbols(level)),
            _ => zone.to_string(),
        }
    }

    /// Super and super-super groups covering the parseable zones.
    pub fn groups<'a>(&self, zones: impl IntoIterator<Item = &'a String>) -> Vec<ZoneGroup> {
        let ids: Vec<ZoneId> = zones.into_iter().filter_map(|z| ZoneId::parse(z).ok()).collect();
        let mut out = Vec::new();
        for level in [Level::Super, Level::SuperSuper] {
            let mut by: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for id in &ids {
                by.entry(id.group_name(self.symbols(level))).or_default().push(id.raw.clone());
            }
            out.extend(by.into_iter().map(|(name, mut zones)| {
                zones.sort();
                ZoneGroup { level, name, zones }
            }));
        }
        out
    }
}

impl std::fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "S={} T={} U={}", self.s, self.t, self.u)
    }
}

/// Block transitions of each level's partition (super, super-super, top)
/// along the zone sequences of `routes`. Routes with unzoned stops are
/// skipped.
pub fn crossings(h: &Hierarchy, routes: &[TrainingRoute]) -> [u64; 3] {
    let mut out = [0; 3];
    for r in routes {
        let Ok(seq) = r.zone_sequence() else { continue };
        let ids: Vec<Option<ZoneId>> = seq.iter().map(|z| ZoneId::parse(z).ok()).collect();
        for (k, level) in [Level::Super, Level::SuperSuper, Level::Top].into_iter().enumerate() {
            let set = h.symbols(level);
            let key = |i: usize| match &ids[i] {
                Some(id) => Ok(id.key(set)),
                None => Err(&seq[i]),
            };
            out[k] += (1..seq.len()).filter(|&i| key(i) != key(i - 1)).count() as u64;
        }
    }
    out
}

/// The chain with the fewest weighted crossings; ties keep the earliest
/// chain of [`Hierarchy::chains`].
pub fn select_hierarchy(routes: &[TrainingRoute], level_weights: [u64; 3]) -> Hierarchy {
    let mut best = None;
    for h in Hierarchy::chains() {
        let c = crossings(&h, routes);
        let score: u64 = c.iter().zip(level_weights).map(|(c, w)| c * w).sum();
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, h));
        }
    }
    best.expect("24 chains").1
}

/// Neighbor constraints and disjunctions that favour the sorted or reverse
/// sorted order of zones within super clusters, of super clusters within
/// super-super clusters and of super-super clusters within top clusters,
/// plus the zone-to-zone links between adjacent super clusters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SortedConstraints {
    pub singles: Vec<Constraint>,
    pub disjunctions: Vec<Vec<Constraint>>,
}

pub fn sorted_cluster_constraints<'a>(zones: impl IntoIterator<Item = &'a String>, h: &Hierarchy) -> SortedConstraints {
    let ids: Vec<ZoneId> = zones.into_iter().filter_map(|z| ZoneId::parse(z).ok()).collect();
    let mut out = SortedConstraints::default();
    let neighbor = |level, a: &str, b: &str| Constraint::neighbor(Unit::at(level, a), Unit::at(level, b), GROUP_WEIGHT);

    // zones per super cluster, super clusters per super-super cluster, ...
    let mut supers: BTreeMap<[u32; 4], Vec<&ZoneId>> = BTreeMap::new();
    for id in &ids {
        supers.entry(id.key(h.s)).or_default().push(id);
    }
    for members in supers.values_mut() {
        members.sort();
        for w in members.windows(2) {
            out.singles.push(neighbor(Level::Zone, &w[0].raw, &w[1].raw));
        }
    }
    let mut super_supers: BTreeMap<[u32; 4], Vec<[u32; 4]>> = BTreeMap::new();
    for (key, members) in &supers {
        super_supers.entry(members[0].key(h.t)).or_default().push(*key);
    }
    fn ends<'z>(c: &[&'z ZoneId]) -> Vec<&'z ZoneId> {
        let mut e = vec![c[0], c[c.len() - 1]];
        e.dedup();
        e
    }
    let u = h.unique();
    for keys in super_supers.values() {
        for w in keys.windows(2) {
            let (g, hh) = (&supers[&w[0]], &supers[&w[1]]);
            out.singles.push(neighbor(
                Level::Super,
                &g[0].group_name(h.s),
                &hh[0].group_name(h.s),
            ));
            let mut matches = Vec::new();
            for a in ends(g) {
                for b in ends(hh) {
                    if a.value(u) == b.value(u) {
                        matches.push(neighbor(Level::Zone, &a.raw, &b.raw));
                    }
                }
            }
            match matches.len() {
                0 => {}
                1 => out.singles.push(matches.pop().expect("one match")),
                _ => out.disjunctions.push(matches),
            }
        }
    }
    let mut tops: BTreeMap<[u32; 4], Vec<[u32; 4]>> = BTreeMap::new();
    for (key, members) in &super_supers {
        tops.entry(supers[&members[0]][0].key(h.u)).or_default().push(*key);
    }
    for keys in tops.values() {
        for w in keys.windows(2) {
            let name = |k: &[u32; 4]| supers[&super_supers[k][0]][0].group_name(h.t);
            out.singles.push(neighbor(Level::SuperSuper, &name(&w[0]), &name(&w[1])));
        }
    }
    out
}

/// Super-cluster blocks of a route's driven sequence.
pub fn super_blocks(route: &TrainingRoute, h: &Hierarchy) -> Vec<String> {
    let mut blocks: Vec<String> = Vec::new();
    for z in route.zone_walk().unwrap_or_default() {
        let u = h.unit(Level::Super, z);
        if blocks.last() != Some(&u) {
            blocks.push(u);
        }
    }
    blocks
}

/// Path constraints between super clusters that `q` drives through in one
/// contiguous block each, back to back, and that `units` (the target's
/// super clusters) also contains.
pub fn super_cluster_path_constraints(units: &BTreeSet<String>, q: &TrainingRoute, h: &Hierarchy) -> Vec<Constraint> {
    let blocks = super_blocks(q, h);
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    for b in &blocks {
        *count.entry(b.as_str()).or_default() += 1;
    }
    let ok = |c: &String| count[c.as_str()] == 1 && units.contains(c);
    blocks
        .windows(2)
        .filter(|w| ok(&w[0]) && ok(&w[1]))
        .map(|w| Constraint::path(Unit::at(Level::Super, &w[0]), Unit::at(Level::Super, &w[1]), PATH_WEIGHT))
        .collect()
}
