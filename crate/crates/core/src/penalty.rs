//! Constraint sets and the single-pass penalty evaluator.
//!
//! Zone-level constraints relate *units*: zones, or groups of zones at one of
//! three coarser levels. Each level partitions the stops; the depot is always
//! its own unit at position 0. `visit(u)` is the block index of the last
//! block of `u` when the stop sequence is cut wherever the unit changes.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Cost, RoutingInstance, TravelTransform};
use crate::tour::Tour;

pub const NEIGHBOR_WEIGHT: u64 = 1;
pub const PATH_WEIGHT: u64 = 1000;
pub const PRECEDENCE_WEIGHT: u64 = 1;
/// Weight of every constraint above the zone level.
pub const GROUP_WEIGHT: u64 = 1000;
pub const DEFAULT_CLUSTER_RHO: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Zone = 0,
    Super = 1,
    SuperSuper = 2,
    Top = 3,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Zone, Level::Super, Level::SuperSuper, Level::Top];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Unit {
    pub level: Level,
    pub name: String,
}

impl Unit {
    pub fn zone(name: impl Into<String>) -> Unit {
        Unit {
            level: Level::Zone,
            name: name.into(),
        }
    }

    pub fn at(level: Level, name: impl Into<String>) -> Unit {
        Unit {
            level,
            name: name.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `|visit(a) - visit(b)| = 1`
    Neighbor,
    /// `visit(a) = visit(b) - 1`
    Path,
    /// `visit(a) < visit(b)`
    Precedence,
}

impl ConstraintKind {
    pub fn satisfied(self, va: usize, vb: usize) -> bool {
        match self {
            ConstraintKind::Neighbor => va.abs_diff(vb) == 1,
            ConstraintKind::Path => va + 1 == vb,
            ConstraintKind::Precedence => va < vb,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub a: Unit,
    pub b: Unit,
    pub weight: u64,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, a: Unit, b: Unit, weight: u64) -> Constraint {
        Constraint { kind, a, b, weight }
    }

    pub fn neighbor(a: Unit, b: Unit, weight: u64) -> Constraint {
        Self::new(ConstraintKind::Neighbor, a, b, weight)
    }

    pub fn path(a: Unit, b: Unit, weight: u64) -> Constraint {
        Self::new(ConstraintKind::Path, a, b, weight)
    }

    pub fn precedence(a: Unit, b: Unit, weight: u64) -> Constraint {
        Self::new(ConstraintKind::Precedence, a, b, weight)
    }
}

/// A named group of zones at one of the coarser levels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneGroup {
    pub level: Level,
    pub name: String,
    pub zones: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub singles: Vec<Constraint>,
    pub disjunctions: Vec<Vec<Constraint>>,
    pub groups: Vec<ZoneGroup>,
    /// ρ for the zone crossing penalty `ρ · (crossing(T) − z)`.
    pub cluster_penalty: Option<u64>,
    /// ρ for the same crossing term at every level that has groups.
    pub group_cluster_penalty: Option<u64>,
    pub time_windows: bool,
    /// Constraints encoded in the travel times instead of the penalty.
    pub transforms: Vec<TravelTransform>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.singles.is_empty()
            && self.disjunctions.is_empty()
            && self.cluster_penalty.is_none()
            && self.group_cluster_penalty.is_none()
            && !self.time_windows
            && self.transforms.is_empty()
    }

    pub fn constraint_count(&self) -> usize {
        self.singles.len() + self.disjunctions.len()
    }

    pub fn all_constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.singles.iter().chain(self.disjunctions.iter().flatten())
    }
}

/// Per-kind penalty totals for one tour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltyBreakdown {
    pub neighbor: u64,
    pub path: u64,
    pub precedence: u64,
    pub disjunction: u64,
    pub cluster: u64,
    pub lateness: u64,
}

impl PenaltyBreakdown {
    pub fn total(&self) -> u64 {
        self.neighbor + self.path + self.precedence + self.disjunction + self.cluster + self.lateness
    }
}

/// Block positions of the units of one level along a tour.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisitTable {
    /// `visit[u]`; unit 0 is the depot. Units not on the tour stay 0.
    pub visit: Vec<usize>,
    /// Number of blocks per unit.
    pub blocks: Vec<usize>,
    /// Number of blocks, the depot's excluded.
    pub crossing: usize,
}

/// Stop → unit map for one level. Unit 0 is the depot's.
#[derive(Clone, Debug)]
struct LevelMap {
    stop_unit: Vec<u32>,
    units: usize,
    /// Units other than the depot that own at least one stop.
    occupied: usize,
}

#[derive(Clone, Copy, Debug)]
struct Compiled {
    kind: ConstraintKind,
    level: usize,
    a: u32,
    b: u32,
    weight: u64,
}

impl Compiled {
    fn penalty(&self, visits: &[Vec<usize>]) -> u64 {
        let v = &visits[self.level];
        if self.kind.satisfied(v[self.a as usize], v[self.b as usize]) {
            0
        } else {
            self.weight
        }
    }
}

#[derive(Clone, Debug)]
struct TimeData {
    earliest: Vec<Cost>,
    latest: Vec<Cost>,
    service: Vec<Cost>,
    travel: RoutingInstance,
}

/// A constraint set resolved against one instance.
#[derive(Clone, Debug)]
pub struct PenaltyModel {
    depot: usize,
    /// Indexed by `Level::index()`; `None` when no constraint needs the level.
    levels: Vec<Option<LevelMap>>,
    /// Indices of the levels that are `Some`.
    active: Vec<usize>,
    /// `stop_units[s * active.len() + k]`: unit of stop `s` on `active[k]`.
    stop_units: Vec<u32>,
    singles: Vec<Compiled>,
    disjunctions: Vec<Vec<Compiled>>,
    /// (level, ρ) pairs with a crossing term.
    cluster_terms: Vec<(usize, u64)>,
    time: Option<TimeData>,
    unit_names: Vec<Vec<String>>,
}

impl PenaltyModel {
    /// Resolves unit names against `instance` (which supplies zones, time
    /// windows, service times and the travel times used for lateness).
    pub fn new(instance: &RoutingInstance, cs: &ConstraintSet) -> Result<PenaltyModel> {
        let n = instance.n();
        let depot = instance.depot();
        let mut needed = [false; 4];
        for c in cs.all_constraints() {
            if c.a.level != c.b.level {
                return Err(Error::InvalidArgument(format!(
                    "constraint relates units on different levels: {} / {}",
                    c.a.name, c.b.name
                )));
            }
            if c.a == c.b {
                return Err(Error::InvalidArgument(format!("constraint relates {} to itself", c.a.name)));
            }
            needed[c.a.level.index()] = true;
        }
        let mut cluster_terms = Vec::new();
        if let Some(rho) = cs.cluster_penalty {
            needed[0] = true;
            cluster_terms.push((0, rho));
        }
        if let Some(rho) = cs.group_cluster_penalty {
            for lvl in 1..4 {
                if cs.groups.iter().any(|g| g.level.index() == lvl) {
                    needed[lvl] = true;
                    cluster_terms.push((lvl, rho));
                }
            }
        }

        // zone name per stop
        let mut stop_zone: Vec<Option<&str>> = vec![None; n];
        for s in instance.stops() {
            if !s.is_depot {
                stop_zone[s.id] = s.zone.as_deref();
            }
        }
        let zones = instance.zones();
        // group lookup per level: zone → group name
        let mut group_of: Vec<HashMap<&str, &str>> = vec![HashMap::new(); 4];
        for g in &cs.groups {
            if g.level == Level::Zone {
                return Err(Error::InvalidArgument(format!("group {} declared at the zone level", g.name)));
            }
            for z in &g.zones {
                group_of[g.level.index()].insert(z.as_str(), g.name.as_str());
            }
        }

        let mut levels = vec![None, None, None, None];
        let mut unit_names: Vec<Vec<String>> = vec![Vec::new(); 4];
        let mut unit_index: Vec<BTreeMap<String, u32>> = vec![BTreeMap::new(); 4];
        for lvl in 0..4 {
            if !needed[lvl] {
                continue;
            }
            let mut names = vec!["<depot>".to_string()];
            let mut index = BTreeMap::new();
            // Declared units first so that constraints on stop-less units resolve.
            let mut declared: Vec<String> = if lvl == 0 {
                zones.iter().cloned().collect()
            } else {
                cs.groups.iter().filter(|g| g.level.index() == lvl).map(|g| g.name.clone()).collect()
            };
            if lvl > 0 {
                // Zones without a group at this level act as singleton units.
                for z in &zones {
                    if !group_of[lvl].contains_key(z.as_str()) {
                        declared.push(z.clone());
                    }
                }
            }
            for name in declared {
                if !index.contains_key(&name) {
                    index.insert(name.clone(), names.len() as u32);
                    names.push(name);
                }
            }
            let mut stop_unit = vec![0u32; n];
            let mut occupied = vec![false; names.len()];
            for i in 0..n {
                if i == depot {
                    continue;
                }
                let z = stop_zone[i].ok_or(Error::MissingZone(i))?;
                let name = if lvl == 0 { z } else { group_of[lvl].get(z).copied().unwrap_or(z) };
                let u = index[name];
                stop_unit[i] = u;
                occupied[u as usize] = true;
            }
            levels[lvl] = Some(LevelMap {
                stop_unit,
                units: names.len(),
                occupied: occupied.iter().skip(1).filter(|&&o| o).count(),
            });
            unit_names[lvl] = names;
            unit_index[lvl] = index;
        }

        let compile = |c: &Constraint| -> Result<Compiled> {
            let lvl = c.a.level.index();
            let look = |u: &Unit| {
                unit_index[lvl]
                    .get(&u.name)
                    .copied()
                    .ok_or_else(|| Error::UnknownZone(u.name.clone()))
            };
            Ok(Compiled {
                kind: c.kind,
                level: lvl,
                a: look(&c.a)?,
                b: look(&c.b)?,
                weight: c.weight,
            })
        };
        let singles = cs.singles.iter().map(compile).collect::<Result<Vec<_>>>()?;
        let disjunctions = cs
            .disjunctions
            .iter()
            .map(|d| d.iter().map(compile).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;

        let time = if cs.time_windows && instance.has_time_windows() {
            let mut earliest = vec![Cost::MIN / 4; n];
            let mut latest = vec![Cost::MAX / 4; n];
            let mut service = vec![0; n];
            for s in instance.stops() {
                if let Some(tw) = s.time_window {
                    earliest[s.id] = tw.earliest;
                    latest[s.id] = tw.latest;
                }
                service[s.id] = s.service_time;
            }
            Some(TimeData {
                earliest,
                latest,
                service,
                travel: instance.clone(),
            })
        } else {
            None
        };

        let active: Vec<usize> = (0..levels.len()).filter(|&l| levels[l].is_some()).collect();
        let stop_units = (0..n)
            .flat_map(|s| active.iter().map(|&l| levels[l].as_ref().map_or(0, |m| m.stop_unit[s])).collect::<Vec<_>>())
            .collect();
        Ok(PenaltyModel {
            depot,
            levels,
            active,
            stop_units,
            singles,
            disjunctions,
            cluster_terms,
            time,
            unit_names,
        })
    }

    /// True when every tour has penalty 0.
    pub fn is_trivial(&self) -> bool {
        self.singles.is_empty() && self.disjunctions.is_empty() && self.cluster_terms.is_empty() && self.time.is_none()
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn unit_names(&self, level: Level) -> &[String] {
        &self.unit_names[level.index()]
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            visits: self
                .levels
                .iter()
                .map(|l| l.as_ref().map_or(Vec::new(), |l| vec![0; l.units]))
                .collect(),
        }
    }

    /// Penalty of the tour, reading only the successor links.
    pub fn evaluate(&self, tour: &Tour, scratch: &mut Scratch) -> PenaltyBreakdown {
        if self.is_trivial() {
            return PenaltyBreakdown::default();
        }
        self.evaluate_sequence(tour.stop_iter(self.depot), scratch)
    }

    /// Penalty of a stop sequence that starts at the depot.
    pub fn evaluate_stops(&self, stops: &[usize], scratch: &mut Scratch) -> PenaltyBreakdown {
        if self.is_trivial() {
            return PenaltyBreakdown::default();
        }
        debug_assert_eq!(stops.first(), Some(&self.depot));
        self.evaluate_sequence(stops.iter().copied(), scratch)
    }

    pub fn evaluate_alloc(&self, tour: &Tour) -> PenaltyBreakdown {
        self.evaluate(tour, &mut self.scratch())
    }

    fn evaluate_sequence(&self, stops: impl Iterator<Item = usize>, scratch: &mut Scratch) -> PenaltyBreakdown {
        let mut out = PenaltyBreakdown::default();
        for &lvl in &self.active {
            scratch.visits[lvl].fill(0);
        }
        let la = self.active.len();
        let mut current = [u32::MAX; 4];
        let mut block = [0usize; 4];
        let tw = self.time.as_ref();
        let mut clock: Cost = 0;
        let mut prev: Option<usize> = None;
        let mut late: u64 = 0;
        for s in stops {
            let units = &self.stop_units[s * la..(s + 1) * la];
            for (k, &u) in units.iter().enumerate() {
                if u != current[k] {
                    if current[k] != u32::MAX {
                        block[k] += 1;
                    }
                    current[k] = u;
                    scratch.visits[self.active[k]][u as usize] = block[k];
                }
            }
            if let Some(t) = tw {
                if let Some(p) = prev {
                    clock = clock.max(t.earliest[p]) + t.service[p] + t.travel.travel(p, s);
                    late += (clock - t.latest[s]).max(0) as u64;
                }
                prev = Some(s);
            }
        }
        if let (Some(t), Some(p)) = (tw, prev) {
            // return to the depot
            let d = self.depot;
            clock = clock.max(t.earliest[p]) + t.service[p] + t.travel.travel(p, d);
            late += (clock - t.latest[d]).max(0) as u64;
            out.lateness = late;
        }

        for c in &self.singles {
            let p = c.penalty(&scratch.visits);
            match c.kind {
                ConstraintKind::Neighbor => out.neighbor += p,
                ConstraintKind::Path => out.path += p,
                ConstraintKind::Precedence => out.precedence += p,
            }
        }
        for d in &self.disjunctions {
            out.disjunction += d.iter().map(|c| c.penalty(&scratch.visits)).min().unwrap_or(0);
        }
        for &(lvl, rho) in &self.cluster_terms {
            if let (Some(l), Some(k)) = (&self.levels[lvl], self.active.iter().position(|&a| a == lvl)) {
                out.cluster += rho * (block[k] as u64).saturating_sub(l.occupied as u64);
            }
        }
        out
    }

    /// Visit table of one level for a stop sequence from the depot.
    pub fn visit_table(&self, level: Level, stops: &[usize]) -> Option<VisitTable> {
        let l = self.levels[level.index()].as_ref()?;
        let mut visit = vec![0; l.units];
        let mut blocks = vec![0; l.units];
        let mut current = u32::MAX;
        let mut block = 0;
        for &s in stops {
            let u = l.stop_unit[s];
            if u != current {
                if current != u32::MAX {
                    block += 1;
                }
                current = u;
                visit[u as usize] = block;
                blocks[u as usize] += 1;
            }
        }
        Some(VisitTable {
            visit,
            blocks,
            crossing: block,
        })
    }
}

/// Reusable buffers for [`PenaltyModel::evaluate`].
#[derive(Clone, Debug)]
pub struct Scratch {
    visits: Vec<Vec<usize>>,
}

/// Visit positions of zones along `stops` (depot first). Units are named by
/// zone id.
pub fn visit_positions(instance: &RoutingInstance, stops: &[usize]) -> Result<(BTreeMap<String, usize>, usize)> {
    let cs = ConstraintSet {
        cluster_penalty: Some(0),
        ..Default::default()
    };
    let model = PenaltyModel::new(instance, &cs)?;
    let table = model.visit_table(Level::Zone, stops).expect("zone level compiled");
    let names = model.unit_names(Level::Zone);
    let visits = names
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(u, _)| table.blocks[*u] > 0)
        .map(|(u, name)| (name.clone(), table.visit[u]))
        .collect();
    Ok((visits, table.crossing))
}

/// Convenience wrapper: penalty of a tour under `cs`.
pub fn evaluate_pen(tour: &Tour, cs: &ConstraintSet, instance: &RoutingInstance) -> Result<PenaltyBreakdown> {
    let model = PenaltyModel::new(instance, cs)?;
    Ok(model.evaluate_alloc(tour))
}

/// Late seconds of the closed tour `stops` (depot first), departing at 0.
pub fn time_window_lateness(instance: &RoutingInstance, stops: &[usize]) -> Cost {
    let cs = ConstraintSet {
        time_windows: true,
        ..Default::default()
    };
    let model = PenaltyModel::new(instance, &cs).expect("time-window model needs no zones");
    model.evaluate_stops(stops, &mut model.scratch()).lateness as Cost
}
