//! Routing instances, the node-splitting ATSP→TSP transformation and the
//! big-M travel-time transformations.
//!
//! Travel times are integer seconds. An instance with `n` stops becomes a
//! symmetric instance over `2n` nodes: node `i < n` is the original stop,
//! node `i + n` is its dummy ("incoming") twin. The pair `(i, i + n)` is a
//! fixed zero-cost edge, and the arc `j → i` becomes the undirected edge
//! `(j, i + n)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Travel time or tour length in seconds.
pub type Cost = i64;

/// Cost of an edge that does not exist in the transformed graph.
pub const INFINITE_COST: Cost = i64::MAX / 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub earliest: Cost,
    pub latest: Cost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub id: usize,
    pub zone: Option<String>,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    pub time_window: Option<TimeWindow>,
    pub service_time: Cost,
    pub is_depot: bool,
}

impl Stop {
    pub fn new(id: usize) -> Self {
        Stop {
            id,
            zone: None,
            lat: None,
            lon: None,
            time_window: None,
            service_time: 0,
            is_depot: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoutingInstance {
    pub name: String,
    /// Depot/station identifier used to pair targets with training routes.
    pub station: Option<String>,
    n: usize,
    travel: Vec<Cost>,
    stops: Vec<Stop>,
    depot: usize,
}

impl RoutingInstance {
    /// Builds an instance from a full `n × n` matrix. Exactly one stop must be
    /// flagged as the depot; if none is, stop 0 becomes the depot.
    pub fn new(name: impl Into<String>, travel: Vec<Vec<Cost>>, mut stops: Vec<Stop>) -> Result<Self> {
        let n = travel.len();
        if n == 0 {
            return Err(Error::InvalidInstance("empty travel matrix".into()));
        }
        for (i, row) in travel.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                    what: "columns",
                });
            }
            if row[i] != 0 {
                return Err(Error::InvalidInstance(format!("travel[{i}][{i}] must be 0")));
            }
            if let Some(j) = row.iter().position(|&c| c < 0) {
                return Err(Error::InvalidInstance(format!("travel[{i}][{j}] is negative")));
            }
        }
        if stops.is_empty() {
            stops = (0..n).map(Stop::new).collect();
        }
        if stops.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: stops.len(),
                what: "stops",
            });
        }
        let depots: Vec<usize> = stops.iter().filter(|s| s.is_depot).map(|s| s.id).collect();
        let depot = match depots.as_slice() {
            [] => {
                stops[0].is_depot = true;
                0
            }
            [d] => *d,
            _ => return Err(Error::InvalidInstance("more than one depot".into())),
        };
        for (i, s) in stops.iter().enumerate() {
            if s.id != i {
                return Err(Error::InvalidInstance(format!("stop at position {i} has id {}", s.id)));
            }
            if let Some(tw) = s.time_window {
                if tw.earliest > tw.latest {
                    return Err(Error::InvalidInstance(format!("stop {i} has an empty time window")));
                }
            }
        }
        Ok(RoutingInstance {
            name: name.into(),
            station: None,
            n,
            travel: travel.into_iter().flatten().collect(),
            stops,
            depot,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn travel(&self, from: usize, to: usize) -> Cost {
        self.travel[from * self.n + to]
    }

    pub fn depot(&self) -> usize {
        self.depot
    }

    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn stops_mut(&mut self) -> &mut [Stop] {
        &mut self.stops
    }

    pub fn matrix(&self) -> Vec<Vec<Cost>> {
        self.travel.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn max_entry(&self) -> Cost {
        self.travel.iter().copied().max().unwrap_or(0)
    }

    /// Length of the closed tour visiting `order` (any rotation).
    pub fn tour_length(&self, order: &[usize]) -> Cost {
        if order.is_empty() {
            return 0;
        }
        let closing = self.travel(order[order.len() - 1], order[0]);
        order.windows(2).map(|w| self.travel(w[0], w[1])).sum::<Cost>() + closing
    }

    /// Distinct zone ids over non-depot stops, sorted.
    pub fn zones(&self) -> BTreeSet<String> {
        self.stops
            .iter()
            .filter(|s| !s.is_depot)
            .filter_map(|s| s.zone.clone())
            .collect()
    }

    /// Members of every zone, keyed by zone id. Unzoned non-depot stops are an
    /// error.
    pub fn zone_members(&self) -> Result<BTreeMap<String, Vec<usize>>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for s in &self.stops {
            if s.is_depot {
                continue;
            }
            let z = s.zone.as_ref().ok_or(Error::MissingZone(s.id))?;
            out.entry(z.clone()).or_default().push(s.id);
        }
        Ok(out)
    }

    pub fn has_time_windows(&self) -> bool {
        self.stops.iter().any(|s| s.time_window.is_some())
    }

    pub(crate) fn set_travel(&mut self, from: usize, to: usize, value: Cost) {
        self.travel[from * self.n + to] = value;
    }
}

/// The ATSP instance seen as a symmetric TSP over `2n` nodes.
#[derive(Clone, Debug)]
pub struct TransformedInstance {
    base: RoutingInstance,
    /// `arrivals[j * n + i] = travel(i, j)`
    arrivals: Vec<Cost>,
}

impl TransformedInstance {
    pub fn new(base: RoutingInstance) -> Self {
        let n = base.n;
        let mut arrivals = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                arrivals[j * n + i] = base.travel[i * n + j];
            }
        }
        TransformedInstance { base, arrivals }
    }

    pub fn base(&self) -> &RoutingInstance {
        &self.base
    }

    /// Row `i` of the travel matrix: times from `i`.
    #[inline]
    pub fn departures(&self, i: usize) -> &[Cost] {
        let n = self.base.n;
        &self.base.travel[i * n..(i + 1) * n]
    }

    /// Column `j` of the travel matrix: times into `j`.
    #[inline]
    pub fn arrivals(&self, j: usize) -> &[Cost] {
        let n = self.base.n;
        &self.arrivals[j * n..(j + 1) * n]
    }

    /// Number of original stops.
    #[inline]
    pub fn n(&self) -> usize {
        self.base.n
    }

    /// Number of transformed nodes (`2n`).
    #[inline]
    pub fn size(&self) -> usize {
        2 * self.base.n
    }

    #[inline]
    pub fn is_original(&self, v: usize) -> bool {
        v < self.base.n
    }

    /// The other endpoint of `v`'s fixed edge.
    #[inline]
    pub fn partner(&self, v: usize) -> usize {
        let n = self.base.n;
        if v < n {
            v + n
        } else {
            v - n
        }
    }

    #[inline]
    pub fn is_fixed(&self, u: usize, v: usize) -> bool {
        self.partner(u) == v
    }

    /// Symmetric edge cost. Fixed pairs cost 0; original–original and
    /// dummy–dummy pairs do not exist.
    #[inline]
    pub fn cost(&self, u: usize, v: usize) -> Cost {
        let n = self.base.n;
        match (u < n, v < n) {
            (true, false) => self.base.travel(u, v - n),
            (false, true) => self.base.travel(v, u - n),
            _ => INFINITE_COST,
        }
    }

    /// The fixed edges `(i, i + n)`.
    pub fn fixed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.base.n).map(move |i| (i, i + self.base.n))
    }

    /// Transformed node sequence (dummy before original) for a stop order.
    pub fn expand(&self, order: &[usize]) -> Vec<usize> {
        order.iter().flat_map(|&i| [i + self.base.n, i]).collect()
    }
}

/// Converts an instance to its `2n`-node symmetric form.
pub fn atsp_to_tsp(instance: &RoutingInstance) -> TransformedInstance {
    TransformedInstance::new(instance.clone())
}

/// A travel-time transformation that encodes a zone-level constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TravelTransform {
    /// Every arc between distinct zones (the depot is its own zone) costs M more.
    Cluster,
    /// Arcs crossing the boundary of `a ∪ b` cost M more.
    Neighbor(String, String),
    /// Neighbor transform plus M on every arc from `b` into `a`.
    Path(String, String),
}

/// `n · max_entry + 1`, large enough that no optimal tour pays an avoidable M.
pub fn default_big_m(instance: &RoutingInstance) -> Cost {
    instance.n() as Cost * instance.max_entry() + 1
}

/// Applies the transforms additively, each with the same constant `big_m`.
pub fn apply_big_m(instance: &RoutingInstance, transforms: &[TravelTransform], big_m: Cost) -> Result<RoutingInstance> {
    let mut out = instance.clone();
    if transforms.is_empty() {
        return Ok(out);
    }
    let n = instance.n();
    if big_m <= n as Cost * instance.max_entry() {
        return Err(Error::InvalidArgument(format!(
            "big M {big_m} does not exceed n * max entry = {}",
            n as Cost * instance.max_entry()
        )));
    }
    // Zone label per stop; the depot gets a label no zone can have.
    let mut label: Vec<Option<&str>> = Vec::with_capacity(n);
    for s in instance.stops() {
        if s.is_depot {
            label.push(None);
        } else {
            label.push(Some(s.zone.as_deref().ok_or(Error::MissingZone(s.id))?));
        }
    }
    let zones = instance.zones();
    let check = |z: &str| {
        if zones.contains(z) {
            Ok(())
        } else {
            Err(Error::UnknownZone(z.to_string()))
        }
    };
    for t in transforms {
        match t {
            TravelTransform::Cluster => {
                for i in 0..n {
                    for j in 0..n {
                        if i != j && label[i] != label[j] {
                            out.set_travel(i, j, out.travel(i, j) + big_m);
                        }
                    }
                }
            }
            TravelTransform::Neighbor(a, b) | TravelTransform::Path(a, b) => {
                check(a)?;
                check(b)?;
                let in_a = |i: usize| label[i] == Some(a.as_str());
                let in_b = |i: usize| label[i] == Some(b.as_str());
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let inside_i = in_a(i) || in_b(i);
                        let inside_j = in_a(j) || in_b(j);
                        let mut add = 0;
                        if inside_i != inside_j {
                            add += big_m;
                        }
                        if matches!(t, TravelTransform::Path(..)) && in_b(i) && in_a(j) {
                            add += big_m;
                        }
                        if add > 0 {
                            out.set_travel(i, j, out.travel(i, j) + add);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zoned(n: usize, zones: &[&str]) -> Vec<Stop> {
        (0..n)
            .map(|i| {
                let mut s = Stop::new(i);
                if i == 0 {
                    s.is_depot = true;
                } else {
                    s.zone = Some(zones[i - 1].to_string());
                }
                s
            })
            .collect()
    }

    #[test]
    fn two_stop_transform() {
        let inst = RoutingInstance::new("t", vec![vec![0, 5], vec![7, 0]], vec![]).unwrap();
        let t = atsp_to_tsp(&inst);
        assert_eq!(t.size(), 4);
        assert_eq!(t.cost(0, 3), 5);
        assert_eq!(t.cost(1, 2), 7);
        assert_eq!(t.cost(3, 0), 5);
        assert_eq!(t.cost(0, 2), 0);
        assert_eq!(t.cost(1, 3), 0);
        assert_eq!(t.cost(0, 1), INFINITE_COST);
        assert_eq!(t.cost(2, 3), INFINITE_COST);
        assert!(t.is_fixed(0, 2) && t.is_fixed(3, 1));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(RoutingInstance::new("x", vec![vec![0, 1], vec![1]], vec![]).is_err());
        assert!(RoutingInstance::new("x", vec![vec![1, 1], vec![1, 0]], vec![]).is_err());
        assert!(RoutingInstance::new("x", vec![vec![0, -1], vec![1, 0]], vec![]).is_err());
    }

    #[test]
    fn cluster_transform_four_stops() {
        // clusters {0,1} and {2,3}; the depot (stop 4) is its own cluster
        let travel = vec![
            vec![0, 1, 2, 3, 9],
            vec![1, 0, 4, 5, 9],
            vec![2, 4, 0, 6, 9],
            vec![3, 5, 6, 0, 9],
            vec![9, 9, 9, 9, 0],
        ];
        let mut stops: Vec<Stop> = (0..5).map(Stop::new).collect();
        for (i, z) in ["A", "A", "B", "B"].iter().enumerate() {
            stops[i].zone = Some(z.to_string());
        }
        stops[4].is_depot = true;
        let inst = RoutingInstance::new("c4", travel, stops).unwrap();
        let m = 1_000_000;
        let out = apply_big_m(&inst, &[TravelTransform::Cluster], m).unwrap();
        assert_eq!(out.travel(0, 2), 2 + m);
        assert_eq!(out.travel(0, 1), 1);
        assert_eq!(out.travel(2, 3), 6);
        assert_eq!(out.travel(4, 0), 9 + m);
    }

    #[test]
    fn path_transform_entries() {
        // depot 0, a = {1}, b = {2}, c = {3}
        let travel = vec![vec![0, 10, 10, 10], vec![10, 0, 10, 10], vec![10, 10, 0, 10], vec![10, 10, 10, 0]];
        let inst = RoutingInstance::new("p", travel, zoned(4, &["a", "b", "c"])).unwrap();
        let m = default_big_m(&inst);
        assert_eq!(m, 41);
        let path = TravelTransform::Path("a".into(), "b".into());
        let out = apply_big_m(&inst, &[path.clone()], m).unwrap();
        assert_eq!(out.travel(2, 1), 10 + m, "b→a gains M from the path rule only");
        assert_eq!(out.travel(1, 2), 10, "a→b untouched");
        assert_eq!(out.travel(1, 3), 10 + m, "leaving a∪b gains M");
        assert_eq!(out.travel(3, 2), 10 + m, "entering a∪b gains M");
        assert_eq!(out.travel(0, 3), 10, "outside a∪b untouched");

        let both = apply_big_m(&inst, &[TravelTransform::Cluster, path], m).unwrap();
        assert_eq!(both.travel(2, 1), 10 + 2 * m);
        assert_eq!(both.travel(1, 3), 10 + 2 * m);
        assert_eq!(both.travel(1, 2), 10 + m);
    }

    #[test]
    fn neighbor_transform_is_symmetric_in_boundary() {
        let travel = vec![vec![0, 3, 3, 3], vec![3, 0, 3, 3], vec![3, 3, 0, 3], vec![3, 3, 3, 0]];
        let inst = RoutingInstance::new("n", travel, zoned(4, &["a", "b", "c"])).unwrap();
        let out = apply_big_m(&inst, &[TravelTransform::Neighbor("a".into(), "b".into())], 100).unwrap();
        assert_eq!(out.travel(1, 2), 3);
        assert_eq!(out.travel(2, 1), 3);
        assert_eq!(out.travel(3, 1), 103);
        assert_eq!(out.travel(1, 3), 103);
    }

    #[test]
    fn empty_transform_list_is_identity() {
        let inst = RoutingInstance::new("e", vec![vec![0, 4], vec![9, 0]], vec![]).unwrap();
        assert_eq!(apply_big_m(&inst, &[], 1).unwrap(), inst);
    }

    #[test]
    fn unknown_zone_and_small_m_rejected() {
        let travel = vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
        let inst = RoutingInstance::new("u", travel, zoned(3, &["a", "b"])).unwrap();
        let t = TravelTransform::Neighbor("a".into(), "q".into());
        assert!(matches!(apply_big_m(&inst, &[t], 100), Err(Error::UnknownZone(z)) if z == "q"));
        assert!(apply_big_m(&inst, &[TravelTransform::Cluster], 3).is_err());
    }
}
