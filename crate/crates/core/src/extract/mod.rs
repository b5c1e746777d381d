//! Constraint models learned from historical routes.
//!
//! The full model combines cluster transforms, multi-level clusters with
//! sorted-order constraints, zone precedences from a reference route's
//! component path, and super-cluster path constraints from a second
//! reference. The alternate model uses transitive precedences and
//! super-cluster precedences instead.

pub mod component;
pub mod hierarchy;
pub mod reference;
pub mod route;
pub mod zone_id;

use std::collections::BTreeSet;

use log::warn;

pub use component::{component_path, condense, precedence_constraints, ComponentPath, PrecedenceMode};
pub use hierarchy::{crossings, select_hierarchy, sorted_cluster_constraints, super_cluster_path_constraints, Hierarchy};
pub use reference::select_reference;
pub use route::{fill_missing_zone_ids, parse_route, read_route, read_route_dir, write_route, Quality, RouteStop, TrainingRoute};
pub use zone_id::{Symbol, SymbolSet, ZoneId};

use crate::error::{Error, Result};
use crate::instance::{RoutingInstance, TravelTransform};
use crate::penalty::{Constraint, ConstraintSet, Level, Unit, GROUP_WEIGHT, NEIGHBOR_WEIGHT, PATH_WEIGHT, PRECEDENCE_WEIGHT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    Alternate,
}

#[derive(Clone, Debug)]
pub struct ExtractConfig {
    pub variant: Variant,
    /// Use transitive zone precedences in the full model too.
    pub transitive: bool,
    /// Drop super and super-super level constraints.
    pub zones_only: bool,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            variant: Variant::Full,
            transitive: false,
            zones_only: false,
        }
    }
}

/// An extracted model and where it came from.
#[derive(Clone, Debug)]
pub struct Model {
    pub constraints: ConstraintSet,
    pub zone_reference: Option<String>,
    pub super_reference: Option<String>,
    pub warnings: Vec<String>,
}

/// The target's zone set, or an error naming a stop without a zone.
fn target_zones(target: &RoutingInstance) -> Result<BTreeSet<String>> {
    for s in target.stops() {
        if !s.is_depot && s.zone.is_none() {
            return Err(Error::MissingZone(s.id));
        }
    }
    Ok(target.zones())
}

/// Zone-level constraints that `q` implies for a target with `zones`.
pub fn zone_precedences(zones: &BTreeSet<String>, q: &TrainingRoute, mode: PrecedenceMode) -> Result<Vec<Constraint>> {
    let walk = q.zone_walk()?;
    let path = component_path(&walk).map_err(|e| Error::MalformedRoute {
        route: q.name.clone(),
        msg: e.to_string(),
    })?;
    Ok(precedence_constraints(zones, &path, mode, Level::Zone, PRECEDENCE_WEIGHT))
}

/// Super-cluster precedences from `q`'s super-cluster component path.
pub fn super_precedences(supers: &BTreeSet<String>, q: &TrainingRoute, h: &Hierarchy, mode: PrecedenceMode) -> Result<Vec<Constraint>> {
    let walk: Vec<String> = q.zone_walk()?.into_iter().map(|z| h.unit(Level::Super, z)).collect();
    let walk: Vec<&str> = walk.iter().map(String::as_str).collect();
    let path = component_path(&walk).map_err(|e| Error::MalformedRoute {
        route: q.name.clone(),
        msg: e.to_string(),
    })?;
    Ok(precedence_constraints(supers, &path, mode, Level::Super, GROUP_WEIGHT))
}

/// Builds the full or alternate model for `target` from `training`.
///
/// Without a usable reference route the model keeps only the clusters and
/// the sorted-order constraints, and a warning is recorded.
pub fn build_model(target: &RoutingInstance, training: &[TrainingRoute], h: &Hierarchy, cfg: &ExtractConfig) -> Result<Model> {
    let zones = target_zones(target)?;
    let station = target.station.as_deref();
    let mut cs = ConstraintSet {
        transforms: vec![TravelTransform::Cluster],
        ..Default::default()
    };
    let mut model = Model {
        constraints: ConstraintSet::default(),
        zone_reference: None,
        super_reference: None,
        warnings: Vec::new(),
    };
    let note = |msg: String| {
        warn!("{}: {msg}", target.name);
        msg
    };

    let sorted = sorted_cluster_constraints(&zones, h);
    if cfg.zones_only {
        cs.singles.extend(sorted.singles.into_iter().filter(|c| c.a.level == Level::Zone));
        cs.disjunctions.extend(sorted.disjunctions);
    } else {
        cs.groups = h.groups(&zones);
        cs.group_cluster_penalty = Some(GROUP_WEIGHT);
        cs.singles.extend(sorted.singles);
        cs.disjunctions.extend(sorted.disjunctions);
    }

    let mode = match (cfg.variant, cfg.transitive) {
        (Variant::Full, false) => PrecedenceMode::ComponentPath,
        _ => PrecedenceMode::Transitive,
    };
    match select_reference(&target.name, station, &zones, training, |q| q.zones()) {
        Ok(q) => match zone_precedences(&zones, q, mode) {
            Ok(c) => {
                cs.singles.extend(c);
                model.zone_reference = Some(q.name.clone());
            }
            Err(e) => model.warnings.push(note(format!("zone reference skipped: {e}"))),
        },
        Err(e) => model.warnings.push(note(format!("clusters-only model: {e}"))),
    }

    if !cfg.zones_only {
        let supers: BTreeSet<String> = zones.iter().map(|z| h.unit(Level::Super, z)).collect();
        let units_of = |q: &TrainingRoute| q.zones().iter().map(|z| h.unit(Level::Super, z)).collect();
        if let Ok(q) = select_reference(&target.name, station, &supers, training, units_of) {
            let found = match cfg.variant {
                Variant::Full => Ok(super_cluster_path_constraints(&supers, q, h)),
                Variant::Alternate => super_precedences(&supers, q, h, PrecedenceMode::Transitive),
            };
            match found {
                Ok(c) => {
                    cs.singles.extend(c);
                    model.super_reference = Some(q.name.clone());
                }
                Err(e) => model.warnings.push(note(format!("super-cluster reference skipped: {e}"))),
            }
        }
    }
    model.constraints = cs;
    Ok(model)
}

/// The exact driver zone order as constraints: a path constraint from the
/// first zone to the second and neighbor constraints along the rest.
/// `sequence` starts at the depot.
pub fn driver_order_constraints(target: &RoutingInstance, sequence: &[usize]) -> Result<ConstraintSet> {
    target_zones(target)?;
    let mut order: Vec<&str> = Vec::new();
    for &s in sequence {
        if s == target.depot() {
            continue;
        }
        let z = target.stops()[s].zone.as_deref().ok_or(Error::MissingZone(s))?;
        if !order.contains(&z) {
            order.push(z);
        }
    }
    let mut cs = ConstraintSet {
        transforms: vec![TravelTransform::Cluster],
        ..Default::default()
    };
    if order.len() >= 2 {
        cs.singles.push(Constraint::path(Unit::zone(order[0]), Unit::zone(order[1]), PATH_WEIGHT));
        for w in order[1..].windows(2) {
            cs.singles.push(Constraint::neighbor(Unit::zone(w[0]), Unit::zone(w[1]), NEIGHBOR_WEIGHT));
        }
    }
    Ok(cs)
}

/// A training route as a routing instance over `travel`.
pub fn route_instance(route: &TrainingRoute, travel: Vec<Vec<crate::instance::Cost>>) -> Result<RoutingInstance> {
    use crate::instance::Stop;
    let stops = route
        .stops
        .iter()
        .enumerate()
        .map(|(i, s)| Stop {
            id: i,
            zone: if i == route.depot { None } else { s.zone.clone() },
            lat: Some(s.lat),
            lon: Some(s.lon),
            time_window: s.time_window,
            service_time: s.service_time,
            is_depot: i == route.depot,
        })
        .collect();
    let mut inst = RoutingInstance::new(route.name.clone(), travel, stops)?;
    inst.station = route.station.clone();
    Ok(inst)
}
