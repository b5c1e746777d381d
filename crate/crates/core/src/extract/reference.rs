//! Reference-route selection.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::route::TrainingRoute;

/// Picks the training route of the same station that shares the most units
/// with the target, weighted by route quality. A route named like the
/// target is never picked. Ties go to the larger raw overlap, then to the
/// smaller route name.
///
/// `units_of` maps a training route to its unit set (zones or super
/// clusters).
pub fn select_reference<'a>(
    target: &str,
    station: Option<&str>,
    units: &BTreeSet<String>,
    training: &'a [TrainingRoute],
    units_of: impl Fn(&TrainingRoute) -> BTreeSet<String>,
) -> Result<&'a TrainingRoute> {
    let mut best: Option<((u64, usize), &TrainingRoute)> = None;
    for q in training {
        if q.name == target || q.station.as_deref() != station {
            continue;
        }
        let common = units_of(q).intersection(units).count();
        let score = (common as u64 * q.quality.weight(), common);
        let better = match &best {
            None => true,
            Some((s, b)) => score > *s || (score == *s && q.name < b.name),
        };
        if better {
            best = Some((score, q));
        }
    }
    best.map(|(_, q)| q).ok_or_else(|| Error::NoReference(target.to_string()))
}
