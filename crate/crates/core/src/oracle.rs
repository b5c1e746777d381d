//! Exhaustive optimum for small instances, used as a test oracle.

use crate::error::{Error, Result};
use crate::instance::{Cost, RoutingInstance};
use crate::penalty::{ConstraintSet, PenaltyModel};

pub const ORACLE_LIMIT: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Optimum {
    /// Depot first.
    pub stops: Vec<usize>,
    pub length: Cost,
    pub penalty: u64,
    /// Number of tours evaluated, `(n − 1)!`.
    pub evaluated: usize,
}

/// Rearranges `v` into the next permutation in lexicographic order.
/// Returns false (leaving `v` sorted) after the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        v.reverse();
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("v[i + 1] > v[i]");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Enumerates every depot-anchored tour and returns the least `(pen, len)`
/// in lexicographic order; ties go to the lexicographically smallest stop
/// sequence. Lengths use the original travel times; travel transforms in
/// `cs` are not applied.
pub fn brute_force_optimum(instance: &RoutingInstance, cs: &ConstraintSet) -> Result<Optimum> {
    let n = instance.n();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge { n, limit: ORACLE_LIMIT });
    }
    let model = PenaltyModel::new(instance, cs)?;
    let mut scratch = model.scratch();
    let depot = instance.depot();
    let mut rest: Vec<usize> = (0..n).filter(|&s| s != depot).collect();
    let mut seq = Vec::with_capacity(n);
    let mut best: Option<(u64, Cost, Vec<usize>)> = None;
    let mut evaluated = 0;
    loop {
        seq.clear();
        seq.push(depot);
        seq.extend_from_slice(&rest);
        let len = instance.tour_length(&seq);
        let pen = model.evaluate_stops(&seq, &mut scratch).total();
        evaluated += 1;
        if best.as_ref().is_none_or(|(p, l, _)| (pen, len) < (*p, *l)) {
            best = Some((pen, len, seq.clone()));
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    let (penalty, length, stops) = best.expect("at least one tour");
    Ok(Optimum {
        stops,
        length,
        penalty,
        evaluated,
    })
}
