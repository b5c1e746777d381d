//! Rohe-style double-bridge kick.

use rand::seq::index::sample;
use rand::Rng;

use crate::candidates::CandidateGraph;
use crate::instance::TransformedInstance;
use crate::tour::{Dir, KOptMove, MoveShape, Node, Tour};

pub const KICK_SAMPLE: usize = 10;
pub const WALK_STEPS: usize = 50;
pub const WALK_ATTEMPTS: usize = 20;

/// First kick stop: among a random sample of stops, the one whose outgoing
/// tour edge is longest relative to its nearest candidate. Ties go to the
/// earliest sampled stop.
pub fn select_long_edge<R: Rng>(tour: &Tour, inst: &TransformedInstance, cand: &CandidateGraph, rng: &mut R) -> usize {
    let n = inst.n();
    let picks: Vec<usize> = if n >= KICK_SAMPLE {
        sample(rng, n, KICK_SAMPLE).into_vec()
    } else {
        (0..KICK_SAMPLE).map(|_| rng.random_range(0..n)).collect()
    };
    let mut best = picks[0];
    let mut best_score = i64::MIN;
    for v in picks {
        let near = cand.candidates(v).map(|w| inst.cost(v, w)).min().unwrap_or(0);
        let score = inst.cost(v, tour.next(v)) - near;
        if score > best_score {
            best_score = score;
            best = v;
        }
    }
    best
}

fn walk<R: Rng>(start: usize, inst: &TransformedInstance, cand: &CandidateGraph, rng: &mut R) -> usize {
    let n = inst.n();
    let mut s = start;
    for _ in 0..WALK_STEPS {
        let list = cand.with_alpha(s);
        if list.is_empty() {
            break;
        }
        s = list[rng.random_range(0..list.len())].0 % n;
    }
    s
}

/// Perturbs `tour` with a reversal-free double bridge (a 3-opt segment swap
/// when n = 3; nothing when n < 3). The tour is committed afterwards.
/// Returns the nodes whose edges changed.
pub fn kick<R: Rng>(tour: &mut Tour, inst: &TransformedInstance, cand: &CandidateGraph, rng: &mut R) -> Vec<Node> {
    let n = inst.n();
    if n < 3 {
        return Vec::new();
    }
    let k = if n == 3 { 3 } else { 4 };
    let v = select_long_edge(tour, inst, cand, rng);
    let mut chosen = vec![v];
    for _ in 0..WALK_ATTEMPTS {
        if chosen.len() == k {
            break;
        }
        let s = walk(v, inst, cand, rng);
        if !chosen.contains(&s) {
            chosen.push(s);
        }
    }
    if chosen.len() < k {
        let rest: Vec<usize> = (0..n).filter(|s| !chosen.contains(s)).collect();
        for i in sample(rng, rest.len(), k - chosen.len()) {
            chosen.push(rest[i]);
        }
    }
    chosen.sort_by_key(|&s| tour.rank(s));
    let t: Vec<Node> = match k {
        3 => {
            let [a, b, c] = [chosen[0], chosen[1], chosen[2]];
            vec![a, tour.next(a), c, tour.next(c), b, tour.next(b)]
        }
        _ => {
            let [a, b, c, d] = [chosen[0], chosen[1], chosen[2], chosen[3]];
            vec![a, tour.next(a), c, tour.next(c), b, tour.next(b), d, tour.next(d)]
        }
    };
    let shape = if k == 3 { MoveShape::ThreeOpt } else { MoveShape::FourOpt };
    let mv = KOptMove::perturbation(tour, inst, shape, Dir::Forward, &t).expect("sorted stops form a valid pattern");
    tour.apply_move(&mv, inst).expect("kick removes no fixed edge");
    tour.commit();
    t
}
