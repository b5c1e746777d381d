//! Iterated local search over the transformed tour.

pub mod ipt;
pub mod kick;
pub mod moves;

use std::time::{Duration, Instant};

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::{generate, CandidateGraph, OneTree, DEFAULT_ASCENT_ITERATIONS, MAX_CANDIDATES};
use crate::error::{Error, Result};
use crate::instance::{apply_big_m, atsp_to_tsp, default_big_m, Cost, RoutingInstance, TransformedInstance};
use crate::penalty::{ConstraintSet, PenaltyBreakdown, PenaltyModel};
use crate::tour::Tour;

pub use moves::Searcher;

pub const DEFAULT_PENALTY_MULTIPLIER: u64 = 1500;
pub const DEFAULT_TRIALS_FACTOR: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveType {
    /// Special 3-opt moves only.
    ThreeOpt,
    /// Special 3-opt and 4-opt moves.
    ThreeFourOpt,
}

/// When a trial's tour replaces the run's best tour T*.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Replacement {
    /// Shorter and no more penalty, the same rule moves obey.
    Improves,
    /// Less penalty, or equal penalty and shorter.
    PenaltyFirst,
}

impl Replacement {
    pub fn accepts(self, len: Cost, pen: u64, best_len: Cost, best_pen: u64) -> bool {
        match self {
            Replacement::Improves => improves(len, pen, best_len, best_pen),
            Replacement::PenaltyFirst => pen < best_pen || (pen == best_pen && len < best_len),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_candidates: usize,
    /// Trials per run = factor · n, unless `max_trials` is set.
    pub max_trials_factor: usize,
    pub max_trials: Option<usize>,
    pub penalty_multiplier: u64,
    /// New runs start only while this has not elapsed.
    pub time_limit: Option<Duration>,
    /// Fixed number of runs. With neither this nor a time limit, one run.
    pub runs: Option<usize>,
    pub seed: u64,
    pub move_type: MoveType,
    pub ascent_iterations: usize,
    /// Overrides the per-instance big M of the travel transforms.
    pub big_m: Option<Cost>,
    /// Stop once a penalty-free tour meets the 1-tree lower bound.
    pub stop_at_lower_bound: bool,
    pub replacement: Replacement,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_candidates: MAX_CANDIDATES,
            max_trials_factor: DEFAULT_TRIALS_FACTOR,
            max_trials: None,
            penalty_multiplier: DEFAULT_PENALTY_MULTIPLIER,
            time_limit: None,
            runs: None,
            seed: 1,
            move_type: MoveType::ThreeFourOpt,
            ascent_iterations: DEFAULT_ASCENT_ITERATIONS,
            big_m: None,
            stop_at_lower_bound: true,
            replacement: Replacement::PenaltyFirst,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} must be positive")));
        if self.max_candidates == 0 {
            return bad("max_candidates");
        }
        if self.max_trials_factor == 0 || self.max_trials == Some(0) {
            return bad("trials");
        }
        if self.penalty_multiplier == 0 {
            return bad("penalty_multiplier");
        }
        if self.runs == Some(0) {
            return bad("runs");
        }
        Ok(())
    }

    pub fn trials(&self, n: usize) -> usize {
        self.max_trials.unwrap_or(self.max_trials_factor * n).max(1)
    }
}

/// `multiplier · pen + len`.
pub fn objective(pen: u64, len: Cost, multiplier: u64) -> i128 {
    multiplier as i128 * pen as i128 + len as i128
}

/// `(len, pen)` improves on `(best_len, best_pen)`: shorter without more penalty.
pub fn improves(len: Cost, pen: u64, best_len: Cost, best_pen: u64) -> bool {
    len < best_len && pen <= best_pen
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Stops in visit order, depot first.
    pub stops: Vec<usize>,
    /// Length under the original travel times.
    pub length: Cost,
    /// Length under the transformed travel times the search optimised.
    pub working_length: Cost,
    pub penalty: PenaltyBreakdown,
    pub objective: i128,
    pub lower_bound: Cost,
    pub runs: usize,
    pub trials: usize,
    pub elapsed_ms: u128,
}

/// Everything the search needs that does not change between runs.
pub struct Prepared {
    pub original: RoutingInstance,
    pub working: TransformedInstance,
    pub model: PenaltyModel,
    pub tree: OneTree,
    pub cand: CandidateGraph,
}

impl Prepared {
    pub fn new(instance: &RoutingInstance, cs: &ConstraintSet, cfg: &SearchConfig) -> Result<Prepared> {
        cfg.validate()?;
        let working = if cs.transforms.is_empty() {
            instance.clone()
        } else {
            let m = cfg.big_m.unwrap_or_else(|| default_big_m(instance));
            apply_big_m(instance, &cs.transforms, m)?
        };
        // Lateness is measured on the original travel times.
        let model = PenaltyModel::new(instance, cs)?;
        let working = atsp_to_tsp(&working);
        let (tree, cand) = generate(&working, cfg.ascent_iterations, cfg.max_candidates);
        Ok(Prepared {
            original: instance.clone(),
            working,
            model,
            tree,
            cand,
        })
    }
}

pub fn solve(instance: &RoutingInstance, cs: &ConstraintSet, cfg: &SearchConfig) -> Result<Solution> {
    let started = Instant::now();
    let prep = Prepared::new(instance, cs, cfg)?;
    Ok(solve_prepared(&prep, cfg, started))
}

pub fn solve_prepared(prep: &Prepared, cfg: &SearchConfig, started: Instant) -> Solution {
    let inst = &prep.working;
    let n = inst.n();
    let depot = inst.base().depot();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut searcher = Searcher::new(inst, &prep.cand, &prep.model, cfg.move_type == MoveType::ThreeFourOpt);
    let trials = cfg.trials(n);
    let max_runs = match (cfg.runs, cfg.time_limit) {
        (Some(r), _) => r,
        (None, Some(_)) => usize::MAX,
        (None, None) => 1,
    };
    let mut best: Option<(Tour, u64)> = None;
    let mut runs = 0;
    let mut total_trials = 0;
    let optimal = |tour: &Tour, pen: u64| cfg.stop_at_lower_bound && pen == 0 && tour.length() <= prep.tree.lower_bound;

    while runs < max_runs {
        if runs > 0 && cfg.time_limit.is_some_and(|t| started.elapsed() >= t) {
            break;
        }
        runs += 1;
        let mut run_best = Tour::random_with(inst, &mut rng);
        let pen = searcher.penalty(&run_best);
        let mut run_pen = searcher.improve(&mut run_best, pen, None);
        total_trials += 1;
        for _ in 1..trials {
            if optimal(&run_best, run_pen) {
                break;
            }
            let mut tour = run_best.clone();
            let touched = kick::kick(&mut tour, inst, &prep.cand, &mut rng);
            let pen = searcher.penalty(&tour);
            let mut pen = searcher.improve(&mut tour, pen, Some(&touched));
            total_trials += 1;
            if tour.length() >= run_best.length() {
                let (t, p) = hybrid(&mut searcher, &tour, pen, &run_best);
                tour = t;
                pen = p;
            }
            if cfg.replacement.accepts(tour.length(), pen, run_best.length(), run_pen) {
                run_best = tour;
                run_pen = pen;
            }
        }
        debug!("run {runs}: length {} penalty {run_pen}", run_best.length());
        let v = objective(run_pen, run_best.length(), cfg.penalty_multiplier);
        if best
            .as_ref()
            .is_none_or(|(t, p)| v < objective(*p, t.length(), cfg.penalty_multiplier))
        {
            best = Some((run_best, run_pen));
        }
        let (t, p) = best.as_ref().expect("set above");
        if optimal(t, *p) {
            break;
        }
    }

    let (tour, _) = best.expect("at least one run");
    let stops = tour.stops(depot);
    let penalty = prep.model.evaluate_alloc(&tour);
    Solution {
        length: prep.original.tour_length(&stops),
        working_length: tour.length(),
        objective: objective(penalty.total(), tour.length(), cfg.penalty_multiplier),
        penalty,
        stops,
        lower_bound: prep.tree.lower_bound,
        runs,
        trials: total_trials,
        elapsed_ms: started.elapsed().as_millis(),
    }
}

/// Best IPT hybrid of `tour` and `best` (both transcription directions).
fn hybrid(searcher: &mut Searcher, tour: &Tour, pen: u64, best: &Tour) -> (Tour, u64) {
    let inst = searcher.inst;
    let depot = searcher.depot();
    let a = tour.stops(depot);
    let b = best.stops(depot);
    if a == b {
        return (tour.clone(), pen);
    }
    let base = inst.base();
    let h1 = ipt::transcribe(base, &a, &b, |s| searcher.penalty_of_stops(s));
    let h2 = ipt::transcribe(base, &b, &a, |s| searcher.penalty_of_stops(s));
    let score = |s: &[usize], searcher: &mut Searcher| (base.tour_length(s), searcher.penalty_of_stops(s));
    let (l1, p1) = score(&h1, searcher);
    let (l2, p2) = score(&h2, searcher);
    let (seq, len, p) = if improves(l2, p2, l1, p1) || (l2 == l1 && p2 < p1) {
        (h2, l2, p2)
    } else {
        (h1, l1, p1)
    };
    if improves(len, p, tour.length(), pen) || (len == tour.length() && p < pen) {
        (Tour::from_stops(inst, &seq).expect("permutation"), p)
    } else {
        (tour.clone(), pen)
    }
}
