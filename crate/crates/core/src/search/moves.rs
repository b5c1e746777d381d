//! Move scanning and the local-search loop.

use std::collections::VecDeque;

use crate::candidates::CandidateGraph;
use crate::instance::TransformedInstance;
use crate::penalty::{PenaltyModel, Scratch};
use crate::tour::{Dir, KOptMove, Node, Tour};

/// Which (t5,t6) and (t7,t8) choices the 4-opt scan tries, in order. The
/// first letter picks (t5,t6): `A` = candidate of t2 as t5, `B` = candidate
/// of t1 as t6. The second picks (t7,t8): `C` = candidate of t4 as t7,
/// `D` = candidate of t3 as t8.
pub const FOUR_OPT_COMBINATIONS: [(char, char); 4] = [('A', 'C'), ('A', 'D'), ('B', 'C'), ('B', 'D')];

/// Per-worker search context over shared read-only data.
pub struct Searcher<'a> {
    pub inst: &'a TransformedInstance,
    pub cand: &'a CandidateGraph,
    pub model: &'a PenaltyModel,
    pub four_opt: bool,
    scratch: Scratch,
    depot: usize,
    queued: Vec<bool>,
    queue: VecDeque<Node>,
}

impl<'a> Searcher<'a> {
    pub fn new(inst: &'a TransformedInstance, cand: &'a CandidateGraph, model: &'a PenaltyModel, four_opt: bool) -> Self {
        Searcher {
            inst,
            cand,
            model,
            four_opt,
            scratch: model.scratch(),
            depot: inst.base().depot(),
            queued: vec![false; inst.size()],
            queue: VecDeque::new(),
        }
    }

    pub fn penalty(&mut self, tour: &Tour) -> u64 {
        self.model.evaluate(tour, &mut self.scratch).total()
    }

    pub fn penalty_of_stops(&mut self, stops: &[usize]) -> u64 {
        self.model.evaluate_stops(stops, &mut self.scratch).total()
    }

    /// Applies `mv` speculatively and keeps it iff the penalty does not rise.
    /// On success the tour is committed and the new penalty returned.
    fn accept(&mut self, tour: &mut Tour, mv: &KOptMove, pen: u64) -> Option<u64> {
        let undo = tour.apply_move(mv, self.inst).ok()?;
        let new_pen = if self.model.is_trivial() { 0 } else { self.penalty(tour) };
        if new_pen <= pen {
            tour.commit();
            Some(new_pen)
        } else {
            tour.undo(undo);
            None
        }
    }

    /// First improving, penalty-admissible move starting at `t1`. The move
    /// is applied and committed when found.
    pub fn try_move(&mut self, tour: &mut Tour, t1: Node, pen: u64) -> Option<(KOptMove, u64)> {
        let inst = self.inst;
        let cand = self.cand;
        let dir = if inst.is_original(t1) { Dir::Forward } else { Dir::Backward };
        let t2 = tour.succ(t1, dir);
        let c12 = inst.cost(t1, t2);
        for t3 in cand.candidates(t2) {
            let g1 = c12 - inst.cost(t2, t3);
            if g1 <= 0 || t3 == t1 {
                continue;
            }
            let t4 = tour.succ(t3, dir);
            let c34 = inst.cost(t3, t4);
            for t5 in cand.candidates(t4) {
                let g2 = g1 + c34 - inst.cost(t4, t5);
                if g2 <= 0 || t5 == t1 || t5 == t3 || !tour.between_dir(t2, t5, t3, dir) {
                    continue;
                }
                let t6 = tour.succ(t5, dir);
                if g2 + inst.cost(t5, t6) - inst.cost(t6, t1) <= 0 {
                    continue;
                }
                if let Some(mv) = KOptMove::three_opt(tour, inst, dir, [t1, t2, t3, t4, t5, t6]) {
                    if let Some(p) = self.accept(tour, &mv, pen) {
                        return Some((mv, p));
                    }
                }
            }
            if self.four_opt {
                for (first, second) in FOUR_OPT_COMBINATIONS {
                    let Some((t5, t6)) = self.pick_56(tour, dir, first, t1, t2, t3) else { continue };
                    let Some((t7, t8)) = self.pick_78(tour, dir, second, t1, t3, t4) else { continue };
                    if let Some(mv) = KOptMove::four_opt(tour, inst, dir, [t1, t2, t3, t4, t5, t6, t7, t8]) {
                        if let Some(p) = self.accept(tour, &mv, pen) {
                            return Some((mv, p));
                        }
                    }
                }
            }
        }
        None
    }

    fn pick_56(&self, tour: &Tour, dir: Dir, which: char, t1: Node, t2: Node, t3: Node) -> Option<(Node, Node)> {
        if which == 'A' {
            let t5 = self
                .cand
                .candidates(t2)
                .find(|&w| w != t3 && w != t1 && tour.between_dir(t2, w, t3, dir))?;
            Some((t5, tour.succ(t5, dir)))
        } else {
            let t6 = self.cand.candidates(t1).find(|&w| tour.between_dir(t2, w, t3, dir))?;
            Some((tour.pred(t6, dir), t6))
        }
    }

    fn pick_78(&self, tour: &Tour, dir: Dir, which: char, t1: Node, t3: Node, t4: Node) -> Option<(Node, Node)> {
        if which == 'C' {
            let t7 = self
                .cand
                .candidates(t4)
                .find(|&w| w != t1 && w != t3 && tour.between_dir(t4, w, t1, dir))?;
            Some((t7, tour.succ(t7, dir)))
        } else {
            let t8 = self.cand.candidates(t3).find(|&w| tour.between_dir(t4, w, t1, dir))?;
            Some((tour.pred(t8, dir), t8))
        }
    }

    fn push(&mut self, v: Node) {
        if !self.queued[v] {
            self.queued[v] = true;
            self.queue.push_back(v);
        }
    }

    /// Applies moves until no queued node yields one. `start` seeds the
    /// queue; `None` queues every node. Returns the final penalty.
    pub fn improve(&mut self, tour: &mut Tour, mut pen: u64, start: Option<&[Node]>) -> u64 {
        match start {
            Some(nodes) => nodes.iter().for_each(|&v| self.push(v)),
            None => (0..self.inst.size()).for_each(|v| self.push(v)),
        }
        while let Some(t1) = self.queue.pop_front() {
            self.queued[t1] = false;
            if let Some((mv, p)) = self.try_move(tour, t1, pen) {
                debug_assert!(p <= pen);
                pen = p;
                for &v in mv.nodes() {
                    self.push(v);
                }
            }
        }
        pen
    }

    pub fn depot(&self) -> usize {
        self.depot
    }
}
