//! Tour over the `2n` transformed nodes: successor/predecessor links plus a
//! rank array that is rebuilt only when a move is committed.
//!
//! Orientation is fixed so that every dummy node `i + n` is immediately
//! followed by its original node `i`. The two move shapes below never
//! reverse a segment, so this orientation survives every move.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Cost, TransformedInstance};

pub type Node = usize;

/// Direction in which a move's `t` labels are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveShape {
    /// Removes `(t1,t2) (t3,t4) (t5,t6)` with `t5` between `t2` and `t3`;
    /// reconnects as `t1→t6, t3→t2, t5→t4`.
    ThreeOpt,
    /// Removes `(t1,t2) (t3,t4) (t5,t6) (t7,t8)` with `t5` between `t2` and
    /// `t3` and `t7` between `t4` and `t1`; reconnects as
    /// `t1→t4, t3→t2, t5→t8, t7→t6`.
    FourOpt,
}

/// A reversal-free 3-opt or 4-opt exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KOptMove {
    pub shape: MoveShape,
    pub t: [Node; 8],
    pub dir: Dir,
    /// Removed cost minus added cost. Positive for improving moves; kicks may
    /// carry any sign.
    pub gain: Cost,
}

impl KOptMove {
    pub fn k(&self) -> usize {
        match self.shape {
            MoveShape::ThreeOpt => 3,
            MoveShape::FourOpt => 4,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.t[..2 * self.k()]
    }

    /// Successor pairs (in `dir`) created by the move.
    fn links(&self) -> [(Node, Node); 4] {
        let t = &self.t;
        match self.shape {
            MoveShape::ThreeOpt => [(t[0], t[5]), (t[2], t[1]), (t[4], t[3]), (usize::MAX, usize::MAX)],
            MoveShape::FourOpt => [(t[0], t[3]), (t[2], t[1]), (t[4], t[7]), (t[6], t[5])],
        }
    }

    fn removed(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        self.nodes().chunks(2).map(|p| (p[0], p[1]))
    }

    fn added(&self) -> impl Iterator<Item = (Node, Node)> + '_ {
        self.links().into_iter().filter(|l| l.0 != usize::MAX)
    }

    fn compute_gain(&self, inst: &TransformedInstance) -> Cost {
        let removed: Cost = self.removed().map(|(a, b)| inst.cost(a, b)).sum();
        let added: Cost = self.added().map(|(a, b)| inst.cost(a, b)).sum();
        removed - added
    }

    /// Improving special 3-opt move. `None` unless the labels match the
    /// pattern on `tour` (committed ranks), no removed edge is fixed, and the
    /// gain is strictly positive.
    pub fn three_opt(tour: &Tour, inst: &TransformedInstance, dir: Dir, t: [Node; 6]) -> Option<KOptMove> {
        let mv = Self::checked(tour, inst, MoveShape::ThreeOpt, dir, &t)?;
        (mv.gain > 0).then_some(mv)
    }

    /// Improving special 4-opt move; see [`KOptMove::three_opt`].
    pub fn four_opt(tour: &Tour, inst: &TransformedInstance, dir: Dir, t: [Node; 8]) -> Option<KOptMove> {
        let mv = Self::checked(tour, inst, MoveShape::FourOpt, dir, &t)?;
        (mv.gain > 0).then_some(mv)
    }

    /// Pattern-checked move without the gain requirement (used for kicks).
    pub fn perturbation(tour: &Tour, inst: &TransformedInstance, shape: MoveShape, dir: Dir, t: &[Node]) -> Option<KOptMove> {
        Self::checked(tour, inst, shape, dir, t)
    }

    fn checked(tour: &Tour, inst: &TransformedInstance, shape: MoveShape, dir: Dir, t: &[Node]) -> Option<KOptMove> {
        let k = match shape {
            MoveShape::ThreeOpt => 3,
            MoveShape::FourOpt => 4,
        };
        if t.len() != 2 * k || tour.rank_dirty {
            return None;
        }
        for i in 0..2 * k {
            for j in i + 1..2 * k {
                if t[i] == t[j] {
                    return None;
                }
            }
        }
        for p in t.chunks(2) {
            if tour.succ(p[0], dir) != p[1] || inst.is_fixed(p[0], p[1]) {
                return None;
            }
        }
        let b = |a, x, c| tour.between_dir(a, x, c, dir);
        let ok = match shape {
            MoveShape::ThreeOpt => b(t[1], t[4], t[2]),
            MoveShape::FourOpt => b(t[1], t[4], t[2]) && b(t[3], t[6], t[0]),
        };
        if !ok {
            return None;
        }
        let mut arr = [usize::MAX; 8];
        arr[..t.len()].copy_from_slice(t);
        let mut mv = KOptMove {
            shape,
            t: arr,
            dir,
            gain: 0,
        };
        mv.gain = mv.compute_gain(inst);
        Some(mv)
    }
}

/// Saved links for undoing a speculative move.
#[derive(Clone, Debug)]
pub struct Undo {
    saved: [(Node, Node, Node); 8],
    count: usize,
    length: Cost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tour {
    next: Vec<Node>,
    prev: Vec<Node>,
    rank: Vec<usize>,
    length: Cost,
    rank_dirty: bool,
    n: usize,
}

impl Tour {
    /// Builds the transformed tour for a stop order (each dummy inserted
    /// before its stop). `order` must be a permutation of `0..n`.
    pub fn from_stops(inst: &TransformedInstance, order: &[usize]) -> Result<Tour> {
        let n = inst.n();
        if order.len() != n {
            return Err(Error::InvalidArgument(format!("tour has {} stops, instance {n}", order.len())));
        }
        let mut seen = vec![false; n];
        for &s in order {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidArgument(format!("stop {s} repeated or out of range")));
            }
        }
        let seq = inst.expand(order);
        let size = seq.len();
        let mut next = vec![0; size];
        let mut prev = vec![0; size];
        for i in 0..size {
            let a = seq[i];
            let b = seq[(i + 1) % size];
            next[a] = b;
            prev[b] = a;
        }
        let mut tour = Tour {
            next,
            prev,
            rank: vec![0; size],
            length: 0,
            rank_dirty: true,
            n,
        };
        tour.length = tour.recompute_length(inst);
        tour.commit();
        Ok(tour)
    }

    /// Pseudo-random tour: stops shuffled uniformly, deterministic per seed.
    pub fn random(inst: &TransformedInstance, seed: u64) -> Tour {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(inst, &mut rng)
    }

    pub fn random_with<R: rand::Rng>(inst: &TransformedInstance, rng: &mut R) -> Tour {
        let depot = inst.base().depot();
        let mut rest: Vec<usize> = (0..inst.n()).filter(|&i| i != depot).collect();
        rest.shuffle(rng);
        let mut order = Vec::with_capacity(inst.n());
        order.push(depot);
        order.extend(rest);
        Tour::from_stops(inst, &order).expect("shuffled permutation")
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.next.len()
    }

    #[inline]
    pub fn next(&self, v: Node) -> Node {
        self.next[v]
    }

    #[inline]
    pub fn prev(&self, v: Node) -> Node {
        self.prev[v]
    }

    #[inline]
    pub fn succ(&self, v: Node, dir: Dir) -> Node {
        match dir {
            Dir::Forward => self.next[v],
            Dir::Backward => self.prev[v],
        }
    }

    #[inline]
    pub fn pred(&self, v: Node, dir: Dir) -> Node {
        match dir {
            Dir::Forward => self.prev[v],
            Dir::Backward => self.next[v],
        }
    }

    #[inline]
    pub fn rank(&self, v: Node) -> usize {
        self.rank[v]
    }

    pub fn length(&self) -> Cost {
        self.length
    }

    pub fn is_rank_dirty(&self) -> bool {
        self.rank_dirty
    }

    /// True iff `b` lies strictly inside the oriented path from `a` to `c`.
    #[inline]
    pub fn between(&self, a: Node, b: Node, c: Node) -> bool {
        debug_assert!(!self.rank_dirty, "between() on uncommitted ranks");
        let size = self.size();
        let ra = self.rank[a];
        let rb = (self.rank[b] + size - ra) % size;
        let rc = (self.rank[c] + size - ra) % size;
        rb > 0 && rb < rc
    }

    #[inline]
    pub fn between_dir(&self, a: Node, b: Node, c: Node, dir: Dir) -> bool {
        match dir {
            Dir::Forward => self.between(a, b, c),
            Dir::Backward => self.between(c, b, a),
        }
    }

    #[inline]
    fn link(&mut self, a: Node, b: Node, dir: Dir) {
        match dir {
            Dir::Forward => {
                self.next[a] = b;
                self.prev[b] = a;
            }
            Dir::Backward => {
                self.next[b] = a;
                self.prev[a] = b;
            }
        }
    }

    /// Rewires the links for `mv` and marks ranks dirty. The returned record
    /// restores the previous links in O(k).
    pub fn apply_move(&mut self, mv: &KOptMove, inst: &TransformedInstance) -> Result<Undo> {
        if mv.removed().any(|(a, b)| inst.is_fixed(a, b)) {
            return Err(Error::InvalidArgument("move removes a fixed edge".into()));
        }
        let mut undo = Undo {
            saved: [(0, 0, 0); 8],
            count: 0,
            length: self.length,
        };
        for &v in mv.nodes() {
            undo.saved[undo.count] = (v, self.next[v], self.prev[v]);
            undo.count += 1;
        }
        for (a, b) in mv.added() {
            self.link(a, b, mv.dir);
        }
        self.length -= mv.gain;
        self.rank_dirty = true;
        Ok(undo)
    }

    pub fn undo(&mut self, undo: Undo) {
        for &(v, nx, pv) in &undo.saved[..undo.count] {
            self.next[v] = nx;
            self.prev[v] = pv;
        }
        self.length = undo.length;
        self.rank_dirty = false;
    }

    /// Rebuilds `rank` from the links, starting at the depot's dummy node.
    ///
    /// Panics if the links do not form a single cycle over all nodes.
    pub fn commit(&mut self) {
        let size = self.size();
        let start = self.n; // dummy of stop 0
        let mut v = start;
        for r in 0..size {
            self.rank[v] = r;
            v = self.next[v];
            if v == start && r + 1 != size {
                panic!("tour links form a cycle of {} nodes, expected {size}", r + 1);
            }
        }
        assert_eq!(v, start, "tour links do not close into a single cycle");
        self.rank_dirty = false;
    }

    pub fn recompute_length(&self, inst: &TransformedInstance) -> Cost {
        (0..self.size()).map(|v| inst.cost(v, self.next[v])).sum()
    }

    /// Original stops in visit order, starting at the depot.
    pub fn stops(&self, depot: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        let mut v = depot;
        loop {
            out.push(v);
            v = self.next[self.next[v]];
            if v == depot || out.len() > self.n {
                break;
            }
        }
        out
    }

    /// Iterator over original stops in visit order from `depot`, using only
    /// the successor links.
    pub fn stop_iter(&self, depot: usize) -> impl Iterator<Item = usize> + '_ {
        let mut v = depot;
        (0..self.n).map(move |_| {
            let cur = v;
            v = self.next[self.next[cur]];
            cur
        })
    }

    /// Full structural check: single Hamiltonian cycle, dummy-before-original
    /// orientation, clean ranks consistent with links, exact length.
    pub fn validate(&self, inst: &TransformedInstance) -> std::result::Result<(), String> {
        let size = self.size();
        if size != inst.size() {
            return Err(format!("tour has {size} nodes, instance {}", inst.size()));
        }
        let mut seen = vec![false; size];
        let mut v = 0;
        for _ in 0..size {
            if seen[v] {
                return Err(format!("node {v} visited twice"));
            }
            seen[v] = true;
            if self.prev[self.next[v]] != v {
                return Err(format!("prev/next mismatch at {v}"));
            }
            v = self.next[v];
        }
        if v != 0 {
            return Err("links do not close".into());
        }
        for i in 0..self.n {
            if self.next[i + self.n] != i {
                return Err(format!("stop {i} does not follow its dummy"));
            }
        }
        if !self.rank_dirty {
            for v in 0..size {
                if self.rank[self.next[v]] != (self.rank[v] + 1) % size {
                    return Err(format!("rank inconsistent at {v}"));
                }
            }
        }
        let len = self.recompute_length(inst);
        if len != self.length {
            return Err(format!("length {} but recomputed {len}", self.length));
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn corrupt_for_test(&mut self, a: Node, b: Node) {
        self.next[a] = b;
        self.rank_dirty = true;
    }
}

/// Writes a tour file: one 1-based stop index per line, depot first.
pub fn write_tour(stops: &[usize], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    for s in stops {
        out.push_str(&(s + 1).to_string());
        out.push('\n');
    }
    out
}

/// Reads a tour file written by [`write_tour`]. Lines starting with `#` are
/// ignored.
pub fn read_tour(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: usize = line
            .parse()
            .map_err(|_| Error::syntax(i + 1, format!("expected a stop index, got `{line}`")))?;
        if v == 0 {
            return Err(Error::syntax(i + 1, "stop indices are 1-based"));
        }
        out.push(v - 1);
    }
    Ok(out)
}
