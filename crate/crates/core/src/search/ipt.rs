//! Iterated partial transcription on stop sequences.
//!
//! A segment of `a` is exchangeable with `b` when the same stops appear
//! contiguously in `b`, starting and ending at the same two stops. The
//! cheaper traversal is copied into `a` whenever the penalty does not rise.

use crate::instance::{Cost, RoutingInstance};

pub const MIN_SEGMENT: usize = 4;

/// Rotates a closed stop sequence so that it starts at `depot`.
pub fn rotate_to(seq: &mut [usize], depot: usize) {
    if let Some(p) = seq.iter().position(|&s| s == depot) {
        seq.rotate_left(p);
    }
}

/// Improves `a` (depot first) with segments of `b`. `penalty` evaluates a
/// depot-first stop sequence.
pub fn transcribe(
    inst: &RoutingInstance,
    a: &[usize],
    b: &[usize],
    mut penalty: impl FnMut(&[usize]) -> u64,
) -> Vec<usize> {
    let n = a.len();
    let mut cur = a.to_vec();
    if n < MIN_SEGMENT + 1 || a == b {
        return cur;
    }
    let depot = a[0];
    let mut pos_b = vec![0; n];
    for (i, &s) in b.iter().enumerate() {
        pos_b[s] = i;
    }
    // prefix[k] = cost of b[0] → … → b[k] along b, over two laps
    let mut prefix = vec![0 as Cost; 2 * n];
    for k in 1..2 * n {
        prefix[k] = prefix[k - 1] + inst.travel(b[(k - 1) % n], b[k % n]);
    }
    // succ_b[s] = stop after s in b
    let mut succ_b = vec![0; n];
    for k in 0..n {
        succ_b[b[k]] = b[(k + 1) % n];
    }
    let mut cur_pen = penalty(&cur);
    'outer: loop {
        for i in 0..n {
            let start = cur[i];
            // a segment that opens with an edge of b gives the same swap as
            // the one starting a stop later
            if succ_b[start] == cur[(i + 1) % n] {
                continue;
            }
            let pb = pos_b[start];
            let mut max_off = 0;
            let mut cost_a: Cost = 0;
            for len in 2..n {
                let prev = cur[(i + len - 2) % n];
                let x = cur[(i + len - 1) % n];
                let off = (pos_b[x] + n - pb) % n;
                max_off = max_off.max(off);
                cost_a += inst.travel(prev, x);
                if len < MIN_SEGMENT || max_off != len - 1 || off != len - 1 {
                    continue;
                }
                let cost_b = prefix[pb + len - 1] - prefix[pb];
                if cost_b >= cost_a {
                    continue;
                }
                let mut next = cur.clone();
                for k in 0..len {
                    next[(i + k) % n] = b[(pb + k) % n];
                }
                rotate_to(&mut next, depot);
                let p = penalty(&next);
                if p <= cur_pen {
                    cur = next;
                    cur_pen = p;
                    continue 'outer;
                }
            }
        }
        break;
    }
    cur
}
