//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use fibspec::{Interval, IntervalSet, Mat2, Model};
use rand::Rng;

/// Fibonacci word through `w_n = w_{n-1} w_{n-2}`, `w_{-1} = b`, `w_0 = a` (`true` = a).
pub fn word(n: i64) -> Vec<bool> {
    let (mut prev, mut cur) = (vec![false], vec![true]);
    if n < 0 {
        return prev;
    }
    for _ in 0..n {
        let next = [cur.as_slice(), prev.as_slice()].concat();
        prev = cur;
        cur = next;
    }
    cur
}

/// Transfer matrix over the word: first letter acts first.
pub fn word_matrix(m: &Model, n: i64, e: f64) -> Mat2 {
    let (ma, mb) = (m.piece_a.matrix(e), m.piece_b.matrix(e));
    word(n).iter().fold(Mat2::IDENTITY, |acc, &c| if c { ma.mul(&acc) } else { mb.mul(&acc) })
}

/// Sum of two sets computed on the grid `eps Z`: every grid point of `a`
/// is added to every run of grid points of `b`, marked in a difference array.
pub fn grid_minkowski(a: &IntervalSet, b: &IntervalSet, eps: f64) -> IntervalSet {
    if a.is_empty() || b.is_empty() {
        return IntervalSet::empty();
    }
    let idx = |x: f64| (x / eps).round() as i64;
    let runs = |s: &IntervalSet| s.intervals().iter().map(|iv| (idx(iv.lo), idx(iv.hi))).collect::<Vec<_>>();
    let (ra, rb) = (runs(a), runs(b));
    let lo = ra[0].0 + rb[0].0;
    let hi = ra.last().unwrap().1 + rb.last().unwrap().1;
    let mut diff = vec![0i64; (hi - lo + 2) as usize];
    for &(a0, a1) in &ra {
        for p in a0..=a1 {
            for &(b0, b1) in &rb {
                diff[(p + b0 - lo) as usize] += 1;
                diff[(p + b1 - lo + 1) as usize] -= 1;
            }
        }
    }
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = None;
    for (i, d) in diff.iter().enumerate() {
        depth += d;
        let x = (lo + i as i64) as f64 * eps;
        match (depth > 0, start) {
            (true, None) => start = Some(x),
            (false, Some(s)) => {
                out.push(Interval::new(s, x - eps).unwrap());
                start = None;
            }
            _ => {}
        }
    }
    IntervalSet::normalize(out).unwrap()
}

/// Random normalized set of at most `max_intervals` intervals inside `[lo, hi]`.
pub fn random_set<R: Rng>(rng: &mut R, max_intervals: usize, lo: f64, hi: f64) -> IntervalSet {
    let n = rng.gen_range(1..=max_intervals);
    let mut pts: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(lo..hi)).collect();
    pts.sort_by(f64::total_cmp);
    let ivs = pts.chunks(2).map(|c| Interval::new(c[0], c[1]).unwrap()).collect();
    IntervalSet::normalize(ivs).unwrap()
}
