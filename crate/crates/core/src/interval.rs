//! Finite unions of disjoint closed intervals.
//!
//! [`IntervalSet`] is the representation used for every spectrum, band set,
//! gap list and Minkowski sum in the crate. A set is always kept normalized:
//! intervals sorted by lower endpoint, pairwise disjoint, and separated by
//! gaps wider than the merge tolerance.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;

/// Two intervals closer than this (absolute) are merged by [`IntervalSet::normalize`].
pub const DEFAULT_MERGE_TOL: f64 = 1e-12;

/// Upper bound on the number of raw pairwise sums materialized per work unit
/// of [`IntervalSet::minkowski_sum`].
const SUM_BLOCK: usize = 1 << 18;

/// A closed interval `[lo, hi]`; `lo == hi` is a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(x, x)
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Whether the two closed intervals share at least one point.
    #[inline]
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Distance between the intervals, zero when they intersect.
    pub fn distance(&self, other: &Interval) -> f64 {
        if self.intersects(other) {
            0.0
        } else if self.hi < other.lo {
            other.lo - self.hi
        } else {
            self.lo - other.hi
        }
    }
}

impl TryFrom<(f64, f64)> for Interval {
    type Error = Error;

    fn try_from((lo, hi): (f64, f64)) -> Result<Self> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for (f64, f64) {
    fn from(i: Interval) -> Self {
        (i.lo, i.hi)
    }
}

fn by_endpoints(a: &Interval, b: &Interval) -> Ordering {
    a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi))
}

/// Sort and merge in place; `raw` must already hold valid intervals.
fn merge_sorted(mut raw: Vec<Interval>, merge_tol: f64) -> Vec<Interval> {
    raw.sort_unstable_by(by_endpoints);
    let mut out: Vec<Interval> = Vec::with_capacity(raw.len());
    for iv in raw {
        match out.last_mut() {
            Some(cur) if iv.lo <= cur.hi + merge_tol => cur.hi = cur.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// A normalized finite union of disjoint closed intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntervalSet")]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

#[derive(Deserialize)]
struct RawIntervalSet {
    intervals: Vec<Interval>,
}

impl TryFrom<RawIntervalSet> for IntervalSet {
    type Error = Error;

    fn try_from(raw: RawIntervalSet) -> Result<Self> {
        IntervalSet::normalize(raw.intervals)
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sort, validate and merge `raw` using [`DEFAULT_MERGE_TOL`].
    pub fn normalize(raw: Vec<Interval>) -> Result<Self> {
        Self::normalize_with(raw, DEFAULT_MERGE_TOL)
    }

    pub fn normalize_with(raw: Vec<Interval>, merge_tol: f64) -> Result<Self> {
        if let Some(bad) = raw.iter().find(|i| !i.lo.is_finite() || !i.hi.is_finite() || i.lo > i.hi) {
            return Err(Error::InvalidInterval { lo: bad.lo, hi: bad.hi });
        }
        Ok(Self { intervals: merge_sorted(raw, merge_tol) })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let raw = pairs.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect::<Result<Vec<_>>>()?;
        Self::normalize(raw)
    }

    pub fn single(iv: Interval) -> Self {
        Self { intervals: vec![iv] }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn into_intervals(self) -> Vec<Interval> {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.component_at_or_before(x).is_some_and(|i| self.intervals[i].contains(x))
    }

    /// Index of the last interval with `lo <= x`.
    fn component_at_or_before(&self, x: f64) -> Option<usize> {
        let idx = self.intervals.partition_point(|iv| iv.lo <= x);
        idx.checked_sub(1)
    }

    /// Distance from `x` to the set (infinite for the empty set).
    pub fn distance_to(&self, x: f64) -> f64 {
        if self.is_empty() {
            return f64::INFINITY;
        }
        let idx = self.intervals.partition_point(|iv| iv.lo <= x);
        let mut best = f64::INFINITY;
        if idx > 0 {
            let left = &self.intervals[idx - 1];
            best = best.min(if x <= left.hi { 0.0 } else { x - left.hi });
        }
        if idx < self.intervals.len() {
            best = best.min(self.intervals[idx].lo - x);
        }
        best
    }

    pub fn hull(&self) -> Result<Interval> {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(first), Some(last)) => Ok(Interval { lo: first.lo, hi: last.hi }),
            _ => Err(Error::EmptySet),
        }
    }

    pub fn diameter(&self) -> Result<f64> {
        self.hull().map(|h| h.width())
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::width).sum()
    }

    /// Closures of the bounded components of the complement, left to right.
    pub fn gaps(&self) -> Result<Vec<Interval>> {
        if self.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(self.intervals.windows(2).map(|w| Interval { lo: w[0].hi, hi: w[1].lo }).collect())
    }

    pub fn largest_gap(&self) -> Result<f64> {
        Ok(self.gaps()?.iter().map(Interval::width).fold(0.0, f64::max))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut raw = Vec::with_capacity(self.len() + other.len());
        raw.extend_from_slice(&self.intervals);
        raw.extend_from_slice(&other.intervals);
        IntervalSet { intervals: merge_sorted(raw, DEFAULT_MERGE_TOL) }
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(iv) = a[i].intersection(&b[j]) {
                out.push(iv);
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { intervals: merge_sorted(out, DEFAULT_MERGE_TOL) }
    }

    pub fn intersect_interval(&self, window: &Interval) -> IntervalSet {
        self.intersection(&IntervalSet::single(*window))
    }

    /// `{x + y : x in self, y in other}`.
    ///
    /// All pairwise interval sums are formed in fixed-size blocks of the
    /// left operand, each block is normalized independently, and the blocks
    /// are merged in index order.
    pub fn minkowski_sum(&self, other: &IntervalSet) -> IntervalSet {
        if self.is_empty() || other.is_empty() {
            return IntervalSet::empty();
        }
        let (outer, inner) = if self.len() >= other.len() {
            (&self.intervals, &other.intervals)
        } else {
            (&other.intervals, &self.intervals)
        };
        let rows = (SUM_BLOCK / inner.len()).max(1);
        let blocks = outer.len().div_ceil(rows);
        let parts = exec::map_indexed(blocks, |b| {
            let rows = &outer[b * rows..((b + 1) * rows).min(outer.len())];
            let mut raw = Vec::with_capacity(rows.len() * inner.len());
            for x in rows {
                raw.extend(inner.iter().map(|y| Interval { lo: x.lo + y.lo, hi: x.hi + y.hi }));
            }
            merge_sorted(raw, DEFAULT_MERGE_TOL)
        });
        IntervalSet { intervals: merge_sorted(parts.concat(), DEFAULT_MERGE_TOL) }
    }

    /// `d`-fold sum `self + self + ... + self`.
    pub fn minkowski_power(&self, d: usize) -> IntervalSet {
        match d {
            0 => IntervalSet::single(Interval { lo: 0.0, hi: 0.0 }),
            _ => (1..d).fold(self.clone(), |acc, _| acc.minkowski_sum(self)),
        }
    }

    /// Image under `x -> x^2`, defined for sets inside `[0, inf)`.
    pub fn square_image(&self) -> Result<IntervalSet> {
        if let Some(first) = self.intervals.first() {
            if first.lo < 0.0 {
                return Err(Error::NegativeDomain(first.lo));
            }
        }
        let raw = self.intervals.iter().map(|iv| Interval { lo: iv.lo * iv.lo, hi: iv.hi * iv.hi }).collect();
        Ok(IntervalSet { intervals: merge_sorted(raw, DEFAULT_MERGE_TOL) })
    }

    /// Image under `x -> alpha * x + beta` with `alpha > 0`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Result<IntervalSet> {
        if !(alpha > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "affine map needs finite alpha > 0, got alpha={alpha}, beta={beta}"
            )));
        }
        let raw =
            self.intervals.iter().map(|iv| Interval { lo: alpha * iv.lo + beta, hi: alpha * iv.hi + beta }).collect();
        Ok(IntervalSet { intervals: merge_sorted(raw, DEFAULT_MERGE_TOL) })
    }

    /// Closed `r`-neighbourhood of the set.
    pub fn dilate(&self, r: f64) -> IntervalSet {
        let raw = self.intervals.iter().map(|iv| Interval { lo: iv.lo - r, hi: iv.hi + r }).collect();
        IntervalSet { intervals: merge_sorted(raw, 0.0) }
    }

    /// True iff every point of `target` lies within `tol` of the set.
    pub fn covers_interval(&self, target: &Interval, tol: f64) -> bool {
        let grown = self.dilate(tol);
        grown
            .component_at_or_before(target.lo)
            .is_some_and(|i| grown.intervals[i].lo <= target.lo && target.hi <= grown.intervals[i].hi)
    }

    /// Whether `self` is contained in the `tol`-neighbourhood of `other`.
    pub fn is_subset_within(&self, other: &IntervalSet, tol: f64) -> bool {
        self.intervals.iter().all(|iv| other.covers_interval(iv, tol))
    }

    /// One-sided Hausdorff excess `sup_{x in self} dist(x, other)`.
    fn excess_over(&self, other: &IntervalSet) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        if other.is_empty() {
            return f64::INFINITY;
        }
        // dist(., other) is piecewise linear with maxima at our endpoints or at
        // midpoints of other's gaps.
        let mut worst =
            self.intervals.iter().flat_map(|iv| [iv.lo, iv.hi]).map(|x| other.distance_to(x)).fold(0.0, f64::max);
        for w in other.intervals.windows(2) {
            let mid = 0.5 * (w[0].hi + w[1].lo);
            if self.contains(mid) {
                worst = worst.max(other.distance_to(mid));
            }
        }
        worst
    }

    /// Hausdorff distance between two sets (0 for two empty sets).
    pub fn hausdorff_distance(&self, other: &IntervalSet) -> f64 {
        self.excess_over(other).max(other.excess_over(self))
    }
}
