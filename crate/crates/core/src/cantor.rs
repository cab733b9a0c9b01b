//! Thickness, the gap-lemma sum test, and box-counting dimension for
//! finite unions of intervals.
//!
//! Thickness here is that of the finite union itself: its gaps are the
//! bounded components of the complement in the hull, and a bridge is the
//! component of the hull, minus the gaps removed so far, that touches the
//! gap being removed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::interval::{Interval, IntervalSet};
use crate::serde_ext::inf_f64;

/// Default cap on the number of gaps for the exhaustive search.
pub const DEFAULT_MAX_GAPS: usize = 7;

/// Bridge-to-gap ratios seen when a gap is removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRatio {
    pub gap: Interval,
    pub left_ratio: f64,
    pub right_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessReport {
    /// `+inf` for a set without gaps.
    #[serde(with = "inf_f64")]
    pub tau: f64,
    /// Gap indices (left to right numbering) in removal order.
    pub presentation: Vec<usize>,
    /// Ratios in removal order.
    pub per_gap_ratios: Vec<GapRatio>,
}

/// Ratios realised by removing `gaps` in the order `order`.
fn ratios_for(hull: Interval, gaps: &[Interval], order: &[usize]) -> Vec<GapRatio> {
    let mut removed = BTreeSet::new();
    order
        .iter()
        .map(|&i| {
            let g = gaps[i];
            let left_end = removed.range(..i).next_back().map_or(hull.lo, |&j: &usize| gaps[j].hi);
            let right_end = removed.range(i + 1..).next().map_or(hull.hi, |&j: &usize| gaps[j].lo);
            removed.insert(i);
            GapRatio { gap: g, left_ratio: (g.lo - left_end) / g.width(), right_ratio: (right_end - g.hi) / g.width() }
        })
        .collect()
}

fn min_ratio(ratios: &[GapRatio]) -> f64 {
    ratios.iter().map(|r| r.left_ratio.min(r.right_ratio)).fold(f64::INFINITY, f64::min)
}

fn report(hull: Interval, gaps: &[Interval], order: Vec<usize>) -> ThicknessReport {
    let per_gap_ratios = ratios_for(hull, gaps, &order);
    ThicknessReport { tau: min_ratio(&per_gap_ratios), presentation: order, per_gap_ratios }
}

/// Thickness using the presentation by decreasing gap length, ties left to right.
pub fn thickness(a: &IntervalSet) -> Result<ThicknessReport> {
    let hull = a.hull()?;
    let gaps = a.gaps()?;
    let mut order: Vec<usize> = (0..gaps.len()).collect();
    order.sort_by(|&i, &j| gaps[j].width().total_cmp(&gaps[i].width()).then(i.cmp(&j)));
    Ok(report(hull, &gaps, order))
}

/// Next permutation in lexicographic order; false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("pivot has a larger successor");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Exact thickness of the finite union: the best presentation over all gap orderings.
pub fn thickness_bruteforce(a: &IntervalSet, max_gaps: usize) -> Result<ThicknessReport> {
    let hull = a.hull()?;
    let gaps = a.gaps()?;
    if gaps.len() > max_gaps {
        return Err(Error::TooManyGaps { found: gaps.len(), max: max_gaps });
    }
    let mut perm: Vec<usize> = (0..gaps.len()).collect();
    let mut best = (f64::NEG_INFINITY, perm.clone());
    loop {
        let tau = min_ratio(&ratios_for(hull, &gaps, &perm));
        if tau > best.0 {
            best = (tau, perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(report(hull, &gaps, best.1))
}

/// Gap-lemma hypotheses on two finite unions: `tau(c) tau(k) > 1` and each
/// largest gap at most the other set's diameter. Empty sets fail.
pub fn newhouse_sum_check(c: &IntervalSet, k: &IntervalSet) -> bool {
    let parts = || -> Result<bool> {
        let product = thickness(c)?.tau * thickness(k)?.tau;
        Ok(product > 1.0 && c.largest_gap()? <= k.diameter()? && k.largest_gap()? <= c.diameter()?)
    };
    parts().unwrap_or(false)
}

/// Box counts at geometric scales and the least-squares slope of `log N` on `log(1/eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Strictly decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Index of the grid cell containing `x`, treating values within 1e-9 of a
/// cell boundary as on it.
fn cell(x: f64) -> (i64, bool) {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        (r as i64, true)
    } else {
        (x.floor() as i64, false)
    }
}

/// Number of cells `[h + j eps, h + (j+1) eps)` meeting `a`; an interval
/// ending exactly on a boundary does not claim the next cell.
pub fn box_count(a: &IntervalSet, anchor: f64, eps: f64) -> u64 {
    let mut count = 0u64;
    let mut last: Option<i64> = None;
    for iv in a.intervals() {
        let (j_lo, _) = cell((iv.lo - anchor) / eps);
        let (h, on_edge) = cell((iv.hi - anchor) / eps);
        let j_hi = if on_edge { h - 1 } else { h }.max(j_lo);
        let start = last.map_or(j_lo, |l| j_lo.max(l + 1));
        if j_hi >= start {
            count += (j_hi - start + 1) as u64;
        }
        last = Some(last.map_or(j_hi, |l| l.max(j_hi)));
    }
    count
}

pub fn box_dimension(a: &IntervalSet, scale_lo: f64, scale_hi: f64, n_scales: usize) -> Result<DimensionEstimate> {
    let hull = a.hull()?;
    let degenerate = || Error::DegenerateScales { lo: scale_lo, hi: scale_hi, n: n_scales };
    if !(scale_lo > 0.0 && scale_lo < scale_hi && scale_hi <= hull.width() && n_scales >= 3) {
        return Err(degenerate());
    }
    let ratio = scale_lo / scale_hi;
    let scales: Vec<f64> = (0..n_scales)
        .map(|i| match i {
            0 => scale_hi,
            i if i == n_scales - 1 => scale_lo,
            i => scale_hi * ratio.powf(i as f64 / (n_scales - 1) as f64),
        })
        .collect();
    let counts = exec::map_slice(&scales, |&eps| box_count(a, hull.lo, eps));
    let xs: Vec<f64> = scales.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    Ok(DimensionEstimate { scales, counts, slope, intercept, r2 })
}

/// Ordinary least squares `y = slope x + intercept` and its `R^2`
/// (1 when `y` is constant and fitted exactly).
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Level-`n` approximant of the Cantor set that keeps `[0, keep]` and
/// `[1 - keep, 1]` of every interval (`keep = 1/3`: middle thirds;
/// `keep = 2/5`: middle fifth).
pub fn symmetric_cantor(keep: f64, level: u32) -> Result<IntervalSet> {
    if !(keep > 0.0 && keep < 0.5) {
        return Err(Error::InvalidArgument(format!("keep fraction must lie in (0, 1/2), got {keep}")));
    }
    let mut ivs = vec![Interval { lo: 0.0, hi: 1.0 }];
    for _ in 0..level {
        ivs = ivs
            .iter()
            .flat_map(|iv| {
                let w = iv.width() * keep;
                [Interval { lo: iv.lo, hi: iv.lo + w }, Interval { lo: iv.hi - w, hi: iv.hi }]
            })
            .collect();
    }
    IntervalSet::normalize(ivs)
}
