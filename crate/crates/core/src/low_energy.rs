//! Low-energy structure of `Σ` and `Σ + ... + Σ` below the cutoff `E_0`.

use serde::{Deserialize, Serialize};

use crate::cantor::{box_dimension, DimensionEstimate};
use crate::error::{Error, Result};
use crate::exec;
use crate::interval::{Interval, IntervalSet};
use crate::spectrum::{approximant, rayleigh_bound};
use crate::transfer::Model;

/// Band edges at strong coupling sit far below `1e-9` apart; resolve them.
pub const DEFAULT_TOL: f64 = 1e-12;
pub const FIRST_LEVEL: usize = 4;
const FLOOR_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowEnergyOptions {
    /// Number of summands; the dimension threshold is `1/d`.
    pub d: usize,
    pub scale_lo: f64,
    pub scale_hi: f64,
    pub n_scales: usize,
}

impl Default for LowEnergyOptions {
    fn default() -> Self {
        Self { d: 2, scale_lo: 1e-6, scale_hi: 1e-1, n_scales: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMeasure {
    pub k: usize,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowEnergyReport {
    pub lambda: Option<f64>,
    pub level: usize,
    pub tol: f64,
    pub d: usize,
    pub threshold: f64,
    pub e0: f64,
    /// `e0`, moved left past any degenerate component touching it.
    pub cutoff: f64,
    pub isolated_points: Vec<f64>,
    pub witness_band: Interval,
    pub dim_estimate: DimensionEstimate,
    pub slope_below_threshold: bool,
    /// Measure of the `d`-fold sum inside `[0, cutoff]`, levels 4..=k.
    pub sum_measure_by_level: Vec<LevelMeasure>,
    /// Smallest invariant sampled on the bands inside `[0, cutoff]`.
    pub invariant_floor: f64,
}

/// Degenerate components (width below `2 tol`) of `s ∩ [0, e0]` touching `e0`.
pub fn isolated_point_scan(s: &IntervalSet, e0: f64, tol: f64) -> Vec<f64> {
    let Ok(window) = Interval::new(0.0, e0) else {
        return Vec::new();
    };
    s.intersect_interval(&window)
        .intervals()
        .iter()
        .filter(|iv| iv.width() < 2.0 * tol && iv.hi >= e0 - 2.0 * tol)
        .map(|iv| iv.lo)
        .collect()
}

/// Cutoff `E_0 = 24 / l_a^2` from the zero piece `a`.
fn cutoff_for(m: &Model) -> Result<f64> {
    match m.piece_a.segments() {
        [s] if s.value == 0.0 => Ok(rayleigh_bound(s.length)?.1),
        _ => Err(Error::InvalidArgument("the low-energy bound needs a constant zero piece a".into())),
    }
}

pub fn low_energy_report(m: &Model, k: usize, tol: f64, opts: &LowEnergyOptions) -> Result<LowEnergyReport> {
    if k < FIRST_LEVEL {
        return Err(Error::InvalidArgument(format!("level must be at least {FIRST_LEVEL}, got {k}")));
    }
    if opts.d < 1 {
        return Err(Error::InvalidArgument("need at least one summand".into()));
    }
    let e0 = cutoff_for(m)?;
    let top = approximant(m, k, Interval::new(0.0, e0)?, tol)?;
    let isolated_points = isolated_point_scan(&top.set, e0, tol);
    let cutoff = isolated_points.iter().fold(e0, |c, &p| c.min(p - 2.0 * tol));
    let window = Interval::new(0.0, cutoff)?;

    let first = *top.set.intervals().first().ok_or(Error::MissedLowBand)?;
    let witness_band = first.intersection(&Interval::new(0.0, 0.5 * e0)?).ok_or(Error::MissedLowBand)?;

    let low = top.set.intersect_interval(&window);
    let diam = low.diameter()?;
    let dim_estimate = box_dimension(&low, opts.scale_lo, opts.scale_hi.min(diam), opts.n_scales)?;
    let threshold = 1.0 / opts.d as f64;

    let levels: Vec<usize> = (FIRST_LEVEL..=k).collect();
    let measures = exec::map_slice(&levels, |&j| -> Result<LevelMeasure> {
        let a = if j == k { top.set.clone() } else { approximant(m, j, Interval::new(0.0, e0)?, tol)?.set };
        let measure = a.intersect_interval(&window).minkowski_power(opts.d).intersect_interval(&window).measure();
        Ok(LevelMeasure { k: j, measure })
    });
    let sum_measure_by_level = measures.into_iter().collect::<Result<Vec<_>>>()?;

    let floors = exec::map_slice(low.intervals(), |b| {
        (0..=FLOOR_SAMPLES)
            .map(|i| m.invariant(b.lo + b.width() * i as f64 / FLOOR_SAMPLES as f64))
            .fold(f64::INFINITY, f64::min)
    });
    let invariant_floor = floors.into_iter().fold(f64::INFINITY, f64::min);

    Ok(LowEnergyReport {
        lambda: m.canonical_lambda(),
        level: k,
        tol,
        d: opts.d,
        threshold,
        e0,
        cutoff,
        isolated_points,
        witness_band,
        slope_below_threshold: dim_estimate.slope < threshold,
        dim_estimate,
        sum_measure_by_level,
        invariant_floor,
    })
}

/// Reports for the canonical model over a list of couplings.
pub fn lambda_sweep(lambdas: &[f64], k: usize, tol: f64, opts: &LowEnergyOptions) -> Result<Vec<LowEnergyReport>> {
    lambdas.iter().map(|&l| low_energy_report(&Model::canonical(l), k, tol, opts)).collect()
}

/// Coupling where the measured slope first drops below the threshold,
/// linearly interpolated between neighbouring sweep points. Empirical only.
pub fn empirical_threshold(reports: &[LowEnergyReport]) -> Option<f64> {
    let mut pts: Vec<(f64, f64, f64)> =
        reports.iter().filter_map(|r| r.lambda.map(|l| (l, r.dim_estimate.slope, r.threshold))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2).find(|w| w[0].1 >= w[0].2 && w[1].1 < w[1].2).map(|w| {
        let ((l0, s0, th), (l1, s1, _)) = (w[0], w[1]);
        l0 + (l1 - l0) * (s0 - th) / (s0 - s1)
    })
}
