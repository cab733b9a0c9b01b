//! Half-line coverage of `Σ + Σ` on truncated spectra.
//!
//! Two independent paths: a certificate built from thickness of the
//! spectral pieces `K_n` inside t-windows `J_n` (squared, then summed and
//! chained), and a direct Minkowski sum of the energy spectrum.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::cantor::thickness;
use crate::error::{Error, Result};
use crate::exec;
use crate::interval::{Interval, IntervalSet};
use crate::serde_ext::{inf_f64, inf_f64_vec};
use crate::spectrum::{SpectrumApproximant, Variable};
use crate::transfer::{invariant_closed_form_limit, log_derivative_invariant, Model};

pub const DEFAULT_TRIM: f64 = 0.3;

/// Placement of the t-windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowScheme {
    /// `J_n = [n pi + trim, (n + 1) pi - trim]`.
    #[default]
    HalfPeriods,
    /// `J_n = [2 n pi + trim, (2 n + 1) pi - trim]`; windows sit a full
    /// half period apart, so consecutive pieces never chain.
    EvenHalfPeriods,
}

impl WindowScheme {
    pub fn window(self, n: i64, trim: f64) -> Result<Interval> {
        if !(trim > 0.0 && trim.is_finite()) {
            return Err(Error::InvalidArgument(format!("trim must be positive, got {trim}")));
        }
        if trim >= FRAC_PI_2 {
            return Err(Error::TrimTooLarge(trim));
        }
        let start = match self {
            WindowScheme::HalfPeriods => n as f64 * PI,
            WindowScheme::EvenHalfPeriods => 2.0 * n as f64 * PI,
        };
        Interval::new(start + trim, start + PI - trim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub n: i64,
    pub j: Interval,
    pub k: IntervalSet,
}

/// Spectral pieces `K_n` inside their windows `J_n`; windows with empty
/// `K_n` are listed in `empty` and left out of `windows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFamily {
    pub scheme: Option<WindowScheme>,
    pub windows: Vec<Window>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub empty: Vec<i64>,
    #[serde(skip)]
    pub model: Option<Model>,
}

impl WindowFamily {
    /// Family from explicit pieces. Each `K_n` must lie in its `J_n` and `n`
    /// must increase; `alpha`/`beta` record how far the hull of `K_n` sits
    /// inside `J_n`.
    pub fn from_windows(windows: Vec<Window>) -> Result<Self> {
        if windows.windows(2).any(|w| w[1].n <= w[0].n) {
            return Err(Error::InvalidArgument("window indices must increase".into()));
        }
        let mut kept = Vec::new();
        let mut empty = Vec::new();
        for w in windows {
            if w.k.is_empty() {
                empty.push(w.n);
            } else if !w.k.is_subset_within(&IntervalSet::single(w.j), 0.0) {
                return Err(Error::InvalidArgument(format!("K_{} is not inside its window", w.n)));
            } else {
                kept.push(w);
            }
        }
        let alpha = kept.iter().map(|w| w.k.intervals()[0].lo - w.j.lo).collect();
        let beta = kept.iter().map(|w| w.j.hi - w.k.intervals().last().unwrap().hi).collect();
        Ok(Self { scheme: None, windows: kept, alpha, beta, empty, model: None })
    }
}

/// Cut a t-spectrum into windows `n_lo..=n_hi`.
pub fn decompose_windows(
    spec_t: &SpectrumApproximant,
    n_lo: i64,
    n_hi: i64,
    trim: f64,
    scheme: WindowScheme,
) -> Result<WindowFamily> {
    if spec_t.variable != Variable::TParam {
        return Err(Error::InvalidArgument("windows are cut from a spectrum in t".into()));
    }
    if n_lo > n_hi {
        return Err(Error::InvalidArgument(format!("empty window range {n_lo}..{n_hi}")));
    }
    let mut windows = Vec::new();
    let mut empty = Vec::new();
    for n in n_lo..=n_hi {
        let j = scheme.window(n, trim)?;
        if j.lo < spec_t.range.lo || j.hi > spec_t.range.hi {
            return Err(Error::InvalidArgument(format!(
                "window J_{n} = [{}, {}] leaves the computed range [{}, {}]",
                j.lo, j.hi, spec_t.range.lo, spec_t.range.hi
            )));
        }
        let k = spec_t.set.intersect_interval(&j);
        if k.is_empty() {
            empty.push(n);
        } else {
            windows.push(Window { n, j, k });
        }
    }
    let m = windows.len();
    Ok(WindowFamily {
        scheme: Some(scheme),
        windows,
        alpha: vec![trim; m],
        beta: vec![trim; m],
        empty,
        model: Some(spec_t.model.clone()),
    })
}

/// Hypothesis of the abstract coverage lemma that a family can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Hulls `I_n` disjoint and increasing.
    DisjointHulls,
    /// `tau(K_n) > 1 + eps` for some `eps > 0`.
    Thickness,
    /// `2A >= |I_n| >= A` and `dist(I_n, I_{n+1}) <= a` with `A > a`.
    Scales,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub condition: Condition,
    pub n: Option<i64>,
    pub detail: String,
}

/// One link of the overlap chain: `J_n = K~_n + K~_n`, `J'_n = K~_n + K~_{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub n: i64,
    pub j_n: Interval,
    pub j_n_prime: Interval,
    pub overlap_ok: bool,
    /// Gap of `J_n` or `J'_n` when a sum is not a single interval.
    pub gap: Option<Interval>,
}

/// Per-window quantities, including the analytic diagnostics for the
/// canonical model (invariant on the window and its log-derivative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub n: i64,
    pub hull: Interval,
    pub intervals: usize,
    pub measure: f64,
    pub largest_gap: f64,
    #[serde(with = "inf_f64")]
    pub tau: f64,
    #[serde(with = "inf_f64")]
    pub tau_squared: f64,
    pub invariant_min: Option<f64>,
    pub log_derivative_max: Option<f64>,
}

/// First window index from which each recomputed inequality holds for
/// every later window (`None`: fails at the last window).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FirstHolding {
    pub thickness_above_one: Option<i64>,
    pub squared_thickness_at_least_one: Option<i64>,
    pub self_sum_interval: Option<i64>,
    pub pair_sum_interval: Option<i64>,
    pub overlaps: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSCertificate {
    #[serde(with = "inf_f64")]
    pub epsilon: f64,
    pub a_cap: f64,
    pub a_gap: f64,
    #[serde(with = "inf_f64_vec")]
    pub thickness_list: Vec<f64>,
    #[serde(with = "inf_f64_vec")]
    pub squared_thickness_list: Vec<f64>,
    pub chain: Vec<ChainLink>,
    /// Left end of the first `J_n` from which every later link holds.
    pub e1: Option<f64>,
    pub e_max: f64,
    pub conditions_ok: bool,
    pub chain_ok: bool,
    pub valid: bool,
    pub failures: Vec<Failure>,
    /// Index of the first broken link or rejected window.
    pub chain_break: Option<i64>,
    pub first_holding: FirstHolding,
    pub empty_windows: Vec<i64>,
    pub windows: Vec<WindowDiagnostics>,
}

const DIAGNOSTIC_SAMPLES: usize = 256;

fn analytic_diagnostics(model: Option<&Model>, j: &Interval) -> (Option<f64>, Option<f64>) {
    let Some(lambda) = model.and_then(Model::canonical_lambda) else {
        return (None, None);
    };
    let mut inv_min = f64::INFINITY;
    let mut ld_max = 0.0f64;
    for i in 0..=DIAGNOSTIC_SAMPLES {
        let t = j.lo + j.width() * i as f64 / DIAGNOSTIC_SAMPLES as f64;
        inv_min = inv_min.min(invariant_closed_form_limit(lambda, t * t));
        if let Ok(d) = log_derivative_invariant(lambda, t) {
            ld_max = ld_max.max(d.abs());
        }
    }
    (Some(inv_min), (lambda != 0.0).then_some(ld_max))
}

/// Conditions (disjoint hulls, thickness, scales) on the windows; chain
/// fields stay empty until [`verify_half_line`].
pub fn check_abs_conditions(w: &WindowFamily) -> Result<BSCertificate> {
    if w.windows.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nonempty windows, found {}", w.windows.len())));
    }
    let per = exec::map_slice(&w.windows, |win| -> Result<WindowDiagnostics> {
        let hull = win.k.hull()?;
        let (invariant_min, log_derivative_max) = analytic_diagnostics(w.model.as_ref(), &win.j);
        let tau_squared = if hull.lo >= 0.0 { thickness(&win.k.square_image()?)?.tau } else { f64::NAN };
        Ok(WindowDiagnostics {
            n: win.n,
            hull,
            intervals: win.k.len(),
            measure: win.k.measure(),
            largest_gap: win.k.largest_gap()?,
            tau: thickness(&win.k)?.tau,
            tau_squared,
            invariant_min,
            log_derivative_max,
        })
    });
    let windows = per.into_iter().collect::<Result<Vec<_>>>()?;

    let mut failures = Vec::new();
    for p in windows.windows(2) {
        if p[1].hull.lo <= p[0].hull.hi {
            failures.push(Failure {
                condition: Condition::DisjointHulls,
                n: Some(p[1].n),
                detail: format!("I_{} meets or precedes I_{}", p[1].n, p[0].n),
            });
        }
    }

    let thickness_list: Vec<f64> = windows.iter().map(|d| d.tau).collect();
    let epsilon = thickness_list.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    if let Some(d) = windows.iter().find(|d| d.tau <= 1.0) {
        failures.push(Failure {
            condition: Condition::Thickness,
            n: Some(d.n),
            detail: format!("tau(K_{}) = {} is not above 1", d.n, d.tau),
        });
    }

    let a_cap = windows.iter().map(|d| d.hull.width()).fold(f64::INFINITY, f64::min);
    let a_gap = windows.windows(2).map(|p| p[1].hull.lo - p[0].hull.hi).fold(0.0, f64::max);
    if let Some(d) = windows.iter().find(|d| d.hull.width() > 2.0 * a_cap) {
        failures.push(Failure {
            condition: Condition::Scales,
            n: Some(d.n),
            detail: format!("|I_{}| = {} exceeds 2A = {}", d.n, d.hull.width(), 2.0 * a_cap),
        });
    }
    if a_gap >= a_cap || a_cap <= 0.0 {
        let at = windows.windows(2).find(|p| p[1].hull.lo - p[0].hull.hi >= a_cap).map(|p| p[1].n);
        failures.push(Failure {
            condition: Condition::Scales,
            n: at,
            detail: format!("need A > a, found A = {a_cap}, a = {a_gap}"),
        });
    }

    let squared_thickness_list = windows.iter().map(|d| d.tau_squared).collect();
    Ok(BSCertificate {
        epsilon,
        a_cap,
        a_gap,
        thickness_list,
        squared_thickness_list,
        chain: Vec::new(),
        e1: None,
        e_max: f64::NAN,
        conditions_ok: failures.is_empty(),
        chain_ok: false,
        valid: false,
        failures,
        chain_break: None,
        first_holding: FirstHolding::default(),
        empty_windows: w.empty.clone(),
        windows,
    })
}

/// Sum as one interval, or the first gap.
fn single(s: &IntervalSet) -> std::result::Result<Interval, Interval> {
    match s.intervals() {
        [one] => Ok(*one),
        ivs => Err(Interval { lo: ivs[0].hi, hi: ivs[1].lo }),
    }
}

/// Smallest index `n` from which `holds` is true for every later entry.
fn first_holding_from(ns: &[i64], holds: &[bool]) -> Option<i64> {
    let tail = holds.iter().rev().take_while(|&&h| h).count();
    (tail > 0).then(|| ns[ns.len() - tail])
}

/// Square the pieces, form `J_n` and `J'_n`, and check the overlap chain.
pub fn verify_half_line(w: &WindowFamily, cert: BSCertificate) -> Result<BSCertificate> {
    let mut cert = cert;
    let squares = exec::map_slice(&w.windows, |win| win.k.square_image());
    let squares = squares.into_iter().collect::<Result<Vec<_>>>()?;
    let m = squares.len();
    let selfs = exec::map_slice(&squares, |s| s.minkowski_sum(s));
    let pairs = exec::map_indexed(m - 1, |i| squares[i].minkowski_sum(&squares[i + 1]));
    let ns: Vec<i64> = w.windows.iter().map(|win| win.n).collect();

    let sq_ok: Vec<bool> = cert.squared_thickness_list.iter().map(|&t| t >= 1.0).collect();
    let self_ok: Vec<bool> = selfs.iter().map(|s| s.len() == 1).collect();
    // a pair link belongs to its left window; the last window has none
    let mut pair_ok = vec![true; m];
    let mut overlap_ok = vec![true; m];
    let mut chain = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        let (jn, jp, jnext) = (single(&selfs[i]), single(&pairs[i]), single(&selfs[i + 1]));
        pair_ok[i] = jp.is_ok();
        let overlap = match (jn, jp, jnext) {
            (Ok(a), Ok(b), Ok(c)) => a.intersects(&b) && b.intersects(&c),
            _ => false,
        };
        overlap_ok[i] = overlap;
        let hull = |s: &IntervalSet| s.hull().expect("nonempty sum");
        chain.push(ChainLink {
            n: ns[i],
            j_n: hull(&selfs[i]),
            j_n_prime: hull(&pairs[i]),
            overlap_ok: overlap,
            gap: jn.err().or(jp.err()),
        });
    }
    let tau_ok: Vec<bool> = cert.thickness_list.iter().map(|&t| t > 1.0).collect();
    cert.first_holding = FirstHolding {
        thickness_above_one: first_holding_from(&ns, &tau_ok),
        squared_thickness_at_least_one: first_holding_from(&ns, &sq_ok),
        self_sum_interval: first_holding_from(&ns, &self_ok),
        pair_sum_interval: first_holding_from(&ns, &pair_ok),
        overlaps: first_holding_from(&ns, &overlap_ok),
    };

    let all_ok: Vec<bool> = (0..m).map(|i| sq_ok[i] && self_ok[i] && pair_ok[i] && overlap_ok[i]).collect();
    let tail = all_ok.iter().rev().take_while(|&&h| h).count();
    cert.e_max = selfs[m - 1].hull()?.hi;
    cert.e1 = (tail > 0).then(|| selfs[m - tail].hull().expect("nonempty sum").lo);
    cert.chain_break = all_ok.iter().position(|&h| !h).map(|i| ns[i]);
    cert.chain_ok = tail == m;
    cert.valid = cert.conditions_ok && cert.chain_ok;
    cert.chain = chain;
    Ok(cert)
}

/// Windows, conditions and chain in one call.
pub fn certify(
    spec_t: &SpectrumApproximant,
    n_lo: i64,
    n_hi: i64,
    trim: f64,
    scheme: WindowScheme,
) -> Result<(WindowFamily, BSCertificate)> {
    let family = decompose_windows(spec_t, n_lo, n_hi, trim, scheme)?;
    let cert = check_abs_conditions(&family)?;
    let cert = verify_half_line(&family, cert)?;
    Ok((family, cert))
}

/// Gap-free tail of `S = Σ + Σ` found by direct summation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectTail {
    pub e1: f64,
    pub covered: Interval,
    /// `2 e_max` minus the width of the last band; sums above are truncation artifacts.
    pub e_safe: f64,
    pub tol: f64,
}

/// Smallest `e1` with `[e1, e_safe]` covered by `Σ + Σ` up to `tol`.
pub fn direct_sum_tail(spec_e: &SpectrumApproximant, tol: f64) -> Result<DirectTail> {
    if spec_e.variable != Variable::Energy {
        return Err(Error::InvalidArgument("direct summation needs a spectrum in E".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let last = *spec_e.set.intervals().last().ok_or(Error::EmptySet)?;
    let e_safe = 2.0 * spec_e.e_max - last.width();
    let s = spec_e.set.minkowski_sum(&spec_e.set);
    let hull = s.hull()?;
    let gaps = s.gaps()?;
    let last_gap = gaps.iter().rev().find(|g| g.lo < e_safe && g.width() > 2.0 * tol);
    let e1 = last_gap.map_or(hull.lo, |g| g.hi);
    if hull.hi + tol < e_safe {
        return Err(Error::NoGapFreeTail { e_safe, gap_lo: hull.hi, gap_hi: e_safe });
    }
    if let Some(g) = last_gap.filter(|g| g.hi >= e_safe) {
        return Err(Error::NoGapFreeTail { e_safe, gap_lo: g.lo, gap_hi: g.hi });
    }
    Ok(DirectTail { e1, covered: Interval { lo: e1, hi: e_safe }, e_safe, tol })
}
