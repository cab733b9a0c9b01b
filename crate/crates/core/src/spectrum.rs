//! Finite-level spectral approximants.
//!
//! The level-`n` band set is `B_n = {E : |x_n(E)| <= 1}`, where `x_n` is the
//! half-trace of the transfer matrix over the Fibonacci word `S^n(a)`, i.e.
//! the discriminant of the periodic operator with that word as its cell.
//! The level-`k` approximant of the spectrum is `B_k ∪ B_{k+1}`.
//!
//! Bands are located without a sampling grid. The Dirichlet eigenvalues of
//! the periodic cell are found by Sturm oscillation counting; exactly one of
//! them sits in the closure of each spectral gap, so consecutive Dirichlet
//! eigenvalues bracket exactly one band. Inside a bracket the discriminant
//! changes sign once, and the band edges are the two crossings of
//! `|x_n| = 1` on either side of that zero, found by bisection on the trace
//! recursion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::interval::{Interval, IntervalSet};
use crate::trace::trace_at_level;
use crate::transfer::{constant_piece_matrix, Model, Segment};

/// Default band-edge tolerance in the energy variable.
pub const DEFAULT_TOL_E: f64 = 1e-9;
/// Default band-edge tolerance in the `t = sqrt(E)` variable.
pub const DEFAULT_TOL_T: f64 = 1e-10;

/// Dirichlet eigenvalue searches per work unit, roughly.
const BANDS_PER_UNIT: u64 = 32;
const MAX_UNITS: u64 = 512;
/// Smallest excess of `|x_n|` over 1 that marks a gap as open; the floor
/// grows with the squared word length to absorb rounding in the traces.
pub const GAP_FLOOR: f64 = 1e-12;

/// The spectral variable an approximant is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "E")]
    Energy,
    #[serde(rename = "t")]
    TParam,
}

impl Variable {
    fn energy(self, p: f64) -> f64 {
        match self {
            Variable::Energy => p,
            Variable::TParam => p * p,
        }
    }
}

/// `B_k ∪ B_{k+1}` on a bounded window, with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ApproximantRepr", into = "ApproximantRepr")]
pub struct SpectrumApproximant {
    pub set: IntervalSet,
    pub level: usize,
    pub variable: Variable,
    /// Window the set was computed on, in `variable`.
    pub range: Interval,
    /// Upper energy truncation; nothing is claimed above it.
    pub e_max: f64,
    pub tol: f64,
    pub model: Model,
}

#[derive(Serialize, Deserialize)]
struct ApproximantRepr {
    level: usize,
    variable: Variable,
    range: Interval,
    e_max: f64,
    tol: f64,
    model: Model,
    intervals: Vec<Interval>,
}

impl TryFrom<ApproximantRepr> for SpectrumApproximant {
    type Error = Error;

    fn try_from(r: ApproximantRepr) -> Result<Self> {
        Ok(Self {
            set: IntervalSet::normalize(r.intervals)?,
            level: r.level,
            variable: r.variable,
            range: r.range,
            e_max: r.e_max,
            tol: r.tol,
            model: r.model,
        })
    }
}

impl From<SpectrumApproximant> for ApproximantRepr {
    fn from(s: SpectrumApproximant) -> Self {
        Self {
            level: s.level,
            variable: s.variable,
            range: s.range,
            e_max: s.e_max,
            tol: s.tol,
            model: s.model,
            intervals: s.set.into_intervals(),
        }
    }
}

impl SpectrumApproximant {
    /// The set expressed in energy (squares a `t`-variable set).
    pub fn energy_set(&self) -> Result<IntervalSet> {
        match self.variable {
            Variable::Energy => Ok(self.set.clone()),
            Variable::TParam => self.set.square_image(),
        }
    }
}

/// Letters of `S^n(a)` for the substitution `a -> ab, b -> a`; `n = -1` gives `b`.
pub fn fibonacci_word(n: i64) -> Vec<bool> {
    // true = a, false = b
    match n {
        ..=-1 => vec![false],
        _ => {
            let mut w = vec![true];
            for _ in 0..n {
                w = w.iter().flat_map(|&c| if c { vec![true, false] } else { vec![true] }).collect();
            }
            w
        }
    }
}

/// One level of the discriminant, prepared for repeated evaluation.
struct Discriminant<'a> {
    model: &'a Model,
    level: i64,
    variable: Variable,
    /// Letters of the period cell, `true` for `a`.
    word: Vec<bool>,
    /// Excess of `|x_n|` over 1 attributable to rounding in the initial traces.
    noise_floor: f64,
}

/// Per-segment data at a fixed energy: transfer matrix, full half-turns of
/// the Prüfer angle, and the sign those half-turns put on `u`.
struct SegmentStep {
    m: [f64; 4],
    half_turns: i64,
    flip: f64,
}

fn segment_steps(segments: &[Segment], energy: f64) -> Vec<SegmentStep> {
    segments
        .iter()
        .map(|s| {
            let d = energy - s.value;
            let m = constant_piece_matrix(s.value, s.length, energy);
            let half_turns = if d > 0.0 { (d.sqrt() * s.length / PI).floor() as i64 } else { 0 };
            let flip = if half_turns % 2 == 0 { 1.0 } else { -1.0 };
            SegmentStep { m: [m.m11, m.m12, m.m21, m.m22], half_turns, flip }
        })
        .collect()
}

impl<'a> Discriminant<'a> {
    fn new(model: &'a Model, level: i64, variable: Variable) -> Self {
        let word = fibonacci_word(level);
        let letters = word.len() as f64;
        Self { model, level, variable, word, noise_floor: GAP_FLOOR.max(16.0 * f64::EPSILON * letters * letters) }
    }

    /// `x_n` at parameter `p`, clamped at the overflow guard.
    fn value(&self, p: f64) -> f64 {
        trace_at_level(self.model.initial_traces(self.variable.energy(p)), self.level)
    }

    fn inside(&self, p: f64) -> bool {
        self.value(p).abs() <= 1.0
    }

    /// Number of zeros in the open cell of the solution with `u(0) = 0, u'(0) = 1`,
    /// which equals the number of Dirichlet eigenvalues of the cell below `E(p)`.
    ///
    /// Across a segment with `k = sqrt(E - v) > 0` the Prüfer angle turns by
    /// `k l`: every full half-turn adds one zero, and the remaining rotation,
    /// being shorter than `pi`, adds one more exactly when `u` changes sign
    /// after undoing the half-turn flips. Non-oscillating segments have no
    /// full half-turns and the same sign rule applies.
    fn dirichlet_count(&self, p: f64) -> i64 {
        let energy = self.variable.energy(p);
        let steps = [
            segment_steps(self.model.piece_b.segments(), energy),
            segment_steps(self.model.piece_a.segments(), energy),
        ];
        let turns = |st: &[SegmentStep]| st.iter().map(|s| s.half_turns).sum::<i64>();
        let n_a = self.word.iter().filter(|&&c| c).count() as i64;
        let n_b = self.word.len() as i64 - n_a;
        let mut count = n_a * turns(&steps[1]) + n_b * turns(&steps[0]);
        // Rescale often enough that no run of letters between checks can
        // overflow: each letter grows the state by at most its matrix norm.
        let log_growth = steps
            .iter()
            .map(|piece| piece.iter().map(|st| st.m.iter().map(|x| x.abs()).sum::<f64>().ln()).sum::<f64>())
            .fold(1.0f64, f64::max);
        let stride = ((100.0 / log_growth) as usize).clamp(1, 64);
        let (mut u, mut du) = (0.0f64, 1.0f64);
        let rescale = |u: &mut f64, du: &mut f64| {
            let scale = u.abs() + du.abs();
            if !(scale < 1e100 && scale > 1e-100) {
                *u /= scale;
                *du /= scale;
            }
        };
        if let ([sb], [sa]) = (steps[0].as_slice(), steps[1].as_slice()) {
            let table = [(sb.m, sb.flip), (sa.m, sa.flip)];
            for chunk in self.word.chunks(stride) {
                for &letter in chunk {
                    let ([m11, m12, m21, m22], flip) = table[letter as usize];
                    let nu = m11 * u + m12 * du;
                    let ndu = m21 * u + m22 * du;
                    count += ((u != 0.0) & (flip * nu * u <= 0.0)) as i64;
                    u = nu;
                    du = ndu;
                }
                rescale(&mut u, &mut du);
            }
            return count;
        }
        for chunk in self.word.chunks(stride) {
            for &letter in chunk {
                for st in &steps[letter as usize] {
                    let [m11, m12, m21, m22] = st.m;
                    let nu = m11 * u + m12 * du;
                    let ndu = m21 * u + m22 * du;
                    count += ((u != 0.0) & (st.flip * nu * u <= 0.0)) as i64;
                    u = nu;
                    du = ndu;
                }
            }
            rescale(&mut u, &mut du);
        }
        count
    }
}

/// Bisection on a predicate with `pred(a) == at_a` and `pred(b) != at_a`.
fn bisect(mut a: f64, mut b: f64, at_a: bool, pred: impl Fn(f64) -> bool, tol: f64) -> f64 {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if pred(mid) == at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// One separator per Dirichlet eigenvalue strictly inside `(a, b)`, with its index.
///
/// A separator only has to lie in the closure of the eigenvalue's gap. Once
/// eigenvalue `j` is isolated, any point of the bracket where `x_n` has sign
/// `(-1)^j` and modulus at least 1 qualifies: gaps `j - 1` and `j + 1` carry
/// the opposite sign, and farther gaps lie beyond other eigenvalues. Full
/// bisection is only needed for gaps that are closed or nearly so.
fn dirichlet_points(disc: &Discriminant, a: f64, b: f64, na: i64, nb: i64, eps: f64, out: &mut Vec<(f64, i64)>) {
    if nb <= na {
        return;
    }
    let width_tol = eps.max(4.0 * f64::EPSILON * a.abs().max(b.abs()));
    let mid = 0.5 * (a + b);
    if b - a <= width_tol {
        out.extend((na + 1..=nb).map(|j| (mid, j)));
        return;
    }
    if nb - na == 1 {
        let v = disc.value(mid);
        if v.abs() >= 1.0 && v.signum() == gap_sign(nb) {
            out.push((mid, nb));
            return;
        }
    }
    let nm = disc.dirichlet_count(mid);
    dirichlet_points(disc, a, mid, na, nm, eps, out);
    dirichlet_points(disc, mid, b, nm, nb, eps, out);
}

/// A bracket between consecutive separators. Separators are Dirichlet
/// eigenvalues: the `j`-th lies in the closure of the `j`-th gap, where the
/// discriminant has sign `(-1)^j`. That sign is used instead of the computed
/// one, so a separator resolved onto the wrong side of an exponentially thin
/// band shifts the band by the separator error instead of losing it.
#[derive(Clone, Copy)]
struct Bracket {
    a: f64,
    b: f64,
    a_sep: Option<i64>,
    b_sep: Option<i64>,
}

fn gap_sign(j: i64) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The part of `B_n` inside one bracket; at most one band.
fn band_in_bracket(disc: &Discriminant, br: Bracket, tol: f64) -> Result<Option<Interval>> {
    let Bracket { a, b, a_sep, b_sep } = br;
    if b <= a {
        return Ok(None);
    }
    let va = a_sep.map_or_else(|| disc.value(a), gap_sign);
    let vb = b_sep.map_or_else(|| disc.value(b), gap_sign);
    let a_in = a_sep.is_none() && va.abs() <= 1.0;
    let b_in = b_sep.is_none() && vb.abs() <= 1.0;
    let inside = |p: f64| disc.inside(p);
    let band = match (a_in, b_in) {
        (true, true) => Some((a, b)),
        (true, false) => Some((a, bisect(a, b, true, inside, tol))),
        (false, true) => Some((bisect(a, b, false, inside, tol), b)),
        (false, false) if va.signum() != vb.signum() => {
            let positive = va > 0.0;
            let zero = bisect(a, b, positive, |p| disc.value(p) > 0.0, tol.min(1e-3 * (b - a)));
            let lo = bisect(a, zero, false, inside, tol);
            let hi = bisect(zero, b, true, inside, tol);
            Some((lo.min(zero), hi.max(zero)))
        }
        (false, false) => None,
    };
    let Some((lo, hi)) = band else {
        return Ok(None);
    };
    // Post-hoc density check: band interior inside, flanking gap parts outside.
    let slack = 1e-6;
    if hi - lo > 4.0 * tol && disc.value(0.5 * (lo + hi)).abs() > 1.0 + slack {
        return Err(Error::SamplingDensity { at: disc.variable.energy(0.5 * (lo + hi)) });
    }
    for (g_lo, g_hi) in [(a, lo), (hi, b)] {
        if g_hi - g_lo > 4.0 * tol && disc.value(0.5 * (g_lo + g_hi)).abs() < 1.0 - slack {
            return Err(Error::SamplingDensity { at: disc.variable.energy(0.5 * (g_lo + g_hi)) });
        }
    }
    Ok(Some(Interval { lo, hi }))
}

fn validate(range: &Interval, tol: f64, variable: Variable) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if range.width() <= 0.0 {
        return Err(Error::InvalidArgument(format!("empty range [{}, {}]", range.lo, range.hi)));
    }
    if variable == Variable::TParam && range.lo < 0.0 {
        return Err(Error::InvalidArgument(format!("t range must lie in [0, inf), got lo = {}", range.lo)));
    }
    Ok(())
}

/// `{p in range : |x_n(E(p))| <= 1}` with edges accurate to `tol` in `p`.
pub fn band_set_in(model: &Model, n: i64, range: Interval, tol: f64, variable: Variable) -> Result<IntervalSet> {
    if n < -1 {
        return Err(Error::InvalidArgument(format!("level must be >= -1, got {n}")));
    }
    validate(&range, tol, variable)?;
    let disc = Discriminant::new(model, n, variable);
    let (n_lo, n_hi) = (disc.dirichlet_count(range.lo), disc.dirichlet_count(range.hi));

    // Split the Dirichlet search into a fixed number of units.
    let units = ((n_hi - n_lo).max(0) as u64 / BANDS_PER_UNIT).clamp(1, MAX_UNITS) as usize;
    let edges: Vec<f64> = (0..=units)
        .map(|i| match i {
            0 => range.lo,
            i if i == units => range.hi,
            i => range.lo + range.width() * i as f64 / units as f64,
        })
        .collect();
    let counts = exec::map_slice(&edges, |&p| disc.dirichlet_count(p));
    // a separator off by d moves a band edge by at most d
    let eps = 0.5 * tol;
    let seps: Vec<(f64, i64)> = exec::map_indexed(units, |i| {
        let mut out = Vec::new();
        dirichlet_points(&disc, edges[i], edges[i + 1], counts[i], counts[i + 1], eps, &mut out);
        out
    })
    .concat();

    let mut brackets = Vec::with_capacity(seps.len() + 1);
    let mut prev = (range.lo, None);
    for &(s, j) in &seps {
        brackets.push(Bracket { a: prev.0, b: s, a_sep: prev.1, b_sep: Some(j) });
        prev = (s, Some(j));
    }
    brackets.push(Bracket { a: prev.0, b: range.hi, a_sep: prev.1, b_sep: None });

    let bands = exec::map_slice(&brackets, |&br| band_in_bracket(&disc, br, tol));
    let bands = bands.into_iter().filter_map(Result::transpose).collect::<Result<Vec<_>>>()?;
    IntervalSet::normalize(close_tangent_gaps(&disc, bands, tol))
}

/// Largest `|x_n| - 1` over `[lo, hi]`; the discriminant has a single extremum per gap.
fn gap_excess(disc: &Discriminant, lo: f64, hi: f64, tol: f64) -> f64 {
    let floor = disc.noise_floor;
    let excess = |p: f64| disc.value(p).abs() - 1.0;
    let mid = excess(0.5 * (lo + hi));
    if mid > floor {
        return mid;
    }
    let invphi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (excess(c), excess(d));
    for _ in 0..80 {
        if fc.max(fd) > floor || b - a <= 1e-3 * tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = excess(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = excess(d);
        }
    }
    mid.max(fc).max(fd)
}

/// Merges gaps whose discriminant never rises measurably above 1: these are
/// closed gaps (tangencies) split by rounding.
fn close_tangent_gaps(disc: &Discriminant, bands: Vec<Interval>, tol: f64) -> Vec<Interval> {
    if bands.len() < 2 {
        return bands;
    }
    let open = exec::map_indexed(bands.len() - 1, |i| {
        let (lo, hi) = (bands[i].hi, bands[i + 1].lo);
        hi <= lo || gap_excess(disc, lo, hi, tol) > disc.noise_floor
    });
    let mut out: Vec<Interval> = Vec::with_capacity(bands.len());
    for (i, iv) in bands.into_iter().enumerate() {
        match out.last_mut() {
            Some(last) if i > 0 && !open[i - 1] => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Level-`n` band set in the energy variable.
pub fn band_set(model: &Model, n: i64, range: Interval, tol: f64) -> Result<IntervalSet> {
    band_set_in(model, n, range, tol, Variable::Energy)
}

fn approximant_in(
    model: &Model,
    k: usize,
    range: Interval,
    tol: f64,
    variable: Variable,
) -> Result<SpectrumApproximant> {
    if k < 1 {
        return Err(Error::InvalidArgument("approximant level must be >= 1".into()));
    }
    let level = k as i64;
    let set =
        band_set_in(model, level, range, tol, variable)?.union(&band_set_in(model, level + 1, range, tol, variable)?);
    Ok(SpectrumApproximant {
        set,
        level: k,
        variable,
        range,
        e_max: variable.energy(range.hi),
        tol,
        model: model.clone(),
    })
}

/// `B_k ∪ B_{k+1}` over an energy window.
pub fn approximant(model: &Model, k: usize, range: Interval, tol: f64) -> Result<SpectrumApproximant> {
    approximant_in(model, k, range, tol, Variable::Energy)
}

/// `B_k ∪ B_{k+1}` over a window of `t = sqrt(E)`.
pub fn spectrum_in_t(model: &Model, k: usize, t_range: Interval, tol: f64) -> Result<SpectrumApproximant> {
    approximant_in(model, k, t_range, tol, Variable::TParam)
}

/// Rayleigh quotient `12 / l_a^2` of the hat function on a zero-potential piece
/// of length `l_a`, and the cutoff `E_0 = 24 / l_a^2`.
pub fn rayleigh_bound(l_a: f64) -> Result<(f64, f64)> {
    if !(l_a > 0.0 && l_a.is_finite()) {
        return Err(Error::InvalidArgument(format!("piece length must be positive, got {l_a}")));
    }
    let e = 12.0 / (l_a * l_a);
    Ok((e, 2.0 * e))
}
