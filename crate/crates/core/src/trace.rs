//! The Fibonacci trace map and its invariant.
//!
//! `T(x, y, z) = (2xy - z, x, y)` acts on triples of half-traces. Its first
//! coordinate generates the scalar recursion `x_{n+1} = 2 x_n x_{n-1} - x_{n-2}`
//! and it preserves the Fricke-Vogt invariant `G = x^2 + y^2 + z^2 - 2xyz - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude past which a trace sequence is treated as escaped and no longer iterated.
pub const OVERFLOW_GUARD: f64 = 1e100;

/// A point of R^3 on which the trace map acts.
///
/// On the curve of initial conditions the coordinates are `(x_1, x_0, x_{-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TracePoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

pub fn trace_map(p: TracePoint) -> TracePoint {
    TracePoint::new(2.0 * p.x * p.y - p.z, p.x, p.y)
}

pub fn trace_map_inv(p: TracePoint) -> TracePoint {
    TracePoint::new(p.y, p.z, 2.0 * p.y * p.z - p.x)
}

/// Fricke-Vogt invariant `x^2 + y^2 + z^2 - 2xyz - 1`.
pub fn fricke_vogt(p: TracePoint) -> f64 {
    p.x * p.x + p.y * p.y + p.z * p.z - 2.0 * p.x * p.y * p.z - 1.0
}

/// Point `(x, x / (2x - 1), x)` on the curve of period-two points of the trace map.
pub fn per2_curve_point(x: f64) -> Result<TracePoint> {
    let denom = 2.0 * x - 1.0;
    if denom == 0.0 {
        return Err(Error::PeriodTwoPole);
    }
    Ok(TracePoint::new(x, x / denom, x))
}

/// Arithmetic used by [`trace_sequence_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    /// Double-double arithmetic for the recursion; worth it for long bounded orbits.
    Compensated,
}

/// `x_{-1}, x_0, x_1, ..., x_N` as produced by the trace recursion.
///
/// `values[0]` is `x_{-1}`, so `x_n` lives at `values[n + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSequence {
    pub values: Vec<f64>,
    /// Requested level `N`.
    pub level: usize,
    /// Array index of the first value whose magnitude exceeded the overflow
    /// guard; iteration stopped there.
    pub stopped_at: Option<usize>,
}

impl TraceSequence {
    /// `x_n` for `n >= -1`, if it was computed.
    pub fn trace(&self, n: i64) -> Option<f64> {
        usize::try_from(n + 1).ok().and_then(|i| self.values.get(i).copied())
    }

    /// Smallest array index `i` with `|values[i]| > 1` and `|values[i+1]| > 1`
    /// whose tail `values[i+1..]` is strictly increasing in magnitude.
    ///
    /// Candidates failing the monotone-tail check are skipped rather than
    /// trusted, so a returned index is always backed by the computed data.
    pub fn escape_index(&self) -> Option<usize> {
        let v = &self.values;
        (0..v.len().saturating_sub(1)).find(|&i| {
            v[i].abs() > 1.0 && v[i + 1].abs() > 1.0 && v[i + 1..].windows(2).all(|w| w[1].abs() > w[0].abs())
        })
    }
}

/// Iterate the recursion from `init = (x_1, x_0, x_{-1})` up to `x_{n_max}`.
pub fn trace_sequence(init: TracePoint, n_max: usize) -> TraceSequence {
    trace_sequence_with(init, n_max, Precision::Double)
}

pub fn trace_sequence_with(init: TracePoint, n_max: usize, precision: Precision) -> TraceSequence {
    let len = n_max + 2;
    let mut values = Vec::with_capacity(len.max(3));
    values.extend([init.z, init.y, init.x]);
    values.truncate(len);
    let mut stopped_at = values.iter().position(|v| v.abs() > OVERFLOW_GUARD);
    if let Some(i) = stopped_at {
        values.truncate(i + 1);
        return TraceSequence { values, level: n_max, stopped_at };
    }
    match precision {
        Precision::Double => {
            while values.len() < len {
                let n = values.len();
                let next = 2.0 * values[n - 1] * values[n - 2] - values[n - 3];
                values.push(next);
                if next.abs() > OVERFLOW_GUARD {
                    stopped_at = Some(n);
                    break;
                }
            }
        }
        Precision::Compensated => {
            let mut dd: Vec<Dd> = values.iter().map(|&v| Dd::from(v)).collect();
            while values.len() < len {
                let n = dd.len();
                let next = dd[n - 1].mul(dd[n - 2]).scale2().sub(dd[n - 3]);
                dd.push(next);
                values.push(next.hi);
                if next.hi.abs() > OVERFLOW_GUARD {
                    stopped_at = Some(n);
                    break;
                }
            }
        }
    }
    TraceSequence { values, level: n_max, stopped_at }
}

/// `x_n` for a single level `n >= -1` without allocating.
///
/// Once the magnitude passes [`OVERFLOW_GUARD`] the value is clamped to
/// `±OVERFLOW_GUARD`; the sign keeps following the dominant term
/// `sign(x_{m+1}) = sign(x_m) * sign(x_{m-1})` so zero crossings of `x_n` in
/// a parameter remain detectable.
pub fn trace_at_level(init: TracePoint, n: i64) -> f64 {
    let (mut a, mut b, mut c) = (init.z, init.y, init.x); // x_{-1}, x_0, x_1
    match n {
        ..=-1 => return a.clamp(-OVERFLOW_GUARD, OVERFLOW_GUARD),
        0 => return b.clamp(-OVERFLOW_GUARD, OVERFLOW_GUARD),
        _ => {}
    }
    for m in 1..n {
        if c.abs() > OVERFLOW_GUARD && b.abs() > 1.0 {
            // escaped: propagate signs only
            let (mut sb, mut sc) = (b.signum(), c.signum());
            for _ in m..n {
                let s = sb * sc;
                sb = sc;
                sc = s;
            }
            return sc * OVERFLOW_GUARD;
        }
        let next = 2.0 * c * b - a;
        a = b;
        b = c;
        c = next;
    }
    c.clamp(-OVERFLOW_GUARD, OVERFLOW_GUARD)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        let lo = err + (self.hi * o.lo + self.lo * o.hi);
        Dd::quick_two_sum(p, lo)
    }

    fn scale2(self) -> Dd {
        Dd { hi: 2.0 * self.hi, lo: 2.0 * self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, -o.hi);
        let lo = s.lo + (self.lo - o.lo);
        Dd::quick_two_sum(s.hi, lo)
    }
}
