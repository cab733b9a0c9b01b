//! Transfer matrices of piecewise-constant building blocks.
//!
//! A [`Model`] is a pair of pieces `(f_a, f_b)`. Each piece is a
//! piecewise-constant profile; the transfer matrix of a profile maps
//! `(u(0), u'(0))` to `(u(l), u'(l))` for solutions of `-u'' + f u = E u`.
//! Concatenation multiplies matrices right to left, `M(ab) = M(b) M(a)`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::trace::{fricke_vogt, TracePoint};

/// Below this `|E - v|` the constant-potential matrix is evaluated from its power series.
const SERIES_SWITCH: f64 = 1e-6;

/// 2x2 real matrix `[[m11, m12], [m21, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn half_trace(&self) -> f64 {
        0.5 * self.trace()
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        [self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

/// `(cos(k l), sin(k l) / k)` with `k^2 = d`, as entire functions of `d`.
fn cos_sinc(d: f64, l: f64) -> (f64, f64) {
    if d.abs() < SERIES_SWITCH {
        let q = -d * l * l;
        let (mut c, mut s) = (1.0, 1.0);
        let (mut tc, mut ts) = (1.0, 1.0);
        for j in 1..20 {
            let j = j as f64;
            tc *= q / ((2.0 * j - 1.0) * (2.0 * j));
            ts *= q / ((2.0 * j) * (2.0 * j + 1.0));
            c += tc;
            s += ts;
            if tc.abs() < 1e-18 && ts.abs() < 1e-18 {
                break;
            }
        }
        (c, l * s)
    } else if d > 0.0 {
        let k = d.sqrt();
        let (sin, cos) = (k * l).sin_cos();
        (cos, sin / k)
    } else {
        let kappa = (-d).sqrt();
        ((kappa * l).cosh(), (kappa * l).sinh() / kappa)
    }
}

/// Transfer matrix across a constant potential `v` of length `length` at energy `energy`.
///
/// `[[cos kl, sin(kl)/k], [-k sin kl, cos kl]]` with `k = sqrt(E - v)`, continued
/// through `E = v` (where it is `[[1, l], [0, 1]]`) to the hyperbolic branch.
pub fn constant_piece_matrix(v: f64, length: f64, energy: f64) -> Mat2 {
    let d = energy - v;
    let (c, s) = cos_sinc(d, length);
    Mat2::new(c, s, -d * s, c)
}

/// One constant segment of a piece: `(length, value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub value: f64,
}

impl Serialize for Segment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.length, self.value).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Segment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (length, value) = <(f64, f64)>::deserialize(d)?;
        Ok(Segment { length, value })
    }
}

/// A piecewise-constant potential profile on `[0, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    segments: Vec<Segment>,
}

impl Piece {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("a piece needs at least one segment".into()));
        }
        if let Some(bad) = segments.iter().find(|s| !(s.length > 0.0 && s.length.is_finite() && s.value.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "segment lengths must be positive and values finite, got ({}, {})",
                bad.length, bad.value
            )));
        }
        Ok(Self { segments })
    }

    pub fn constant(length: f64, value: f64) -> Result<Self> {
        Self::new(vec![Segment { length, value }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.segments.iter().map(|s| s.value).fold(f64::INFINITY, f64::min)
    }

    /// Transfer matrix of the whole piece; later segments multiply on the left.
    pub fn matrix(&self, energy: f64) -> Mat2 {
        self.segments.iter().fold(Mat2::IDENTITY, |acc, s| constant_piece_matrix(s.value, s.length, energy).mul(&acc))
    }
}

/// The two building blocks `(f_a, f_b)` of a Fibonacci concatenation potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub piece_a: Piece,
    pub piece_b: Piece,
}

impl Model {
    /// A model with distinct pieces.
    ///
    /// Distinct profiles are the only aperiodicity check performed; constant
    /// pieces with different values always give aperiodic potentials.
    pub fn new(piece_a: Piece, piece_b: Piece) -> Result<Self> {
        if piece_a == piece_b {
            return Err(Error::InvalidArgument("pieces a and b coincide; the potential would be periodic".into()));
        }
        Ok(Self { piece_a, piece_b })
    }

    /// Unit-length pieces with `f_a = 0` and `f_b = lambda`.
    ///
    /// `lambda = 0` is the free operator; it is accepted as a reference case
    /// even though it is periodic.
    pub fn canonical(lambda: f64) -> Self {
        Self {
            piece_a: Piece { segments: vec![Segment { length: 1.0, value: 0.0 }] },
            piece_b: Piece { segments: vec![Segment { length: 1.0, value: lambda }] },
        }
    }

    /// `Some(lambda)` when this is [`Model::canonical`]`(lambda)`.
    pub fn canonical_lambda(&self) -> Option<f64> {
        match (self.piece_a.segments.as_slice(), self.piece_b.segments.as_slice()) {
            ([a], [b]) if a.length == 1.0 && a.value == 0.0 && b.length == 1.0 => Some(b.value),
            _ => None,
        }
    }

    pub fn is_aperiodic(&self) -> bool {
        self.piece_a != self.piece_b
    }

    /// Lengths `l(S^n(a))` of the Fibonacci words for `n = -1..=max_level`.
    ///
    /// Index 0 holds `l(b)`, matching the trace indexing `x_{-1}`.
    pub fn word_lengths(&self, max_level: usize) -> Vec<f64> {
        let mut out = vec![self.piece_b.length(), self.piece_a.length()];
        while out.len() < max_level + 2 {
            let n = out.len();
            out.push(out[n - 1] + out[n - 2]);
        }
        out.truncate(max_level + 2);
        out
    }

    /// `(x_1, x_0, x_{-1}) = (tr M(ab), tr M(a), tr M(b)) / 2` at energy `energy`.
    pub fn initial_traces(&self, energy: f64) -> TracePoint {
        let ma = self.piece_a.matrix(energy);
        let mb = self.piece_b.matrix(energy);
        TracePoint::new(mb.mul(&ma).half_trace(), ma.half_trace(), mb.half_trace())
    }

    /// Fricke-Vogt invariant along the curve of initial conditions.
    pub fn invariant(&self, energy: f64) -> f64 {
        fricke_vogt(self.initial_traces(energy))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ModelRepr {
    Canonical { lambda: f64 },
    Pieces { a: Vec<Segment>, b: Vec<Segment> },
}

impl Serialize for Model {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.canonical_lambda() {
            Some(lambda) => ModelRepr::Canonical { lambda },
            None => ModelRepr::Pieces { a: self.piece_a.segments.clone(), b: self.piece_b.segments.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Model {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ModelRepr::deserialize(d)? {
            ModelRepr::Canonical { lambda } if lambda.is_finite() => Ok(Model::canonical(lambda)),
            ModelRepr::Canonical { lambda } => Err(D::Error::custom(format!("non-finite lambda {lambda}"))),
            ModelRepr::Pieces { a, b } => {
                let a = Piece::new(a).map_err(D::Error::custom)?;
                let b = Piece::new(b).map_err(D::Error::custom)?;
                Model::new(a, b).map_err(D::Error::custom)
            }
        }
    }
}

/// `sin^2(sqrt(e))` continued to `e < 0` as `-sinh^2(sqrt(|e|))`.
fn sin_sq_sqrt(e: f64) -> f64 {
    if e >= 0.0 {
        e.sqrt().sin().powi(2)
    } else {
        -(-e).sqrt().sinh().powi(2)
    }
}

/// `sin^2(sqrt(e)) / e`, entire in `e` and positive.
fn sinc_sq_sqrt(e: f64) -> f64 {
    let (_, s) = cos_sinc(e, 1.0);
    s * s
}

/// Closed-form invariant `I(E) = lambda^2 sin^2(sqrt E) sin^2(sqrt(E - lambda)) / (4 E (E - lambda))`
/// of the canonical model.
pub fn invariant_closed_form(lambda: f64, energy: f64) -> Result<f64> {
    if energy == 0.0 || energy == lambda {
        return Err(Error::RemovableSingularity(energy));
    }
    Ok(0.25 * lambda * lambda / (energy * (energy - lambda)) * sin_sq_sqrt(energy) * sin_sq_sqrt(energy - lambda))
}

/// Limit mode of [`invariant_closed_form`], finite at `E = 0` and `E = lambda`.
pub fn invariant_closed_form_limit(lambda: f64, energy: f64) -> f64 {
    0.25 * lambda * lambda * sinc_sq_sqrt(energy) * sinc_sq_sqrt(energy - lambda)
}

/// `d/dt log I(t^2)` for the canonical model.
///
/// Equal to `2 cot t - 2/t + 2t cot(s)/s - 2t/s^2` with `s = sqrt(t^2 - lambda)`,
/// continued to `t^2 < lambda` through `cot(i r)/(i r) = -coth(r)/r`.
pub fn log_derivative_invariant(lambda: f64, t: f64) -> Result<f64> {
    let e = t * t;
    if t == 0.0 {
        return Err(Error::LogDerivativePole("t = 0"));
    }
    if e == lambda {
        return Err(Error::LogDerivativePole("t^2 = lambda"));
    }
    if t.sin().abs() < 1e-14 * t.abs().max(1.0) {
        return Err(Error::LogDerivativePole("sin t = 0"));
    }
    let d = e - lambda;
    let second = if d > 0.0 {
        let s = d.sqrt();
        if s.sin().abs() < 1e-14 * s.max(1.0) {
            return Err(Error::LogDerivativePole("sin sqrt(t^2 - lambda) = 0"));
        }
        2.0 * t * (s.cos() / s.sin()) / s
    } else {
        let r = (-d).sqrt();
        -2.0 * t / (r * r.tanh())
    };
    Ok(2.0 * t.cos() / t.sin() - 2.0 / t + second - 2.0 * t / d)
}
