use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use fibspec::bethe::{certify, direct_sum_tail, DirectTail, WindowScheme, DEFAULT_TRIM};
use fibspec::cantor::{box_dimension, thickness, thickness_bruteforce, DEFAULT_MAX_GAPS};
use fibspec::low_energy::{empirical_threshold, lambda_sweep, LowEnergyOptions, LowEnergyReport};
use fibspec::spectrum::{approximant, spectrum_in_t, DEFAULT_TOL_E, DEFAULT_TOL_T};
use fibspec::transfer::{invariant_closed_form, invariant_closed_form_limit};
use fibspec::{BSCertificate, Error, Interval, IntervalSet, Model, SpectrumApproximant};

use crate::output::{emit, Table};
use crate::{Cli, Command, Format, Global, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE};

/// A command-line problem the parser could not catch.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Exit code for a failed run: bad input is a usage error, everything the
/// solvers reject on their own is a numerical failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_USAGE;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::InvalidArgument(_)
                | Error::InvalidInterval { .. }
                | Error::TrimTooLarge(_)
                | Error::DegenerateScales { .. }
                | Error::TooManyGaps { .. }
                | Error::NegativeDomain(_)
                | Error::EmptySet => EXIT_USAGE,
                _ => EXIT_NUMERICAL,
            };
        }
    }
    EXIT_NUMERICAL
}

/// Echoed with every output.
#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    command: &'static str,
    tol: Option<f64>,
    format: Format,
    #[serde(flatten)]
    args: &'a A,
}

pub fn run(cli: &Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Spectrum(a) => spectrum(g, a),
        Command::Sum(a) => sum(g, a),
        Command::Thickness(a) => thickness_cmd(g, a),
        Command::Dim(a) => dim(g, a),
        Command::Invariant(a) => invariant(g, a),
        Command::BsVerify(a) => bs_verify(g, a),
        Command::LowEnergy(a) => low_energy(g, a),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Coupling of the canonical model (zero piece a, constant piece b, unit lengths).
    #[arg(long, required_unless_present = "model", conflicts_with = "model", allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Model JSON: {"lambda": x} or {"a": [[length, value], ...], "b": [...]}.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

impl ModelArgs {
    fn resolve(&self) -> anyhow::Result<Model> {
        match (&self.lambda, &self.model) {
            (Some(l), _) if l.is_finite() => Ok(Model::canonical(*l)),
            (Some(l), _) => Err(usage(format!("lambda must be finite, got {l}"))),
            (None, Some(path)) => {
                Ok(serde_json::from_str(&read(path)?).with_context(|| format!("parsing model {}", path.display()))?)
            }
            (None, None) => Err(usage("give --lambda or --model")),
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// An interval set from a bare set, a spectrum file, or any output of this tool.
fn read_set(path: &Path) -> anyhow::Result<IntervalSet> {
    let mut v: serde_json::Value =
        serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(result) = v.get_mut("result") {
        v = result.take();
    }
    if let Some(set) = v.get_mut("set") {
        v = set.take();
    }
    IntervalSet::deserialize(v).with_context(|| format!("{} holds no interval set", path.display()))
}

fn interval(pair: &[f64], what: &str) -> anyhow::Result<Interval> {
    Interval::new(pair[0], pair[1]).map_err(|_| usage(format!("{what} needs lo <= hi, got {} {}", pair[0], pair[1])))
}

fn interval_rows(set: &IntervalSet) -> Table {
    let mut t = Table::new(&["lo", "hi"]);
    for iv in set.intervals() {
        t.push([iv.lo, iv.hi]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum VariableArg {
    #[serde(rename = "E")]
    #[value(name = "E", alias = "e")]
    Energy,
    #[serde(rename = "t")]
    #[value(name = "t")]
    T,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Approximant level k >= 1.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=40))]
    pub level: u32,
    /// Energy cutoff; the window is [0, emax] in E or [0, sqrt(emax)] in t.
    #[arg(long, conflicts_with_all = ["e_range", "t_range"], value_parser = crate::positive)]
    pub emax: Option<f64>,
    /// Energy window.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, conflicts_with = "t_range")]
    pub e_range: Option<Vec<f64>>,
    /// Window in t = sqrt(E).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub t_range: Option<Vec<f64>>,
    /// Spectral variable; defaults to t when --t-range is given.
    #[arg(long, value_enum)]
    pub variable: Option<VariableArg>,
}

#[derive(Serialize)]
struct SpectrumResult {
    #[serde(flatten)]
    approximant: SpectrumApproximant,
    bands: usize,
    measure: f64,
    /// Hausdorff distance to the level k - 1 approximant on the same window.
    hausdorff_to_previous_level: Option<f64>,
}

fn spectrum(g: &Global, a: &SpectrumArgs) -> anyhow::Result<u8> {
    let model = a.model.resolve()?;
    let variable = a.variable.unwrap_or(if a.t_range.is_some() { VariableArg::T } else { VariableArg::Energy });
    let range = match (variable, &a.emax, &a.e_range, &a.t_range) {
        (VariableArg::Energy, Some(e), _, _) => Interval::new(0.0, *e)?,
        (VariableArg::Energy, _, Some(r), _) => interval(r, "--e-range")?,
        (VariableArg::T, Some(e), _, _) => Interval::new(0.0, e.sqrt())?,
        (VariableArg::T, _, _, Some(r)) => interval(r, "--t-range")?,
        (VariableArg::Energy, _, _, Some(_)) => return Err(usage("--t-range needs --variable t")),
        (VariableArg::T, _, Some(_), _) => return Err(usage("--e-range needs --variable E")),
        _ => return Err(usage("give --emax, --e-range or --t-range")),
    };
    if variable == VariableArg::T && range.lo < 0.0 {
        return Err(usage("--t-range must be nonnegative"));
    }
    let tol = g.tol.unwrap_or(if variable == VariableArg::T { DEFAULT_TOL_T } else { DEFAULT_TOL_E });
    let compute = |k: usize| match variable {
        VariableArg::Energy => approximant(&model, k, range, tol),
        VariableArg::T => spectrum_in_t(&model, k, range, tol),
    };
    let k = a.level as usize;
    let approx = compute(k)?;
    let previous = if k >= 2 { Some(compute(k - 1)?.set.hausdorff_distance(&approx.set)) } else { None };
    let result = SpectrumResult {
        bands: approx.set.len(),
        measure: approx.set.measure(),
        hausdorff_to_previous_level: previous.filter(|d| d.is_finite()),
        approximant: approx,
    };
    let config = RunConfig { command: "spectrum", tol: Some(tol), format: g.format(), args: a };
    emit(g, &config, &result, || interval_rows(&result.approximant.set))?;
    Ok(0)
}

#[derive(Debug, Args, Serialize)]
pub struct SumArgs {
    /// First set (JSON with an "intervals" list, or a spectrum output).
    pub a: PathBuf,
    /// Second set; defaults to the first.
    pub b: Option<PathBuf>,
}

#[derive(Serialize)]
struct SumResult {
    set: IntervalSet,
    intervals: usize,
    measure: f64,
    hull: Option<Interval>,
}

fn sum(g: &Global, a: &SumArgs) -> anyhow::Result<u8> {
    let x = read_set(&a.a)?;
    let y = match &a.b {
        Some(p) => read_set(p)?,
        None => x.clone(),
    };
    let set = x.minkowski_sum(&y);
    let result = SumResult { intervals: set.len(), measure: set.measure(), hull: set.hull().ok(), set };
    let config = RunConfig { command: "sum", tol: None, format: g.format(), args: a };
    emit(g, &config, &result, || interval_rows(&result.set))?;
    Ok(0)
}

#[derive(Debug, Args, Serialize)]
pub struct ThicknessArgs {
    /// Interval set JSON (a bare set or any command output holding one).
    #[arg(long)]
    pub input: PathBuf,
    /// Maximize over every gap ordering instead of removing the largest gap first.
    #[arg(long)]
    pub bruteforce: bool,
    /// Gap limit for --bruteforce.
    #[arg(long, default_value_t = DEFAULT_MAX_GAPS)]
    pub max_gaps: usize,
}

fn thickness_cmd(g: &Global, a: &ThicknessArgs) -> anyhow::Result<u8> {
    let set = read_set(&a.input)?;
    let report = if a.bruteforce { thickness_bruteforce(&set, a.max_gaps)? } else { thickness(&set)? };
    let config = RunConfig { command: "thickness", tol: None, format: g.format(), args: a };
    emit(g, &config, &report, || {
        let mut t = Table::new(&["gap_lo", "gap_hi", "left_ratio", "right_ratio"]);
        for r in &report.per_gap_ratios {
            t.push([r.gap.lo, r.gap.hi, r.left_ratio, r.right_ratio]);
        }
        t
    })?;
    Ok(0)
}

#[derive(Debug, Args, Serialize)]
pub struct DimArgs {
    /// Interval set JSON (a bare set or any command output holding one).
    #[arg(long)]
    pub input: PathBuf,
    /// Smallest scale, largest scale, number of scales.
    #[arg(long, num_args = 3, value_names = ["LO", "HI", "N"], default_values_t = [1e-6, 1e-1, 12.0])]
    pub scales: Vec<f64>,
}

fn scale_count(x: f64) -> anyhow::Result<usize> {
    if x.fract() == 0.0 && (0.0..1e6).contains(&x) {
        Ok(x as usize)
    } else {
        Err(usage(format!("number of scales must be a whole number, got {x}")))
    }
}

fn dim(g: &Global, a: &DimArgs) -> anyhow::Result<u8> {
    let set = read_set(&a.input)?;
    let est = box_dimension(&set, a.scales[0], a.scales[1], scale_count(a.scales[2])?)?;
    let config = RunConfig { command: "dim", tol: None, format: g.format(), args: a };
    emit(g, &config, &est, || {
        let mut t = Table::new(&["scale", "count"]);
        for (s, c) in est.scales.iter().zip(&est.counts) {
            t.push([s.to_string(), c.to_string()]);
        }
        t
    })?;
    Ok(0)
}

#[derive(Debug, Args, Serialize)]
pub struct InvariantArgs {
    /// Coupling of the canonical model.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Energy range to sample.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values_t = [0.0, 100.0])]
    pub e_range: Vec<f64>,
    /// Number of evenly spaced sample energies.
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
    pub points: u32,
}

#[derive(Serialize)]
struct InvariantRow {
    e: f64,
    closed_form: f64,
    fricke_vogt: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct InvariantResult {
    rows: Vec<InvariantRow>,
    max_deviation: f64,
    within_tol: bool,
}

fn invariant(g: &Global, a: &InvariantArgs) -> anyhow::Result<u8> {
    if !a.lambda.is_finite() {
        return Err(usage("lambda must be finite"));
    }
    let range = interval(&a.e_range, "--e-range")?;
    let tol = g.tol.unwrap_or(1e-9);
    let m = Model::canonical(a.lambda);
    let n = a.points as usize;
    let rows: Vec<InvariantRow> = (0..n)
        .map(|i| {
            let e = range.lo + range.width() * i as f64 / (n - 1) as f64;
            // limit form at the removable singularities E = 0, E = lambda
            let closed_form =
                invariant_closed_form(a.lambda, e).unwrap_or_else(|_| invariant_closed_form_limit(a.lambda, e));
            let fricke_vogt = m.invariant(e);
            InvariantRow { e, closed_form, fricke_vogt, deviation: (closed_form - fricke_vogt).abs() }
        })
        .collect();
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let result = InvariantResult { within_tol: max_deviation <= tol, max_deviation, rows };
    let config = RunConfig { command: "invariant", tol: Some(tol), format: g.format(), args: a };
    emit(g, &config, &result, || {
        let mut t = Table::new(&["e", "closed_form", "fricke_vogt", "deviation"]);
        for r in &result.rows {
            t.push([r.e, r.closed_form, r.fricke_vogt, r.deviation]);
        }
        t
    })?;
    Ok(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeArg {
    /// [n pi + trim, (n + 1) pi - trim]
    Half,
    /// [2 n pi + trim, (2n + 1) pi - trim]
    Even,
}

#[derive(Debug, Args, Serialize)]
pub struct BsVerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Approximant level used for each window.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=40))]
    pub level: u32,
    /// First and last window index.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], required = true)]
    pub n: Vec<i64>,
    /// Distance cut from both ends of each half-period window.
    #[arg(long, default_value_t = DEFAULT_TRIM, value_parser = crate::positive)]
    pub trim: f64,
    /// Window placement.
    #[arg(long, value_enum, default_value_t = SchemeArg::Half)]
    pub scheme: SchemeArg,
    /// Also sum the energy spectrum directly and check it covers the certified range.
    #[arg(long)]
    pub direct: bool,
    /// Coverage tolerance for the direct check.
    #[arg(long, default_value_t = 1e-6, value_parser = crate::positive)]
    pub cover_tol: f64,
}

#[derive(Serialize)]
struct DirectCheck {
    tail: Option<DirectTail>,
    error: Option<String>,
    /// Whether Σ + Σ covers the certified range up to the direct tail's safe end.
    covers_certified_range: Option<bool>,
}

#[derive(Serialize)]
struct BsResult {
    certificate: BSCertificate,
    direct: Option<DirectCheck>,
}

fn bs_verify(g: &Global, a: &BsVerifyArgs) -> anyhow::Result<u8> {
    let model = a.model.resolve()?;
    let (n_lo, n_hi) = (a.n[0], a.n[1]);
    if n_lo < 0 || n_hi <= n_lo {
        return Err(usage(format!("--n needs 0 <= LO < HI, got {n_lo} {n_hi}")));
    }
    let scheme = match a.scheme {
        SchemeArg::Half => WindowScheme::HalfPeriods,
        SchemeArg::Even => WindowScheme::EvenHalfPeriods,
    };
    let tol = g.tol.unwrap_or(DEFAULT_TOL_T);
    let span = Interval::new(scheme.window(n_lo, a.trim)?.lo, scheme.window(n_hi, a.trim)?.hi)?;
    let t = spectrum_in_t(&model, a.level as usize, span, tol)?;
    let (_, certificate) = certify(&t, n_lo, n_hi, a.trim, scheme)?;

    let direct = if a.direct {
        let e = approximant(&model, a.level as usize, Interval::new(0.0, span.hi.powi(2))?, DEFAULT_TOL_E)?;
        Some(match direct_sum_tail(&e, a.cover_tol) {
            Ok(tail) => {
                let covers = certificate.e1.map(|e1| {
                    let top = certificate.e_max.min(tail.e_safe);
                    e1 > top
                        || Interval::new(e1, top)
                            .is_ok_and(|r| e.set.minkowski_sum(&e.set).covers_interval(&r, a.cover_tol))
                });
                DirectCheck { tail: Some(tail), error: None, covers_certified_range: covers }
            }
            Err(err) => DirectCheck { tail: None, error: Some(err.to_string()), covers_certified_range: None },
        })
    } else {
        None
    };
    let valid = certificate.valid;
    let result = BsResult { certificate, direct };
    let config = RunConfig { command: "bs-verify", tol: Some(tol), format: g.format(), args: a };
    emit(g, &config, &result, || {
        let mut t = Table::new(&["n", "j_lo", "j_hi", "j_prime_lo", "j_prime_hi", "overlap_ok"]);
        for l in &result.certificate.chain {
            t.push([
                l.n.to_string(),
                l.j_n.lo.to_string(),
                l.j_n.hi.to_string(),
                l.j_n_prime.lo.to_string(),
                l.j_n_prime.hi.to_string(),
                l.overlap_ok.to_string(),
            ]);
        }
        t
    })?;
    Ok(if valid { 0 } else { EXIT_INVALID })
}

#[derive(Debug, Args, Serialize)]
pub struct LowEnergyArgs {
    /// One or more couplings; several give an empirical threshold.
    #[arg(long, num_args = 1.., required = true)]
    pub lambda: Vec<f64>,
    /// Approximant level k >= 4.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(4..=40))]
    pub level: u32,
    /// Number of summands; the dimension threshold is 1/d.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub d: u32,
    /// Box sizes: smallest, largest, number of scales.
    #[arg(long, num_args = 3, value_names = ["LO", "HI", "N"], default_values_t = [1e-6, 1e-1, 12.0])]
    pub scales: Vec<f64>,
}

#[derive(Serialize)]
struct LowEnergyResult {
    reports: Vec<LowEnergyReport>,
    /// Interpolated coupling where the slope drops below 1/d; empirical.
    empirical_threshold_lambda: Option<f64>,
}

fn low_energy(g: &Global, a: &LowEnergyArgs) -> anyhow::Result<u8> {
    if let Some(l) = a.lambda.iter().find(|l| !l.is_finite()) {
        return Err(usage(format!("lambda must be finite, got {l}")));
    }
    let tol = g.tol.unwrap_or(fibspec::low_energy::DEFAULT_TOL);
    let opts = LowEnergyOptions {
        d: a.d as usize,
        scale_lo: a.scales[0],
        scale_hi: a.scales[1],
        n_scales: scale_count(a.scales[2])?,
    };
    let reports = lambda_sweep(&a.lambda, a.level as usize, tol, &opts)?;
    let result = LowEnergyResult { empirical_threshold_lambda: empirical_threshold(&reports), reports };
    let config = RunConfig { command: "low-energy", tol: Some(tol), format: g.format(), args: a };
    emit(g, &config, &result, || {
        let mut t = Table::new(&["lambda", "slope", "r2", "k", "sum_measure"]);
        for r in &result.reports {
            for m in &r.sum_measure_by_level {
                let lambda = r.lambda.map_or_else(String::new, |l| l.to_string());
                t.push([
                    lambda,
                    r.dim_estimate.slope.to_string(),
                    r.dim_estimate.r2.to_string(),
                    m.k.to_string(),
                    m.measure.to_string(),
                ]);
            }
        }
        t
    })?;
    Ok(0)
}
