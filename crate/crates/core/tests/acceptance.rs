//! Acceptance criteria, one PASS/FAIL line each. Tolerances and runtime
//! budgets are pinned below.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fibspec::bethe::{certify, direct_sum_tail, WindowScheme};
use fibspec::cantor::{box_dimension, newhouse_sum_check, symmetric_cantor, thickness, thickness_bruteforce};
use fibspec::low_energy::{lambda_sweep, LowEnergyOptions, LowEnergyReport};
use fibspec::spectrum::{approximant, rayleigh_bound, spectrum_in_t};
use fibspec::trace::{fricke_vogt, trace_map, trace_sequence, OVERFLOW_GUARD};
use fibspec::transfer::invariant_closed_form;
use fibspec::{Interval, IntervalSet, Model, TracePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

const INVARIANT_TOL: f64 = 1e-10;
fn c1_invariant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let p = TracePoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let g = fricke_vogt(p);
        worst = worst.max((fricke_vogt(trace_map(p)) - g).abs() / (1.0 + g.abs()));
    }
    check(worst <= INVARIANT_TOL, format!("max scaled deviation {worst:.2e} <= {INVARIANT_TOL:e}"))
}

const ORACLE_REL: f64 = 1e-9;
fn c2_trace_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for lambda in [0.5, 1.0, 4.0] {
        let m = Model::canonical(lambda);
        for i in 0..200 {
            let e = 0.5 + 59.5 * i as f64 / 199.0;
            let seq = trace_sequence(m.initial_traces(e), 14);
            for n in -1..=14 {
                let y = common::word_matrix(&m, n, e).half_trace();
                match seq.trace(n) {
                    Some(x) => worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1.0)),
                    // past the overflow guard the product must be huge or overflow itself
                    None if !(y.abs() <= 0.5 * OVERFLOW_GUARD) => {}
                    None => worst = f64::INFINITY,
                }
                compared += 1;
            }
        }
    }
    check(worst <= ORACLE_REL && compared == 3 * 200 * 16, format!("{compared} values, max relative error {worst:.2e}"))
}

const CLOSED_FORM_ABS: f64 = 1e-9;
fn c3_closed_form() -> Outcome {
    let m = Model::canonical(1.0);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        // midpoints of a grid on [-2, 200]; never hits E = 0 or E = 1
        let e = -2.0 + 202.0 * (i as f64 + 0.5) / 1000.0;
        let closed = invariant_closed_form(1.0, e).map_err(|err| err.to_string())?;
        worst = worst.max((closed - m.invariant(e)).abs());
    }
    check(worst <= CLOSED_FORM_ABS, format!("max abs deviation {worst:.2e} on 1000 energies"))
}

const GRID_EPS: f64 = 1e-4;
fn c4_minkowski() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let a = common::random_set(&mut rng, 6, -10.0, 10.0);
        let b = common::random_set(&mut rng, 6, -10.0, 10.0);
        worst = worst.max(a.minkowski_sum(&b).hausdorff_distance(&common::grid_minkowski(&a, &b, GRID_EPS)));
    }
    check(worst <= 2.0 * GRID_EPS, format!("500 pairs, max Hausdorff distance {worst:.2e}"))
}

const THICKNESS_TOL: f64 = 1e-12;
fn c5_thickness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..500 {
        let a = common::random_set(&mut rng, 7, -10.0, 10.0);
        let fast = thickness(&a).unwrap().tau;
        let brute = thickness_bruteforce(&a, 6).unwrap().tau;
        if !(fast == brute || (fast - brute).abs() <= THICKNESS_TOL * brute.max(1.0)) {
            mismatches += 1;
        }
    }
    let thirds = (1..=5).map(|n| thickness(&symmetric_cantor(1.0 / 3.0, n).unwrap()).unwrap().tau);
    let thirds_dev = thirds.map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let fifths = (1..=5).map(|n| thickness(&symmetric_cantor(0.4, n).unwrap()).unwrap().tau);
    let fifths_dev = fifths.map(|t| (t - 2.0).abs()).fold(0.0, f64::max);
    check(
        mismatches == 0 && thirds_dev <= THICKNESS_TOL && fifths_dev <= THICKNESS_TOL,
        format!("{mismatches} mismatches in 500; |tau - 1| <= {thirds_dev:.1e} (thirds), |tau - 2| <= {fifths_dev:.1e} (fifths)"),
    )
}

fn c6_newhouse() -> Outcome {
    let c = symmetric_cantor(0.4, 4).unwrap();
    let h = c.hull().unwrap();
    let sum = c.minkowski_sum(&c);
    let expect = IntervalSet::single(iv(2.0 * h.lo, 2.0 * h.hi));
    check(newhouse_sum_check(&c, &c) && sum == expect, format!("C + C = {:?}", sum.intervals()))
}

const SLOPE_TOL: f64 = 0.02;
fn c7_box_dimension() -> Outcome {
    let c = symmetric_cantor(1.0 / 3.0, 10).unwrap();
    let cantor = box_dimension(&c, 3f64.powi(-9), 3f64.powi(-2), 8).unwrap().slope;
    let unit = box_dimension(&IntervalSet::single(iv(0.0, 1.0)), 1e-4, 1e-1, 10).unwrap().slope;
    let target = 2f64.ln() / 3f64.ln();
    check(
        (cantor - target).abs() <= SLOPE_TOL && (unit - 1.0).abs() <= SLOPE_TOL,
        format!("middle thirds {cantor:.4} (target {target:.4}), interval {unit:.4}"),
    )
}

const RAYLEIGH_REL: f64 = 1e-3;
fn c8_rayleigh() -> Outcome {
    let mut worst = 0.0f64;
    let mut exact = true;
    for l_a in [0.5, 1.0, 2.0] {
        let (e, e0) = rayleigh_bound(l_a).unwrap();
        let n = 10_000;
        let h = l_a / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            let phi = 1.0 - (2.0 * x / l_a - 1.0).abs();
            num += (2.0 / l_a).powi(2) * h;
            den += phi * phi * h;
        }
        worst = worst.max((num / den - 12.0 / (l_a * l_a)).abs() / e);
        exact &= e0 == 24.0 / (l_a * l_a);
    }
    check(worst <= RAYLEIGH_REL && exact, format!("max relative error {worst:.2e}, e0 = 24/l_a^2 exactly: {exact}"))
}

const BS_LAMBDA: f64 = 1.0;
const BS_LEVEL: usize = 10;
const BS_TRIM: f64 = 0.3;
const BS_T_TOL: f64 = 1e-10;
const BS_E_TOL: f64 = 1e-9;
const BS_COVER_TOL: f64 = 1e-6;
const THICKNESS_NOISE: f64 = 0.10;

#[derive(Serialize)]
struct BsOutput {
    certificate: fibspec::BSCertificate,
    direct: fibspec::bethe::DirectTail,
    common_range: Interval,
}

fn run_bs() -> Result<BsOutput, String> {
    let m = Model::canonical(BS_LAMBDA);
    let (n_lo, n_hi) = (12, 24);
    let t_range = iv(n_lo as f64 * PI, (n_hi + 1) as f64 * PI);
    let t = spectrum_in_t(&m, BS_LEVEL, t_range, BS_T_TOL).map_err(|e| e.to_string())?;
    let (_, certificate) = certify(&t, n_lo, n_hi, BS_TRIM, WindowScheme::HalfPeriods).map_err(|e| e.to_string())?;
    let e = approximant(&m, BS_LEVEL, iv(0.0, t_range.hi.powi(2)), BS_E_TOL).map_err(|e| e.to_string())?;
    let direct = direct_sum_tail(&e, BS_COVER_TOL).map_err(|e| e.to_string())?;
    let e1 = certificate.e1.ok_or("certificate has no chained tail")?;
    let common_range = iv(e1, certificate.e_max.min(direct.e_safe));
    Ok(BsOutput { certificate, direct, common_range })
}

fn c9_bethe_sommerfeld() -> Outcome {
    let out = run_bs()?;
    let m = Model::canonical(BS_LAMBDA);
    let e = approximant(&m, BS_LEVEL, iv(0.0, (25.0 * PI).powi(2)), BS_E_TOL).unwrap();
    let covered = e.set.minkowski_sum(&e.set).covers_interval(&out.common_range, BS_COVER_TOL);
    let taus = &out.certificate.thickness_list;
    let trend = taus.windows(2).all(|w| w[1] >= (1.0 - THICKNESS_NOISE) * w[0]);
    check(
        out.certificate.valid && covered && trend,
        format!(
            "valid {}, e1 {:.3}, e_max {:.3}, direct e1 {:.4}, covered [{:.3}, {:.3}] {covered}, thickness trend {trend}",
            out.certificate.valid,
            out.common_range.lo,
            out.certificate.e_max,
            out.direct.e1,
            out.common_range.lo,
            out.common_range.hi
        ),
    )
}

const LE_LAMBDAS: [f64; 4] = [10.0, 20.0, 30.0, 50.0];
const LE_LEVEL: usize = 10;
const LE_TOL: f64 = 1e-12;
/// Recorded slopes over scales [1e-6, 1e-1] (12 scales).
const LE_SLOPES: [f64; 4] = [0.9855, 0.7793, 0.2086, 0.1503];
const LE_PIN: f64 = 0.05;

fn run_low_energy() -> Result<Vec<LowEnergyReport>, String> {
    lambda_sweep(&LE_LAMBDAS, LE_LEVEL, LE_TOL, &LowEnergyOptions::default()).map_err(|e| e.to_string())
}

fn c10_low_energy() -> Outcome {
    let reports = run_low_energy()?;
    let mut ok = true;
    println!("      lambda   slope    r2      sum measure by level 4..10");
    for (r, pinned) in reports.iter().zip(LE_SLOPES) {
        let ms: Vec<String> = r.sum_measure_by_level.iter().map(|m| format!("{:.3e}", m.measure)).collect();
        println!(
            "      {:>6} {:>7.4} {:>7.4}  {}",
            r.lambda.unwrap(),
            r.dim_estimate.slope,
            r.dim_estimate.r2,
            ms.join(" ")
        );
        ok &= r.witness_band.lo >= 0.0 && r.witness_band.hi <= 12.0;
        ok &= (r.dim_estimate.slope - pinned).abs() <= LE_PIN;
    }
    let last = reports.last().unwrap();
    let ms = &last.sum_measure_by_level;
    let shrink = ms.last().unwrap().measure < 0.5 * ms[0].measure;
    check(
        ok && shrink,
        format!("witness bands and pinned slopes ok {ok}; level-10 sum < half of level-4 at lambda 50: {shrink}"),
    )
}

fn c11_determinism() -> Outcome {
    let in_pool = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let bs = run_bs()?;
            let le = run_low_energy()?;
            serde_json::to_string(&(bs, le)).map_err(|e| e.to_string())
        })
    };
    let one = in_pool(1)?;
    let eight = in_pool(8)?;
    check(one == eight, format!("{} bytes, identical for 1 and 8 threads: {}", one.len(), one == eight))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("invariant conservation", Duration::from_secs(1), c1_invariant),
        ("trace recursion oracle", Duration::from_secs(10), c2_trace_oracle),
        ("closed-form invariant", Duration::from_secs(1), c3_closed_form),
        ("Minkowski sum oracle", Duration::from_secs(30), c4_minkowski),
        ("thickness oracle", Duration::from_secs(30), c5_thickness),
        ("sum of thick Cantor sets", Duration::from_secs(1), c6_newhouse),
        ("box dimension calibration", Duration::from_secs(5), c7_box_dimension),
        ("Rayleigh bound", Duration::from_secs(1), c8_rayleigh),
        ("half-line coverage at desk scale", Duration::from_secs(300), c9_bethe_sommerfeld),
        ("low-energy sweep", Duration::from_secs(300), c10_low_energy),
        ("determinism across thread counts", Duration::from_secs(600), c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (tag, detail) = match outcome {
            Ok(d) if took <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(tag == "FAIL");
        println!("{tag} [{:>2}] {name}: {detail} ({:.2} s)", i + 1, took.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 11 acceptance criteria passed");
}
