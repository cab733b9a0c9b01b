use std::f64::consts::PI;

use fibspec::bethe::{
    certify, check_abs_conditions, decompose_windows, direct_sum_tail, verify_half_line, Condition, Window,
    WindowFamily, WindowScheme,
};
use fibspec::cantor::symmetric_cantor;
use fibspec::spectrum::{approximant, spectrum_in_t};
use fibspec::{Error, Interval, IntervalSet, Model};

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn scaled_into(set: &IntervalSet, j: Interval) -> IntervalSet {
    let h = set.hull().unwrap();
    set.affine(j.width() / h.width(), j.lo - h.lo * j.width() / h.width()).unwrap()
}

/// Middle-fifth level-4 sets filling `[n pi + 0.2, (n + 1) pi - 0.2]`.
fn synthetic(ns: std::ops::RangeInclusive<i64>) -> Vec<Window> {
    let c = symmetric_cantor(0.4, 4).unwrap();
    ns.map(|n| {
        let j = iv(n as f64 * PI + 0.2, (n + 1) as f64 * PI - 0.2);
        Window { n, j, k: scaled_into(&c, j) }
    })
    .collect()
}

fn run(windows: Vec<Window>) -> fibspec::BSCertificate {
    let fam = WindowFamily::from_windows(windows).unwrap();
    let cert = check_abs_conditions(&fam).unwrap();
    verify_half_line(&fam, cert).unwrap()
}

#[test]
fn synthetic_family_is_certified() {
    let windows = synthetic(5..=12);
    let cert = run(windows.clone());
    assert!((cert.epsilon - 1.0).abs() < 1e-9, "{}", cert.epsilon);
    assert!(cert.a_cap > cert.a_gap && cert.a_gap > 0.0);
    assert!(cert.conditions_ok && cert.chain_ok && cert.valid, "{:?}", cert.failures);
    assert!(cert.squared_thickness_list.iter().all(|&t| t >= 1.0));
    let e1 = cert.e1.unwrap();
    assert_eq!(e1, 2.0 * windows[0].j.lo.powi(2));
    let union = windows.iter().fold(IntervalSet::empty(), |acc, w| acc.union(&w.k)).square_image().unwrap();
    let sum = union.minkowski_sum(&union);
    assert!(sum.covers_interval(&iv(e1, cert.e_max), 1e-9));
}

#[test]
fn thin_window_fails_thickness() {
    let mut windows = synthetic(5..=12);
    let j = windows[3].j;
    let l = j.width() / 2.6;
    windows[3].k = IntervalSet::from_pairs(&[(j.lo, j.lo + 0.8 * l), (j.lo + 1.8 * l, j.hi)]).unwrap();
    let cert = run(windows);
    assert!(cert.epsilon < 0.0);
    assert!(!cert.valid);
    let f = cert.failures.iter().find(|f| f.condition == Condition::Thickness).unwrap();
    assert_eq!(f.n, Some(8));
}

#[test]
fn overlapping_hulls_fail_disjointness() {
    let mut windows = synthetic(5..=8);
    let shifted = windows[2].j.lo - 0.5;
    windows[2].j = iv(shifted, windows[2].j.hi);
    windows[2].k = scaled_into(&windows[2].k, windows[2].j);
    windows[2].j = windows[2].k.hull().unwrap();
    let cert = run(windows);
    assert!(!cert.valid);
    assert_eq!(cert.failures.len(), 1, "{:?}", cert.failures);
    assert_eq!(cert.failures[0].condition, Condition::DisjointHulls);
    assert_eq!(cert.failures[0].n, Some(7));
}

#[test]
fn uneven_hulls_fail_scales() {
    let mut windows = synthetic(5..=8);
    let j = windows[1].j;
    windows[1].k = scaled_into(&windows[1].k, iv(j.lo, j.lo + 0.3 * j.width()));
    let cert = run(windows);
    assert!(!cert.valid);
    assert!(cert.failures.iter().all(|f| f.condition == Condition::Scales), "{:?}", cert.failures);
}

#[test]
fn free_family_is_trivially_valid() {
    let free = Model::canonical(0.0);
    let t = spectrum_in_t(&free, 6, iv(10.0 * PI, 20.0 * PI), 1e-10).unwrap();
    let (fam, cert) = certify(&t, 10, 19, 0.3, WindowScheme::HalfPeriods).unwrap();
    for w in &fam.windows {
        assert_eq!(w.k.intervals(), &[w.j]);
    }
    assert_eq!(cert.epsilon, f64::INFINITY);
    assert!(cert.valid);
    assert_eq!(cert.e1, Some(2.0 * fam.windows[0].j.lo.powi(2)));
    let json = serde_json::to_string(&cert).unwrap();
    assert!(json.contains(r#""epsilon":"inf""#));
    assert_eq!(serde_json::from_str::<fibspec::BSCertificate>(&json).unwrap(), cert);
}

#[test]
fn spread_windows_break_the_chain() {
    let m = Model::canonical(1.0);
    let t = spectrum_in_t(&m, 8, iv(12.0 * PI, 25.0 * PI), 1e-10).unwrap();
    let (_, cert) = certify(&t, 6, 11, 0.3, WindowScheme::EvenHalfPeriods).unwrap();
    assert!(!cert.valid);
    assert_eq!(cert.chain_break, Some(6));
    assert!(cert.failures.iter().any(|f| f.condition == Condition::Scales));
}

#[test]
fn windows_from_coupled_spectrum() {
    let m = Model::canonical(1.0);
    let t = spectrum_in_t(&m, 10, iv(12.0 * PI, 21.0 * PI), 1e-10).unwrap();
    let fam = decompose_windows(&t, 12, 20, 0.3, WindowScheme::HalfPeriods).unwrap();
    assert_eq!(fam.windows.len(), 9);
    assert!(fam.empty.is_empty());
    assert!(fam.alpha.iter().chain(&fam.beta).all(|&x| x == 0.3));
    assert_eq!(decompose_windows(&t, 12, 20, 1.6, WindowScheme::HalfPeriods).unwrap_err(), Error::TrimTooLarge(1.6));
    assert!(decompose_windows(&t, 12, 22, 0.3, WindowScheme::HalfPeriods).is_err());
    let e = approximant(&m, 4, iv(0.0, 10.0), 1e-9).unwrap();
    assert!(decompose_windows(&e, 0, 1, 0.3, WindowScheme::HalfPeriods).is_err());
}

#[test]
fn e1_does_not_drop_with_level() {
    let m = Model::canonical(1.0);
    let tol = 1e-10;
    let mut prev = f64::NEG_INFINITY;
    for k in [8, 10, 12] {
        let t = spectrum_in_t(&m, k, iv(12.0 * PI, 19.0 * PI), tol).unwrap();
        let (_, cert) = certify(&t, 12, 18, 0.3, WindowScheme::HalfPeriods).unwrap();
        let e1 = cert.e1.unwrap();
        // an E-edge carries 2 t tol
        assert!(e1 >= prev - 2.0 * 19.0 * PI * tol, "k {k}: {e1} < {prev}");
        prev = e1;
    }
}

#[test]
fn certificate_and_direct_sum_agree() {
    let m = Model::canonical(1.0);
    let t = spectrum_in_t(&m, 8, iv(12.0 * PI, 19.0 * PI), 1e-10).unwrap();
    let (fam, cert) = certify(&t, 12, 18, 0.3, WindowScheme::HalfPeriods).unwrap();
    assert!(cert.valid);
    let e = approximant(&m, 8, iv(0.0, (19.0 * PI).powi(2)), 1e-9).unwrap();
    let tail = direct_sum_tail(&e, 1e-6).unwrap();
    let e1 = cert.e1.unwrap();
    let top = cert.e_max.min(tail.e_safe);
    let sum = e.set.minkowski_sum(&e.set);
    assert!(sum.covers_interval(&iv(e1, top), 10.0 * 1e-9));
    // direct coverage starts no later than the certified one
    let width = fam.windows.iter().map(|w| w.j.width()).fold(0.0, f64::max);
    assert!(tail.e1 <= e1 + width);
}

#[test]
fn direct_tail_examples() {
    let free = Model::canonical(0.0);
    let e = approximant(&free, 5, iv(0.0, 100.0), 1e-9).unwrap();
    let tail = direct_sum_tail(&e, 1e-9).unwrap();
    assert_eq!(tail.e1, 0.0);
    assert_eq!(tail.e_safe, 100.0);

    // low-energy truncations: coupling 1 still sums to a tail, coupling 30 does not
    let weak = approximant(&Model::canonical(1.0), 10, iv(0.0, 24.0), 1e-9).unwrap();
    assert!(direct_sum_tail(&weak, 1e-6).is_ok());
    let strong = approximant(&Model::canonical(30.0), 10, iv(0.0, 24.0), 1e-9).unwrap();
    assert!(matches!(direct_sum_tail(&strong, 1e-6), Err(Error::NoGapFreeTail { .. })));

    let t = spectrum_in_t(&free, 3, iv(1.0, 2.0), 1e-9).unwrap();
    assert!(direct_sum_tail(&t, 1e-6).is_err());
}

#[test]
fn window_diagnostics() {
    let m = Model::canonical(1.0);
    let t = spectrum_in_t(&m, 8, iv(12.0 * PI, 16.0 * PI), 1e-10).unwrap();
    let (_, cert) = certify(&t, 12, 15, 0.3, WindowScheme::HalfPeriods).unwrap();
    for d in &cert.windows {
        assert!(d.invariant_min.unwrap() > 0.0);
        assert!(d.log_derivative_max.unwrap() <= 4.0 / 0.3f64.tan() + 3.0);
    }
}
