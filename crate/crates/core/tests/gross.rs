use std::f64::consts::{PI, SQRT_2};

use polaron::gross::{admissible_threshold, beta, c2, c3, c_squared, constants, e_cut, e_cut_closed_form, THRESHOLD_TOL};
use polaron::special::{lambda0, FOURIER_NORM, LAMBDA0_SQ};
use polaron::Error;

fn condition(alpha: f64, k: f64) -> f64 {
    let c = c_squared(alpha, k).unwrap().sqrt();
    4.0 * c * c + 4.0 * c
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn beta_examples() {
    assert_eq!(beta(1.5, 1.0, 3.0).unwrap(), 0.0);
    for k in [0.7, 3.1, 42.0] {
        assert_eq!(beta(k, 4.0, 0.5).unwrap(), 2.0 * beta(k, 1.0, 0.5).unwrap());
    }
    let k: f64 = 100.0;
    let asymptotic = lambda0() * FOURIER_NORM * 2.0 / k.powi(3);
    assert!(rel(beta(k, 1.0, 1.0).unwrap().abs(), asymptotic) < 0.01);
    assert!(matches!(beta(0.0, 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(beta(-1.0, 1.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn empty_shell_has_no_cutoff_energy() {
    let g = constants(1.0, 4.0, 4.0).unwrap();
    assert!(g.empty_shell);
    assert_eq!(g.e_cut, 0.0);
    let g = constants(1.0, 4.0, 2.0).unwrap();
    assert!(g.empty_shell);
    assert_eq!(g.e_cut, 0.0);
}

#[test]
fn cutoff_energy_matches_closed_form() {
    let g = constants(1.0, 10.0, f64::INFINITY).unwrap();
    let exact = -(4.0 / PI) * (PI / 2.0 - (10.0 / SQRT_2).atan());
    assert!(rel(g.e_cut, exact) < 1e-8, "{} vs {exact}", g.e_cut);
    assert!(rel(g.e_cut_reference, exact) < 1e-14);
    for (alpha, k, kappa) in [(0.5, 0.0, 3.0), (2.0, 1.0, 50.0), (7.0, 0.0, f64::INFINITY)] {
        let q = e_cut(alpha, k, kappa).unwrap();
        assert!(rel(q, e_cut_closed_form(alpha, k, kappa)) < 1e-10);
    }
}

#[test]
fn coupling_constant_shrinks_with_split() {
    let ks = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0];
    let cs: Vec<f64> = ks.iter().map(|&k| constants(1.3, k, f64::INFINITY).unwrap().c_k).collect();
    for w in cs.windows(2) {
        assert!(w[1] <= w[0], "{cs:?}");
    }
}

#[test]
fn threshold_is_tight() {
    for alpha in [0.5, 1.0, 2.0, 4.0] {
        let k = admissible_threshold(alpha).unwrap();
        assert!(k > 0.0);
        assert!(condition(alpha, k) < 1.0);
        assert!(condition(alpha, 0.99 * k) >= 1.0);
        assert!(condition(alpha, k - THRESHOLD_TOL) >= 1.0);
        assert!(constants(alpha, k, f64::INFINITY).unwrap().admissible);
    }
}

#[test]
fn threshold_grows_with_alpha() {
    let ks: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&a| admissible_threshold(a).unwrap()).collect();
    for w in ks.windows(2) {
        assert!(w[1] >= w[0], "{ks:?}");
    }
}

#[test]
fn weak_coupling_needs_no_split() {
    for alpha in [1e-2, 1e-4] {
        assert_eq!(admissible_threshold(alpha).unwrap(), 0.0);
        assert!((c_squared(alpha, 0.0).unwrap() - alpha).abs() < 1e-12 * alpha);
    }
}

#[test]
fn linear_alpha_laws() {
    let pairs = [(0.3, 2.7), (1.0, 5.0), (2.0, 0.25)];
    for k in [0.0, 1.5, 9.0] {
        for (a, b) in pairs {
            let s = b / a;
            assert!(rel(c_squared(b, k).unwrap(), s * c_squared(a, k).unwrap()) < 1e-10);
            assert!(rel(c2(b, k).unwrap().max(1e-300), (s * c2(a, k).unwrap()).max(1e-300)) < 1e-10);
            assert!(rel(e_cut(b, k, 30.0).unwrap(), s * e_cut(a, k, 30.0).unwrap()) < 1e-10);
            let ca = constants(a, k, f64::INFINITY).unwrap().c_k;
            let cb = constants(b, k, f64::INFINITY).unwrap().c_k;
            assert!(rel(cb, s.sqrt() * ca) < 1e-10);
        }
    }
}

#[test]
fn cutoff_energy_decreases_with_shell() {
    let mut last = 0.0;
    for kappa in [1.0, 2.0, 4.0, 10.0, 100.0, f64::INFINITY] {
        let e = e_cut(1.0, 1.0, kappa).unwrap();
        assert!(e <= last, "kappa {kappa}");
        last = e;
    }
}

/// Simpson's rule, fine enough for the smooth integrands here.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 200;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn constants_vary_continuously_in_split() {
    let alpha = 1.0;
    let pref = alpha * LAMBDA0_SQ * FOURIER_NORM.powi(2) * 4.0 * PI;
    let step = 0.25;
    for i in 0..40 {
        let k = i as f64 * step;
        let next = k + step;
        let c_drop = c_squared(alpha, k).unwrap() - c_squared(alpha, next).unwrap();
        let c_expected = pref * simpson(|q| (q / (1.0 + 0.5 * q * q)).powi(2), k, next);
        assert!((c_drop - c_expected).abs() < 1e-10, "C² at K = {k}");
        let c2_rise = c2(alpha, next).unwrap() - c2(alpha, k).unwrap();
        assert!((c2_rise - pref * step).abs() < 1e-12);
        let c3_drop = c3(alpha, k, f64::INFINITY).unwrap() - c3(alpha, next, f64::INFINITY).unwrap();
        let c3_expected = pref
            * simpson(
                |q| {
                    let d = 1.0 + 0.5 * q * q;
                    1.0 / (d * d) + 2.0 / d
                },
                k,
                next,
            );
        assert!((c3_drop - c3_expected).abs() < 1e-10, "C₃ at K = {k}");
    }
}

#[test]
fn every_constant_has_its_sign() {
    for k in [0.0, 0.5, 3.0, 20.0] {
        for kappa in [k + 1.0, f64::INFINITY] {
            let g = constants(2.0, k, kappa).unwrap();
            assert!(g.c_k >= 0.0 && g.c2_k >= 0.0 && g.c3_k >= 0.0 && g.e_cut <= 0.0);
        }
    }
}

#[test]
fn invalid_arguments() {
    assert!(matches!(constants(0.0, 1.0, 2.0), Err(Error::Domain(_))));
    assert!(matches!(constants(1.0, -1.0, 2.0), Err(Error::Domain(_))));
    assert!(matches!(admissible_threshold(-1.0), Err(Error::Domain(_))));
}

#[test]
fn row_serialization() {
    let g = constants(1.0, 10.0, f64::INFINITY).unwrap();
    let json = serde_json::to_value(g).unwrap();
    for key in ["alpha", "K", "kappa", "C_K", "C2_K", "C3_K", "E_cut", "admissible"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let row = g.tsv_row();
    assert_eq!(row.trim_end().split('\t').count(), 8);
    assert!(row.ends_with("false\n"));
    assert!(constants(1.0, 50.0, f64::INFINITY).unwrap().tsv_row().ends_with("true\n"));
}
