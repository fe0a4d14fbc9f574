use std::f64::consts::PI;

use nalgebra::DMatrix;
use polaron::fock::{
    build_modes, dispersion_scan, existence_criterion, ground_energy, occupation_count, polaron_operator,
    polaron_toy_energy, toy_binding, Discretization, LanczosOptions, Lattice, ModeSet, SparseOperator,
    TruncatedFockModel, DISPERSION_TOL, SYMMETRY_TOL,
};
use polaron::special::{lambda0, FOURIER_NORM};
use polaron::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> LanczosOptions {
    LanczosOptions::default()
}

/// 4³ lattice, one shell of two modes: small enough for dense oracles.
fn tiny(n_max: usize) -> Discretization {
    Discretization {
        lattice: Lattice { points_per_axis: 4, spacing: 0.5 },
        modes: build_modes(2.0, 1, 2).unwrap(),
        n_max,
        max_dimension: 200_000,
    }
}

fn small() -> Discretization {
    Discretization {
        lattice: Lattice { points_per_axis: 6, spacing: 0.5 },
        modes: build_modes(2.0, 2, 6).unwrap(),
        n_max: 2,
        max_dimension: 200_000,
    }
}

fn model(discretization: Discretization, alpha: f64, u0: f64, p: [f64; 3]) -> TruncatedFockModel {
    TruncatedFockModel { discretization, alpha, u0, p }
}

fn dense_ground(op: &SparseOperator) -> f64 {
    let n = op.dim();
    let m = DMatrix::from_fn(n, n, |i, j| op.get(i, j));
    m.symmetric_eigenvalues().min()
}

#[test]
fn single_mode_pair() {
    let m = build_modes(1.0, 1, 2).unwrap();
    assert_eq!(m.len(), 2);
    let (a, b) = (m.modes[0], m.modes[1]);
    assert_eq!(a.k, [-b.k[0], -b.k[1], -b.k[2]]);
    assert_eq!(a.weight, b.weight);
    assert!((a.norm() - 0.5).abs() < 1e-15);
}

#[test]
fn weights_fill_the_ball() {
    for (kappa, shells, per_shell) in [(1.0, 1, 2), (2.0, 2, 6), (3.5, 4, 14), (0.7, 3, 40)] {
        let m = build_modes(kappa, shells, per_shell).unwrap();
        let ball = 4.0 * PI / 3.0 * kappa * kappa * kappa;
        assert!((m.total_weight() - ball).abs() < 1e-12 * ball);
    }
}

#[test]
fn odd_shell_count_breaks_symmetry() {
    assert!(matches!(build_modes(1.0, 1, 3), Err(Error::Symmetry(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_sets_are_closed_under_negation(kappa in 0.1f64..10.0, shells in 1usize..5, pairs in 1usize..12) {
        let m = build_modes(kappa, shells, 2 * pairs).unwrap();
        prop_assert!(m.validate().is_ok());
        for (j, mode) in m.modes.iter().enumerate() {
            prop_assert!(mode.norm() > 0.0 && mode.norm() <= kappa);
            let partner = m.partner(j).expect("partner");
            let other = m.modes[partner];
            prop_assert_eq!(other.k, [-mode.k[0], -mode.k[1], -mode.k[2]]);
            prop_assert_eq!(other.weight, mode.weight);
        }
    }
}

#[test]
fn trivial_operator() {
    let op = SparseOperator::from_dense(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
    let r = ground_energy(&op, &opts()).unwrap();
    assert!(r.energy.abs() < 1e-12);
    assert!(r.residual <= opts().tol);
}

#[test]
fn decoupled_model_is_block_diagonal_and_exact() {
    for p in [[0.0; 3], [0.3, 0.0, 0.0], [0.5, -0.2, 0.9], [1.7, 0.0, 0.0]] {
        let m = model(tiny(2), 0.0, 0.0, p);
        let op = m.assemble().unwrap();
        let sites = m.discretization.lattice.sites();
        for i in 0..op.dim() {
            for (j, _) in op.row(i) {
                assert_eq!(i / sites, j / sites, "coupling between occupation sectors");
            }
        }
        let e = ground_energy(&op, &opts()).unwrap().energy;
        assert!((e - m.decoupled_energy()).abs() < 1e-10, "P = {p:?}");
        assert!((e - dense_ground(&op)).abs() < 1e-10);
    }
    // also with the larger mode set, where a phonon sector wins at large P
    let m = model(small(), 0.0, 0.0, [2.2, 0.0, 0.0]);
    let e = m.ground_energy(&opts()).unwrap().energy;
    assert!((e - m.decoupled_energy()).abs() < 1e-10);
}

#[test]
fn assembled_operator_is_exactly_symmetric() {
    let m = model(small(), 1.3, 2.0, [0.4, -0.1, 0.2]);
    assert_eq!(m.assemble().unwrap().asymmetry(), 0.0);
}

#[test]
fn vacuum_truncation_is_the_electronic_block() {
    let (alpha, u0, p) = (1.0, 2.0, [0.3, 0.1, 0.0]);
    let m = model(tiny(0), alpha, u0, p);
    let op = m.assemble().unwrap();
    let lattice = m.discretization.lattice;
    assert_eq!(op.dim(), lattice.sites());
    let h2 = 1.0 / (lattice.spacing * lattice.spacing);
    let p2: f64 = p.iter().map(|c| c * c).sum();
    for s in 0..op.dim() {
        let x = lattice.position(s);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        assert!((op.get(s, s) - (6.0 * h2 + p2 / 4.0 + alpha * u0 / r)).abs() < 1e-12);
        for (j, v) in op.row(s) {
            if j != s {
                assert_eq!(v, -h2);
            }
        }
    }
    let e = ground_energy(&op, &opts()).unwrap().energy;
    assert!((e - dense_ground(&op)).abs() < 1e-10);
}

#[test]
fn coupled_model_matches_dense_diagonalization() {
    let m = model(tiny(2), 1.0, 1.0, [0.2, 0.0, 0.0]);
    let op = m.assemble().unwrap();
    let r = ground_energy(&op, &opts()).unwrap();
    assert!((r.energy - dense_ground(&op)).abs() < 1e-10);
    assert!(r.energy >= m.lower_bound());
}

#[test]
fn seeds_agree_within_tolerance() {
    let m = model(small(), 1.0, 0.5, [0.2, 0.0, 0.0]);
    let op = m.assemble().unwrap();
    let o = opts();
    let energies: Vec<f64> = [1u64, 7, 0x5EED]
        .iter()
        .map(|&seed| ground_energy(&op, &LanczosOptions { seed, ..o }).unwrap().energy)
        .collect();
    for e in &energies {
        assert!((e - energies[0]).abs() <= 10.0 * o.tol, "{energies:?}");
    }
    // same seed, same answer
    assert_eq!(ground_energy(&op, &o).unwrap().energy, ground_energy(&op, &o).unwrap().energy);
}

#[test]
fn dimension_cap_is_enforced() {
    let mut d = small();
    d.max_dimension = 1000;
    let m = model(d, 1.0, 0.0, [0.0; 3]);
    match m.assemble() {
        Err(Error::DimensionCap { dimension, cap }) => {
            assert_eq!(dimension, 216 * occupation_count(12, 2));
            assert_eq!(cap, 1000);
        }
        other => panic!("expected a size error, got {other:?}"),
    }
}

#[test]
fn polaron_toy_without_coupling_is_the_vacuum() {
    let e = polaron_toy_energy(0.0, &build_modes(2.0, 2, 6).unwrap(), 2, &opts()).unwrap();
    assert!(e.energy.abs() < 1e-12);
}

#[test]
fn polaron_toy_three_state_oracle() {
    let (alpha, kappa): (f64, f64) = (2.0, 3.0);
    let modes = build_modes(kappa, 1, 2).unwrap();
    let k = kappa / 2.0;
    let w = 4.0 * PI / 3.0 * kappa.powi(3) / 2.0;
    let g = alpha.sqrt() * lambda0() * w.sqrt() * FOURIER_NORM / k;
    let d = 1.0 + k * k / 2.0;
    let exact = (d - (d * d + 8.0 * g * g).sqrt()) / 2.0;
    let op = polaron_operator(alpha, &modes, 1).unwrap();
    assert_eq!(op.dim(), 3);
    let e = polaron_toy_energy(alpha, &modes, 1, &opts()).unwrap().energy;
    assert!((e - exact).abs() < 1e-12, "{e} vs {exact}");
}

#[test]
fn polaron_toy_decreases_with_truncation() {
    let modes = build_modes(2.0, 2, 6).unwrap();
    let mut last = f64::INFINITY;
    for n_max in 0..=4 {
        let e = polaron_toy_energy(1.5, &modes, n_max, &opts()).unwrap().energy;
        assert!(e <= last + 1e-9, "n_max {n_max}");
        last = e;
    }
}

#[test]
fn binding_without_coupling_is_minus_confinement() {
    let d = small();
    let b = toy_binding(0.0, 3.0, &d, &opts()).unwrap();
    assert!(b.polaron.abs() < 1e-12);
    let eps0 = d.lattice.ground_kinetic();
    assert!((b.binding + eps0).abs() < 1e-9, "{} vs {}", b.binding, -eps0);
    assert!(b.binding <= 0.0);
    assert_eq!(b.binding, 2.0 * b.polaron - b.bipolaron);
}

#[test]
fn binding_falls_as_repulsion_grows() {
    let d = small();
    let values: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&u0| toy_binding(0.5, u0, &d, &opts()).unwrap().binding)
        .collect();
    for w in values.windows(2) {
        assert!(w[1] < w[0], "{values:?}");
    }
}

#[test]
fn existence_examples() {
    assert_eq!(existence_criterion(1.0, [1.0, 0.0, 0.0]), (true, 0.75));
    for p in [[0.0; 3], [0.1, 0.0, 0.0], [3.0, 1.0, 0.0]] {
        assert!(!existence_criterion(0.0, p).0);
    }
    let (holds, gap) = existence_criterion(0.25, [1.0, 0.0, 0.0]);
    assert!(!holds);
    assert_eq!(gap, 0.0);
    let (holds, gap) = existence_criterion(-0.3, [0.0; 3]);
    assert!(!holds);
    assert_eq!(gap, -0.3);
}

#[test]
fn existence_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let e_bin: f64 = rng.gen_range(-0.5..2.0);
        let p: [f64; 3] = [rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)];
        let p_sq = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let limit = 2.0 * if e_bin >= 1.0 { 1.0 } else { e_bin.max(0.0).sqrt() };
        let holds = e_bin > 0.0 && p_sq.sqrt() < limit;
        let gap = if e_bin < 1.0 { e_bin } else { 1.0 } - p_sq / 4.0;
        assert_eq!(existence_criterion(e_bin, p), (holds, gap));
    }
}

#[test]
fn energy_decreases_with_phonon_number() {
    let mut last = f64::INFINITY;
    for n_max in 0..=3 {
        let mut d = small();
        d.modes = build_modes(2.0, 1, 6).unwrap();
        d.n_max = n_max;
        let e = model(d, 1.0, 1.0, [0.0; 3]).ground_energy(&opts()).unwrap().energy;
        assert!(e <= last + 1e-9, "n_max {n_max}: {e} > {last}");
        last = e;
    }
}

#[test]
fn energy_decreases_with_more_modes() {
    let full = build_modes(2.0, 2, 6).unwrap();
    // the outer shell alone is a symmetric subset of the full set
    let outer = ModeSet { modes: full.modes[6..].to_vec(), kappa: full.kappa };
    outer.validate().unwrap();
    let energy = |modes: ModeSet| {
        let mut d = small();
        d.modes = modes;
        model(d, 1.0, 0.5, [0.1, 0.0, 0.0]).ground_energy(&opts()).unwrap().energy
    };
    let (e_outer, e_full) = (energy(outer), energy(full));
    assert!(e_full <= e_outer + 1e-9, "{e_full} > {e_outer}");
}

#[test]
fn energy_decreases_with_larger_box() {
    let mut last = f64::INFINITY;
    for l in [4, 6, 8] {
        let mut d = small();
        d.lattice.points_per_axis = l;
        d.n_max = 1;
        let e = model(d, 1.0, 1.0, [0.0; 3]).ground_energy(&opts()).unwrap().energy;
        assert!(e <= last + 1e-9, "L = {l}: {e} > {last}");
        last = e;
    }
}

#[test]
fn free_dispersion_is_quadratic() {
    let template = model(small(), 0.0, 0.0, [0.0; 3]);
    let ps = [[0.0; 3], [0.3, 0.0, 0.0], [-0.3, 0.0, 0.0], [0.0, 0.2, 0.1], [0.0, -0.2, -0.1]];
    let report = dispersion_scan(&template, &ps, &opts()).unwrap();
    for row in &report.rows {
        let p2: f64 = row.p.iter().map(|c| c * c).sum();
        assert!((row.energy.unwrap() - report.e0 - p2 / 4.0).abs() < 1e-10);
    }
}

#[test]
fn coupled_dispersion_inequalities() {
    let template = model(small(), 1.0, 0.0, [0.0; 3]);
    let ray: Vec<[f64; 3]> = [-0.4, -0.2, 0.0, 0.2, 0.4].iter().map(|&x| [x, 0.0, 0.0]).collect();
    let report = dispersion_scan(&template, &ray, &opts()).unwrap();
    assert!(report.passed());
    assert!(report.symmetry_defect < SYMMETRY_TOL);
    let e_p = report.rows.iter().find(|r| r.p == [0.4, 0.0, 0.0]).unwrap().energy.unwrap();
    assert!(report.e0 <= e_p && e_p <= report.e0 + 0.04 + 1e-9);
    assert!(report.concavity_excess <= DISPERSION_TOL);
    assert!(report.e0 >= report.lower_bound);
    let tsv = report.to_tsv();
    assert!(tsv.starts_with("Px\tPy\tPz\tE\tresidual\tchecks_passed\n"));
    assert_eq!(tsv.lines().filter(|l| l.ends_with("true")).count(), 5);
}

#[test]
fn momentum_list_must_be_symmetric() {
    let template = model(tiny(1), 1.0, 0.0, [0.0; 3]);
    let no_zero = [[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0]];
    assert!(matches!(dispersion_scan(&template, &no_zero, &opts()), Err(Error::InvalidConfig(_))));
    let lopsided = [[0.0; 3], [0.1, 0.0, 0.0]];
    assert!(matches!(dispersion_scan(&template, &lopsided, &opts()), Err(Error::InvalidConfig(_))));
}
