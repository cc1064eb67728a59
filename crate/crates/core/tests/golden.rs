mod common;

use tropikam::barrier::{analyze, peierls_barrier};
use tropikam::ergodic::{markov_from_coupling, orbit_in_d, sample_orbit};
use tropikam::ingest::{load_cost, save_cost, CostFormat};
use tropikam::mather::solve_mather;
use tropikam::transport::{
    dual_value, factor_through_aubry, kantorovich_rubinstein_value, var_char_pair,
};
use tropikam::{Matrix, Measure, Tolerances};

use common::{chain_enumeration, g3, metric3};

/// `liminf A_n` read off exhaustive chain enumeration on a late window.
fn enumerated_barrier(a: &Matrix, from: usize, to: usize) -> Matrix {
    let mut c = chain_enumeration(a, from);
    for m in from + 1..=to {
        c.min_assign(&chain_enumeration(a, m));
    }
    c
}

#[test]
fn g3_barrier_by_path_enumeration() {
    let k = g3();
    let brute = enumerated_barrier(k.matrix(), 6, 10);
    let expected = Matrix::from_rows(&[
        vec![0.0, 1.0, 4.0],
        vec![2.0, 3.0, 6.0],
        vec![1.0, 2.0, 5.0],
    ])
    .unwrap();
    assert_eq!(brute, expected);

    let (norm, bd) = analyze(&k, &Tolerances::default()).unwrap();
    assert_eq!(bd.l, 0.0);
    assert_eq!(norm, k);
    assert_eq!(bd.c, brute);
    assert_eq!(bd.aubry, vec![0]);
    assert_eq!(bd.d_edges, vec![(0, 0)]);
}

#[test]
fn g3_transport_golden_values() {
    let bd = peierls_barrier(&g3(), &Tolerances::default()).unwrap();
    let (_, v) = var_char_pair(&bd, 1, 2).unwrap();
    assert!((v - 6.0).abs() <= 1e-9);
    let f = factor_through_aubry(&bd, &Measure::dirac(3, 1), &Measure::dirac(3, 2)).unwrap();
    assert!((f.direct - 6.0).abs() <= 1e-9);
    assert!((f.first_leg - 2.0).abs() <= 1e-9);
    assert!((f.second_leg - 4.0).abs() <= 1e-9);
    assert_eq!(f.mu.weights(), Measure::dirac(3, 0).weights());
}

#[test]
fn g3_dynamics() {
    let k = g3();
    let (eta, v) = solve_mather(&k, 1e-7).unwrap();
    assert_eq!(v, 0.0);
    let mr = markov_from_coupling(&eta, 1e-12);
    assert_eq!(sample_orbit(&mr, 8, 0).unwrap().path, vec![0; 8]);
    let bd = peierls_barrier(&k, &Tolerances::default()).unwrap();
    assert_eq!(orbit_in_d(&bd, 0, 8).unwrap().path, vec![0; 8]);
}

#[test]
fn metric_barrier_is_the_metric() {
    let k = metric3();
    let brute = enumerated_barrier(k.matrix(), 4, 8);
    let bd = peierls_barrier(&k, &Tolerances::default()).unwrap();
    assert_eq!(brute, *k.matrix());
    assert_eq!(bd.c, brute);
    assert_eq!(bd.aubry, vec![0, 1, 2]);

    let mu0 = Measure::dirac(3, 0);
    let mu1 = Measure::dirac(3, 2);
    let (_, pair_dual) = dual_value(&bd, &mu0, &mu1).unwrap();
    let (_, kr) = kantorovich_rubinstein_value(&bd.c, &mu0, &mu1).unwrap();
    assert!((pair_dual - 2.0).abs() <= 1e-9);
    assert!((kr - 2.0).abs() <= 1e-9);
}

#[test]
fn saved_kernels_analyze_identically() {
    let dir = tempfile::tempdir().unwrap();
    for format in [CostFormat::Json, CostFormat::Csv] {
        let path = dir.path().join("g3.cost");
        save_cost(&g3(), &path, format).unwrap();
        let back = load_cost(&path, format).unwrap();
        let tol = Tolerances::default();
        assert_eq!(
            analyze(&back, &tol).unwrap().1.c,
            analyze(&g3(), &tol).unwrap().1.c
        );
    }
}
