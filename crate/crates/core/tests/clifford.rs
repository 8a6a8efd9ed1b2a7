use nhyang::linalg::{c, cr, Mat4, C64};
use nhyang::*;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};

fn gamma_by_hand() -> [Mat4; 5] {
    let o = cr(0.0);
    let l = cr(1.0);
    let i = c(0.0, 1.0);
    let m = |rows: [[C64; 4]; 4]| Mat4::from_fn(|r, k| rows[r][k]);
    [
        m([[o, o, o, -l], [o, o, l, o], [o, l, o, o], [-l, o, o, o]]),
        m([[o, l, o, o], [l, o, o, o], [o, o, o, l], [o, o, l, o]]),
        m([[o, i, o, o], [-i, o, o, o], [o, o, o, -i], [o, o, i, o]]),
        m([[l, o, o, o], [o, -l, o, o], [o, o, l, o], [o, o, o, -l]]),
        m([[o, o, o, -i], [o, o, i, o], [o, -i, o, o], [i, o, o, o]]),
    ]
}

#[test]
fn basis_matches_hand_entries() {
    let b = dirac_basis();
    for (k, g) in gamma_by_hand().iter().enumerate() {
        assert_eq!(b.gamma(k + 1), g, "gamma {}", k + 1);
    }
}

#[test]
fn gamma4_is_diagonal() {
    let g4 = *dirac_basis().gamma(4);
    assert_eq!(g4, Mat4::from_diagonal(&[cr(1.0), cr(-1.0), cr(1.0), cr(-1.0)].into()));
}

#[test]
fn anticommutators_exact() {
    let b = dirac_basis();
    for i in 1..=5 {
        for j in 1..=5 {
            let expected = if i == j { Mat4::identity() * cr(2.0) } else { Mat4::zeros() };
            assert_eq!(b.anticommutator(i, j), expected, "({i},{j})");
        }
    }
    assert_eq!(b.anticommutator(2, 3), Mat4::zeros());
}

#[test]
fn gammas_hermitian_and_involutory() {
    for g in dirac_basis().all() {
        assert_eq!(g.adjoint(), *g);
        assert_eq!(g * g, Mat4::identity());
    }
}

#[test]
fn north_pole_and_symmetry_points() {
    for (t2, p1, p2) in [(0.3, 1.2, 4.0), (2.0, 0.0, 5.5)] {
        let q = spherical_to_cartesian(1.0, 0.0, t2, p1, p2);
        assert!((q[3] - 1.0).abs() < 1e-15);
        for k in [0, 1, 2, 4] {
            assert!(q[k].abs() < 1e-15);
        }
    }
    let q = spherical_to_cartesian(1.0, FRAC_PI_2, FRAC_PI_2, 0.0, 0.0);
    let expected = [1.0, 0.0, 0.0, 0.0, 0.0];
    for k in 0..5 {
        assert!((q[k] - expected[k]).abs() < 1e-15);
    }
}

#[test]
fn spherical_norm_generic() {
    let q = spherical_to_cartesian(2.0, FRAC_PI_3, FRAC_PI_4, FRAC_PI_2, PI);
    let n: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((n - 2.0).abs() < 1e-14);
}

#[test]
fn pole_hamiltonian_is_gamma4() {
    let p = ParameterPoint::cartesian([0.0, 0.0, 0.0, 1.0, 0.0], 0.0).unwrap();
    assert_eq!(build_hamiltonian(&p), *dirac_basis().gamma(4));
}

#[test]
fn pure_gain_loss_spectrum() {
    let p = ParameterPoint::cartesian([0.0; 5], 1.0).unwrap();
    let h = build_hamiltonian(&p);
    assert_eq!(h, dirac_basis().gamma(4) * c(0.0, 1.0));
    let es = eigensystem(&h, 1e-8).unwrap();
    assert!((es.e_plus() - c(0.0, 1.0)).norm() < 1e-12 || (es.e_plus() + c(0.0, 1.0)).norm() < 1e-12);
    assert!((es.e_plus() + es.e_minus()).norm() < 1e-12);
}

// Entry-wise form of the Hamiltonian in hyperspherical coordinates.
fn spherical_entries(r: f64, t1: f64, t2: f64, p1: f64, p2: f64, k: f64) -> Mat4 {
    let o = cr(0.0);
    let d = c(r * t1.cos(), k);
    let a = C64::from_polar(r * t1.sin() * t2.cos(), p1);
    let b = C64::from_polar(r * t1.sin() * t2.sin(), p2);
    Mat4::from_fn(|i, j| {
        [
            [d, a, o, -b],
            [a.conj(), -d, b, o],
            [o, b.conj(), d, a.conj()],
            [-b.conj(), o, a, -d],
        ][i][j]
    })
}

#[test]
fn spherical_hamiltonian_entrywise() {
    let (r, t1, t2, p1, p2, k) = (1.7, 0.8, 1.1, 2.5, -0.4, 0.6);
    let p = ParameterPoint::spherical(Spherical { r, theta1: t1, theta2: t2, phi1: p1, phi2: p2 }, k).unwrap();
    assert!((build_hamiltonian(&p) - spherical_entries(r, t1, t2, p1, p2, k)).norm() < 1e-14);
}

#[test]
fn moebius_example_entries() {
    let h = build_moebius_hamiltonian(1.0, 0.0, 0.0, 1.0);
    let diag: Vec<C64> = (0..4).map(|i| h[(i, i)]).collect();
    assert_eq!(diag, vec![c(1.0, 1.0), c(-1.0, -1.0), c(1.0, 1.0), c(-1.0, -1.0)]);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert_eq!(h[(i, j)], cr(0.0));
            }
        }
    }
    assert_eq!(build_moebius_hamiltonian(0.0, 0.0, 1.3, 0.0), Mat4::zeros());
}

#[test]
fn moebius_matches_generic_builder() {
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..100 {
        let (r, d, t) = (3.0 * next(), 4.0 * next() - 2.0, 2.0 * PI * next());
        let a = (r * t.sin() + d) / SQRT_2;
        let p = ParameterPoint::cartesian([a, a, 0.0, r * t.cos(), 0.0], 1.0).unwrap();
        assert!((build_moebius_hamiltonian(r, d, t, 1.0) - build_hamiltonian(&p)).norm() < 1e-14);
    }
}

#[test]
fn invalid_points_rejected() {
    assert!(ParameterPoint::cartesian([f64::NAN, 0.0, 0.0, 0.0, 0.0], 1.0).is_err());
    assert!(ParameterPoint::cartesian([0.0; 5], -1.0).is_err());
    let s = Spherical { r: -1.0, theta1: 0.0, theta2: 0.0, phi1: 0.0, phi2: 0.0 };
    assert!(ParameterPoint::spherical(s, 0.0).is_err());
}

fn finite_q() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(-3.0f64..3.0)
}

proptest! {
    #[test]
    fn hermitian_spectrum_is_plus_minus_norm(q in finite_q()) {
        let p = ParameterPoint::cartesian(q, 0.0).unwrap();
        let h = build_hamiltonian(&p);
        prop_assert!((h - h.adjoint()).norm() < 1e-15);
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut ev: Vec<f64> = nhyang::linalg::DMat::from_iterator(4, 4, h.iter().cloned())
            .symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        for (e, x) in ev.iter().zip([-norm, -norm, norm, norm]) {
            prop_assert!((e - x).abs() < 1e-12 * (1.0 + norm));
        }
    }

    #[test]
    fn kappa_term_is_exact(q in finite_q(), k in 0.0f64..3.0) {
        let p = ParameterPoint::cartesian(q, k).unwrap();
        let diff = build_hamiltonian(&p) - build_hamiltonian(&p.with_kappa(0.0));
        prop_assert_eq!(diff, dirac_basis().gamma(4) * c(0.0, k));
    }

    #[test]
    fn spherical_round_trip(r in 0.0f64..5.0, t1 in 0.0f64..PI, t2 in 0.0f64..PI, p1 in 0.0f64..6.28, p2 in 0.0f64..6.28) {
        let q = spherical_to_cartesian(r, t1, t2, p1, p2);
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((n - r).abs() < 1e-12);
        let p = ParameterPoint::spherical(Spherical { r, theta1: t1, theta2: t2, phi1: p1, phi2: p2 }, 0.5).unwrap();
        prop_assert_eq!(p.q, q);
        prop_assert!((p.radius() - r).abs() < 1e-12);
    }
}
