use nhyang::clifford::moebius_point;
use nhyang::linalg::{c, cr, Mat4, C64};
use nhyang::spectral::{band_projector, rotation_trace, RotationPlane, ScanSpec};
use nhyang::*;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

fn point(r: f64, t1: f64, t2: f64, p1: f64, p2: f64, k: f64) -> ParameterPoint {
    ParameterPoint::spherical(Spherical { r, theta1: t1, theta2: t2, phi1: p1, phi2: p2 }, k).unwrap()
}

#[test]
fn closed_form_examples() {
    let (a, b) = eigenvalues_closed_form(1.0, 1.0, FRAC_PI_2);
    assert!(a.norm() < 1e-7 && b.norm() < 1e-7);
    let (a, b) = eigenvalues_closed_form(2.0, 1.0, FRAC_PI_2);
    assert!((a - cr(3f64.sqrt())).norm() < 1e-14 && (b + cr(3f64.sqrt())).norm() < 1e-14);
    let (a, b) = eigenvalues_closed_form(0.5, 1.0, FRAC_PI_2);
    assert!(a.re.abs() < 1e-15 && b.re.abs() < 1e-15);
    assert!((a.im.abs() - 0.75f64.sqrt()).abs() < 1e-14);
    assert!((a + b).norm() < 1e-15);
}

#[test]
fn gamma4_and_gain_loss_eigensystems() {
    let g4 = *dirac_basis().gamma(4);
    let es = eigensystem(&g4, 1e-8).unwrap();
    assert!((es.e_plus() - cr(1.0)).norm() < 1e-12 && (es.e_minus() + cr(1.0)).norm() < 1e-12);
    let up = Mat4::from_diagonal(&[cr(1.0), cr(0.0), cr(1.0), cr(0.0)].into());
    assert!((es.upper.projector() - up).norm() < 1e-12);
    let es = eigensystem(&(g4 * c(0.0, 1.0)), 1e-8).unwrap();
    let mut e = [es.e_plus(), es.e_minus()];
    e.sort_by(|x, y| x.im.total_cmp(&y.im));
    assert!((e[0] + c(0.0, 1.0)).norm() < 1e-12 && (e[1] - c(0.0, 1.0)).norm() < 1e-12);
}

// Rank-2 projector onto span of two right vectors, built from first principles.
fn oblique_projector(right: &nhyang::Mat4x2, left: &nhyang::Mat4x2) -> Mat4 {
    right * left.adjoint()
}

#[test]
fn numeric_projectors_match_closed_form() {
    let p = point(2.0, FRAC_PI_4, PI / 5.0, 0.3, 1.1, 1.0);
    let es = eigensystem(&build_hamiltonian(&p), 1e-8).unwrap();
    let (plus, minus) = right_eigenvectors_closed_form(&p).unwrap();
    for (cf, num) in [(&plus, &es.upper), (&minus, &es.lower)] {
        assert!((cf.energy - num.energy).norm() < 1e-12);
        let pc = oblique_projector(&cf.right, &cf.left);
        assert!((pc - num.projector()).norm() < 1e-10);
    }
}

#[test]
fn closed_form_vectors_residual_oracle() {
    let mut s = 99u64;
    let mut u = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut checked = 0;
    while checked < 1000 {
        let p = point(0.1 + 3.9 * u(), 0.05 + 3.0 * u(), TAU * u(), TAU * u(), TAU * u(), 1.0);
        let Ok((plus, minus)) = right_eigenvectors_closed_form(&p) else { continue };
        let h = build_hamiltonian(&p);
        for pair in [&plus, &minus] {
            let res = h * pair.right - pair.right * pair.energy;
            assert!(res.norm() < 1e-10 * (1.0 + pair.right.norm()), "residual {} at {:?}", res.norm(), p.spherical);
        }
        checked += 1;
    }
}

#[test]
fn alpha_vector_support_on_theta2_zero() {
    let p = point(2.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    let (plus, minus) = right_eigenvectors_closed_form(&p).unwrap();
    for pair in [plus, minus] {
        assert!(pair.right[(2, 0)].norm() < 1e-15 && pair.right[(3, 0)].norm() < 1e-15);
    }
}

#[test]
fn closed_form_biorthogonality() {
    let p = point(1.5, 0.7, 0.4, 2.0, -1.0, 1.0);
    let (plus, minus) = right_eigenvectors_closed_form(&p).unwrap();
    let cross = plus.left.adjoint() * minus.right;
    assert!(cross.norm() < 1e-12);
    let same = minus.left.adjoint() * minus.right;
    assert!((same - nhyang::Mat2::identity()).norm() < 1e-12);
}

#[test]
fn closed_form_refuses_degenerate_inputs() {
    assert!(matches!(right_eigenvectors_closed_form(&point(2.0, 0.0, 0.3, 0.1, 0.2, 1.0)), Err(Error::DegenerateFormula(_))));
    assert!(right_eigenvectors_closed_form(&point(1.0, FRAC_PI_2, 0.3, 0.1, 0.2, 1.0)).is_err());
}

#[test]
fn eigensystem_errors() {
    let ehs = ParameterPoint::cartesian([1.0, 0.0, 0.0, 0.0, 0.0], 1.0).unwrap();
    assert!(matches!(eigensystem(&build_hamiltonian(&ehs), 1e-6), Err(Error::EpTooClose { .. })));
    let generic = Mat4::from_diagonal(&[cr(1.0), cr(2.0), cr(3.0), cr(4.0)].into());
    assert!(matches!(eigensystem(&generic, 1e-6), Err(Error::NonDegenerate { .. })));
}

#[test]
fn detect_ep_examples() {
    let on = detect_ep(&ParameterPoint::cartesian([1.0, 0.0, 0.0, 0.0, 0.0], 1.0).unwrap(), 1e-6);
    assert!(on.is_ep, "{on:?}");
    let off = detect_ep(&ParameterPoint::cartesian([0.0, 0.0, 0.0, 1.0, 0.0], 1.0).unwrap(), 1e-6);
    assert!(!off.is_ep);
    assert!(off.gap > 1.0);
}

// Integer points with q₁² + q₂² + q₃² + q₅² = κ² are exactly representable, so the
// matrix handed to the solver lies on the hypersphere without rounding.
fn integer_ehs_points(limit: i32) -> Vec<ParameterPoint> {
    let mut out = Vec::new();
    for a in -limit..=limit {
        for b in -limit..=limit {
            for cc in -limit..=limit {
                for d in -limit..=limit {
                    let n2 = a * a + b * b + cc * cc + d * d;
                    let k = (n2 as f64).sqrt().round() as i32;
                    if n2 > 0 && k * k == n2 {
                        let q = [a as f64, b as f64, cc as f64, 0.0, d as f64];
                        out.push(ParameterPoint::cartesian(q, k as f64).unwrap());
                    }
                }
            }
        }
    }
    out
}

#[test]
fn detect_ep_exact_sphere_points() {
    let pts = integer_ehs_points(6);
    assert!(pts.len() > 200);
    for p in pts {
        let rep = detect_ep(&p, 1e-6 * p.kappa);
        assert!(rep.gap < 1e-8 && rep.coalescence < 1e-6, "{rep:?} at {:?}", p);
        assert!(rep.is_ep);
    }
}

#[test]
fn detect_ep_rounded_sphere_points() {
    let mut s = 5u64;
    let mut gauss = || {
        let mut v = 0.0;
        for _ in 0..12 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            v += (s >> 11) as f64 / (1u64 << 53) as f64;
        }
        v - 6.0
    };
    for _ in 0..200 {
        let v = [gauss(), gauss(), gauss(), gauss()];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let p = ParameterPoint::cartesian([v[0] / n, v[1] / n, v[2] / n, 0.0, v[3] / n], 1.0).unwrap();
        // Rounding of |q| to 1e-16 leaves a true gap of order 1e-8.
        let rep = detect_ep(&p, 1e-6);
        assert!(rep.gap < 1e-7 && rep.coalescence < 1e-6, "{rep:?}");
        assert!(rep.is_ep);
    }
}

fn moebius_loop(delta: f64, steps: usize) -> Vec<ParameterPoint> {
    (0..=steps).map(|j| moebius_point(1.0, delta, TAU * j as f64 / steps as f64, 1.0)).collect()
}

#[test]
fn moebius_braiding() {
    assert_eq!(track_branches(&moebius_loop(0.5, 2000)).unwrap().permutation, Permutation::Swap);
    assert_eq!(track_branches(&moebius_loop(3.0, 2000)).unwrap().permutation, Permutation::Identity);
    let constant = vec![ParameterPoint::cartesian([0.3, 0.1, 0.0, 0.2, 0.5], 1.0).unwrap(); 10];
    assert_eq!(track_branches(&constant).unwrap().permutation, Permutation::Identity);
}

#[test]
fn moebius_two_cycle_closure() {
    let steps = 2000;
    let twice: Vec<_> = (0..=2 * steps).map(|j| moebius_point(1.0, 0.5, TAU * j as f64 / steps as f64, 1.0)).collect();
    assert_eq!(track_branches(&twice).unwrap().permutation, Permutation::Identity);
}

#[test]
fn tracking_rejects_open_and_coarse_paths() {
    let mut open = moebius_loop(0.5, 100);
    open.pop();
    assert!(track_branches(&open).is_err());
    let through_ep: Vec<_> = [-2.0, 1.0, 2.0, -2.0]
        .iter()
        .map(|&x| ParameterPoint::cartesian([x, 0.0, 0.0, 0.0, 0.0], 1.0).unwrap())
        .collect();
    assert!(matches!(track_branches(&through_ep), Err(Error::AmbiguousContinuation { .. })));
}

fn ring_radius(rows: &[(f64, f64)]) -> f64 {
    rows.iter().map(|&(x, y)| (x * x + y * y).sqrt()).sum::<f64>() / rows.len() as f64
}

#[test]
fn scan_ring_and_sphere() {
    let spec = ScanSpec { axes: vec![1, 2], fixed: [0.0; 5], min: -2.0, max: 2.0, points: 201 };
    let t = spectrum_scan(&spec, 1.0).unwrap();
    let hits: Vec<(f64, f64)> = t.zero_gap_rows(0.3).map(|r| (r.coords[0], r.coords[1])).collect();
    assert!(hits.len() > 20);
    for &(x, y) in &hits {
        assert!(((x * x + y * y).sqrt() - 1.0).abs() < 3.0 * t.spacing, "({x},{y})");
    }
    assert!((ring_radius(&hits) - 1.0).abs() < t.spacing);

    let spec = ScanSpec { axes: vec![1, 2, 3], fixed: [0.0; 5], min: -1.5, max: 1.5, points: 41 };
    let t = spectrum_scan(&spec, 1.0).unwrap();
    let mut n = 0;
    for r in t.zero_gap_rows(0.35) {
        let rad = r.coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((rad - 1.0).abs() < 2.0 * t.spacing, "{rad}");
        n += 1;
    }
    assert!(n > 50);
}

#[test]
fn hermitian_scan_gap_closes_only_at_origin() {
    let spec = ScanSpec { axes: vec![1, 5], fixed: [0.0; 5], min: -1.0, max: 1.0, points: 21 };
    let t = spectrum_scan(&spec, 0.0).unwrap();
    let zeros: Vec<_> = t.zero_gap_rows(1e-9).collect();
    assert_eq!(zeros.len(), 1);
    assert!(zeros[0].coords.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn scan_validation() {
    let bad_axis = ScanSpec { axes: vec![1, 4], fixed: [0.0; 5], min: -1.0, max: 1.0, points: 5 };
    assert!(spectrum_scan(&bad_axis, 1.0).is_err());
    let one_axis = ScanSpec { axes: vec![2], fixed: [0.0; 5], min: -1.0, max: 1.0, points: 5 };
    assert!(spectrum_scan(&one_axis, 1.0).is_err());
}

#[test]
fn rotation_traces_enclosing_and_not() {
    // In the {q1,q2} plane E² = R² − κ² is constant along the rotation.
    let (_, t) = rotation_trace(RotationPlane::Q1Q2, 2.0, 1.0, 200).unwrap();
    for e in &t.energies {
        assert!((e[0].norm() - 3f64.sqrt()).abs() < 1e-10 && e[0].im.abs() < 1e-10);
    }
    let (_, t) = rotation_trace(RotationPlane::Q1Q2, 0.5, 1.0, 200).unwrap();
    for e in &t.energies {
        assert!(e[0].re.abs() < 1e-10);
    }
    for r in [2.0, 0.5] {
        let (angles, t) = rotation_trace(RotationPlane::Q1Q4, r, 1.0, 400).unwrap();
        assert_eq!(angles.len(), t.energies.len());
        for (a, e) in angles.iter().zip(&t.energies) {
            let (x, y) = eigenvalues_closed_form(r, 1.0, *a);
            assert!((e[0] - x).norm().min((e[0] - y).norm()) < 1e-10);
        }
    }
}

fn any_point() -> impl Strategy<Value = ParameterPoint> {
    (prop::array::uniform5(-2.0f64..2.0), 0.0f64..2.0).prop_map(|(q, k)| ParameterPoint::cartesian(q, k).unwrap())
}

proptest! {
    #[test]
    fn spectrum_symmetric_and_complete(p in any_point()) {
        let h = build_hamiltonian(&p);
        prop_assume!(detect_ep(&p, 1e-6).gap > 1e-2);
        let es = eigensystem(&h, 1e-6).unwrap();
        prop_assert!((es.e_plus() + es.e_minus()).norm() < 1e-10);
        prop_assert!(es.completeness_defect() < 1e-8);
        prop_assert!(es.biorthogonality_defect() < 1e-8);
        prop_assert!(es.upper.residual(&h) < 1e-9 && es.lower.residual(&h) < 1e-9);
        let z = p.squared_energy();
        let e = es.e_plus();
        prop_assert!((e * e - z).norm() < 1e-9 * (1.0 + z.norm()));
    }

    #[test]
    fn band_projectors_are_idempotent(p in any_point()) {
        prop_assume!(detect_ep(&p, 1e-6).gap > 1e-2);
        for band in [Band::Lower, Band::Upper] {
            let pr = band_projector(&p, band).unwrap();
            prop_assert!((pr * pr - pr).norm() < 1e-8 * (1.0 + pr.norm()));
            prop_assert!((pr.trace() - C64::new(2.0, 0.0)).norm() < 1e-9);
        }
    }
}
