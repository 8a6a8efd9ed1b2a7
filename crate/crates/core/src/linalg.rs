//! Small dense complex linear algebra shared across modules.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Matrix4x2, Schur, Vector4};
pub use num_complex::Complex64 as C64;

pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Vec4 = Vector4<C64>;
pub type Mat4x2 = Matrix4x2<C64>;
pub type DMat = DMatrix<C64>;
pub type DVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Pauli matrices (σx, σy, σz).
pub fn pauli() -> [Mat2; 3] {
    [
        Mat2::new(ZERO, ONE, ONE, ZERO),
        Mat2::new(ZERO, -I, I, ZERO),
        Mat2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// Eigenvalues of a 2×2 matrix from its characteristic polynomial.
pub fn eigenvalues2(m: &Mat2) -> (C64, C64) {
    let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_tr * half_tr - det).sqrt();
    (half_tr + disc, half_tr - disc)
}

pub fn det2(m: &Mat2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    if d.norm() <= f64::MIN_POSITIVE * 1e4 || !d.is_finite() {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d)
}

/// Principal square root of a 2×2 matrix, `None` when it does not exist.
pub fn sqrtm2(m: &Mat2) -> Option<Mat2> {
    let (l1, l2) = eigenvalues2(m);
    let (s1, s2) = (l1.sqrt(), l2.sqrt());
    let t = s1 + s2;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if t.norm() <= 1e-14 * scale.sqrt() {
        return None;
    }
    Some((m + Mat2::identity() * (s1 * s2)) / t)
}

/// Inverse principal square root of a 2×2 matrix.
pub fn inv_sqrtm2(m: &Mat2) -> Option<Mat2> {
    sqrtm2(m).and_then(|s| inv2(&s))
}

/// Unitary polar factor `W` of `m = W·P` together with the smallest singular value.
pub fn polar_unitary2(m: &Mat2) -> (Mat2, f64) {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested u");
    let v_t = svd.v_t.expect("requested v_t");
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    (u * v_t, smin)
}

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a square complex matrix: Hermitian input goes through the symmetric
/// solver, everything else through the complex Schur form.
pub fn eigenvalues(m: &DMat) -> Vec<C64> {
    let scale = m.norm();
    if (m - m.adjoint()).norm() <= 1e-14 * scale {
        return m.clone().symmetric_eigen().eigenvalues.iter().map(|&x| cr(x)).collect();
    }
    let n = m.nrows();
    for shift in [0.0, 0.371, 1.13] {
        let s = c(shift * scale, 0.5 * shift * scale);
        let shifted = m + DMat::identity(n, n) * s;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, SCHUR_MAX_ITER) {
            let (_, t) = schur.unpack();
            return (0..n).map(|i| t[(i, i)] - s).collect();
        }
    }
    panic!("complex Schur iteration did not converge for a {n}x{n} matrix of norm {scale}");
}

/// Singular values in ascending order together with the matching right singular vectors.
pub fn right_singular_ascending(m: &DMat) -> Vec<(f64, DVec)> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut out: Vec<(f64, DVec)> = (0..v_t.nrows())
        .map(|i| (svd.singular_values[i], v_t.row(i).adjoint()))
        .collect();
    if m.ncols() > m.nrows() {
        // Wide matrices have an implicit null space that the thin SVD omits.
        let k = v_t.nrows();
        let basis = DMat::from_columns(&out.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
        let complement = orthogonal_complement(&basis, m.ncols() - k);
        out.extend(complement.into_iter().map(|v| (0.0, v)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn orthogonal_complement(basis: &DMat, count: usize) -> Vec<DVec> {
    let n = basis.nrows();
    let mut found: Vec<DVec> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut out = Vec::with_capacity(count);
    for e in 0..n {
        if out.len() == count {
            break;
        }
        let mut v = DVec::zeros(n);
        v[e] = ONE;
        for b in &found {
            let proj = b.dotc(&v);
            v -= b * proj;
        }
        let nv = v.norm();
        if nv > 1e-8 {
            v /= cr(nv);
            found.push(v.clone());
            out.push(v);
        }
    }
    out
}

/// Orthonormal basis (as columns) of the `k`-dimensional approximate null space of `m`,
/// plus the largest discarded-inside singular value and the smallest kept-outside one.
pub fn null_space(m: &DMat, k: usize) -> (DMat, f64, f64) {
    let sv = right_singular_ascending(m);
    let cols: Vec<DVec> = sv.iter().take(k).map(|(_, v)| v.clone()).collect();
    let inside = sv.get(k.saturating_sub(1)).map(|s| s.0).unwrap_or(0.0);
    let outside = sv.get(k).map(|s| s.0).unwrap_or(f64::INFINITY);
    (DMat::from_columns(&cols), inside, outside)
}

pub fn to_dmat4(m: &Mat4) -> DMat {
    DMat::from_iterator(4, 4, m.iter().cloned())
}

pub fn is_hermitian(m: &DMat, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(m: &DMat) -> DMat {
    let n = m.nrows();
    let norm = m.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil() as i32 + 1).max(0) as u32;
    let a = m / cr(2f64.powi(squarings as i32));
    let mut term = DMat::identity(n, n);
    let mut sum = DMat::identity(n, n);
    for k in 1..=20 {
        term = &term * &a / cr(k as f64);
        sum += &term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
