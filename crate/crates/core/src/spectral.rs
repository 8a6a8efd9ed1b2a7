//! Eigen-decomposition of the model Hamiltonian, exceptional points and branch tracking.

use crate::clifford::{build_hamiltonian, ParameterPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, DMat, Mat2, Mat4, Mat4x2, Vec4, C64, I};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest band gap tolerated by geometric quantities.
pub const MIN_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Upper,
    Lower,
}

/// `(E₊, E₋) = ±√(R² − κ² + 2iκR cosθ₁)` with the principal root.
pub fn eigenvalues_closed_form(r: f64, kappa: f64, theta1: f64) -> (C64, C64) {
    let e = c(r * r - kappa * kappa, 2.0 * kappa * r * theta1.cos()).sqrt();
    (e, -e)
}

/// Upper root of `z` under the band-ordering rule: larger real part when the gap is
/// predominantly real, larger imaginary part otherwise.
pub fn upper_root(z: C64) -> C64 {
    if z.re >= 0.0 {
        z.sqrt()
    } else {
        I * (-z).sqrt()
    }
}

/// Orders two energies as (upper, lower) by the band rule.
pub fn order_pair(a: C64, b: C64) -> (C64, C64) {
    let d = a - b;
    let a_upper = if d.re.abs() >= d.im.abs() { d.re >= 0.0 } else { d.im >= 0.0 };
    if a_upper {
        (a, b)
    } else {
        (b, a)
    }
}

/// Band energy from the closed-form invariant of the model.
pub fn band_energy(p: &ParameterPoint, band: Band) -> C64 {
    let s = upper_root(p.squared_energy());
    match band {
        Band::Upper => s,
        Band::Lower => -s,
    }
}

/// Biorthogonal projector onto one band, `(H − E_other)/(E_band − E_other)`.
pub fn band_projector(p: &ParameterPoint, band: Band) -> Result<Mat4> {
    projector_for_energy(p, band_energy(p, band))
}

/// Projector onto the band with energy `e` (which must be one of `±√z`).
pub fn projector_for_energy(p: &ParameterPoint, e: C64) -> Result<Mat4> {
    let gap = 2.0 * e.norm();
    if !(gap > MIN_GAP) {
        return Err(Error::OnEhs { gap });
    }
    let h = build_hamiltonian(p);
    Ok((h + Mat4::identity() * e) / (e * 2.0))
}

/// One doubly degenerate eigenvalue with its biorthonormal right/left frame.
/// Left vectors are stored as kets, so `left† · right = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub energy: C64,
    pub right: Mat4x2,
    pub left: Mat4x2,
}

impl EigenPair {
    pub fn projector(&self) -> Mat4 {
        self.right * self.left.adjoint()
    }

    pub fn biorthogonality_defect(&self) -> f64 {
        (self.left.adjoint() * self.right - Mat2::identity()).norm()
    }

    pub fn residual(&self, h: &Mat4) -> f64 {
        (h * self.right - self.right * self.energy).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub upper: EigenPair,
    pub lower: EigenPair,
}

impl EigenSystem {
    pub fn e_plus(&self) -> C64 {
        self.upper.energy
    }

    pub fn e_minus(&self) -> C64 {
        self.lower.energy
    }

    pub fn band(&self, band: Band) -> &EigenPair {
        match band {
            Band::Upper => &self.upper,
            Band::Lower => &self.lower,
        }
    }

    pub fn gap(&self) -> f64 {
        (self.upper.energy - self.lower.energy).norm()
    }

    /// `‖Σᵢ |rightᵢ⟩⟨leftᵢ| − I‖`.
    pub fn completeness_defect(&self) -> f64 {
        (self.upper.projector() + self.lower.projector() - Mat4::identity()).norm()
    }

    /// Largest deviation of the full 4×4 pairing matrix from the identity.
    pub fn biorthogonality_defect(&self) -> f64 {
        let r = Mat4::from_columns(&[
            self.upper.right.column(0).into_owned(),
            self.upper.right.column(1).into_owned(),
            self.lower.right.column(0).into_owned(),
            self.lower.right.column(1).into_owned(),
        ]);
        let l = Mat4::from_columns(&[
            self.upper.left.column(0).into_owned(),
            self.upper.left.column(1).into_owned(),
            self.lower.left.column(0).into_owned(),
            self.lower.left.column(1).into_owned(),
        ]);
        (l.adjoint() * r - Mat4::identity()).norm()
    }
}

/// Groups the spectrum of a 4×4 matrix into two pairs. Returns the pair means and the
/// largest intra-pair splitting.
pub fn pair_energies(h: &Mat4) -> (C64, C64, f64) {
    let ev = linalg::eigenvalues(&linalg::to_dmat4(h));
    let pairings = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))];
    let mut best = (f64::INFINITY, 0);
    for (k, ((a, b), (cc, d))) in pairings.iter().enumerate() {
        let cost = (ev[*a] - ev[*b]).norm().max((ev[*cc] - ev[*d]).norm());
        if cost < best.0 {
            best = (cost, k);
        }
    }
    let ((a, b), (cc, d)) = pairings[best.1];
    let m1 = (ev[a] + ev[b]) * 0.5;
    let m2 = (ev[cc] + ev[d]) * 0.5;
    let (up, lo) = order_pair(m1, m2);
    (up, lo, best.0)
}

fn subspace(h: &Mat4, e: C64) -> DMat {
    let m = linalg::to_dmat4(&(h - Mat4::identity() * e));
    linalg::null_space(&m, 2).0
}

fn to_mat4x2(m: &DMat) -> Mat4x2 {
    Mat4x2::from_fn(|r, col| m[(r, col)])
}

fn biorthonormal_pair(h: &Mat4, e: C64, gap: f64) -> Result<EigenPair> {
    let right = to_mat4x2(&subspace(h, e));
    // Left kets: conjugates of null vectors of Hᵀ − E.
    let left = to_mat4x2(&subspace(&h.transpose(), e)).map(|z| z.conj());
    let overlap = left.adjoint() * right;
    let w = linalg::inv_sqrtm2(&overlap).ok_or(Error::EpTooClose { gap })?;
    Ok(EigenPair { energy: e, right: right * w, left: left * w.adjoint() })
}

/// Numeric biorthonormal eigensystem of a doubly degenerate 4×4 matrix.
pub fn eigensystem(h: &Mat4, tol: f64) -> Result<EigenSystem> {
    eigensystem_with_splitting(h, tol, 1e-6)
}

/// [`eigensystem`] with a caller-chosen bound on the intra-pair splitting relative to the
/// spectral radius.
pub fn eigensystem_with_splitting(h: &Mat4, tol: f64, rel_splitting: f64) -> Result<EigenSystem> {
    let (up, lo, splitting) = pair_energies(h);
    let gap = (up - lo).norm();
    if gap < tol {
        return Err(Error::EpTooClose { gap });
    }
    let radius = up.norm().max(lo.norm());
    if splitting > rel_splitting * radius {
        return Err(Error::NonDegenerate { splitting });
    }
    Ok(EigenSystem {
        upper: biorthonormal_pair(h, up, gap)?,
        lower: biorthonormal_pair(h, lo, gap)?,
    })
}

/// Like [`eigensystem`], with each degenerate basis rotated onto the supplied reference
/// frames by the polar alignment rule of the geometry module.
pub fn eigensystem_aligned(
    h: &Mat4,
    tol: f64,
    upper_ref: &crate::geometry::Frame,
    lower_ref: &crate::geometry::Frame,
) -> Result<EigenSystem> {
    let mut es = eigensystem(h, tol)?;
    for (pair, reference) in [(&mut es.upper, upper_ref), (&mut es.lower, lower_ref)] {
        let f = crate::geometry::Frame { right: pair.right, left: pair.left };
        let aligned = crate::geometry::align_frame(&f, reference)?;
        pair.right = aligned.right;
        pair.left = aligned.left;
    }
    Ok(es)
}

/// Right and left closed-form eigenvectors of one band as 4×2 blocks (α, β columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormPair {
    pub energy: C64,
    pub right: Mat4x2,
    pub left: Mat4x2,
}

/// Closed-form eigenvectors for both bands, `(upper, lower)`.
///
/// Normalization: the left partner of `ψ(E, κ)` is `ψ(Ē, −κ)` and the pairing
/// `⟨ψ̃|ψ⟩ = 2E(E − R cosθ₁ − iκ) = N²` is split symmetrically.
pub fn right_eigenvectors_closed_form(p: &ParameterPoint) -> Result<(ClosedFormPair, ClosedFormPair)> {
    let s = p.spherical.ok_or(Error::DegenerateFormula("point has no spherical coordinates"))?;
    let z = p.squared_energy();
    if 2.0 * z.norm().sqrt() < MIN_GAP {
        return Err(Error::DegenerateFormula("point lies on the exceptional hypersphere"));
    }
    let rs1 = s.r * s.theta1.sin();
    if rs1.abs() < 1e-12 * s.r.max(1.0) {
        return Err(Error::DegenerateFormula("R sin(theta1) vanishes"));
    }
    let up = upper_root(z);
    let mut out = Vec::with_capacity(2);
    for e in [up, -up] {
        out.push(closed_form_band(&s, p.kappa, e)?);
    }
    let lower = out.pop().expect("two bands");
    let upper = out.pop().expect("two bands");
    Ok((upper, lower))
}

fn closed_form_vectors(s: &crate::clifford::Spherical, kappa: f64, e: C64) -> Mat4x2 {
    let rs1 = cr(s.r * s.theta1.sin());
    let w = e - c(s.r * s.theta1.cos(), kappa);
    let (s2, c2) = s.theta2.sin_cos();
    let ep1 = C64::from_polar(1.0, s.phi1);
    let ep2 = C64::from_polar(1.0, s.phi2);
    let alpha = Vec4::new(rs1, w * c2 * ep1.conj(), cr(0.0), -w * s2 * ep2.conj());
    // β carries e^{+iφ₂} on its second and e^{+iφ₁} on its fourth entry.
    let beta = Vec4::new(cr(0.0), w * s2 * ep2, rs1, w * c2 * ep1);
    Mat4x2::from_columns(&[alpha, beta])
}

fn closed_form_band(s: &crate::clifford::Spherical, kappa: f64, e: C64) -> Result<ClosedFormPair> {
    let n2 = e * (e - c(s.r * s.theta1.cos(), kappa)) * 2.0;
    if n2.norm() < 1e-24 {
        return Err(Error::DegenerateFormula("normalization vanishes"));
    }
    let n = n2.sqrt();
    let right = closed_form_vectors(s, kappa, e) / n;
    let left = closed_form_vectors(s, -kappa, e.conj()) / n.conj();
    Ok(ClosedFormPair { energy: e, right, left })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpReport {
    pub gap: f64,
    pub coalescence: f64,
    pub is_ep: bool,
}

/// Exceptional-point test from the numeric spectrum and the eigen-subspace geometry.
pub fn detect_ep(p: &ParameterPoint, tol: f64) -> EpReport {
    let h = build_hamiltonian(p);
    let (up, lo, _) = pair_energies(&h);
    // Every eigenvalue squares to tr(H²)/4; unlike the eigenvalues themselves this
    // invariant is well conditioned at a defective point.
    let gap = 2.0 * ((h * h).trace() / 4.0).norm().sqrt();
    let qu = subspace(&h, up);
    let ql = subspace(&h, lo);
    // Sine of the smallest principal angle between the two right eigen-subspaces.
    let residual = &ql - &qu * (qu.adjoint() * &ql);
    let coalescence = linalg::right_singular_ascending(&residual)
        .first()
        .map(|s| s.0)
        .unwrap_or(0.0);
    EpReport { gap, coalescence, is_ep: gap <= tol && coalescence <= tol }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Permutation {
    Identity,
    Swap,
}

/// Energies of the two degenerate pairs followed continuously along a closed path.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTrack {
    pub path: Vec<ParameterPoint>,
    pub energies: Vec<[C64; 2]>,
    pub permutation: Permutation,
}

/// Nearest-continuation labeling of the two eigenvalue pairs along a closed path.
pub fn track_branches(path: &[ParameterPoint]) -> Result<BranchTrack> {
    let (first, last) = match (path.first(), path.last()) {
        (Some(f), Some(l)) if path.len() >= 2 => (f, l),
        _ => return Err(Error::InvalidInput("path needs at least two points".into())),
    };
    let closes = first.q.iter().zip(&last.q).all(|(a, b)| (a - b).abs() <= 1e-9)
        && (first.kappa - last.kappa).abs() <= 1e-12;
    if !closes {
        return Err(Error::InvalidInput("path is not closed".into()));
    }
    let raw: Vec<(C64, C64)> = path
        .par_iter()
        .map(|p| {
            let (u, l, _) = pair_energies(&build_hamiltonian(p));
            (u, l)
        })
        .collect();
    let mut energies = Vec::with_capacity(path.len());
    energies.push([raw[0].0, raw[0].1]);
    for (step, &(a, b)) in raw.iter().enumerate().skip(1) {
        let [p0, p1] = energies[step - 1];
        let keep = (a - p0).norm() + (b - p1).norm();
        let swap = (b - p0).norm() + (a - p1).norm();
        let next = if keep <= swap { [a, b] } else { [b, a] };
        let displacement = (next[0] - p0).norm().max((next[1] - p1).norm());
        let gap = (p0 - p1).norm();
        if displacement > 1e-14 && displacement >= 0.5 * gap {
            return Err(Error::AmbiguousContinuation { step, displacement, gap });
        }
        energies.push(next);
    }
    let start = energies[0];
    let end = energies[energies.len() - 1];
    let permutation = if (end[0] - start[0]).norm() <= (end[0] - start[1]).norm() {
        Permutation::Identity
    } else {
        Permutation::Swap
    };
    Ok(BranchTrack { path: path.to_vec(), energies, permutation })
}

/// Scan over two or three of the Cartesian components {q₁, q₂, q₃, q₅}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    /// 1-based indices of the scanned components.
    pub axes: Vec<usize>,
    /// Values of the non-scanned components (scanned entries are ignored).
    pub fixed: [f64; 5],
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub coords: Vec<f64>,
    pub e_plus: C64,
    pub e_minus: C64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub axes: Vec<usize>,
    pub spacing: f64,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    /// Rows whose band gap falls below `threshold`.
    pub fn zero_gap_rows(&self, threshold: f64) -> impl Iterator<Item = &SpectrumRow> {
        self.rows.iter().filter(move |r| r.gap < threshold)
    }
}

pub fn spectrum_scan(spec: &ScanSpec, kappa: f64) -> Result<SpectrumTable> {
    let k = spec.axes.len();
    if !(2..=3).contains(&k) {
        return Err(Error::InvalidInput(format!("scan needs 2 or 3 axes, got {k}")));
    }
    let mut seen = [false; 6];
    for &a in &spec.axes {
        if !matches!(a, 1 | 2 | 3 | 5) {
            return Err(Error::InvalidInput(format!("axis q{a} is not scannable")));
        }
        if std::mem::replace(&mut seen[a], true) {
            return Err(Error::InvalidInput(format!("axis q{a} repeated")));
        }
    }
    if spec.points < 2 || !(spec.max > spec.min) {
        return Err(Error::InvalidInput("scan needs >= 2 points and max > min".into()));
    }
    ParameterPoint::cartesian(spec.fixed, kappa)?;
    let n = spec.points;
    let spacing = (spec.max - spec.min) / (n - 1) as f64;
    let total = n.pow(k as u32);
    let rows = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut q = spec.fixed;
            let mut coords = Vec::with_capacity(k);
            let mut rem = flat;
            let mut idx = vec![0; k];
            for slot in (0..k).rev() {
                idx[slot] = rem % n;
                rem /= n;
            }
            for (slot, &axis) in spec.axes.iter().enumerate() {
                let x = spec.min + spacing * idx[slot] as f64;
                q[axis - 1] = x;
                coords.push(x);
            }
            let p = ParameterPoint { q, kappa, spherical: None };
            let (e_plus, e_minus, _) = pair_energies(&build_hamiltonian(&p));
            SpectrumRow { coords, e_plus, e_minus, gap: (e_plus - e_minus).norm() }
        })
        .collect();
    Ok(SpectrumTable { axes: spec.axes.clone(), spacing, rows })
}

/// Planes of the single-angle rotations of the radius-R sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationPlane {
    /// θ₂ sweeps 0→2π at θ₁ = π/2: `q = R(sinθ₂, cosθ₂, 0, 0, 0)`.
    Q1Q2,
    /// θ₁ sweeps 0→2π at θ₂ = π/2: `q = R(sinθ₁, 0, 0, cosθ₁, 0)`.
    Q1Q4,
}

/// Closed rotation path of `steps` segments and its branch-tracked spectrum.
pub fn rotation_trace(plane: RotationPlane, r: f64, kappa: f64, steps: usize) -> Result<(Vec<f64>, BranchTrack)> {
    if steps < 4 {
        return Err(Error::InvalidInput("rotation needs >= 4 steps".into()));
    }
    let angles: Vec<f64> = (0..=steps).map(|j| std::f64::consts::TAU * j as f64 / steps as f64).collect();
    let mut path: Vec<ParameterPoint> = angles
        .iter()
        .map(|&a| {
            let (s, co) = a.sin_cos();
            let q = match plane {
                RotationPlane::Q1Q2 => [r * s, r * co, 0.0, 0.0, 0.0],
                RotationPlane::Q1Q4 => [r * s, 0.0, 0.0, r * co, 0.0],
            };
            ParameterPoint::cartesian(q, kappa)
        })
        .collect::<Result<_>>()?;
    path[steps] = path[0];
    Ok((angles, track_branches(&path)?))
}
