//! Non-Abelian Berry connection and curvature of a degenerate band, gauge fixing and
//! the second Chern number over the radius-R hypersphere.

use crate::clifford::ParameterPoint;
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, Mat2, Mat4, Mat4x2, C64};
use crate::spectral::{self, Band, EigenPair};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Biorthonormal basis of one degenerate band: `left† · right = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub right: Mat4x2,
    pub left: Mat4x2,
}

impl Frame {
    pub fn projector(&self) -> Mat4 {
        self.right * self.left.adjoint()
    }

    pub fn biorthogonality_defect(&self) -> f64 {
        (self.left.adjoint() * self.right - Mat2::identity()).norm()
    }

    /// Basis change `right → right·g`, `left → left·g⁻†`.
    pub fn transformed(&self, g: &Mat2) -> Result<Frame> {
        let gi = linalg::inv2(g).ok_or(Error::SingularOverlap { sigma_min: 0.0 })?;
        Ok(Frame { right: self.right * g, left: self.left * gi.adjoint() })
    }
}

impl From<&EigenPair> for Frame {
    fn from(p: &EigenPair) -> Self {
        Frame { right: p.right, left: p.left }
    }
}

/// Generic constant reference used to seed frames; a fixed pseudo-random 4×2 block.
pub fn seed_reference() -> Frame {
    let v = Mat4x2::new(
        c(0.83, -0.21), c(-0.37, 0.52),
        c(0.14, 0.66), c(0.71, -0.09),
        c(-0.48, 0.33), c(0.26, 0.58),
        c(0.59, 0.17), c(-0.62, -0.44),
    );
    Frame { right: v, left: v }
}

/// Which inner product defines the connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    /// `A = −i L† ∂R` with biorthonormal left/right frames.
    #[default]
    Biorthogonal,
    /// `A = −i Q† ∂Q` with an orthonormal basis `Q` of the right eigenspace.
    RightEigen,
}

/// Rule that turns a band projector into a smooth local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gauge {
    /// Project a fixed reference frame, splitting the overlap symmetrically:
    /// `R = P V_R S^{-1/2}`, `L† = S^{-1/2} V_L† P`, `S = V_L† P V_R`.
    Reference(Frame),
    /// Project a fixed reference frame with the overlap inverted on the right only:
    /// `R = P V_R S⁻¹`, `L† = V_L† P`. Smooth wherever `S` is invertible.
    ReferenceOneSided(Frame),
    /// Use the field's analytic eigenvectors.
    ClosedForm,
}

/// A band projector defined over a coordinate chart.
pub trait ProjectorField: Sync {
    fn dim(&self) -> usize;
    fn projector(&self, x: &[f64]) -> Result<Mat4>;
    /// Analytic frame of the band, when the field has one.
    fn closed_form_frame(&self, _x: &[f64]) -> Option<Result<Frame>> {
        None
    }
}

/// One band of the model Hamiltonian on the radius-R hypersphere,
/// coordinates `(θ₁, θ₂, φ₁, φ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereField {
    pub r: f64,
    pub kappa: f64,
    pub band: Band,
}

impl SphereField {
    pub fn point(&self, x: &[f64]) -> ParameterPoint {
        ParameterPoint::from_angles(self.r, x[0], x[1], x[2], x[3], self.kappa)
    }
}

impl ProjectorField for SphereField {
    fn dim(&self) -> usize {
        4
    }

    fn projector(&self, x: &[f64]) -> Result<Mat4> {
        spectral::band_projector(&self.point(x), self.band)
    }

    fn closed_form_frame(&self, x: &[f64]) -> Option<Result<Frame>> {
        Some(spectral::right_eigenvectors_closed_form(&self.point(x)).map(|(up, lo)| {
            let pair = match self.band {
                Band::Upper => up,
                Band::Lower => lo,
            };
            Frame { right: pair.right, left: pair.left }
        }))
    }
}

/// Field backed by an arbitrary projector function.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Result<Mat4> + Sync> ProjectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn projector(&self, x: &[f64]) -> Result<Mat4> {
        (self.f)(x)
    }
}

/// Angular directions of the hypersphere chart, in integration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Theta1,
    Theta2,
    Phi1,
    Phi2,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Theta1, Direction::Theta2, Direction::Phi1, Direction::Phi2];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionOptions {
    pub gauge: Gauge,
    pub kind: ConnectionKind,
    pub fd_step: f64,
}

impl ConnectionOptions {
    pub fn new(gauge: Gauge, kind: ConnectionKind) -> Self {
        Self { gauge, kind, fd_step: 1e-4 }
    }
}

fn orthonormalize(x: &Mat4x2) -> Result<Mat4x2> {
    let g = x.adjoint() * x;
    let w = linalg::inv_sqrtm2(&g).ok_or(Error::SingularOverlap { sigma_min: 0.0 })?;
    Ok(x * w)
}

fn overlap_guard(s: &Mat2) -> Result<()> {
    // |det|/‖S‖_F bounds the smallest singular value from below.
    let smin = linalg::det2(s).norm() / s.norm().max(f64::MIN_POSITIVE);
    if smin < 1e-10 {
        return Err(Error::SingularOverlap { sigma_min: smin });
    }
    Ok(())
}

/// Frame of the band with projector `p` under a reference gauge.
pub fn frame_from_projector(p: &Mat4, reference: &Frame, one_sided: bool, kind: ConnectionKind) -> Result<Frame> {
    let x = p * reference.right;
    match kind {
        ConnectionKind::RightEigen => {
            let q = orthonormalize(&x)?;
            Ok(Frame { right: q, left: q })
        }
        ConnectionKind::Biorthogonal => {
            let y = p.adjoint() * reference.left;
            let s = reference.left.adjoint() * x;
            overlap_guard(&s)?;
            if one_sided {
                let si = linalg::inv2(&s).ok_or(Error::SingularOverlap { sigma_min: 0.0 })?;
                Ok(Frame { right: x * si, left: y })
            } else {
                let w = linalg::inv_sqrtm2(&s).ok_or(Error::SingularOverlap { sigma_min: 0.0 })?;
                Ok(Frame { right: x * w, left: y * w.adjoint() })
            }
        }
    }
}

/// Frame of `field` at `x` under the given gauge and connection kind.
pub fn frame_at<F: ProjectorField + ?Sized>(field: &F, x: &[f64], opts: &ConnectionOptions) -> Result<Frame> {
    match opts.gauge {
        Gauge::Reference(r) => frame_from_projector(&field.projector(x)?, &r, false, opts.kind),
        Gauge::ReferenceOneSided(r) => frame_from_projector(&field.projector(x)?, &r, true, opts.kind),
        Gauge::ClosedForm => {
            let f = field
                .closed_form_frame(x)
                .ok_or_else(|| Error::InvalidInput("field has no closed-form frame".into()))??;
            match opts.kind {
                ConnectionKind::Biorthogonal => Ok(f),
                ConnectionKind::RightEigen => {
                    let q = orthonormalize(&f.right)?;
                    Ok(Frame { right: q, left: q })
                }
            }
        }
    }
}

fn shifted(x: &[f64], mu: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[mu] += h;
    y
}

fn connection_from(center: &Frame, plus: &Frame, minus: &Frame, h: f64) -> Mat2 {
    center.left.adjoint() * (plus.right - minus.right) * c(0.0, -1.0 / (2.0 * h))
}

/// `A_μ = −i L† ∂_μ R` by central differences.
pub fn berry_connection<F: ProjectorField + ?Sized>(
    field: &F,
    x: &[f64],
    mu: usize,
    opts: &ConnectionOptions,
) -> Result<Mat2> {
    check_direction(field, x, mu)?;
    let h = opts.fd_step;
    let center = frame_at(field, x, opts)?;
    let plus = frame_at(field, &shifted(x, mu, h), opts)?;
    let minus = frame_at(field, &shifted(x, mu, -h), opts)?;
    Ok(connection_from(&center, &plus, &minus, h))
}

fn check_direction<F: ProjectorField + ?Sized>(field: &F, x: &[f64], mu: usize) -> Result<()> {
    if x.len() != field.dim() || mu >= field.dim() {
        return Err(Error::InvalidInput(format!(
            "coordinate length {} / direction {mu} do not match field dimension {}",
            x.len(),
            field.dim()
        )));
    }
    Ok(())
}

/// Connection in the local gauge of a supplied band frame at `x`. The frame must be
/// biorthonormal and lie in the band.
pub fn connection_in_frame<F: ProjectorField + ?Sized>(
    field: &F,
    x: &[f64],
    mu: usize,
    frame: &Frame,
    kind: ConnectionKind,
    fd_step: f64,
) -> Result<Mat2> {
    let defect = match kind {
        ConnectionKind::Biorthogonal => frame.biorthogonality_defect(),
        ConnectionKind::RightEigen => (frame.right.adjoint() * frame.right - Mat2::identity()).norm(),
    };
    let p = field.projector(x)?;
    let outside = (p * frame.right - frame.right).norm();
    if defect.max(outside) > 1e-8 {
        return Err(Error::FrameMismatch { defect: defect.max(outside) });
    }
    let opts = ConnectionOptions { gauge: Gauge::Reference(*frame), kind, fd_step };
    berry_connection(field, x, mu, &opts)
}

/// `F_μν = ∂_μ A_ν − ∂_ν A_μ + i[A_μ, A_ν]`.
pub fn berry_curvature<F: ProjectorField + ?Sized>(
    field: &F,
    x: &[f64],
    mu: usize,
    nu: usize,
    opts: &ConnectionOptions,
) -> Result<Mat2> {
    check_direction(field, x, mu)?;
    check_direction(field, x, nu)?;
    if mu == nu {
        return Ok(Mat2::zeros());
    }
    let h = opts.fd_step;
    let a_mu = berry_connection(field, x, mu, opts)?;
    let a_nu = berry_connection(field, x, nu, opts)?;
    let d_mu_a_nu = (berry_connection(field, &shifted(x, mu, h), nu, opts)?
        - berry_connection(field, &shifted(x, mu, -h), nu, opts)?)
        / cr(2.0 * h);
    let d_nu_a_mu = (berry_connection(field, &shifted(x, nu, h), mu, opts)?
        - berry_connection(field, &shifted(x, nu, -h), mu, opts)?)
        / cr(2.0 * h);
    Ok(d_mu_a_nu - d_nu_a_mu + (a_mu * a_nu - a_nu * a_mu) * C64::i())
}

/// All curvature components of a 4D field at one point from a shared 33-point stencil.
/// `F[μ][ν] = −F[ν][μ]` holds exactly.
pub fn curvature_tensor<F: ProjectorField + ?Sized>(
    field: &F,
    x: &[f64],
    opts: &ConnectionOptions,
) -> Result<[[Mat2; 4]; 4]> {
    if field.dim() != 4 || x.len() != 4 {
        return Err(Error::InvalidInput("curvature tensor needs a 4D field".into()));
    }
    let h = opts.fd_step;
    let mut cache: Vec<([i8; 4], Frame)> = Vec::with_capacity(33);
    let mut frame = |off: [i8; 4]| -> Result<Frame> {
        if let Some((_, f)) = cache.iter().find(|(o, _)| *o == off) {
            return Ok(*f);
        }
        let y: Vec<f64> = (0..4).map(|k| x[k] + h * off[k] as f64).collect();
        let f = frame_at(field, &y, opts)?;
        cache.push((off, f));
        Ok(f)
    };
    let unit = |k: usize, s: i8| {
        let mut o = [0i8; 4];
        o[k] = s;
        o
    };
    let add = |a: [i8; 4], b: [i8; 4]| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]];
    // a[base][nu]: connection along nu at the stencil point `base`.
    let mut conn = |base: [i8; 4], nu: usize| -> Result<Mat2> {
        let center = frame(base)?;
        let plus = frame(add(base, unit(nu, 1)))?;
        let minus = frame(add(base, unit(nu, -1)))?;
        Ok(connection_from(&center, &plus, &minus, h))
    };
    let zero = [0i8; 4];
    let mut a0 = [Mat2::zeros(); 4];
    for (nu, slot) in a0.iter_mut().enumerate() {
        *slot = conn(zero, nu)?;
    }
    let mut f = [[Mat2::zeros(); 4]; 4];
    for mu in 0..4 {
        for nu in (mu + 1)..4 {
            let d_mu_a_nu = (conn(unit(mu, 1), nu)? - conn(unit(mu, -1), nu)?) / cr(2.0 * h);
            let d_nu_a_mu = (conn(unit(nu, 1), mu)? - conn(unit(nu, -1), mu)?) / cr(2.0 * h);
            let fm = d_mu_a_nu - d_nu_a_mu + (a0[mu] * a0[nu] - a0[nu] * a0[mu]) * C64::i();
            f[mu][nu] = fm;
            f[nu][mu] = -fm;
        }
    }
    Ok(f)
}

fn levi_civita(p: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if p[i] == p[j] {
                return 0.0;
            }
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn tr_prod(a: &Mat2, b: &Mat2) -> C64 {
    (a * b).trace()
}

/// `ε^{μνλξ} tr(F_μν F_λξ) / 32π²` summed over all 24 index permutations.
pub fn integrand_from_curvature(f: &[[Mat2; 4]; 4]) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                for d in 0..4 {
                    let e = levi_civita([a, b, cc, d]);
                    if e != 0.0 {
                        sum += tr_prod(&f[a][b], &f[cc][d]) * e;
                    }
                }
            }
        }
    }
    sum / (32.0 * PI * PI)
}

/// Density of `(1/2!)(1/2π)² tr(F∧F)` with `F = ½F_μν dx^μ∧dx^ν`.
pub fn wedge_integrand_from_curvature(f: &[[Mat2; 4]; 4]) -> C64 {
    let wedge = (tr_prod(&f[0][1], &f[2][3]) - tr_prod(&f[0][2], &f[1][3]) + tr_prod(&f[0][3], &f[1][2])) * 2.0;
    wedge / (8.0 * PI * PI)
}

/// Chern density at `x`. The value is complex for non-Hermitian bands; only its
/// integral is real.
pub fn chern_integrand<F: ProjectorField + ?Sized>(field: &F, x: &[f64], opts: &ConnectionOptions) -> Result<C64> {
    Ok(integrand_from_curvature(&curvature_tensor(field, x, opts)?))
}

/// Same density evaluated through the wedge-product form.
pub fn chern_integrand_wedge<F: ProjectorField + ?Sized>(field: &F, x: &[f64], opts: &ConnectionOptions) -> Result<C64> {
    Ok(wedge_integrand_from_curvature(&curvature_tensor(field, x, opts)?))
}

/// Midpoint tensor-product grid over θ₁∈[0,π], θ₂∈[0,π/2], φ₁, φ₂∈[0,2π].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub n_theta1: usize,
    pub n_theta2: usize,
    pub n_phi1: usize,
    pub n_phi2: usize,
    /// Finite-difference step in units of 1e-9 rad, kept integral so the grid is `Eq`.
    fd_step_nrad: u64,
}

impl QuadratureGrid {
    pub fn new(n_theta1: usize, n_theta2: usize, n_phi1: usize, n_phi2: usize, fd_step: f64) -> Result<Self> {
        let g = Self {
            n_theta1,
            n_theta2,
            n_phi1,
            n_phi2,
            fd_step_nrad: (fd_step * 1e9).round() as u64,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, n, n, n, 1e-4)
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step_nrad as f64 * 1e-9
    }

    pub fn counts(&self) -> [usize; 4] {
        [self.n_theta1, self.n_theta2, self.n_phi1, self.n_phi2]
    }

    pub fn spacings(&self) -> [f64; 4] {
        [
            PI / self.n_theta1 as f64,
            FRAC_PI_2 / self.n_theta2 as f64,
            TAU / self.n_phi1 as f64,
            TAU / self.n_phi2 as f64,
        ]
    }

    pub fn node(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacings()[axis]
    }

    pub fn doubled(&self) -> Self {
        Self {
            n_theta1: 2 * self.n_theta1,
            n_theta2: 2 * self.n_theta2,
            n_phi1: 2 * self.n_phi1,
            n_phi2: 2 * self.n_phi2,
            fd_step_nrad: self.fd_step_nrad,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts().iter().any(|&n| n < 8) {
            return Err(Error::InvalidInput(format!("all grid counts must be >= 8, got {:?}", self.counts())));
        }
        let h = self.fd_step();
        let min_spacing = self.spacings().iter().cloned().fold(f64::INFINITY, f64::min);
        if !(h > 0.0) || h >= 0.5 * min_spacing {
            return Err(Error::InvalidInput(format!(
                "fd_step {h} must be positive and below half the grid spacing {min_spacing}"
            )));
        }
        Ok(())
    }
}

/// Axis ordering of a gauge-fixing sweep, fastest-varying axis first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOrder(pub Vec<usize>);

impl SweepOrder {
    /// Last axis fastest.
    pub fn row_major(dim: usize) -> Self {
        Self((0..dim).rev().collect())
    }
}

/// Aligns `frame` to `reference` by the polar factor of their overlap, so that
/// `reference.left† · aligned.right` is Hermitian positive definite.
pub fn align_frame(frame: &Frame, reference: &Frame) -> Result<Frame> {
    let o = reference.left.adjoint() * frame.right;
    let (w, smin) = linalg::polar_unitary2(&o);
    if smin < 1e-8 {
        return Err(Error::SingularOverlap { sigma_min: smin });
    }
    let wd = w.adjoint();
    Ok(Frame { right: frame.right * wd, left: frame.left * wd })
}

fn row_major_flat(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Discrete parallel transport over a row-major grid of frames: each point is aligned
/// to its predecessor, the neighbour one step back along the fastest axis (in `order`)
/// whose index is nonzero.
pub fn gauge_fix(frames: &mut [Frame], dims: &[usize], order: &SweepOrder) -> Result<()> {
    let total: usize = dims.iter().product();
    if frames.len() != total {
        return Err(Error::InvalidInput(format!("{} frames for a grid of {total}", frames.len())));
    }
    let mut sorted = order.0.clone();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::InvalidInput("sweep order must permute the grid axes".into()));
    }
    let slow_to_fast: Vec<usize> = order.0.iter().rev().cloned().collect();
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        if let Some(&axis) = order.0.iter().find(|&&a| idx[a] > 0) {
            let mut pred = idx.clone();
            pred[axis] -= 1;
            let here = row_major_flat(&idx, dims);
            let there = row_major_flat(&pred, dims);
            frames[here] = align_frame(&frames[here], &frames[there])?;
        }
        // Advance the multi-index in sweep order.
        for &a in slow_to_fast.iter().rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernOptions {
    pub kind: ConnectionKind,
    pub band: Band,
    /// Number of grid doublings attempted when the quantization defect exceeds 0.05.
    pub max_refinements: usize,
    pub keep_samples: bool,
}

impl Default for ChernOptions {
    fn default() -> Self {
        Self { kind: ConnectionKind::Biorthogonal, band: Band::Lower, max_refinements: 0, keep_samples: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrandSample {
    pub x: [f64; 4],
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChernResult {
    pub c2: f64,
    /// Imaginary part of the integral; vanishes for a converged quadrature.
    pub c2_imag: f64,
    pub defect: f64,
    pub grid: QuadratureGrid,
    pub refinements: usize,
    pub integrand_samples: Option<Vec<IntegrandSample>>,
}

/// Second Chern number of one band of the model on the radius-R hypersphere.
pub fn second_chern(r: f64, kappa: f64, grid: &QuadratureGrid, opts: &ChernOptions) -> Result<ChernResult> {
    if !(r > 0.0) || !r.is_finite() || !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidInput(format!("need R > 0 and kappa >= 0, got R={r}, kappa={kappa}")));
    }
    if (r - kappa).abs() < 1e-3 {
        return Err(Error::TransitionPoint { r, kappa });
    }
    let field = SphereField { r, kappa, band: opts.band };
    second_chern_field(&field, grid, opts)
}

/// Second Chern number of an arbitrary 4D projector field over the hypersphere chart.
pub fn second_chern_field<F: ProjectorField>(field: &F, grid: &QuadratureGrid, opts: &ChernOptions) -> Result<ChernResult> {
    grid.validate()?;
    let mut g = *grid;
    let mut refinements = 0;
    loop {
        let (sum, samples) = integrate(field, &g, opts)?;
        let c2 = sum.re;
        let defect = (c2 - c2.round()).abs();
        if defect <= 0.05 || refinements >= opts.max_refinements {
            if defect > 0.05 && opts.max_refinements > 0 {
                return Err(Error::NotConverged { defect });
            }
            return Ok(ChernResult { c2, c2_imag: sum.im, defect, grid: g, refinements, integrand_samples: samples });
        }
        g = g.doubled();
        refinements += 1;
    }
}

fn integrate<F: ProjectorField>(
    field: &F,
    grid: &QuadratureGrid,
    opts: &ChernOptions,
) -> Result<(C64, Option<Vec<IntegrandSample>>)> {
    let [n1, n2, n3, n4] = grid.counts();
    let weight: f64 = grid.spacings().iter().product();
    let seed = seed_reference();
    let slab_dims = [n2, n3, n4];
    let order = SweepOrder::row_major(3);
    let slabs: Vec<Result<(C64, Vec<IntegrandSample>)>> = (0..n1)
        .into_par_iter()
        .map(|i| {
            let t1 = grid.node(0, i);
            let coords = |j: usize, k: usize, l: usize| [t1, grid.node(1, j), grid.node(2, k), grid.node(3, l)];
            let mut frames = Vec::with_capacity(n2 * n3 * n4);
            for j in 0..n2 {
                for k in 0..n3 {
                    for l in 0..n4 {
                        let p = field.projector(&coords(j, k, l))?;
                        frames.push(frame_from_projector(&p, &seed, false, opts.kind)?);
                    }
                }
            }
            gauge_fix(&mut frames, &slab_dims, &order)?;
            let mut sum = C64::new(0.0, 0.0);
            let mut samples = Vec::new();
            for j in 0..n2 {
                for k in 0..n3 {
                    for l in 0..n4 {
                        let x = coords(j, k, l);
                        let f = frames[(j * n3 + k) * n4 + l];
                        let copts = ConnectionOptions { gauge: Gauge::Reference(f), kind: opts.kind, fd_step: grid.fd_step() };
                        let v = chern_integrand(field, &x, &copts)?;
                        sum += v;
                        if opts.keep_samples {
                            samples.push(IntegrandSample { x, value: v });
                        }
                    }
                }
            }
            Ok((sum, samples))
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    let mut all = opts.keep_samples.then(Vec::new);
    for s in slabs {
        let (sum, samples) = s?;
        total += sum;
        if let Some(a) = all.as_mut() {
            a.extend(samples);
        }
    }
    Ok((total * weight, all))
}

/// `max ‖[A_μ, A_ν]‖` over the supplied points in the given gauge.
pub fn max_commutator_norm<F: ProjectorField + ?Sized>(
    field: &F,
    points: &[Vec<f64>],
    mu: usize,
    nu: usize,
    opts: &ConnectionOptions,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for x in points {
        let a = berry_connection(field, x, mu, opts)?;
        let b = berry_connection(field, x, nu, opts)?;
        best = best.max((a * b - b * a).norm());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(kappa: f64) -> SphereField {
        SphereField { r: 2.0, kappa, band: Band::Lower }
    }

    #[test]
    fn curvature_diagonal_vanishes() {
        let f = field(1.0);
        let opts = ConnectionOptions::new(Gauge::ClosedForm, ConnectionKind::Biorthogonal);
        let x = [0.9, 0.4, 1.1, 2.3];
        assert_eq!(berry_curvature(&f, &x, 2, 2, &opts).unwrap(), Mat2::zeros());
        let t = curvature_tensor(&f, &x, &opts).unwrap();
        for mu in 0..4 {
            assert_eq!(t[mu][mu], Mat2::zeros());
            for nu in 0..4 {
                assert_eq!(t[mu][nu], -t[nu][mu]);
            }
        }
    }

    #[test]
    fn hermitian_connection_is_hermitian() {
        let f = field(0.0);
        let x = [0.9, 0.4, 1.1, 2.3];
        let reference = Frame::from(&spectral::eigensystem(&crate::clifford::build_hamiltonian(&f.point(&x)), 1e-8).unwrap().lower);
        for gauge in [Gauge::ClosedForm, Gauge::Reference(reference)] {
            let opts = ConnectionOptions::new(gauge, ConnectionKind::Biorthogonal);
            for mu in 0..4 {
                let a = berry_connection(&f, &x, mu, &opts).unwrap();
                assert!((a - a.adjoint()).norm() < 1e-8, "{gauge:?} {mu}: {a}");
            }
        }
    }

    #[test]
    fn constant_grid_frames_equal_after_fixing() {
        let p = spectral::band_projector(&ParameterPoint::cartesian([0.2, 0.5, -0.1, 0.8, 0.3], 1.0).unwrap(), Band::Lower).unwrap();
        let base = frame_from_projector(&p, &seed_reference(), false, ConnectionKind::Biorthogonal).unwrap();
        let mut frames: Vec<Frame> = (0..12)
            .map(|k| {
                let g = Mat2::new(C64::from_polar(1.0, 0.3 * k as f64), cr(0.0), cr(0.0), C64::from_polar(1.0, -0.7 * k as f64));
                base.transformed(&g).unwrap()
            })
            .collect();
        gauge_fix(&mut frames, &[3, 4], &SweepOrder::row_major(2)).unwrap();
        for f in &frames {
            assert!((f.right - frames[0].right).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(QuadratureGrid::new(4, 8, 8, 8, 1e-4).is_err());
        assert!(QuadratureGrid::new(8, 8, 8, 8, 0.5).is_err());
        assert!(QuadratureGrid::uniform(8).is_ok());
    }

    #[test]
    fn transition_point_refused() {
        let g = QuadratureGrid::uniform(8).unwrap();
        assert!(matches!(second_chern(1.0005, 1.0, &g, &ChernOptions::default()), Err(Error::TransitionPoint { .. })));
    }
}
