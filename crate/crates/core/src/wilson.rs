//! Wilczek–Zee holonomy along closed loops, Wilson loops and frame transport.

use crate::clifford::{moebius_point, ParameterPoint};
use crate::error::{Error, Result};
use crate::geometry::{self, seed_reference, ConnectionKind, Frame, ProjectorField};
use crate::linalg::{self, c, cr, Mat2, Mat4, Mat4x2, C64};
use crate::spectral::{self, Band, Permutation, MIN_GAP};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Closed loop families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoopSpec {
    /// `q = R(sinθ₂, cosθ₂cosφ₁, cosθ₂sinφ₁, 0, 0)` with φ₁ from 0 to 2π·turns.
    Theta2Slice { r: f64, theta2: f64, turns: usize },
    /// `q = ((R sinθ₁ + Δ)/√2, (R sinθ₁ + Δ)/√2, 0, R cosθ₁, 0)` with θ₁ from 0 to 2π·turns.
    Moebius { r: f64, delta: f64, turns: usize },
}

impl LoopSpec {
    pub fn slice(r: f64, theta2: f64) -> Self {
        LoopSpec::Theta2Slice { r, theta2, turns: 1 }
    }

    pub fn moebius(r: f64, delta: f64) -> Self {
        LoopSpec::Moebius { r, delta, turns: 2 }
    }

    pub fn turns(&self) -> usize {
        match *self {
            LoopSpec::Theta2Slice { turns, .. } | LoopSpec::Moebius { turns, .. } => turns,
        }
    }

    pub fn length(&self) -> f64 {
        TAU * self.turns() as f64
    }

    pub fn point(&self, s: f64, kappa: f64) -> ParameterPoint {
        match *self {
            LoopSpec::Theta2Slice { r, theta2, .. } => {
                let (st, ct) = theta2.sin_cos();
                let (sp, cp) = s.sin_cos();
                ParameterPoint { q: [r * st, r * ct * cp, r * ct * sp, 0.0, 0.0], kappa, spherical: None }
            }
            LoopSpec::Moebius { r, delta, .. } => moebius_point(r, delta, s, kappa),
        }
    }

    /// Connection kind whose transport reproduces each family's known Wilson loops.
    pub fn default_kind(&self) -> ConnectionKind {
        match self {
            LoopSpec::Theta2Slice { .. } => ConnectionKind::RightEigen,
            LoopSpec::Moebius { .. } => ConnectionKind::Biorthogonal,
        }
    }

    fn validate(&self, kappa: f64) -> Result<()> {
        let (r, extra) = match *self {
            LoopSpec::Theta2Slice { r, theta2, .. } => (r, theta2),
            LoopSpec::Moebius { r, delta, .. } => (r, delta),
        };
        if !(r >= 0.0) || !r.is_finite() || !extra.is_finite() || !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidInput("loop parameters must be finite with R, kappa >= 0".into()));
        }
        if self.turns() == 0 {
            return Err(Error::InvalidInput("loop needs at least one turn".into()));
        }
        Ok(())
    }
}

const MAX_BISECTIONS: usize = 24;

/// Root at `s1` continued from `e0` at `s0`, splitting the step while the jump is not
/// small against the gap.
fn continue_root(spec: &LoopSpec, kappa: f64, s0: f64, e0: C64, s1: f64, depth: usize) -> Result<C64> {
    let root = spectral::upper_root(spec.point(s1, kappa).squared_energy());
    let gap = 2.0 * root.norm();
    if gap < MIN_GAP {
        return Err(Error::EhsCrossing { s: s1, gap });
    }
    let e = if (root - e0).norm() < (root + e0).norm() { root } else { -root };
    let jump = (e - e0).norm();
    if jump < 0.5 * gap {
        return Ok(e);
    }
    if depth >= MAX_BISECTIONS {
        return Err(Error::AmbiguousContinuation { step: depth, displacement: jump, gap });
    }
    let mid = 0.5 * (s0 + s1);
    let em = continue_root(spec, kappa, s0, e0, mid, depth + 1)?;
    continue_root(spec, kappa, mid, em, s1, depth + 1)
}

/// Lower band along a loop, following its eigenvalue continuously in the loop parameter.
pub struct LoopField {
    spec: LoopSpec,
    kappa: f64,
    samples: Vec<C64>,
    ds: f64,
}

const TRACK_PER_TURN: usize = 4096;

impl LoopField {
    pub fn new(spec: LoopSpec, kappa: f64) -> Result<Self> {
        spec.validate(kappa)?;
        let n = TRACK_PER_TURN * spec.turns();
        let ds = spec.length() / n as f64;
        let mut samples = Vec::with_capacity(n + 1);
        let mut prev = spectral::band_energy(&spec.point(0.0, kappa), Band::Lower);
        samples.push(continue_root(&spec, kappa, 0.0, prev, 0.0, 0)?);
        for k in 1..=n {
            prev = continue_root(&spec, kappa, (k - 1) as f64 * ds, prev, k as f64 * ds, 0)?;
            samples.push(prev);
        }
        Ok(Self { spec, kappa, samples, ds })
    }

    pub fn spec(&self) -> &LoopSpec {
        &self.spec
    }

    /// Continuously tracked lower-band energy.
    pub fn energy(&self, s: f64) -> Result<C64> {
        let root = spectral::upper_root(self.spec.point(s, self.kappa).squared_energy());
        let gap = 2.0 * root.norm();
        if gap < MIN_GAP {
            return Err(Error::EhsCrossing { s, gap });
        }
        let k = ((s / self.ds).round().max(0.0) as usize).min(self.samples.len() - 1);
        let near = self.samples[k];
        let e = if (root - near).norm() < (root + near).norm() { root } else { -root };
        if (e - near).norm() < 0.25 * gap {
            return Ok(e);
        }
        continue_root(&self.spec, self.kappa, k as f64 * self.ds, near, s, 0)
    }

    pub fn min_gap(&self) -> f64 {
        self.samples.iter().map(|e| 2.0 * e.norm()).fold(f64::INFINITY, f64::min)
    }
}

impl ProjectorField for LoopField {
    fn dim(&self) -> usize {
        1
    }

    fn projector(&self, x: &[f64]) -> Result<Mat4> {
        let e = self.energy(x[0])?;
        spectral::projector_for_energy(&self.spec.point(x[0], self.kappa), e)
            .map_err(|_| Error::EhsCrossing { s: x[0], gap: 2.0 * e.norm() })
    }
}

fn basis_pair(a: usize, b: usize) -> Frame {
    let mut v = Mat4x2::zeros();
    v[(a, 0)] = cr(1.0);
    v[(b, 1)] = cr(1.0);
    Frame { right: v, left: v }
}

/// Among a few fixed candidates, the reference whose projection stays best conditioned
/// along the loop.
pub fn choose_reference(field: &LoopField, kind: ConnectionKind) -> Result<Frame> {
    let seed = seed_reference();
    let alt = Frame { right: seed.right.map(|z| z.conj()), left: seed.left.map(|z| z.conj()) };
    let candidates = [seed, alt, basis_pair(0, 2), basis_pair(1, 3), basis_pair(0, 1), basis_pair(2, 3)];
    let n = 512;
    let len = field.spec.length();
    let projectors: Vec<Mat4> = (0..n)
        .map(|k| field.projector(&[len * k as f64 / n as f64]))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, Frame)> = None;
    for cand in candidates {
        let score = projectors
            .iter()
            .map(|p| {
                let s = match kind {
                    ConnectionKind::Biorthogonal => cand.left.adjoint() * p * cand.right,
                    ConnectionKind::RightEigen => {
                        let x = p * cand.right;
                        x.adjoint() * x
                    }
                };
                linalg::polar_unitary2(&s).1
            })
            .fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, cand));
        }
    }
    let (score, frame) = best.expect("candidates are non-empty");
    if score < 1e-6 {
        return Err(Error::SingularOverlap { sigma_min: score });
    }
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyOptions {
    /// Connection kind; `None` selects the loop family's default.
    pub kind: Option<ConnectionKind>,
    pub initial_steps: usize,
    pub tol: f64,
    pub max_halvings: usize,
    pub fd_step: f64,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        Self { kind: None, initial_steps: 64, tol: 1e-8, max_halvings: 10, fd_step: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyResult {
    pub u: Mat2,
    pub w: C64,
    pub det_u: C64,
    pub step_count: usize,
    /// Gauge frame at the loop's base point; `u` acts on coefficients in this frame.
    pub base: Frame,
    pub kind: ConnectionKind,
}

impl HolonomyResult {
    /// Holonomy expressed in another basis `target` of the same band at the base point.
    pub fn in_frame(&self, target: &Frame) -> Result<Mat2> {
        let g = self.base.left.adjoint() * target.right;
        let gi = linalg::inv2(&g).ok_or(Error::SingularOverlap { sigma_min: 0.0 })?;
        Ok(gi * self.u * g)
    }
}

/// Transport generator `M(s) = L(s)† ∂ₛR(s)`, so that frame coefficients obey `ċ = −M c`
/// and the holonomy obeys `U̇ = iA U` with `A = iM`.
pub struct Transport<'a, F: ProjectorField + ?Sized> {
    field: &'a F,
    opts: geometry::ConnectionOptions,
}

impl<'a, F: ProjectorField + ?Sized> Transport<'a, F> {
    pub fn new(field: &'a F, gauge: geometry::Gauge, kind: ConnectionKind, fd_step: f64) -> Self {
        Self { field, opts: geometry::ConnectionOptions { gauge, kind, fd_step } }
    }

    pub fn frame(&self, s: f64) -> Result<Frame> {
        geometry::frame_at(self.field, &[s], &self.opts)
    }

    /// `A(s) = +i L† ∂ₛR`, the transport-sign connection.
    pub fn connection(&self, s: f64) -> Result<Mat2> {
        Ok(geometry::berry_connection(self.field, &[s], 0, &self.opts)? * -cr(1.0))
    }
}

/// Classical RK4 for `U̇ = iA(s)U`, `U(s₀) = I`, with `steps` equal steps.
pub fn transport_rk4(a: impl Fn(f64) -> Result<Mat2>, s0: f64, s1: f64, steps: usize) -> Result<Mat2> {
    let h = (s1 - s0) / steps as f64;
    let gen = |s: f64| -> Result<Mat2> { Ok(a(s)? * C64::i()) };
    let mut u = Mat2::identity();
    let mut k_start = gen(s0)?;
    for j in 0..steps {
        let s = s0 + h * j as f64;
        let mid = gen(s + 0.5 * h)?;
        let end = gen(s + h)?;
        let k1 = k_start * u;
        let k2 = mid * (u + k1 * cr(0.5 * h));
        let k3 = mid * (u + k2 * cr(0.5 * h));
        let k4 = end * (u + k3 * cr(h));
        u += (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(h / 6.0);
        k_start = end;
    }
    Ok(u)
}

fn loop_setup(spec: &LoopSpec, kappa: f64, opts: &HolonomyOptions) -> Result<(LoopField, ConnectionKind, geometry::Gauge)> {
    if opts.initial_steps < 64 {
        return Err(Error::InvalidInput("loops need at least 64 steps".into()));
    }
    let field = LoopField::new(*spec, kappa)?;
    let kind = opts.kind.unwrap_or(spec.default_kind());
    let reference = choose_reference(&field, kind)?;
    Ok((field, kind, geometry::Gauge::ReferenceOneSided(reference)))
}

fn rk4_step(gen: &impl Fn(f64) -> Result<Mat2>, s: f64, h: f64, u: &Mat2) -> Result<Mat2> {
    let k1 = gen(s)? * u;
    let mid = gen(s + 0.5 * h)?;
    let k2 = mid * (u + k1 * cr(0.5 * h));
    let k3 = mid * (u + k2 * cr(0.5 * h));
    let k4 = gen(s + h)? * (u + k3 * cr(h));
    Ok(u + (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(h / 6.0))
}

/// RK4 with step-doubling error control: each step is accepted when one step of `h`
/// and two of `h/2` agree to `tol · h / (s₁ − s₀)`.
pub fn transport_adaptive(a: impl Fn(f64) -> Result<Mat2>, s0: f64, s1: f64, tol: f64, max_steps: usize) -> Result<(Mat2, usize)> {
    let len = s1 - s0;
    let gen = |s: f64| -> Result<Mat2> { Ok(a(s)? * C64::i()) };
    let mut u = Mat2::identity();
    let mut s = s0;
    let mut h = len / 64.0;
    let mut taken = 0;
    while s < s1 {
        if taken >= max_steps {
            return Err(Error::NoConvergence { diff: f64::NAN });
        }
        h = h.min(s1 - s);
        let full = rk4_step(&gen, s, h, &u)?;
        let half = rk4_step(&gen, s, 0.5 * h, &u)?;
        let two = rk4_step(&gen, s + 0.5 * h, 0.5 * h, &half)?;
        let err = (two - full).norm() / 15.0;
        let allowed = tol * h / len;
        if err <= allowed {
            u = two + (two - full) / cr(15.0);
            s += h;
            taken += 1;
        }
        let factor = if err > 0.0 { 0.9 * (allowed / err).powf(0.2) } else { 4.0 };
        h *= factor.clamp(0.1, 4.0);
    }
    Ok((u, taken))
}

/// Holonomy by adaptive RK4; resolves loops that pass close to an exceptional point.
pub fn holonomy_adaptive(spec: &LoopSpec, kappa: f64, opts: &HolonomyOptions) -> Result<HolonomyResult> {
    let (field, kind, gauge) = loop_setup(spec, kappa, opts)?;
    let t = Transport::new(&field, gauge, kind, opts.fd_step);
    let (u, steps) = transport_adaptive(|s| t.connection(s), 0.0, spec.length(), opts.tol, 1 << 18)?;
    let base = t.frame(0.0)?;
    Ok(HolonomyResult { u, w: u.trace(), det_u: linalg::det2(&u), step_count: steps, base, kind })
}

/// Holonomy with a fixed number of RK4 steps (no step halving).
pub fn holonomy_fixed_steps(spec: &LoopSpec, kappa: f64, opts: &HolonomyOptions, steps: usize) -> Result<Mat2> {
    let (field, kind, gauge) = loop_setup(spec, kappa, &HolonomyOptions { initial_steps: 64, ..*opts })?;
    let t = Transport::new(&field, gauge, kind, opts.fd_step);
    transport_rk4(|s| t.connection(s), 0.0, spec.length(), steps)
}

/// Path-ordered transport around the loop with step halving until successive
/// results differ by less than `tol`.
pub fn holonomy(spec: &LoopSpec, kappa: f64, opts: &HolonomyOptions) -> Result<HolonomyResult> {
    let (field, kind, gauge) = loop_setup(spec, kappa, opts)?;
    let t = Transport::new(&field, gauge, kind, opts.fd_step);
    let len = spec.length();
    let mut steps = opts.initial_steps;
    let mut prev = transport_rk4(|s| t.connection(s), 0.0, len, steps)?;
    let mut diff = f64::INFINITY;
    for _ in 0..opts.max_halvings {
        steps *= 2;
        let u = transport_rk4(|s| t.connection(s), 0.0, len, steps)?;
        diff = (u - prev).norm();
        prev = u;
        if diff < opts.tol {
            let base = t.frame(0.0)?;
            return Ok(HolonomyResult { u, w: u.trace(), det_u: linalg::det2(&u), step_count: steps, base, kind });
        }
    }
    Err(Error::NoConvergence { diff })
}

/// `N = √(1 + |E₋ + iκ|²/R²)`, the norm of the slice eigenvectors with unit last entries.
pub fn slice_normalization(r: f64, kappa: f64) -> f64 {
    let e = -spectral::upper_root(c(r * r - kappa * kappa, 0.0));
    (1.0 + (e + c(0.0, kappa)).norm_sqr() / (r * r)).sqrt()
}

/// Orthonormal slice eigenvectors of the lower band at `φ₁`, columns (ψ^α, ψ^β).
pub fn slice_frame_closed_form(r: f64, kappa: f64, theta2: f64, phi1: f64) -> Frame {
    let e = -spectral::upper_root(c(r * r - kappa * kappa, 0.0));
    let n = slice_normalization(r, kappa);
    let a = (e + c(0.0, kappa)) / r;
    let (s2, c2) = theta2.sin_cos();
    let ep = C64::from_polar(1.0, phi1);
    let v = Mat4x2::new(
        -a, cr(0.0),
        -ep.conj() * c2, cr(s2),
        cr(0.0), a,
        cr(s2), ep * c2,
    ) / cr(n);
    Frame { right: v, left: v }
}

/// Transport-sign connection of the slice loop in the (ψ^α, −ψ^β) basis.
pub fn connection_slice_closed_form(theta2: f64, phi1: f64, n: f64) -> Mat2 {
    let n2 = n * n;
    let (s, co) = theta2.sin_cos();
    let ep = C64::from_polar(1.0, phi1);
    Mat2::new(
        cr(co * co / n2), ep * (co * s / n2),
        ep.conj() * (co * s / n2), cr(-co * co / n2),
    )
}

fn slice_q(theta2: f64, n: f64) -> f64 {
    let n2 = n * n;
    let c2t = (2.0 * theta2).cos();
    (n2 * n2 - 2.0 * n2 + 2.0 + 2.0 * c2t - 2.0 * n2 * c2t).max(0.0).sqrt()
}

/// Slice holonomy after one turn in the (ψ^β, −ψ^α) basis.
pub fn slice_holonomy_closed_form(theta2: f64, n: f64) -> Mat2 {
    let n2 = n * n;
    let q = slice_q(theta2, n);
    let phase = PI * q / n2;
    let sinc = if q > 1e-12 { phase.sin() / q } else { PI / n2 };
    let co = theta2.cos();
    let diag = c(0.0, (2.0 * co * co - n2) * sinc);
    let off = c(0.0, -(2.0 * theta2).sin() * sinc);
    let cosp = cr(-phase.cos());
    Mat2::new(cosp + diag, off, off, cosp - diag)
}

/// `W = U¹¹ + U²² = −2cos(πQ/N²)`.
pub fn wilson_closed_form(theta2: f64, n: f64) -> C64 {
    slice_holonomy_closed_form(theta2, n).trace()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilsonRow {
    pub theta2: f64,
    pub w: C64,
    pub w_closed_form: C64,
}

pub fn wilson_scan(r: f64, kappa: f64, theta2_grid: &[f64], opts: &HolonomyOptions) -> Result<Vec<WilsonRow>> {
    if (r - kappa).abs() < 1e-3 {
        return Err(Error::TransitionPoint { r, kappa });
    }
    let n = slice_normalization(r, kappa);
    theta2_grid
        .par_iter()
        .map(|&t2| {
            let h = holonomy(&LoopSpec::slice(r, t2), kappa, opts)?;
            Ok(WilsonRow { theta2: t2, w: h.w, w_closed_form: wilson_closed_form(t2, n) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinWilsonRow {
    pub r: f64,
    pub min_re_w: f64,
    pub theta2_at_min: f64,
}

/// `min_θ₂ Re W` for each radius.
pub fn min_wilson_vs_radius(kappa: f64, radii: &[f64], theta2_grid: &[f64], opts: &HolonomyOptions) -> Result<Vec<MinWilsonRow>> {
    if theta2_grid.is_empty() {
        return Err(Error::InvalidInput("empty theta2 grid".into()));
    }
    radii
        .iter()
        .map(|&r| {
            let rows = wilson_scan(r, kappa, theta2_grid, opts)?;
            let best = rows
                .iter()
                .min_by(|a, b| a.w.re.total_cmp(&b.w.re))
                .expect("non-empty grid");
            Ok(MinWilsonRow { r, min_re_w: best.w.re, theta2_at_min: best.theta2 })
        })
        .collect()
}

/// Wilson loop over the doubled Möbius loop.
pub fn moebius_wilson(r: f64, delta: f64, kappa: f64, opts: &HolonomyOptions) -> Result<C64> {
    Ok(holonomy(&LoopSpec::moebius(r, delta), kappa, opts)?.w)
}

/// Eigenvalue-branch permutation after a single Möbius-loop turn.
pub fn moebius_permutation(r: f64, delta: f64, kappa: f64, steps: usize) -> Result<Permutation> {
    let spec = LoopSpec::Moebius { r, delta, turns: 1 };
    let mut path: Vec<ParameterPoint> = (0..=steps).map(|k| spec.point(TAU * k as f64 / steps as f64, kappa)).collect();
    path[steps] = path[0];
    Ok(spectral::track_branches(&path)?.permutation)
}

/// Localizes the Δ at which the doubled-loop Wilson loop jumps between −2 and +2, by
/// bisection on the sign of Re W until the bracket is narrower than `tol`.
pub fn moebius_transition(r: f64, kappa: f64, lo: f64, hi: f64, tol: f64, opts: &HolonomyOptions) -> Result<f64> {
    // Only the sign of Re W = ±2 is needed.
    let sign_opts = HolonomyOptions { tol: opts.tol.max(1e-3), ..*opts };
    let sign_at = |d: f64| -> Result<bool> {
        let mut offset = 0.0;
        for _ in 0..4 {
            match holonomy_adaptive(&LoopSpec::moebius(r, d + offset), kappa, &sign_opts) {
                Ok(h) => return Ok(h.w.re > 0.0),
                Err(Error::EhsCrossing { .. }) | Err(Error::NoConvergence { .. }) => offset += 0.05 * tol,
                Err(e) => return Err(e),
            }
        }
        Err(Error::NoConvergence { diff: f64::NAN })
    };
    let (mut a, mut b) = (lo, hi);
    let sa = sign_at(a)?;
    if sa == sign_at(b)? {
        return Err(Error::InvalidInput(format!("no Wilson-loop sign change between {lo} and {hi}")));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if sign_at(m)? == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Pauli expectations of frame coefficients transported around the slice loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportSeries {
    pub phi: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    pub s2: Vec<f64>,
}

/// Transports the `index`-th lower eigenstate at φ₁ = 0 around the slice and records
/// `⟨σⱼ⟩ = c†σⱼc / c†c` and `Σⱼ⟨σⱼ⟩²`.
pub fn transport_expectations(r: f64, kappa: f64, theta2: f64, index: usize, steps: usize) -> Result<TransportSeries> {
    if !(r > kappa) {
        return Err(Error::InvalidInput(format!("transport needs R > kappa, got R={r}, kappa={kappa}")));
    }
    if index > 1 || steps < 64 {
        return Err(Error::InvalidInput("index must be 0 or 1 and steps >= 64".into()));
    }
    let spec = LoopSpec::slice(r, theta2);
    let field = LoopField::new(spec, kappa)?;
    let reference = slice_frame_closed_form(r, kappa, theta2, 0.0);
    let t = Transport::new(&field, geometry::Gauge::ReferenceOneSided(reference), ConnectionKind::RightEigen, 1e-5);
    let h = TAU / steps as f64;
    let mut cvec = nalgebra::Vector2::new(cr(0.0), cr(0.0));
    cvec[index] = cr(1.0);
    let pauli = linalg::pauli();
    let mut out = TransportSeries { phi: vec![], sx: vec![], sy: vec![], sz: vec![], s2: vec![] };
    let mut record = |phi: f64, v: &nalgebra::Vector2<C64>| {
        let norm = v.norm_squared();
        let e: Vec<f64> = pauli.iter().map(|s| (v.adjoint() * s * v)[(0, 0)].re / norm).collect();
        out.phi.push(phi);
        out.sx.push(e[0]);
        out.sy.push(e[1]);
        out.sz.push(e[2]);
        out.s2.push(e.iter().map(|x| x * x).sum());
    };
    record(0.0, &cvec);
    let gen = |s: f64| -> Result<Mat2> { Ok(t.connection(s)? * C64::i()) };
    let mut k_start = gen(0.0)?;
    for j in 0..steps {
        let s = h * j as f64;
        let mid = gen(s + 0.5 * h)?;
        let end = gen(s + h)?;
        let k1 = k_start * cvec;
        let k2 = mid * (cvec + k1 * cr(0.5 * h));
        let k3 = mid * (cvec + k2 * cr(0.5 * h));
        let k4 = end * (cvec + k3 * cr(h));
        cvec += (k1 + k2 * cr(2.0) + k3 * cr(2.0) + k4) * cr(h / 6.0);
        k_start = end;
        record(s + h, &cvec);
    }
    Ok(out)
}
