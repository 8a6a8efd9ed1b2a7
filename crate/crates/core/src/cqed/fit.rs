//! Generator reconstruction from postselected samples.

use super::dynamics::TrajectorySample;
use crate::error::{Error, Result};
use crate::linalg::{cr, DMat, Mat4, Mat4x2, C64, I};
use crate::spectral::{eigensystem_with_splitting, order_pair, EigenPair, EigenSystem};
use std::f64::consts::PI;

/// Fitted degenerate eigen-structure and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Pairs with energies centred on their mean.
    pub system: EigenSystem,
    /// One-step propagator `M ∝ e^{−iHδ}`, normalized to unit determinant modulus.
    pub propagator: Mat4,
    pub delta: f64,
    /// Smallest singular value of the pencil matrix relative to the largest.
    pub residual: f64,
    /// Second smallest singular value of the pencil matrix relative to the largest.
    pub null_gap: f64,
    /// Smallest singular value of the start-state matrix relative to the largest.
    pub sample_condition: f64,
    pub pairs: usize,
}

impl FitResult {
    pub fn e_plus(&self) -> C64 {
        self.system.e_plus()
    }

    pub fn e_minus(&self) -> C64 {
        self.system.e_minus()
    }
}

/// `½‖Q_aᴴQ_b‖²_F` for orthonormalized column spans: 1 when the subspaces coincide.
pub fn subspace_fidelity(a: &Mat4x2, b: &Mat4x2) -> f64 {
    let qa = a.qr().q();
    let qb = b.qr().q();
    (qa.adjoint() * qb).norm_squared() / 2.0
}

fn collect_pairs(samples: &[TrajectorySample]) -> Result<(Vec<(usize, usize)>, f64)> {
    let mut by_traj: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, s) in samples.iter().enumerate() {
        if !s.t.is_finite() {
            return Err(Error::InvalidInput("sample times must be finite".into()));
        }
        by_traj.entry(s.trajectory).or_default().push(i);
    }
    let mut diffs = Vec::new();
    for idx in by_traj.values_mut() {
        idx.sort_by(|&i, &j| samples[i].t.total_cmp(&samples[j].t));
        for (k, &i) in idx.iter().enumerate() {
            for &j in &idx[k + 1..] {
                let dt = samples[j].t - samples[i].t;
                if dt <= 1e-12 * samples[j].t.abs().max(1.0) {
                    return Err(Error::IllConditioned(format!("duplicate time stamp {} in trajectory", samples[i].t)));
                }
                diffs.push((dt, i, j));
            }
        }
    }
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // The step is the most frequent time difference, the smallest one among ties.
    let mut best: Option<(usize, usize)> = None;
    let mut start = 0;
    while start < diffs.len() {
        let d0 = diffs[start].0;
        let tol = 1e-9 * d0.max(1.0);
        let end = start + diffs[start..].iter().take_while(|d| d.0 - d0 <= tol).count();
        if best.is_none_or(|(s0, e0)| end - start > e0 - s0) {
            best = Some((start, end));
        }
        start = end;
    }
    if let Some((start, end)) = best.filter(|(s0, e0)| e0 - s0 >= 4) {
        let pairs = diffs[start..end].iter().map(|d| (d.1, d.2)).collect();
        return Ok((pairs, diffs[start].0));
    }
    Err(Error::IllConditioned("fewer than four sample pairs share a common time step".into()))
}

/// Reconstructs the propagator over the smallest common time step `δ` from pairs of samples
/// `(t, t + δ)` in each trajectory, then the centred generator and its degenerate pairs.
///
/// Postselected states carry no norm, so each pair constrains `M` only projectively:
/// `(I − ŷŷ†) M x̂ = 0`, solved as the smallest right singular vector of the stacked rows.
pub fn fit_eigenstates(samples: &[TrajectorySample]) -> Result<FitResult> {
    if samples.len() < 8 {
        return Err(Error::IllConditioned(format!("need at least 8 samples, got {}", samples.len())));
    }
    let (pairs, delta) = collect_pairs(samples)?;
    let starts = DMat::from_columns(&pairs.iter().map(|&(i, _)| {
        let v = samples[i].state;
        crate::linalg::DVec::from_iterator(4, v.iter().cloned())
    }).collect::<Vec<_>>());
    let sv = starts.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let sample_condition = if smax > 0.0 { smin / smax } else { 0.0 };
    if sv.len() < 4 || sample_condition < 1e-8 {
        return Err(Error::IllConditioned(format!("sample matrix rank below 4 (condition {sample_condition:.2e})")));
    }

    let mut k = DMat::zeros(4 * pairs.len(), 16);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let x = samples[i].state / cr(samples[i].state.norm());
        let y = samples[j].state / cr(samples[j].state.norm());
        let proj = Mat4::identity() - y * y.adjoint();
        // M x = (xᵀ ⊗ I) vec(M) with column-major vec.
        for col in 0..4 {
            for row in 0..4 {
                for out in 0..4 {
                    k[(4 * p + out, 4 * col + row)] = proj[(out, row)] * x[col];
                }
            }
        }
    }
    // Normal equations: the null vector of K is the lowest eigenvector of K†K.
    let gram = k.adjoint() * &k;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..16).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let sigma = |i: usize| eig.eigenvalues[order[i]].max(0.0).sqrt();
    let kmax = sigma(15).max(f64::MIN_POSITIVE);
    let residual = sigma(0) / kmax;
    let null_gap = sigma(1) / kmax;
    if null_gap < 1e-8 {
        return Err(Error::IllConditioned(format!("pencil null space is not one-dimensional (gap {null_gap:.2e})")));
    }
    let null = eig.eigenvectors.column(order[0]);
    let mut m = Mat4::from_iterator(null.iter().cloned());
    let det = m.determinant();
    if det.norm() < 1e-300 {
        return Err(Error::IllConditioned("fitted propagator is singular".into()));
    }
    m /= det.powf(0.25);

    let es = eigensystem_with_splitting(&m, 1e-12, 1e-3)?;
    let (mu_a, mu_b) = (es.upper.energy, es.lower.energy);
    let ratio = mu_a / mu_b;
    let phase = ratio.arg();
    if phase.abs() > 0.9 * PI {
        return Err(Error::AmbiguousLog { phase });
    }
    let half = I * ratio.ln() / (2.0 * delta);
    let (upper, lower) = order_pair(half, -half);
    let (up_pair, lo_pair) = if upper == half { (es.upper, es.lower) } else { (es.lower, es.upper) };
    let system = EigenSystem {
        upper: EigenPair { energy: upper, ..up_pair },
        lower: EigenPair { energy: lower, ..lo_pair },
    };
    Ok(FitResult { system, propagator: m, delta, residual, null_gap, sample_condition, pairs: pairs.len() })
}
