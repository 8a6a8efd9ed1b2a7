//! Master-equation and no-jump evolution, postselection onto `S`.

use super::effective::OpenSystem;
use crate::error::{Error, Result};
use crate::linalg::{cr, DMat, DVec, Vec4, C64, I};
use crate::ode::{dopri5, AdaptiveOptions};

/// Pure-state amplitudes at time `t`; unnormalized during no-jump evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub amplitudes: DVec,
}

impl SystemState {
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }
}

/// Postselected state in `S` at one time of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub trajectory: usize,
    pub t: f64,
    pub state: Vec4,
    /// Weight removed by postselection, counted from unit initial norm.
    pub discarded: f64,
}

const PURE_RTOL: f64 = 1e-9;
const DENSITY_RTOL: f64 = 1e-10;
const LEAKAGE_BOUND: f64 = 1e-4;

struct Generator {
    h: DMat,
    jumps: Vec<DMat>,
}

fn generator<M: OpenSystem + ?Sized>(model: &M, t: f64) -> Generator {
    Generator { h: model.nh_hamiltonian(t), jumps: model.jump_operators(t) }
}

fn check_times(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("time grid must be finite, non-negative and sorted".into()));
    }
    Ok(())
}

/// Integrates `∂ψ/∂t = −iH_NH ψ` from `t = 0`.
pub fn no_jump_evolve<M: OpenSystem + ?Sized>(model: &M, psi0: &DVec, t_grid: &[f64]) -> Result<Vec<SystemState>> {
    check_times(t_grid)?;
    if psi0.len() != model.dim() || (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("initial state must be a normalized vector of length {}", model.dim())));
    }
    let cached = generator(model, 0.0);
    let static_model = model.time_independent();
    let states = dopri5(
        |t, y| {
            if static_model {
                (&cached.h * y) * (-I)
            } else {
                (model.nh_hamiltonian(t) * y) * (-I)
            }
        },
        0.0,
        psi0,
        t_grid,
        &AdaptiveOptions::with_rtol(PURE_RTOL),
        |t, y| {
            let pop = model.leakage(y);
            if pop > LEAKAGE_BOUND {
                return Err(Error::CutoffTooSmall { population: pop, t });
            }
            Ok(())
        },
    )?;
    Ok(t_grid.iter().zip(states).map(|(&t, amplitudes)| SystemState { t, amplitudes }).collect())
}

fn unvec(y: &DVec, n: usize) -> DMat {
    DMat::from_column_slice(n, n, &y.as_slice()[..n * n])
}

fn lindblad_rhs(g: &Generator, kappa: f64, rho: &DMat) -> DMat {
    let hr = &g.h * rho;
    let mut out = (&hr - hr.adjoint()) * (-I);
    for l in &g.jumps {
        out += l * rho * l.adjoint() * cr(kappa);
    }
    out
}

/// Integrates `dρ/dt = −i[H_NH, ρ] + κ Σ LρL†` (commutator with `H_NH` read as `H_NHρ − ρH_NH†`).
pub fn lindblad_evolve<M: OpenSystem + ?Sized>(model: &M, rho0: &DMat, t_grid: &[f64]) -> Result<Vec<DMat>> {
    check_times(t_grid)?;
    let n = model.dim();
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(Error::InvalidInput(format!("density matrix must be {n}×{n}")));
    }
    if (rho0 - rho0.adjoint()).norm() > 1e-10 || (rho0.trace() - cr(1.0)).norm() > 1e-10 {
        return Err(Error::InvalidInput("density matrix must be Hermitian with unit trace".into()));
    }
    let min_eig = rho0.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 {
        return Err(Error::InvalidInput(format!("density matrix has negative eigenvalue {min_eig:.3e}")));
    }
    let cached = generator(model, 0.0);
    let static_model = model.time_independent();
    let kappa = model.rate();
    let y0 = DVec::from_column_slice(rho0.as_slice());
    let out = dopri5(
        |t, y| {
            let rho = unvec(y, n);
            let d = if static_model { lindblad_rhs(&cached, kappa, &rho) } else { lindblad_rhs(&generator(model, t), kappa, &rho) };
            DVec::from_column_slice(d.as_slice())
        },
        0.0,
        &y0,
        t_grid,
        &AdaptiveOptions::with_rtol(DENSITY_RTOL),
        |t, y| {
            let pop = model.leakage_rho(&unvec(y, n));
            if pop > LEAKAGE_BOUND {
                return Err(Error::CutoffTooSmall { population: pop, t });
            }
            Ok(())
        },
    )?;
    Ok(out.iter().map(|y| unvec(y, n)).collect())
}

/// Side-by-side oracle: trace of the unnormalized no-jump density matrix and the accumulated
/// first-jump probability, at each output time.
pub fn no_jump_conditional_trace<M: OpenSystem + ?Sized>(model: &M, psi0: &DVec, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_times(t_grid)?;
    let n = model.dim();
    if psi0.len() != n {
        return Err(Error::InvalidInput(format!("initial state must have length {n}")));
    }
    let kappa = model.rate();
    let rho0 = psi0 * psi0.adjoint();
    let mut y0 = DVec::zeros(n * n + 1);
    y0.rows_mut(0, n * n).copy_from_slice(rho0.as_slice());
    let out = dopri5(
        |t, y| {
            let g = generator(model, t);
            let rho = unvec(y, n);
            let hr = &g.h * &rho;
            let d = (&hr - hr.adjoint()) * (-I);
            let jump: C64 = g.jumps.iter().map(|l| (l * &rho * l.adjoint()).trace()).sum();
            let mut dy = DVec::zeros(n * n + 1);
            dy.rows_mut(0, n * n).copy_from_slice(d.as_slice());
            dy[n * n] = jump * kappa;
            dy
        },
        0.0,
        &y0,
        t_grid,
        &AdaptiveOptions::with_rtol(PURE_RTOL),
        |_, _| Ok(()),
    )?;
    Ok(out.iter().map(|y| (unvec(y, n).trace().re, y[n * n].re)).collect())
}

fn gauge_phase(v: &mut Vec4) {
    let k = (0..4).max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm())).unwrap_or(0);
    if v[k].norm() > 0.0 {
        let ph = v[k] / v[k].norm();
        *v /= ph;
    }
}

/// Projects a pure state onto `S` and renormalizes.
pub fn postselect<M: OpenSystem + ?Sized>(model: &M, s: &SystemState, trajectory: usize) -> Result<TrajectorySample> {
    let b = model.working_basis();
    if s.amplitudes.len() != b.nrows() {
        return Err(Error::InvalidInput("state dimension does not match the model".into()));
    }
    let v = b.adjoint() * &s.amplitudes;
    let kept = v.norm_squared();
    if kept.sqrt() < 1e-12 {
        return Err(Error::EmptySupport);
    }
    let mut state = Vec4::from_iterator(v.iter().cloned()) / cr(kept.sqrt());
    gauge_phase(&mut state);
    Ok(TrajectorySample { trajectory, t: s.t, state, discarded: (1.0 - kept).max(0.0) })
}

/// Postselects a density matrix: the dominant eigenvector of its `S` block, with the purity
/// of the renormalized block.
pub fn postselect_density<M: OpenSystem + ?Sized>(model: &M, rho: &DMat, t: f64, trajectory: usize) -> Result<(TrajectorySample, f64)> {
    let b = model.working_basis();
    let block = b.adjoint() * rho * &b;
    let weight = block.trace().re;
    if weight < 1e-24 {
        return Err(Error::EmptySupport);
    }
    let block = &block / cr(weight);
    let purity = (&block * &block).trace().re;
    let eig = block.symmetric_eigen();
    let k = (0..4).max_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])).unwrap_or(0);
    let mut state = Vec4::from_iterator(eig.eigenvectors.column(k).iter().cloned());
    state /= cr(state.norm());
    gauge_phase(&mut state);
    Ok((TrajectorySample { trajectory, t, state, discarded: (1.0 - weight).max(0.0) }, purity))
}
