//! Lab-frame model, used to check the effective derivation.

use super::effective::effective_hamiltonian;
use super::{CqedConfig, EffectiveParams, Hardware, Space, E, F, G};
use crate::error::{Error, Result};
use crate::linalg::{cr, DMat, DVec, C64, I};
use crate::ode::{dopri5, AdaptiveOptions};
use std::f64::consts::PI;

struct LabOperators {
    space: Space,
    h0: DMat,
    lowering: [DMat; 2],
}

impl LabOperators {
    fn new(hw: &Hardware) -> Self {
        let space = Space { cutoff: hw.fock_cutoff };
        let a = space.annihilation();
        let lowering = [space.qutrit_lowering(0), space.qutrit_lowering(1)];
        let mut h0 = &a.adjoint() * &a * cr(hw.omega_r);
        for k in 0..2 {
            h0 += space.qutrit_level(k, E) * cr(hw.omega_e[k]) + space.qutrit_level(k, F) * cr(hw.omega_f[k]);
            let c = &lowering[k] * a.adjoint() * cr(hw.g_r);
            h0 += &c + c.adjoint();
        }
        Self { space, h0, lowering }
    }

    fn hamiltonian(&self, cfg: &CqedConfig, t: f64) -> DMat {
        let mut h = self.h0.clone();
        for m in 0..4 {
            let amp = C64::from_polar(cfg.lambda[m], cfg.xi[m] * t + cfg.phi[m]);
            let d = &self.lowering[m / 2] * amp;
            h += &d + d.adjoint();
        }
        h
    }
}

/// Lab-frame Hamiltonian with drives at time `t`.
pub fn build_full_hamiltonian(cfg: &CqedConfig, t: f64) -> Result<DMat> {
    cfg.validate()?;
    Ok(LabOperators::new(&cfg.hardware).hamiltonian(cfg, t))
}

/// Undriven eigenstates continuously connected to `(|fg0⟩, |1₊⟩, |gf0⟩, |1₋⟩)`.
#[derive(Debug, Clone)]
pub struct DressedLevels {
    pub energies: [f64; 4],
    /// Columns in the same order, phased to overlap positively with the bare states.
    pub states: DMat,
}

fn dressed_from(ops: &LabOperators, hw: &Hardware) -> Result<DressedLevels> {
    let eig = ops.h0.clone().symmetric_eigen();
    let ideal = ops.space.working_basis();
    let cluster_tol = 0.05 * hw.g_r;
    let mut energies = [0.0; 4];
    let mut cols = Vec::with_capacity(4);
    for k in 0..4 {
        let target = ideal.column(k);
        let (best, _) = (0..eig.eigenvalues.len())
            .map(|i| (i, eig.eigenvectors.column(i).dotc(&target).norm_sqr()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let e0 = eig.eigenvalues[best];
        let mut v = DVec::zeros(target.len());
        for i in 0..eig.eigenvalues.len() {
            if (eig.eigenvalues[i] - e0).abs() < cluster_tol {
                let col = eig.eigenvectors.column(i);
                v += col * col.dotc(&target);
            }
        }
        let weight = v.norm();
        if weight * weight < 0.5 {
            return Err(Error::InvalidInput(format!(
                "dressed state {k} has overlap {:.3} with its bare state; drives cannot be derived",
                weight * weight
            )));
        }
        v /= cr(weight);
        let anchor = match k {
            0 => ops.space.index(F, G, 0),
            2 => ops.space.index(G, F, 0),
            _ => ops.space.index(E, G, 0),
        };
        let phase = v[anchor] / v[anchor].norm();
        v /= phase;
        energies[k] = (v.adjoint() * &ops.h0 * &v)[(0, 0)].re;
        cols.push(v);
    }
    Ok(DressedLevels { energies, states: DMat::from_columns(&cols) })
}

/// Dressed working-subspace levels of the undriven lab Hamiltonian.
pub fn dressed_energies(hw: &Hardware) -> Result<DressedLevels> {
    super::validate_hardware(hw)?;
    dressed_from(&LabOperators::new(hw), hw)
}

/// Drive `m` couples its qutrit's source state to this dressed state (indices into `S`).
const TRANSITIONS: [(usize, usize); 4] = [(0, 1), (0, 3), (2, 1), (2, 3)];

/// Undriven eigenbasis with the drive operators expressed in it.
struct Eigenbasis {
    energies: Vec<f64>,
    vectors: DMat,
    drives: [DMat; 2],
}

impl Eigenbasis {
    fn new(ops: &LabOperators) -> Self {
        let eig = ops.h0.clone().symmetric_eigen();
        let v = eig.eigenvectors;
        let drives = [v.adjoint() * &ops.lowering[0] * &v, v.adjoint() * &ops.lowering[1] * &v];
        Self { energies: eig.eigenvalues.iter().cloned().collect(), vectors: v, drives }
    }
}

pub(super) type DriveSet = ([f64; 4], [f64; 4], [f64; 4], [f64; 4]);

pub(super) fn dressed_drives(hw: &Hardware, p: &EffectiveParams) -> Result<DriveSet> {
    let ops = LabOperators::new(hw);
    let levels = dressed_from(&ops, hw)?;
    let mut eta = [0.0; 4];
    for (m, (s, t)) in TRANSITIONS.into_iter().enumerate() {
        let mu = (levels.states.column(t).adjoint() * &ops.lowering[m / 2] * levels.states.column(s))[(0, 0)];
        if mu.norm() < 1e-3 || mu.im.abs() > 1e-9 * mu.norm() || mu.re < 0.0 {
            return Err(Error::InvalidInput(format!("drive {} has dressed matrix element {mu}", m + 1)));
        }
        eta[m] = mu.re;
    }
    let target = [p.lambda1, p.lambda2, p.lambda2, p.lambda1];
    let lambda = std::array::from_fn(|m| target[m] / eta[m]);
    let xi = TRANSITIONS.map(|(s, t)| levels.energies[s] - levels.energies[t] - 2.0 * p.xi_detuning);
    let phi = [-p.phi1, PI - p.phi2, p.phi2, p.phi1];
    Ok((lambda, xi, phi, eta))
}

/// Lab-frame evolution of `psi0`, integrated in the interaction picture of the undriven
/// Hamiltonian so the stepper only resolves the slow drive-induced dynamics.
fn evolve_lab(cfg: &CqedConfig, ops: &LabOperators, basis: &Eigenbasis, psi0: &DVec, times: &[f64]) -> Result<Vec<DVec>> {
    let v = &basis.vectors;
    let energies = &basis.energies;
    let n = psi0.len();
    let phases = |t: f64, sign: f64| DVec::from_fn(n, |a, _| C64::from_polar(1.0, sign * energies[a] * t));
    let top: Vec<usize> = (0..9).map(|qq| qq * ops.space.cutoff + ops.space.cutoff - 1).collect();
    let rhs = |t: f64, y: &DVec| {
        let mut vt = DMat::zeros(n, n);
        for m in 0..4 {
            vt += &basis.drives[m / 2] * C64::from_polar(cfg.lambda[m], cfg.xi[m] * t + cfg.phi[m]);
        }
        let vt = &vt + vt.adjoint();
        let ph = phases(t, 1.0);
        let x = y.component_mul(&ph.map(|z| z.conj()));
        (vt * x).component_mul(&ph) * (-I)
    };
    let y0 = v.adjoint() * psi0;
    let states = dopri5(rhs, 0.0, &y0, times, &AdaptiveOptions::with_rtol(1e-9), |t, y| {
        let lab = v * y.component_mul(&phases(t, -1.0));
        let pop: f64 = top.iter().map(|&i| lab[i].norm_sqr()).sum();
        if pop > 1e-4 {
            Err(Error::CutoffTooSmall { population: pop, t })
        } else {
            Ok(())
        }
    })?;
    Ok(times.iter().zip(states).map(|(&t, y)| v * y.component_mul(&phases(t, -1.0))).collect())
}

fn frame_offsets(p: &EffectiveParams) -> [f64; 4] {
    [-p.xi_detuning, p.xi_detuning, -p.xi_detuning, p.xi_detuning]
}

fn effective_gap(p: &EffectiveParams) -> Result<f64> {
    let gap = 2.0 * p.q().iter().map(|x| x * x).sum::<f64>().sqrt();
    if gap <= 0.0 {
        return Err(Error::InvalidInput("effective Hamiltonian has zero gap".into()));
    }
    Ok(gap)
}

/// Lab-frame propagator over `[0, t]` restricted to the dressed working states and expressed in
/// the rotating frame of the four-level model; unitary and equal to `e^{−iH_I t}` when the
/// effective description holds.
pub fn effective_propagator(cfg: &CqedConfig, t: f64) -> Result<DMat> {
    cfg.validate()?;
    let p = cfg.effective_params()?;
    let ops = LabOperators::new(&cfg.hardware);
    let levels = dressed_from(&ops, &cfg.hardware)?;
    let basis = Eigenbasis::new(&ops);
    let frame = frame_offsets(&p);
    let mut u = DMat::zeros(4, 4);
    for k in 0..4 {
        let psi = &evolve_lab(cfg, &ops, &basis, &levels.states.column(k).into_owned(), &[t])?[0];
        for j in 0..4 {
            u[(j, k)] = levels.states.column(j).dotc(psi) * C64::from_polar(1.0, (levels.energies[j] + frame[j]) * t);
        }
    }
    Ok(u)
}

/// One sample of the lab-versus-effective comparison.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AgreementSample {
    pub t: f64,
    /// Fidelity of the renormalized projection onto the dressed working states with the
    /// four-level prediction.
    pub fidelity: f64,
    /// Population outside the dressed working states.
    pub leakage: f64,
}

/// Compares lab-frame evolution from dressed `|fg0⟩` with the four-level model at `samples`
/// points over `periods` Rabi periods.
pub fn effective_agreement(cfg: &CqedConfig, periods: f64, samples: usize) -> Result<Vec<AgreementSample>> {
    cfg.validate()?;
    let p = cfg.effective_params()?;
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let ops = LabOperators::new(&cfg.hardware);
    let levels = dressed_from(&ops, &cfg.hardware)?;
    let basis = Eigenbasis::new(&ops);
    let h4 = effective_hamiltonian(p.xi_detuning, p.lambda1, p.lambda2, p.phi1, p.phi2);
    let h4 = DMat::from_iterator(4, 4, h4.iter().cloned());
    let horizon = periods * 2.0 * PI / effective_gap(&p)?;
    let times: Vec<f64> = (1..=samples).map(|k| horizon * k as f64 / samples as f64).collect();
    let states = evolve_lab(cfg, &ops, &basis, &levels.states.column(0).into_owned(), &times)?;
    let frame = frame_offsets(&p);
    let mut e0 = DVec::zeros(4);
    e0[0] = cr(1.0);
    Ok(times
        .iter()
        .zip(states)
        .map(|(&t, psi)| {
            let chi = crate::linalg::expm(&(&h4 * (-I * t))) * &e0;
            let inside = DVec::from_fn(4, |k, _| {
                levels.states.column(k).dotc(&psi) * C64::from_polar(1.0, (levels.energies[k] + frame[k]) * t)
            });
            let kept = inside.norm_squared();
            let fidelity = chi.dotc(&inside).norm_sqr() / (chi.norm_squared() * kept);
            AgreementSample { t, fidelity, leakage: (psi.norm_squared() - kept).max(0.0) }
        })
        .collect())
}
