//! Interaction-picture model on the truncated space and its projection onto `S`.

use super::{CqedConfig, EffectiveParams, Hardware, Space};
use crate::clifford::dirac_basis;
use crate::error::{Error, Result};
use crate::linalg::{c, cr, DMat, Mat4, C64};
use serde::{Deserialize, Serialize};

/// The four-level Hamiltonian on `(|fg0⟩, |1₊⟩, |gf0⟩, |1₋⟩)`.
pub fn effective_hamiltonian(xi: f64, lambda1: f64, lambda2: f64, phi1: f64, phi2: f64) -> Mat4 {
    let l1 = C64::from_polar(lambda1, phi1);
    let l2 = C64::from_polar(lambda2, phi2);
    let mut h = Mat4::zeros();
    for k in 0..4 {
        h[(k, k)] = cr(if k % 2 == 0 { xi } else { -xi });
    }
    for (i, j, v) in [(0, 1, l1), (3, 2, l1), (1, 2, l2), (0, 3, -l2)] {
        h[(i, j)] = v;
        h[(j, i)] = v.conj();
    }
    h
}

/// Treatment of the resonator loss inside the interaction picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DissipatorMode {
    /// Jump operator `a` with `a†a` as written.
    #[default]
    Static,
    /// Jump operator `a(t)` rotating with the qutrit–resonator coupling.
    Rotating,
    /// Bohr-frequency components of `a(t)` with the oscillating cross terms dropped.
    Secular,
}

/// Open-system generator: non-Hermitian Hamiltonian plus jump operators with a common rate.
pub trait OpenSystem: Sync {
    fn dim(&self) -> usize;
    fn nh_hamiltonian(&self, t: f64) -> DMat;
    fn jump_operators(&self, t: f64) -> Vec<DMat>;
    fn rate(&self) -> f64;
    /// Columns spanning `S` in this model's coordinates.
    fn working_basis(&self) -> DMat;
    fn time_independent(&self) -> bool {
        false
    }
    /// Population of the highest Fock level, if the model carries one.
    fn leakage(&self, _psi: &crate::linalg::DVec) -> f64 {
        0.0
    }
    fn leakage_rho(&self, _rho: &DMat) -> f64 {
        0.0
    }
}

fn coupling_hamiltonian(space: &Space, g_r: f64) -> DMat {
    let a = space.annihilation();
    let mut h = DMat::zeros(space.dim(), space.dim());
    for k in 0..2 {
        let term = space.qutrit_ge(k) * a.adjoint() * cr(g_r);
        h += &term + term.adjoint();
    }
    h
}

/// Splits `a` into components `a_ω` with `e^{iHt} a e^{−iHt} = Σ a_ω e^{−iωt}`.
fn bohr_components(h: &DMat, a: &DMat) -> Vec<(f64, DMat)> {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let scale = 1.0 + eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let tol = 1e-9 * scale;
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for &i in &order {
        let e = eig.eigenvalues[i];
        match clusters.last_mut() {
            Some((e0, members)) if (e - *e0).abs() < tol => members.push(i),
            _ => clusters.push((e, vec![i])),
        }
    }
    let projectors: Vec<DMat> = clusters
        .iter()
        .map(|(_, members)| {
            let v = DMat::from_columns(&members.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
            &v * v.adjoint()
        })
        .collect();
    let mut out: Vec<(f64, DMat)> = Vec::new();
    for (i, pi) in projectors.iter().enumerate() {
        let left = pi * a;
        for (j, pj) in projectors.iter().enumerate() {
            let comp = &left * pj;
            if comp.norm() < 1e-12 {
                continue;
            }
            let w = clusters[j].0 - clusters[i].0;
            match out.iter_mut().find(|(w0, _)| (w - *w0).abs() < tol) {
                Some((_, m)) => *m += comp,
                None => out.push((w, comp)),
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Interaction-picture model `H_NH = H_I − (i/2)κ Σ L†L` on the truncated space.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub space: Space,
    pub params: EffectiveParams,
    pub kappa: f64,
    pub mode: DissipatorMode,
    h_i: DMat,
    a: DMat,
    components: Vec<(f64, DMat)>,
}

impl EffectiveModel {
    pub fn new(cfg: &CqedConfig, mode: DissipatorMode) -> Result<Self> {
        cfg.validate()?;
        Self::from_params(&cfg.hardware, cfg.effective_params()?, mode)
    }

    pub fn from_params(hw: &Hardware, params: EffectiveParams, mode: DissipatorMode) -> Result<Self> {
        super::validate_hardware(hw)?;
        let space = Space { cutoff: hw.fock_cutoff };
        let a = space.annihilation();
        let components = bohr_components(&coupling_hamiltonian(&space, hw.g_r), &a);
        let mut model = Self { space, params, kappa: hw.kappa, mode, h_i: DMat::zeros(0, 0), a, components };
        model.set_params(params);
        Ok(model)
    }

    fn set_params(&mut self, params: EffectiveParams) {
        let b = self.space.working_basis();
        let h4 = effective_hamiltonian(params.xi_detuning, params.lambda1, params.lambda2, params.phi1, params.phi2);
        let h4 = DMat::from_iterator(4, 4, h4.iter().cloned());
        self.h_i = &b * h4 * b.adjoint();
        self.params = params;
    }

    /// `H_I` embedded in the truncated space.
    pub fn interaction_hamiltonian(&self) -> &DMat {
        &self.h_i
    }

    /// Bohr-frequency components of `a`.
    pub fn components(&self) -> &[(f64, DMat)] {
        &self.components
    }

    /// Restriction to `S ⊕ |gg0⟩`, which is invariant under every dissipator mode.
    pub fn restrict(&self) -> RestrictedModel {
        let mut cols: Vec<_> = self.space.working_basis().column_iter().map(|c| c.into_owned()).collect();
        cols.push(self.space.basis(super::G, super::G, 0));
        let b = DMat::from_columns(&cols);
        let project = |m: &DMat| b.adjoint() * m * &b;
        RestrictedModel {
            params: self.params,
            kappa: self.kappa,
            mode: self.mode,
            h_i: project(&self.h_i),
            a: project(&self.a),
            components: self.components.iter().map(|(w, m)| (*w, project(m))).collect(),
        }
    }
}

fn jumps(mode: DissipatorMode, a: &DMat, components: &[(f64, DMat)], t: f64) -> Vec<DMat> {
    match mode {
        DissipatorMode::Static => vec![a.clone()],
        DissipatorMode::Secular => components.iter().map(|(_, m)| m.clone()).collect(),
        DissipatorMode::Rotating => {
            let mut m = DMat::zeros(a.nrows(), a.ncols());
            for (w, comp) in components {
                m += comp * C64::from_polar(1.0, -w * t);
            }
            vec![m]
        }
    }
}

fn nh(h_i: &DMat, kappa: f64, ls: &[DMat]) -> DMat {
    let mut h = h_i.clone();
    for l in ls {
        h -= l.adjoint() * l * c(0.0, 0.5 * kappa);
    }
    h
}

impl OpenSystem for EffectiveModel {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn nh_hamiltonian(&self, t: f64) -> DMat {
        nh(&self.h_i, self.kappa, &self.jump_operators(t))
    }

    fn jump_operators(&self, t: f64) -> Vec<DMat> {
        jumps(self.mode, &self.a, &self.components, t)
    }

    fn rate(&self) -> f64 {
        self.kappa
    }

    fn time_independent(&self) -> bool {
        self.mode != DissipatorMode::Rotating
    }

    fn working_basis(&self) -> DMat {
        self.space.working_basis()
    }

    fn leakage(&self, psi: &crate::linalg::DVec) -> f64 {
        self.space.top_fock_population(psi)
    }

    fn leakage_rho(&self, rho: &DMat) -> f64 {
        self.space.top_fock_population_rho(rho)
    }
}

/// The model restricted to `(|fg0⟩, |1₊⟩, |gf0⟩, |1₋⟩, |gg0⟩)`.
#[derive(Debug, Clone)]
pub struct RestrictedModel {
    pub params: EffectiveParams,
    pub kappa: f64,
    pub mode: DissipatorMode,
    h_i: DMat,
    a: DMat,
    components: Vec<(f64, DMat)>,
}

impl RestrictedModel {
    /// Same dissipator with new drive parameters.
    pub fn with_params(&self, params: EffectiveParams) -> Self {
        let h4 = effective_hamiltonian(params.xi_detuning, params.lambda1, params.lambda2, params.phi1, params.phi2);
        let mut h_i = DMat::zeros(5, 5);
        h_i.view_mut((0, 0), (4, 4)).copy_from(&DMat::from_iterator(4, 4, h4.iter().cloned()));
        Self { params, h_i, ..self.clone() }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..self.clone() }
    }
}

impl OpenSystem for RestrictedModel {
    fn dim(&self) -> usize {
        5
    }

    fn nh_hamiltonian(&self, t: f64) -> DMat {
        nh(&self.h_i, self.kappa, &self.jump_operators(t))
    }

    fn jump_operators(&self, t: f64) -> Vec<DMat> {
        jumps(self.mode, &self.a, &self.components, t)
    }

    fn rate(&self) -> f64 {
        self.kappa
    }

    fn time_independent(&self) -> bool {
        self.mode != DissipatorMode::Rotating
    }

    fn working_basis(&self) -> DMat {
        DMat::identity(5, 4)
    }
}

/// `H_I − (i/2)κ a†a` on the truncated space.
pub fn nh_hamiltonian(cfg: &CqedConfig) -> Result<DMat> {
    Ok(EffectiveModel::new(cfg, DissipatorMode::Static)?.nh_hamiltonian(0.0))
}

/// Fit of the `S`-block of `H_NH` to `q·Γ + iκ_eff Γ₄ + c·I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub q: [f64; 5],
    pub kappa_eff: f64,
    pub shift: C64,
    /// Residual with the secular reduction of the dissipator.
    pub residual: f64,
    /// Residual of the literal `a†a` projection.
    pub residual_unreduced: f64,
    pub kappa_eff_unreduced: f64,
    /// Frobenius norm of the projected block.
    pub h_norm: f64,
    /// Largest distance of a drive frequency from its dressed resonance.
    pub max_drive_detuning: f64,
}

struct GammaFit {
    q: [f64; 5],
    kappa_eff: f64,
    shift: C64,
    residual: f64,
}

fn fit_gamma(m: &Mat4) -> GammaFit {
    let basis = dirac_basis();
    let shift = m.trace() / 4.0;
    let mut model = Mat4::identity() * shift;
    let mut q = [0.0; 5];
    let mut kappa_eff = 0.0;
    for i in 0..5 {
        let g = basis.gamma(i + 1);
        let coeff = (g * m).trace() / 4.0;
        if i == 3 {
            q[i] = coeff.re;
            kappa_eff = coeff.im;
            model += g * coeff;
        } else {
            q[i] = coeff.re;
            model += g * cr(coeff.re);
        }
    }
    GammaFit { q, kappa_eff, shift, residual: (m - model).norm() }
}

fn s_block(model: &EffectiveModel) -> Mat4 {
    let b = model.space.working_basis();
    let block = b.adjoint() * model.nh_hamiltonian(0.0) * &b;
    Mat4::from_fn(|i, j| block[(i, j)])
}

/// `κ_eff/κ` of the `S` block for the given dissipator, measured at unit loss rate.
pub fn measured_kappa_ratio(hw: &Hardware, mode: DissipatorMode) -> Result<f64> {
    let params = EffectiveParams { xi_detuning: 0.3, lambda1: 0.2, lambda2: 0.1, phi1: 0.4, phi2: -0.7 };
    let model = EffectiveModel::from_params(&Hardware { kappa: 1.0, ..*hw }, params, mode)?;
    Ok(fit_gamma(&s_block(&model)).kappa_eff)
}

/// Projects `H_NH` onto `S` with and without the secular reduction.
pub fn validate_mapping(cfg: &CqedConfig) -> Result<MappingReport> {
    let secular = EffectiveModel::new(cfg, DissipatorMode::Secular)?;
    let literal = EffectiveModel::new(cfg, DissipatorMode::Static)?;
    let block = s_block(&secular);
    let reduced = fit_gamma(&block);
    let unreduced = fit_gamma(&s_block(&literal));
    let h_norm = block.norm();
    let resonant = super::lab::dressed_drives(&cfg.hardware, &secular.params)?;
    let max_drive_detuning = cfg.xi.iter().zip(resonant.1.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if reduced.residual > 1e-3 * h_norm {
        return Err(Error::ResidualTooLarge { residual: reduced.residual, bound: 1e-3 * h_norm });
    }
    Ok(MappingReport {
        q: reduced.q,
        kappa_eff: reduced.kappa_eff,
        shift: reduced.shift,
        residual: reduced.residual,
        residual_unreduced: unreduced.residual,
        kappa_eff_unreduced: unreduced.kappa_eff,
        h_norm,
        max_drive_detuning,
    })
}
