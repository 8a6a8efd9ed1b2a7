//! Circuit-QED realization: two qutrits coupled to a lossy resonator, driven so that
//! the working subspace `S = {|fg0⟩, |1₊⟩, |gf0⟩, |1₋⟩}` hosts the four-level model.

mod dynamics;
mod effective;
mod fit;
mod lab;
mod protocol;

pub use dynamics::{lindblad_evolve, no_jump_evolve, no_jump_conditional_trace, postselect, postselect_density, SystemState, TrajectorySample};
pub use effective::{
    effective_hamiltonian, measured_kappa_ratio, nh_hamiltonian, validate_mapping, DissipatorMode, EffectiveModel, MappingReport,
    OpenSystem, RestrictedModel,
};
pub use fit::{fit_eigenstates, subspace_fidelity, FitResult};
pub use lab::{build_full_hamiltonian, dressed_energies, effective_agreement, effective_propagator, AgreementSample, DressedLevels};
pub use protocol::{initial_states, protocol_chern, sample_times, simulate_point, PointSimulation, ProtocolConfig, ProtocolResult};

use crate::error::{Error, Result};
use crate::linalg::{cr, DMat, DVec, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

/// Qutrit level labels.
pub const G: usize = 0;
pub const E: usize = 1;
pub const F: usize = 2;

/// Hardware parameters shared by every drive setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub omega_e: [f64; 2],
    pub omega_f: [f64; 2],
    pub omega_r: f64,
    pub g_r: f64,
    pub kappa: f64,
    pub fock_cutoff: usize,
}

impl Default for Hardware {
    fn default() -> Self {
        Self { omega_e: [10.0, 10.0], omega_f: [15.0, 15.0], omega_r: 10.0, g_r: 0.1, kappa: 0.0, fock_cutoff: 3 }
    }
}

/// Parameters of the effective four-level Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub xi_detuning: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl EffectiveParams {
    /// Parameters realizing `q·Γ` for a Cartesian `q`.
    pub fn from_q(q: &[f64; 5]) -> Self {
        Self {
            xi_detuning: q[3],
            lambda1: q[1].hypot(q[2]),
            lambda2: q[0].hypot(q[4]),
            phi1: q[2].atan2(q[1]),
            phi2: q[4].atan2(q[0]),
        }
    }

    /// `q = (Λ₂cosφ₂, Λ₁cosφ₁, Λ₁sinφ₁, Ξ, Λ₂sinφ₂)`.
    pub fn q(&self) -> [f64; 5] {
        [
            self.lambda2 * self.phi2.cos(),
            self.lambda1 * self.phi1.cos(),
            self.lambda1 * self.phi1.sin(),
            self.xi_detuning,
            self.lambda2 * self.phi2.sin(),
        ]
    }
}

/// How drive frequencies are derived from the effective parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriveRule {
    /// Resonant with the numerically dressed levels, detuned so that `|fg0⟩, |gf0⟩`
    /// sit at `+Ξ` and `|1±⟩` at `−Ξ`; amplitudes corrected by the dressed matrix elements.
    #[default]
    Dressed,
    /// `ξ₁,₂ = ω_f1 − ω_e + 2Ξ ± g_r/√2`, `ξ₃,₄ = ω_f2 − ω_e + 2Ξ ∓ g_r/√2`, `λ = √2Λ`.
    Quoted,
}

/// Full configuration: hardware, four drives and the detuning Ξ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqedConfig {
    #[serde(flatten)]
    pub hardware: Hardware,
    pub lambda: [f64; 4],
    pub xi: [f64; 4],
    pub phi: [f64; 4],
    #[serde(rename = "Xi")]
    pub xi_detuning: f64,
    /// Effective coupling per unit drive amplitude, `Λ = λ·η`.
    #[serde(default = "ideal_coupling")]
    pub coupling_factor: [f64; 4],
}

fn ideal_coupling() -> [f64; 4] {
    [FRAC_1_SQRT_2; 4]
}

impl CqedConfig {
    /// Derives the four drives realizing `params`, with warnings for weak-drive violations.
    pub fn with_drives(hardware: Hardware, params: EffectiveParams, rule: DriveRule) -> Result<(Self, Vec<String>)> {
        validate_hardware(&hardware)?;
        let (lambda, xi, phi, coupling_factor) = match rule {
            DriveRule::Quoted => {
                let we = hardware.omega_e[0];
                let s = hardware.g_r * FRAC_1_SQRT_2;
                let base1 = hardware.omega_f[0] - we + 2.0 * params.xi_detuning;
                let base2 = hardware.omega_f[1] - we + 2.0 * params.xi_detuning;
                (
                    [SQRT_2 * params.lambda1, SQRT_2 * params.lambda2, SQRT_2 * params.lambda2, SQRT_2 * params.lambda1],
                    [base1 + s, base1 - s, base2 - s, base2 + s],
                    [-params.phi1, PI - params.phi2, params.phi2, params.phi1],
                    ideal_coupling(),
                )
            }
            DriveRule::Dressed => lab::dressed_drives(&hardware, &params)?,
        };
        let cfg = Self { hardware, lambda, xi, phi, xi_detuning: params.xi_detuning, coupling_factor };
        let warnings = cfg.validate()?;
        Ok((cfg, warnings))
    }

    /// Checks the configuration; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        validate_hardware(&self.hardware)?;
        let all = self.lambda.iter().chain(&self.xi).chain(&self.phi).chain(std::iter::once(&self.xi_detuning));
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("drive parameters must be finite".into()));
        }
        if self.coupling_factor.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::InvalidInput("coupling factors must be positive".into()));
        }
        let mut warnings = Vec::new();
        for (m, &l) in self.lambda.iter().enumerate() {
            if l < 0.0 {
                return Err(Error::InvalidInput(format!("lambda[{}] must be >= 0", m + 1)));
            }
            if l > self.hardware.g_r / 10.0 {
                warnings.push(format!(
                    "lambda[{}] = {l} exceeds g_r/10 = {}; the effective model may not hold",
                    m + 1,
                    self.hardware.g_r / 10.0
                ));
            }
        }
        Ok(warnings)
    }

    /// Inverts the drive mapping back to effective parameters.
    pub fn effective_params(&self) -> Result<EffectiveParams> {
        let l: [f64; 4] = std::array::from_fn(|m| self.lambda[m] * self.coupling_factor[m]);
        let tol = 1e-9 * (1.0 + l.iter().cloned().fold(0.0, f64::max));
        let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
        let consistent = (l[0] - l[3]).abs() <= tol
            && (l[1] - l[2]).abs() <= tol
            && wrap(self.phi[3] + self.phi[0]).abs() <= 1e-9
            && wrap(self.phi[2] + self.phi[1] - PI).abs() <= 1e-9;
        if !consistent {
            return Err(Error::InvalidInput(
                "drives must pair as Lambda1 = Lambda4, Lambda2 = Lambda3, phi4 = -phi1, phi3 = pi - phi2".into(),
            ));
        }
        Ok(EffectiveParams { xi_detuning: self.xi_detuning, lambda1: l[0], lambda2: l[1], phi1: self.phi[3], phi2: self.phi[2] })
    }
}

fn validate_hardware(h: &Hardware) -> Result<()> {
    let vals = h.omega_e.iter().chain(&h.omega_f).chain([&h.omega_r, &h.g_r, &h.kappa]);
    if vals.into_iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("hardware parameters must be finite".into()));
    }
    if h.fock_cutoff < 2 {
        return Err(Error::InvalidInput(format!("fock_cutoff must be >= 2, got {}", h.fock_cutoff)));
    }
    if !(h.g_r > 0.0) || h.kappa < 0.0 {
        return Err(Error::InvalidInput("need g_r > 0 and kappa >= 0".into()));
    }
    Ok(())
}

/// Tensor space qutrit ⊗ qutrit ⊗ Fock(cutoff), index `(q1·3 + q2)·cutoff + n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Space {
    pub cutoff: usize,
}

impl Space {
    pub fn dim(&self) -> usize {
        9 * self.cutoff
    }

    pub fn index(&self, q1: usize, q2: usize, n: usize) -> usize {
        (q1 * 3 + q2) * self.cutoff + n
    }

    pub fn basis(&self, q1: usize, q2: usize, n: usize) -> DVec {
        let mut v = DVec::zeros(self.dim());
        v[self.index(q1, q2, n)] = cr(1.0);
        v
    }

    fn op(&self, f: impl Fn(usize, usize, usize) -> Vec<(usize, usize, usize, C64)>) -> DMat {
        let mut m = DMat::zeros(self.dim(), self.dim());
        for q1 in 0..3 {
            for q2 in 0..3 {
                for n in 0..self.cutoff {
                    for (a, b, k, amp) in f(q1, q2, n) {
                        if k < self.cutoff {
                            m[(self.index(a, b, k), self.index(q1, q2, n))] += amp;
                        }
                    }
                }
            }
        }
        m
    }

    /// Resonator annihilation operator.
    pub fn annihilation(&self) -> DMat {
        self.op(|a, b, n| if n > 0 { vec![(a, b, n - 1, cr((n as f64).sqrt()))] } else { vec![] })
    }

    /// `|g⟩⟨e| + √2|e⟩⟨f|` on qutrit `k` (0 or 1).
    pub fn qutrit_lowering(&self, k: usize) -> DMat {
        self.op(|a, b, n| {
            let level = if k == 0 { a } else { b };
            let set = |l: usize| if k == 0 { (l, b) } else { (a, l) };
            match level {
                E => {
                    let (x, y) = set(G);
                    vec![(x, y, n, cr(1.0))]
                }
                F => {
                    let (x, y) = set(E);
                    vec![(x, y, n, cr(SQRT_2))]
                }
                _ => vec![],
            }
        })
    }

    /// `|g⟩⟨e|` on qutrit `k`.
    pub fn qutrit_ge(&self, k: usize) -> DMat {
        self.op(|a, b, n| {
            let level = if k == 0 { a } else { b };
            if level == E {
                if k == 0 {
                    vec![(G, b, n, cr(1.0))]
                } else {
                    vec![(a, G, n, cr(1.0))]
                }
            } else {
                vec![]
            }
        })
    }

    /// Projector onto level `l` of qutrit `k`.
    pub fn qutrit_level(&self, k: usize, l: usize) -> DMat {
        self.op(|a, b, n| if (if k == 0 { a } else { b }) == l { vec![(a, b, n, cr(1.0))] } else { vec![] })
    }

    /// Ideal working-subspace states as columns `(|fg0⟩, |1₊⟩, |gf0⟩, |1₋⟩)`.
    pub fn working_basis(&self) -> DMat {
        let fg0 = self.basis(F, G, 0);
        let gf0 = self.basis(G, F, 0);
        let ge0 = self.basis(G, E, 0);
        let eg0 = self.basis(E, G, 0);
        let gg1 = self.basis(G, G, 1);
        let plus = (&ge0 + &eg0) * cr(0.5) + &gg1 * cr(FRAC_1_SQRT_2);
        let minus = (&ge0 + &eg0) * cr(0.5) - &gg1 * cr(FRAC_1_SQRT_2);
        DMat::from_columns(&[fg0, plus, gf0, minus])
    }

    /// Population of the highest Fock level.
    pub fn top_fock_population(&self, psi: &DVec) -> f64 {
        let n = self.cutoff - 1;
        (0..9).map(|qq| psi[qq * self.cutoff + n].norm_sqr()).sum()
    }

    pub fn top_fock_population_rho(&self, rho: &DMat) -> f64 {
        let n = self.cutoff - 1;
        (0..9).map(|qq| rho[(qq * self.cutoff + n, qq * self.cutoff + n)].re).sum()
    }
}
