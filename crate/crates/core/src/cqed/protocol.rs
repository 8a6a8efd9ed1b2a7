//! The four-step measurement protocol run in silico over the hypersphere grid.

use super::dynamics::{no_jump_evolve, postselect, SystemState, TrajectorySample};
use super::effective::{measured_kappa_ratio, DissipatorMode, EffectiveModel, OpenSystem, RestrictedModel};
use super::fit::{fit_eigenstates, subspace_fidelity, FitResult};
use super::{EffectiveParams, Hardware};
use crate::clifford::{build_hamiltonian, ParameterPoint};
use crate::error::{Error, Result};
use crate::geometry::{second_chern_field, ChernOptions, ChernResult, ConnectionKind, FnField, QuadratureGrid};
use crate::linalg::{c, expm, DMat, DVec, Mat4};
use crate::spectral::{eigensystem, upper_root, Band, MIN_GAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub r: f64,
    pub kappa: f64,
    pub grid: QuadratureGrid,
    pub band: Band,
    pub mode: DissipatorMode,
    /// Supplies `g_r` and the Fock cutoff; its loss rate is replaced by the matched value.
    pub hardware: Hardware,
    pub n_initial: usize,
    pub n_times: usize,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(r: f64, kappa: f64, grid: QuadratureGrid) -> Self {
        Self {
            r,
            kappa,
            grid,
            band: Band::Lower,
            mode: DissipatorMode::Secular,
            hardware: Hardware::default(),
            n_initial: 4,
            n_times: 6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub chern: ChernResult,
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
    /// Measured `κ_eff/κ` of the dissipator mode.
    pub kappa_ratio: f64,
    /// Resonator loss rate realizing the requested model `κ`.
    pub resonator_kappa: f64,
}

/// Samples and fit at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSimulation {
    pub samples: Vec<TrajectorySample>,
    pub fit: FitResult,
}

/// Random normalized initial states in `S`, padded with a zero `|gg0⟩` amplitude.
pub fn initial_states(n: usize, seed: u64) -> Vec<DVec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut v = DVec::from_fn(5, |i, _| if i < 4 { c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) } else { c(0.0, 0.0) });
            let nrm = v.norm();
            v /= c(nrm, 0.0);
            v
        })
        .collect()
}

/// Geometrically spaced times over `[0.05, 3]·(2π/|gap|)`, each followed by its `δ` partner.
pub fn sample_times(gap: f64, n_times: usize) -> (Vec<f64>, f64) {
    let period = 2.0 * PI / gap;
    let delta = period / 16.0;
    let n = n_times.max(2);
    let ratio = 60f64.powf(1.0 / (n - 1) as f64);
    let mut times = Vec::with_capacity(2 * n);
    for k in 0..n {
        let t = 0.05 * period * ratio.powi(k as i32);
        times.push(t);
        times.push(t + delta);
    }
    times.sort_by(f64::total_cmp);
    (times, delta)
}

/// Runs steps (1)–(4) at one model point: drive settings, no-jump evolution, postselection, fit.
pub fn simulate_point(base: &RestrictedModel, point: &ParameterPoint, kappa_ratio: f64, initial: &[DVec], n_times: usize) -> Result<PointSimulation> {
    let e = upper_root(point.squared_energy());
    let gap = 2.0 * e.norm();
    if gap < MIN_GAP {
        return Err(Error::OnEhs { gap });
    }
    let model = base.with_params(EffectiveParams::from_q(&point.q)).with_kappa(point.kappa / kappa_ratio);
    let (times, _) = sample_times(gap, n_times);
    let mut samples = Vec::with_capacity(initial.len() * times.len());
    if model.time_independent() {
        let h = model.nh_hamiltonian(0.0);
        let props: Vec<DMat> = times.iter().map(|&t| expm(&(&h * c(0.0, -t)))).collect();
        for (traj, psi0) in initial.iter().enumerate() {
            for (&t, u) in times.iter().zip(&props) {
                let s = SystemState { t, amplitudes: u * psi0 };
                samples.push(postselect(&model, &s, traj)?);
            }
        }
    } else {
        for (traj, psi0) in initial.iter().enumerate() {
            for s in no_jump_evolve(&model, psi0, &times)? {
                samples.push(postselect(&model, &s, traj)?);
            }
        }
    }
    let fit = fit_eigenstates(&samples)?;
    Ok(PointSimulation { samples, fit })
}

/// Second Chern number of the band reconstructed purely from fitted eigenstates.
pub fn protocol_chern(cfg: &ProtocolConfig) -> Result<ProtocolResult> {
    if !(cfg.r > 0.0) || !(cfg.kappa >= 0.0) || !cfg.r.is_finite() || !cfg.kappa.is_finite() {
        return Err(Error::InvalidInput(format!("need R > 0 and kappa >= 0, got R={}, kappa={}", cfg.r, cfg.kappa)));
    }
    if (cfg.r - cfg.kappa).abs() < 1e-3 {
        return Err(Error::TransitionPoint { r: cfg.r, kappa: cfg.kappa });
    }
    if cfg.n_initial < 4 {
        return Err(Error::InvalidInput("need at least 4 initial states".into()));
    }
    let hw = Hardware { kappa: 0.0, ..cfg.hardware };
    let placeholder = EffectiveParams { xi_detuning: 0.0, lambda1: 0.0, lambda2: 0.0, phi1: 0.0, phi2: 0.0 };
    let base = EffectiveModel::from_params(&hw, placeholder, cfg.mode)?.restrict();
    let kappa_ratio = measured_kappa_ratio(&hw, cfg.mode)?;
    if kappa_ratio <= 0.0 {
        return Err(Error::InvalidInput("dissipator produces no effective loss in S".into()));
    }
    let initial = initial_states(cfg.n_initial, cfg.seed);
    let (r, kappa, band, n_times) = (cfg.r, cfg.kappa, cfg.band, cfg.n_times);
    let point = |x: &[f64]| ParameterPoint::from_angles(r, x[0], x[1], x[2], x[3], kappa);
    let field = FnField {
        dim: 4,
        f: |x: &[f64]| -> Result<Mat4> {
            let sim = simulate_point(&base, &point(x), kappa_ratio, &initial, n_times)?;
            Ok(sim.fit.system.band(band).projector())
        },
    };
    let opts = ChernOptions { kind: ConnectionKind::Biorthogonal, band, max_refinements: 0, keep_samples: false };
    let chern = second_chern_field(&field, &cfg.grid, &opts)?;

    let [n1, n2, n3, n4] = cfg.grid.counts();
    let g = cfg.grid;
    let fidelities: Vec<f64> = (0..n1 * n2 * n3 * n4)
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let (i, rest) = (idx / (n2 * n3 * n4), idx % (n2 * n3 * n4));
            let (j, rest) = (rest / (n3 * n4), rest % (n3 * n4));
            let (k, l) = (rest / n4, rest % n4);
            let p = point(&[g.node(0, i), g.node(1, j), g.node(2, k), g.node(3, l)]);
            let sim = simulate_point(&base, &p, kappa_ratio, &initial, n_times)?;
            let exact = eigensystem(&build_hamiltonian(&p), MIN_GAP)?;
            Ok(subspace_fidelity(&sim.fit.system.band(band).right, &exact.band(band).right))
        })
        .collect::<Result<_>>()?;
    let mean_fidelity = fidelities.iter().sum::<f64>() / fidelities.len() as f64;
    let min_fidelity = fidelities.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ProtocolResult { chern, mean_fidelity, min_fidelity, kappa_ratio, resonator_kappa: kappa / kappa_ratio })
}
