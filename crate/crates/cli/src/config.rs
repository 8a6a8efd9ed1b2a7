//! TOML run configuration. One table per command; unknown keys are rejected.

use nhyang::cqed::{DissipatorMode, DriveRule, EffectiveParams, Hardware};
use nhyang::geometry::ConnectionKind;
use nhyang::spectral::RotationPlane;
use nhyang::{Band, QuadratureGrid};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// A configuration problem, located by line (parse errors) or by field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: Some(field.into()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "field `{field}`: {}", self.message),
            None => write!(f, "{}", self.message.trim_end()),
        }
    }
}

impl std::error::Error for ConfigError {}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every randomized step (cqed initial states).
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chern: Option<ChernConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wilson: Option<WilsonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cqed: Option<CqedConfigSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError { field: None, message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { field: None, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::from_toml(&text).map_err(|e| match e.field {
            Some(_) => e,
            None => ConfigError { field: None, message: format!("{}: {}", path.display(), e.message) },
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(s) = &self.spectrum {
            s.validate()?;
        }
        if let Some(c) = &self.chern {
            c.validate()?;
        }
        if let Some(w) = &self.wilson {
            w.validate()?;
        }
        if let Some(q) = &self.cqed {
            q.validate()?;
        }
        Ok(())
    }

    /// The configuration reduced to the seed and one command's table.
    pub fn section_only(&self, command: &str) -> RunConfig {
        RunConfig {
            seed: self.seed,
            spectrum: if command == "spectrum" { self.spectrum.clone() } else { None },
            chern: if command == "chern" { self.chern.clone() } else { None },
            wilson: if command == "wilson" { self.wilson.clone() } else { None },
            cqed: if command == "cqed" { self.cqed.clone() } else { None },
        }
    }
}

fn finite(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::field(field, format!("must be finite, got {x}")))
    }
}

fn non_negative(field: &str, x: f64) -> Result<(), ConfigError> {
    finite(field, x)?;
    if x < 0.0 {
        return Err(ConfigError::field(field, format!("must be >= 0, got {x}")));
    }
    Ok(())
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    finite(field, x)?;
    if x <= 0.0 {
        return Err(ConfigError::field(field, format!("must be > 0, got {x}")));
    }
    Ok(())
}

fn non_empty<T>(field: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(ConfigError::field(field, "must not be empty"));
    }
    Ok(())
}

fn away_from_kappa(field: &str, r: f64, kappa: f64) -> Result<(), ConfigError> {
    if (r - kappa).abs() < 1e-3 {
        return Err(ConfigError::field(field, format!("radius {r} is within 1e-3 of kappa {kappa}")));
    }
    Ok(())
}

fn grid(field: &str, counts: [usize; 4], fd_step: f64) -> Result<QuadratureGrid, ConfigError> {
    QuadratureGrid::new(counts[0], counts[1], counts[2], counts[3], fd_step).map_err(|e| ConfigError::field(field, e.to_string()))
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Gain/loss strength (energy units).
    pub kappa: f64,
    #[serde(default)]
    pub scans: Vec<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<RotationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// 1-based indices of the scanned q components (two or three of 1, 2, 3, 5).
    pub axes: Vec<usize>,
    #[serde(default)]
    pub fixed: [f64; 5],
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

fn default_rotation_steps() -> usize {
    400
}

fn all_planes() -> Vec<RotationPlane> {
    vec![RotationPlane::Q1Q2, RotationPlane::Q1Q4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    pub radii: Vec<f64>,
    #[serde(default = "default_rotation_steps")]
    pub steps: usize,
    #[serde(default = "all_planes")]
    pub planes: Vec<RotationPlane>,
}

impl SpectrumConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        non_negative("spectrum.kappa", self.kappa)?;
        if self.scans.is_empty() && self.rotations.is_none() {
            return Err(ConfigError::field("spectrum", "needs at least one [[spectrum.scans]] entry or a [spectrum.rotations] table"));
        }
        for (i, s) in self.scans.iter().enumerate() {
            let p = format!("spectrum.scans[{i}]");
            if !(2..=3).contains(&s.axes.len()) {
                return Err(ConfigError::field(format!("{p}.axes"), "needs two or three axes"));
            }
            if s.axes.iter().any(|&a| !matches!(a, 1 | 2 | 3 | 5)) {
                return Err(ConfigError::field(format!("{p}.axes"), "axes are 1-based q indices from {1, 2, 3, 5}"));
            }
            finite(&format!("{p}.min"), s.min)?;
            finite(&format!("{p}.max"), s.max)?;
            if s.max <= s.min {
                return Err(ConfigError::field(format!("{p}.max"), "must exceed min"));
            }
            if s.points < 2 {
                return Err(ConfigError::field(format!("{p}.points"), "must be >= 2"));
            }
            for (k, x) in s.fixed.iter().enumerate() {
                finite(&format!("{p}.fixed[{k}]"), *x)?;
            }
        }
        if let Some(r) = &self.rotations {
            non_empty("spectrum.rotations.radii", &r.radii)?;
            for (i, x) in r.radii.iter().enumerate() {
                non_negative(&format!("spectrum.rotations.radii[{i}]"), *x)?;
            }
            if r.steps < 4 {
                return Err(ConfigError::field("spectrum.rotations.steps", "must be >= 4"));
            }
            non_empty("spectrum.rotations.planes", &r.planes)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- chern

fn default_counts() -> [usize; 4] {
    [24; 4]
}

fn default_chern_fd() -> f64 {
    1e-4
}

fn lower() -> Band {
    Band::Lower
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChernConfig {
    pub kappa: f64,
    pub radii: Vec<f64>,
    /// Midpoint counts along (θ₁, θ₂, φ₁, φ₂).
    #[serde(default = "default_counts")]
    pub grid: [usize; 4],
    /// Finite-difference step (rad).
    #[serde(default = "default_chern_fd")]
    pub fd_step: f64,
    #[serde(default = "lower")]
    pub band: Band,
    #[serde(default)]
    pub kind: ConnectionKind,
    #[serde(default)]
    pub max_refinements: usize,
}

impl ChernConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        non_negative("chern.kappa", self.kappa)?;
        non_empty("chern.radii", &self.radii)?;
        for (i, &r) in self.radii.iter().enumerate() {
            let f = format!("chern.radii[{i}]");
            positive(&f, r)?;
            away_from_kappa(&f, r, self.kappa)?;
        }
        self.quadrature()?;
        Ok(())
    }

    pub fn quadrature(&self) -> Result<QuadratureGrid, ConfigError> {
        grid("chern.grid", self.grid, self.fd_step)
    }
}

// ---------------------------------------------------------------- wilson

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub initial_steps: usize,
    pub tol: f64,
    pub max_halvings: usize,
    pub fd_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = nhyang::wilson::HolonomyOptions::default();
        Self { initial_steps: d.initial_steps, tol: d.tol, max_halvings: d.max_halvings, fd_step: d.fd_step }
    }
}

impl IntegratorConfig {
    pub fn options(&self) -> nhyang::wilson::HolonomyOptions {
        nhyang::wilson::HolonomyOptions {
            kind: None,
            initial_steps: self.initial_steps,
            tol: self.tol,
            max_halvings: self.max_halvings,
            fd_step: self.fd_step,
        }
    }
}

fn default_theta2_points() -> usize {
    51
}

fn default_min_points() -> usize {
    41
}

fn default_permutation_steps() -> usize {
    400
}

fn default_transition_tol() -> f64 {
    1e-4
}

fn default_transport_steps() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilsonConfig {
    pub kappa: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<WilsonScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_vs_radius: Option<MinWilsonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moebius: Option<MoebiusConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilsonScanConfig {
    pub radius: f64,
    /// Points on θ₂ ∈ [0, π], endpoints included.
    #[serde(default = "default_theta2_points")]
    pub theta2_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinWilsonConfig {
    pub radii: Vec<f64>,
    #[serde(default = "default_min_points")]
    pub theta2_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoebiusConfig {
    pub radius: f64,
    pub deltas: Vec<f64>,
    #[serde(default = "default_permutation_steps")]
    pub permutation_steps: usize,
    /// Bracket `[lo, hi]` searched for the jump of W.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<[f64; 2]>,
    #[serde(default = "default_transition_tol")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub radius: f64,
    pub theta2: Vec<f64>,
    #[serde(default = "default_transport_steps")]
    pub steps: usize,
    /// Which lower eigenstate starts the transport (0 or 1).
    #[serde(default)]
    pub index: usize,
}

fn theta2_grid(field: &str, n: usize) -> Result<Vec<f64>, ConfigError> {
    match n {
        0 => Err(ConfigError::field(field, "must be >= 1")),
        1 => Ok(vec![std::f64::consts::FRAC_PI_2]),
        _ => Ok((0..n).map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64).collect()),
    }
}

impl WilsonScanConfig {
    pub fn grid(&self) -> Vec<f64> {
        theta2_grid("", self.theta2_points).unwrap_or_default()
    }
}

impl MinWilsonConfig {
    pub fn grid(&self) -> Vec<f64> {
        theta2_grid("", self.theta2_points).unwrap_or_default()
    }
}

impl WilsonConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        non_negative("wilson.kappa", self.kappa)?;
        let i = &self.integrator;
        if i.initial_steps < 64 {
            return Err(ConfigError::field("wilson.integrator.initial_steps", "must be >= 64"));
        }
        positive("wilson.integrator.tol", i.tol)?;
        positive("wilson.integrator.fd_step", i.fd_step)?;
        if self.scan.is_none() && self.min_vs_radius.is_none() && self.moebius.is_none() && self.transport.is_none() {
            return Err(ConfigError::field("wilson", "needs at least one of scan, min_vs_radius, moebius, transport"));
        }
        if let Some(s) = &self.scan {
            non_negative("wilson.scan.radius", s.radius)?;
            away_from_kappa("wilson.scan.radius", s.radius, self.kappa)?;
            theta2_grid("wilson.scan.theta2_points", s.theta2_points)?;
        }
        if let Some(m) = &self.min_vs_radius {
            non_empty("wilson.min_vs_radius.radii", &m.radii)?;
            for (k, &r) in m.radii.iter().enumerate() {
                let f = format!("wilson.min_vs_radius.radii[{k}]");
                positive(&f, r)?;
                away_from_kappa(&f, r, self.kappa)?;
            }
            theta2_grid("wilson.min_vs_radius.theta2_points", m.theta2_points)?;
        }
        if let Some(m) = &self.moebius {
            non_negative("wilson.moebius.radius", m.radius)?;
            non_empty("wilson.moebius.deltas", &m.deltas)?;
            for (k, &d) in m.deltas.iter().enumerate() {
                finite(&format!("wilson.moebius.deltas[{k}]"), d)?;
            }
            if m.permutation_steps < 8 {
                return Err(ConfigError::field("wilson.moebius.permutation_steps", "must be >= 8"));
            }
            if let Some([lo, hi]) = m.transition {
                finite("wilson.moebius.transition", lo)?;
                finite("wilson.moebius.transition", hi)?;
                if hi <= lo {
                    return Err(ConfigError::field("wilson.moebius.transition", "bracket must be [lo, hi] with lo < hi"));
                }
            }
            positive("wilson.moebius.tolerance", m.tolerance)?;
        }
        if let Some(t) = &self.transport {
            positive("wilson.transport.radius", t.radius)?;
            if t.radius <= self.kappa {
                return Err(ConfigError::field("wilson.transport.radius", "transport needs radius > kappa"));
            }
            non_empty("wilson.transport.theta2", &t.theta2)?;
            if t.steps < 64 {
                return Err(ConfigError::field("wilson.transport.steps", "must be >= 64"));
            }
            if t.index > 1 {
                return Err(ConfigError::field("wilson.transport.index", "must be 0 or 1"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- cqed

/// Hardware block; omitted keys take the default device values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareConfig {
    pub omega_e: [f64; 2],
    pub omega_f: [f64; 2],
    pub omega_r: f64,
    pub g_r: f64,
    /// Resonator single-photon loss rate.
    pub kappa: f64,
    pub fock_cutoff: usize,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        let h = Hardware::default();
        Self { omega_e: h.omega_e, omega_f: h.omega_f, omega_r: h.omega_r, g_r: h.g_r, kappa: h.kappa, fock_cutoff: h.fock_cutoff }
    }
}

impl HardwareConfig {
    pub fn hardware(&self) -> Hardware {
        Hardware {
            omega_e: self.omega_e,
            omega_f: self.omega_f,
            omega_r: self.omega_r,
            g_r: self.g_r,
            kappa: self.kappa,
            fock_cutoff: self.fock_cutoff,
        }
    }
}

/// Target effective parameters; drive settings are derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffectiveDrive {
    #[serde(rename = "Xi")]
    pub xi_detuning: f64,
    #[serde(rename = "Lambda1")]
    pub lambda1: f64,
    #[serde(rename = "Lambda2")]
    pub lambda2: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl Default for EffectiveDrive {
    fn default() -> Self {
        Self { xi_detuning: 0.002, lambda1: 0.003, lambda2: 0.0024, phi1: 0.3, phi2: -1.1 }
    }
}

impl EffectiveDrive {
    pub fn params(&self) -> EffectiveParams {
        EffectiveParams {
            xi_detuning: self.xi_detuning,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            phi1: self.phi1,
            phi2: self.phi2,
        }
    }
}

/// Four explicit drives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitDrives {
    pub lambda: [f64; 4],
    pub xi: [f64; 4],
    pub phi: [f64; 4],
    #[serde(rename = "Xi")]
    pub xi_detuning: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_factor: Option<[f64; 4]>,
}

fn default_n_initial() -> usize {
    4
}

fn default_n_times() -> usize {
    6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(default = "default_n_initial")]
    pub n_initial: usize,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { n_initial: default_n_initial(), n_times: default_n_times() }
    }
}

fn default_protocol_counts() -> [usize; 4] {
    [8; 4]
}

fn default_protocol_fd() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub radius: f64,
    /// Effective gain/loss of the four-level model.
    pub kappa: f64,
    #[serde(default = "default_protocol_counts")]
    pub grid: [usize; 4],
    #[serde(default = "default_protocol_fd")]
    pub fd_step: f64,
    #[serde(default = "lower")]
    pub band: Band,
    #[serde(default = "default_n_initial")]
    pub n_initial: usize,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
}

impl ProtocolSection {
    pub fn quadrature(&self) -> Result<QuadratureGrid, ConfigError> {
        grid("cqed.protocol.grid", self.grid, self.fd_step)
    }
}

fn secular() -> DissipatorMode {
    DissipatorMode::Secular
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqedConfigSection {
    #[serde(default)]
    pub drive_rule: DriveRule,
    /// Dissipator used for trajectories, fits and the protocol.
    #[serde(default = "secular")]
    pub mode: DissipatorMode,
    #[serde(default)]
    pub hardware: HardwareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<EffectiveDrive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drives: Option<ExplicitDrives>,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
}

impl CqedConfigSection {
    fn validate(&self) -> Result<(), ConfigError> {
        let h = &self.hardware;
        for (name, v) in [("omega_r", h.omega_r), ("omega_e[0]", h.omega_e[0]), ("omega_e[1]", h.omega_e[1]), ("omega_f[0]", h.omega_f[0]), ("omega_f[1]", h.omega_f[1])] {
            finite(&format!("cqed.hardware.{name}"), v)?;
        }
        positive("cqed.hardware.g_r", h.g_r)?;
        non_negative("cqed.hardware.kappa", h.kappa)?;
        if h.fock_cutoff < 2 {
            return Err(ConfigError::field("cqed.hardware.fock_cutoff", format!("must be >= 2, got {}", h.fock_cutoff)));
        }
        if self.drive.is_some() && self.drives.is_some() {
            return Err(ConfigError::field("cqed.drives", "give either [cqed.drive] or [cqed.drives], not both"));
        }
        if let Some(d) = &self.drive {
            for (name, v) in [("Xi", d.xi_detuning), ("phi1", d.phi1), ("phi2", d.phi2)] {
                finite(&format!("cqed.drive.{name}"), v)?;
            }
            non_negative("cqed.drive.Lambda1", d.lambda1)?;
            non_negative("cqed.drive.Lambda2", d.lambda2)?;
        }
        if let Some(d) = &self.drives {
            for k in 0..4 {
                non_negative(&format!("cqed.drives.lambda[{k}]"), d.lambda[k])?;
                finite(&format!("cqed.drives.xi[{k}]"), d.xi[k])?;
                finite(&format!("cqed.drives.phi[{k}]"), d.phi[k])?;
                if let Some(c) = d.coupling_factor {
                    positive(&format!("cqed.drives.coupling_factor[{k}]"), c[k])?;
                }
            }
            finite("cqed.drives.Xi", d.xi_detuning)?;
        }
        if self.trajectory.n_initial < 4 {
            return Err(ConfigError::field("cqed.trajectory.n_initial", "must be >= 4"));
        }
        if self.trajectory.n_times < 4 {
            return Err(ConfigError::field("cqed.trajectory.n_times", "must be >= 4"));
        }
        if let Some(p) = &self.protocol {
            positive("cqed.protocol.radius", p.radius)?;
            non_negative("cqed.protocol.kappa", p.kappa)?;
            away_from_kappa("cqed.protocol.radius", p.radius, p.kappa)?;
            p.quadrature()?;
            if p.n_initial < 4 {
                return Err(ConfigError::field("cqed.protocol.n_initial", "must be >= 4"));
            }
            if p.n_times < 4 {
                return Err(ConfigError::field("cqed.protocol.n_times", "must be >= 4"));
            }
        }
        Ok(())
    }
}
