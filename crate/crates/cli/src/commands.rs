//! Command bodies: each maps one config table to output tables.
//! Per-point numerical failures are collected instead of aborting the run.

use crate::config::{ChernConfig, CqedConfigSection, RunConfig, SpectrumConfig, WilsonConfig};
use crate::table::{DataTable, Row};
use nhyang::cqed::{
    dressed_energies, initial_states, measured_kappa_ratio, simulate_point, subspace_fidelity, CqedConfig, EffectiveModel,
};
use nhyang::spectral::{rotation_trace, RotationPlane, ScanSpec, MIN_GAP};
use nhyang::wilson::{min_wilson_vs_radius, moebius_permutation, moebius_transition, transport_expectations, wilson_scan};
use nhyang::{
    build_hamiltonian, eigensystem, moebius_wilson, protocol_chern, second_chern, validate_mapping, Band, ChernOptions,
    ParameterPoint, Permutation, ProtocolConfig,
};

/// Tables, warnings and per-point failures of one command.
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<DataTable>,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

impl Output {
    fn fail(&mut self, what: impl std::fmt::Display, err: impl std::fmt::Display) {
        self.failures.push(format!("{what}: {err}"));
    }
}

fn band_name(b: Band) -> &'static str {
    match b {
        Band::Upper => "upper",
        Band::Lower => "lower",
    }
}

fn plane_name(p: RotationPlane) -> &'static str {
    match p {
        RotationPlane::Q1Q2 => "q1q2",
        RotationPlane::Q1Q4 => "q1q4",
    }
}

fn permutation_name(p: Permutation) -> &'static str {
    match p {
        Permutation::Identity => "identity",
        Permutation::Swap => "swap",
    }
}

pub fn spectrum(cfg: &SpectrumConfig) -> Output {
    let mut out = Output::default();
    for (k, scan) in cfg.scans.iter().enumerate() {
        let name = scan.name.clone().unwrap_or_else(|| format!("scan{k}"));
        let spec = ScanSpec { axes: scan.axes.clone(), fixed: scan.fixed, min: scan.min, max: scan.max, points: scan.points };
        match nhyang::spectrum_scan(&spec, cfg.kappa) {
            Ok(t) => {
                let axes: Vec<String> = t.axes.iter().map(|a| format!("q{a}")).collect();
                let mut cols: Vec<&str> = axes.iter().map(String::as_str).collect();
                cols.extend(["e_plus~", "e_minus~", "gap"]);
                let mut table = DataTable::new(format!("spectrum_{name}"), &cols);
                for row in &t.rows {
                    let mut r = Row::new();
                    for &x in &row.coords {
                        r = r.num(x);
                    }
                    table.push(r.complex(row.e_plus).complex(row.e_minus).num(row.gap));
                }
                out.tables.push(table);
            }
            Err(e) => out.fail(format!("scan {name}"), e),
        }
    }
    if let Some(rot) = &cfg.rotations {
        let mut summary = DataTable::new("rotation_summary", &["plane", "r", "kappa", "permutation"]);
        for &plane in &rot.planes {
            for (i, &r) in rot.radii.iter().enumerate() {
                match rotation_trace(plane, r, cfg.kappa, rot.steps) {
                    Ok((angles, track)) => {
                        let mut table = DataTable::new(format!("rotation_{}_{i}", plane_name(plane)), &["angle", "branch0~", "branch1~"]);
                        for (a, e) in angles.iter().zip(&track.energies) {
                            table.push(Row::new().num(*a).complex(e[0]).complex(e[1]));
                        }
                        out.tables.push(table);
                        summary.push(Row::new().text(plane_name(plane)).num(r).num(cfg.kappa).text(permutation_name(track.permutation)));
                    }
                    Err(e) => out.fail(format!("rotation {} R = {r}", plane_name(plane)), e),
                }
            }
        }
        out.tables.push(summary);
    }
    out
}

pub fn chern(cfg: &ChernConfig) -> Output {
    let mut out = Output::default();
    let grid = match cfg.quadrature() {
        Ok(g) => g,
        Err(e) => {
            out.fail("chern.grid", e);
            return out;
        }
    };
    let opts = ChernOptions { kind: cfg.kind, band: cfg.band, max_refinements: cfg.max_refinements, keep_samples: false };
    let mut table = DataTable::new(
        "chern",
        &["r", "kappa", "band", "c2", "c2_imag", "defect", "refinements", "n_theta1", "n_theta2", "n_phi1", "n_phi2"],
    );
    for &r in &cfg.radii {
        match second_chern(r, cfg.kappa, &grid, &opts) {
            Ok(res) => {
                let n = res.grid.counts();
                table.push(
                    Row::new()
                        .num(r)
                        .num(cfg.kappa)
                        .text(band_name(cfg.band))
                        .num(res.c2)
                        .num(res.c2_imag)
                        .num(res.defect)
                        .int(res.refinements as i64)
                        .int(n[0] as i64)
                        .int(n[1] as i64)
                        .int(n[2] as i64)
                        .int(n[3] as i64),
                );
            }
            Err(e) => out.fail(format!("R = {r}"), e),
        }
    }
    out.tables.push(table);
    out
}

pub fn wilson(cfg: &WilsonConfig) -> Output {
    let mut out = Output::default();
    let opts = cfg.integrator.options();
    let kappa = cfg.kappa;
    if let Some(s) = &cfg.scan {
        match wilson_scan(s.radius, kappa, &s.grid(), &opts) {
            Ok(rows) => {
                let mut t = DataTable::new("wilson_scan", &["theta2", "w~", "w_closed_form~"]);
                for row in rows {
                    t.push(Row::new().num(row.theta2).complex(row.w).complex(row.w_closed_form));
                }
                out.tables.push(t);
            }
            Err(e) => out.fail(format!("wilson scan R = {}", s.radius), e),
        }
    }
    if let Some(m) = &cfg.min_vs_radius {
        let grid = m.grid();
        let mut t = DataTable::new("wilson_min", &["r", "min_re_w", "theta2_at_min"]);
        for &r in &m.radii {
            match min_wilson_vs_radius(kappa, &[r], &grid, &opts) {
                Ok(rows) => {
                    for row in rows {
                        t.push(Row::new().num(row.r).num(row.min_re_w).num(row.theta2_at_min));
                    }
                }
                Err(e) => out.fail(format!("min W at R = {r}"), e),
            }
        }
        out.tables.push(t);
    }
    if let Some(m) = &cfg.moebius {
        let mut t = DataTable::new("moebius_sweep", &["delta", "w~", "permutation"]);
        for &d in &m.deltas {
            let w = moebius_wilson(m.radius, d, kappa, &opts);
            let p = moebius_permutation(m.radius, d, kappa, m.permutation_steps);
            match (w, p) {
                (Ok(w), Ok(p)) => t.push(Row::new().num(d).complex(w).text(permutation_name(p))),
                (Err(e), _) | (_, Err(e)) => out.fail(format!("Moebius loop delta = {d}"), e),
            }
        }
        out.tables.push(t);
        if let Some([lo, hi]) = m.transition {
            match moebius_transition(m.radius, kappa, lo, hi, m.tolerance, &opts) {
                Ok(dc) => {
                    let mut t = DataTable::new("moebius_transition", &["r", "kappa", "delta_c", "r_plus_kappa", "tolerance"]);
                    t.push(Row::new().num(m.radius).num(kappa).num(dc).num(m.radius + kappa).num(m.tolerance));
                    out.tables.push(t);
                }
                Err(e) => out.fail(format!("Moebius transition in [{lo}, {hi}]"), e),
            }
        }
    }
    if let Some(tr) = &cfg.transport {
        let mut summary = DataTable::new("transport_summary", &["theta2", "index", "min_s2", "max_s2"]);
        for (i, &th) in tr.theta2.iter().enumerate() {
            match transport_expectations(tr.radius, kappa, th, tr.index, tr.steps) {
                Ok(series) => {
                    let mut t = DataTable::new(format!("transport_{i}"), &["phi", "sx", "sy", "sz", "s2"]);
                    for k in 0..series.phi.len() {
                        t.push(Row::new().num(series.phi[k]).num(series.sx[k]).num(series.sy[k]).num(series.sz[k]).num(series.s2[k]));
                    }
                    let min = series.s2.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = series.s2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    summary.push(Row::new().num(th).int(tr.index as i64).num(min).num(max));
                    out.tables.push(t);
                }
                Err(e) => out.fail(format!("transport theta2 = {th}"), e),
            }
        }
        out.tables.push(summary);
    }
    out
}

fn build_config(sec: &CqedConfigSection) -> nhyang::Result<(CqedConfig, Vec<String>)> {
    let hardware = sec.hardware.hardware();
    match &sec.drives {
        Some(d) => {
            let cfg = CqedConfig {
                hardware,
                lambda: d.lambda,
                xi: d.xi,
                phi: d.phi,
                xi_detuning: d.xi_detuning,
                coupling_factor: d.coupling_factor.unwrap_or([std::f64::consts::FRAC_1_SQRT_2; 4]),
            };
            let warnings = cfg.validate()?;
            Ok((cfg, warnings))
        }
        None => CqedConfig::with_drives(hardware, sec.drive.unwrap_or_default().params(), sec.drive_rule),
    }
}

pub fn cqed(sec: &CqedConfigSection, seed: u64) -> Output {
    let mut out = Output::default();
    let hw = sec.hardware.hardware();

    match dressed_energies(&hw) {
        Ok(levels) => {
            let mut t = DataTable::new("cqed_dressed", &["state", "energy"]);
            for (name, e) in ["fg0", "1+", "gf0", "1-"].iter().zip(levels.energies) {
                t.push(Row::new().text(*name).num(e));
            }
            out.tables.push(t);
        }
        Err(e) => out.fail("dressed levels", e),
    }

    let (cfg, warnings) = match build_config(sec) {
        Ok(x) => x,
        Err(e) => {
            out.fail("drive configuration", e);
            return out;
        }
    };
    out.warnings.extend(warnings);

    let mut drives = DataTable::new("cqed_drives", &["drive", "lambda", "xi", "phi", "coupling_factor"]);
    for m in 0..4 {
        drives.push(Row::new().int(m as i64 + 1).num(cfg.lambda[m]).num(cfg.xi[m]).num(cfg.phi[m]).num(cfg.coupling_factor[m]));
    }
    out.tables.push(drives);

    match validate_mapping(&cfg) {
        Ok(rep) => {
            let mut t = DataTable::new(
                "cqed_mapping",
                &[
                    "q1", "q2", "q3", "q4", "q5", "kappa_eff", "shift~", "residual", "residual_unreduced", "kappa_eff_unreduced",
                    "h_norm", "max_drive_detuning",
                ],
            );
            let mut row = Row::new();
            for x in rep.q {
                row = row.num(x);
            }
            t.push(
                row.num(rep.kappa_eff)
                    .complex(rep.shift)
                    .num(rep.residual)
                    .num(rep.residual_unreduced)
                    .num(rep.kappa_eff_unreduced)
                    .num(rep.h_norm)
                    .num(rep.max_drive_detuning),
            );
            out.tables.push(t);
            trajectories(sec, &cfg, rep.q, seed, &mut out);
        }
        Err(e) => out.fail("mapping", e),
    }

    if let Some(p) = &sec.protocol {
        let grid = match p.quadrature() {
            Ok(g) => g,
            Err(e) => {
                out.fail("cqed.protocol.grid", e);
                return out;
            }
        };
        let pc = ProtocolConfig {
            r: p.radius,
            kappa: p.kappa,
            grid,
            band: p.band,
            mode: sec.mode,
            hardware: hw,
            n_initial: p.n_initial,
            n_times: p.n_times,
            seed,
        };
        match protocol_chern(&pc) {
            Ok(res) => {
                let mut t = DataTable::new(
                    "cqed_protocol",
                    &["r", "kappa", "band", "c2", "c2_imag", "mean_fidelity", "min_fidelity", "kappa_ratio", "resonator_kappa"],
                );
                t.push(
                    Row::new()
                        .num(p.radius)
                        .num(p.kappa)
                        .text(band_name(p.band))
                        .num(res.chern.c2)
                        .num(res.chern.c2_imag)
                        .num(res.mean_fidelity)
                        .num(res.min_fidelity)
                        .num(res.kappa_ratio)
                        .num(res.resonator_kappa),
                );
                out.tables.push(t);
            }
            Err(e) => out.fail(format!("protocol R = {}", p.radius), e),
        }
    }
    out
}

fn trajectories(sec: &CqedConfigSection, cfg: &CqedConfig, q: [f64; 5], seed: u64, out: &mut Output) {
    let run = || -> nhyang::Result<(DataTable, DataTable)> {
        let ratio = measured_kappa_ratio(&cfg.hardware, sec.mode)?;
        let base = EffectiveModel::new(cfg, sec.mode)?.restrict();
        let point = ParameterPoint::cartesian(q, cfg.hardware.kappa * ratio)?;
        let initial = initial_states(sec.trajectory.n_initial, seed);
        let sim = simulate_point(&base, &point, ratio, &initial, sec.trajectory.n_times)?;
        let mut traj = DataTable::new("cqed_trajectories", &["trajectory", "t", "c_fg0~", "c_1plus~", "c_gf0~", "c_1minus~", "discarded"]);
        for s in &sim.samples {
            let mut row = Row::new().int(s.trajectory as i64).num(s.t);
            for k in 0..4 {
                row = row.complex(s.state[k]);
            }
            traj.push(row.num(s.discarded));
        }
        let exact = eigensystem(&build_hamiltonian(&point), MIN_GAP)?;
        let mut fit = DataTable::new("cqed_fit", &["band", "energy~", "exact_energy~", "fidelity", "residual", "null_gap", "sample_condition"]);
        for band in [Band::Upper, Band::Lower] {
            let f = sim.fit.system.band(band);
            let x = exact.band(band);
            fit.push(
                Row::new()
                    .text(band_name(band))
                    .complex(f.energy)
                    .complex(x.energy)
                    .num(subspace_fidelity(&f.right, &x.right))
                    .num(sim.fit.residual)
                    .num(sim.fit.null_gap)
                    .num(sim.fit.sample_condition),
            );
        }
        Ok((traj, fit))
    };
    match run() {
        Ok((traj, fit)) => {
            out.tables.push(traj);
            out.tables.push(fit);
        }
        Err(e) => out.fail("trajectories", e),
    }
}

/// Runs the named command on its config table.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<Output, String> {
    let missing = || format!("config has no [{command}] table");
    match command {
        "spectrum" => Ok(spectrum(cfg.spectrum.as_ref().ok_or_else(missing)?)),
        "chern" => Ok(chern(cfg.chern.as_ref().ok_or_else(missing)?)),
        "wilson" => Ok(wilson(cfg.wilson.as_ref().ok_or_else(missing)?)),
        "cqed" => Ok(cqed(cfg.cqed.as_ref().ok_or_else(missing)?, cfg.seed)),
        _ => Err(format!("unknown command {command}")),
    }
}
