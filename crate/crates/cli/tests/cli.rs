use nhyang_cli::commands;
use nhyang_cli::config::RunConfig;
use nhyang_cli::table::DataTable;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nhyang(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhyang")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_cmd(cmd: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    nhyang(&args)
}

fn table<'a>(out: &'a commands::Output, name: &str) -> &'a DataTable {
    out.tables.iter().find(|t| t.name == name).unwrap_or_else(|| panic!("no table {name}"))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

const SPECTRUM: &str = r#"
[spectrum]
kappa = 1.0

[[spectrum.scans]]
name = "ring"
axes = [1, 2]
min = -2.0
max = 2.0
points = 81

[spectrum.rotations]
radii = [0.5, 1.5]
steps = 64
"#;

#[test]
fn spectrum_files_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SPECTRUM);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        let o = run_cmd("spectrum", &cfg, out, &["--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
    assert_eq!(fa.len(), 6);
    assert_eq!(fa, fb);
}

#[test]
fn every_file_carries_version_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SPECTRUM);
    for format in ["csv", "json"] {
        let out = dir.path().join(format);
        let o = run_cmd("spectrum", &cfg, &out, &["--format", format]);
        assert!(o.status.success());
        for (name, bytes) in dir_bytes(&out) {
            let text = String::from_utf8(bytes).unwrap();
            assert!(name.ends_with(format));
            if format == "csv" {
                assert!(text.starts_with(&format!("# nhyang {}\n", nhyang_cli::VERSION)));
                assert!(text.contains("#   kappa = 1.0"));
                assert!(text.contains("#   radii = [0.5, 1.5]"));
            } else {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["version"], nhyang_cli::VERSION);
                assert_eq!(v["command"], "spectrum");
                assert_eq!(v["config"]["spectrum"]["kappa"], 1.0);
                assert_eq!(v["config"]["seed"], 7);
                let cols = v["columns"].as_array().unwrap().len();
                assert!(v["rows"].as_array().unwrap().iter().all(|r| r.as_array().unwrap().len() == cols));
            }
        }
    }
}

#[test]
fn complex_columns_come_in_re_im_pairs() {
    let cfg = RunConfig::from_toml(SPECTRUM).unwrap();
    let out = commands::spectrum(cfg.spectrum.as_ref().unwrap());
    let t = table(&out, "spectrum_ring");
    assert_eq!(t.columns, ["q1", "q2", "e_plus_re", "e_plus_im", "e_minus_re", "e_minus_im", "gap"]);
    let r = table(&out, "rotation_q1q4_1");
    assert_eq!(r.columns, ["angle", "branch0_re", "branch0_im", "branch1_re", "branch1_im"]);
    assert_eq!(r.rows.len(), 65);
}

#[test]
fn ring_scan_gap_closes_on_unit_circle() {
    let cfg = RunConfig::from_toml(SPECTRUM).unwrap();
    let out = commands::spectrum(cfg.spectrum.as_ref().unwrap());
    let t = table(&out, "spectrum_ring");
    let h: f64 = 4.0 / 80.0;
    let (x, y, gap) = (t.values("q1").unwrap(), t.values("q2").unwrap(), t.values("gap").unwrap());
    // gap = 2 sqrt|r^2 - 1| < 2 sqrt(h(2 - h)) forces 1 - h < r < 1 + h.
    let thr = 2.0 * (h * (2.0 - h)).sqrt();
    let closing: Vec<f64> = (0..gap.len()).filter(|&i| gap[i] < thr).map(|i| x[i].hypot(y[i])).collect();
    assert!(closing.len() > 40, "{}", closing.len());
    for r in &closing {
        assert!((r - 1.0).abs() < h, "{r}");
    }
    let far = (0..gap.len()).filter(|&i| (x[i].hypot(y[i]) - 1.0).abs() > 2.0 * h).all(|i| gap[i] >= thr);
    assert!(far);
}

#[test]
fn hermitian_scan_closes_only_at_origin() {
    let cfg = RunConfig::from_toml(&SPECTRUM.replace("kappa = 1.0", "kappa = 0.0")).unwrap();
    let out = commands::spectrum(cfg.spectrum.as_ref().unwrap());
    let t = table(&out, "spectrum_ring");
    let (x, y, gap) = (t.values("q1").unwrap(), t.values("q2").unwrap(), t.values("gap").unwrap());
    let zero: Vec<usize> = (0..gap.len()).filter(|&i| gap[i] < 1e-12).collect();
    assert_eq!(zero.len(), 1);
    assert_eq!((x[zero[0]], y[zero[0]]), (0.0, 0.0));
}

#[test]
fn rotation_summary_lists_four_traces() {
    let cfg = RunConfig::from_toml(SPECTRUM).unwrap();
    let out = commands::spectrum(cfg.spectrum.as_ref().unwrap());
    let s = table(&out, "rotation_summary");
    assert_eq!(s.rows.len(), 4);
    let inner = table(&out, "rotation_q1q2_0");
    // Inside the EHS the {q1, q2} rotation keeps the spectrum purely imaginary.
    assert!(inner.values("branch0_re").unwrap().iter().all(|x| x.abs() < 1e-12));
    let outer = table(&out, "rotation_q1q2_1");
    assert!(outer.values("branch0_im").unwrap().iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn chern_plateaus_and_hermitian_point() {
    let cfg = RunConfig::from_toml(
        r#"
        [chern]
        kappa = 1.0
        radii = [0.25, 0.5, 2.0, 4.0]
        grid = [16, 16, 16, 16]
        "#,
    )
    .unwrap();
    let out = commands::chern(cfg.chern.as_ref().unwrap());
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let c2 = table(&out, "chern").values("c2").unwrap();
    for (got, want) in c2.iter().zip([0.0, 0.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 0.02, "{c2:?}");
    }
    let defect = table(&out, "chern").values("defect").unwrap();
    for (d, c) in defect.iter().zip(&c2) {
        assert!((d - (c - c.round()).abs()).abs() < 1e-15);
    }

    let cfg = RunConfig::from_toml("[chern]\nkappa = 0.0\nradii = [1.0]\ngrid = [16, 16, 16, 16]\n").unwrap();
    let out = commands::chern(cfg.chern.as_ref().unwrap());
    let c2 = table(&out, "chern").values("c2").unwrap();
    assert!((c2[0] - 1.0).abs() < 0.02, "{c2:?}");
}

#[test]
fn unconverged_point_gives_partial_failure_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[chern]\nkappa = 1.0\nradii = [3.0, 1.05]\ngrid = [8, 8, 8, 8]\nmax_refinements = 1\n",
    );
    let out = dir.path().join("o");
    let o = run_cmd("chern", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(nhyang_cli::EXIT_PARTIAL));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("R = 1.05"), "{stderr}");
    let text = fs::read_to_string(out.join("chern.csv")).unwrap();
    assert!(text.contains("# failure: R = 1.05"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2);
    assert!(data[1].starts_with("3.0,"));
}

#[test]
fn empty_radius_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[chern]\nkappa = 1.0\nradii = []\n");
    let o = run_cmd("chern", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(nhyang_cli::EXIT_ERROR));
    assert!(String::from_utf8_lossy(&o.stderr).contains("field `chern.radii`: must not be empty"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn radius_at_kappa_is_rejected() {
    let err = RunConfig::from_toml("[chern]\nkappa = 1.0\nradii = [0.5, 1.0]\n").unwrap_err();
    assert_eq!(err.field.as_deref(), Some("chern.radii[1]"));
}

#[test]
fn malformed_configs_report_location() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("[cqed]\nmode = \"secular\"\nbogus = 1\n", "bogus"),
        ("[cqed.hardware]\ng_r = \"strong\"\n", "g_r"),
        ("[cqed.hardware]\ng_r = -0.1\n", "field `cqed.hardware.g_r`"),
        ("[cqed]\nmode = \"sideways\"\n", "sideways"),
        ("[cqed\n", "line 1"),
    ];
    for (text, needle) in cases {
        let cfg = write_config(dir.path(), "bad.toml", text);
        let o = run_cmd("cqed", &cfg, &dir.path().join("o"), &[]);
        assert_eq!(o.status.code(), Some(nhyang_cli::EXIT_ERROR), "{text}");
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert!(stderr.contains(needle), "{text}: {stderr}");
    }
    let err = RunConfig::from_toml("[cqed]\nbogus = 1\n").unwrap_err();
    assert!(err.message.contains("line 2"), "{}", err.message);
}

#[test]
fn missing_section_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SPECTRUM);
    let o = run_cmd("chern", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(nhyang_cli::EXIT_ERROR));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[chern]"));
    let o = run_cmd("spectrum", &cfg, &dir.path().join("o"), &["--format", "xml"]);
    assert_eq!(o.status.code(), Some(nhyang_cli::EXIT_USAGE));
    let o = nhyang(&["spectrum"]);
    assert_eq!(o.status.code(), Some(nhyang_cli::EXIT_USAGE));
    let o = run_cmd("spectrum", "/nonexistent/cfg.toml", &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(nhyang_cli::EXIT_ERROR));
}

#[test]
fn wilson_endpoints_and_transition() {
    let cfg = RunConfig::from_toml(
        r#"
        [wilson]
        kappa = 1.0
        [wilson.scan]
        radius = 2.0
        theta2_points = 3
        [wilson.moebius]
        radius = 1.0
        deltas = [0.5, 3.0]
        transition = [1.0, 3.0]
        tolerance = 1e-4
        "#,
    )
    .unwrap();
    let out = commands::wilson(cfg.wilson.as_ref().unwrap());
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let w = table(&out, "wilson_scan").values("w_re").unwrap();
    assert!((w[0] + 2.0).abs() < 1e-3 && (w[1] - 2.0).abs() < 1e-3 && (w[2] + 2.0).abs() < 1e-3, "{w:?}");
    let m = table(&out, "moebius_sweep");
    let wm = m.values("w_re").unwrap();
    assert!((wm[0] + 2.0).abs() < 0.01 && (wm[1] - 2.0).abs() < 0.01, "{wm:?}");
    let perm: Vec<_> = m.rows.iter().map(|r| r[3].clone()).collect();
    assert_eq!(perm, [nhyang_cli::table::Value::Text("swap".into()), nhyang_cli::table::Value::Text("identity".into())]);
    let dc = table(&out, "moebius_transition").values("delta_c").unwrap()[0];
    assert!((dc - 2.0).abs() < 1e-3, "{dc}");
}

#[test]
fn wilson_min_and_transport_tables() {
    let cfg = RunConfig::from_toml(
        r#"
        [wilson]
        kappa = 1.0
        [wilson.min_vs_radius]
        radii = [0.5, 2.0]
        theta2_points = 11
        [wilson.transport]
        radius = 2.0
        theta2 = [0.0, 0.7853981633974483]
        steps = 128
        "#,
    )
    .unwrap();
    let out = commands::wilson(cfg.wilson.as_ref().unwrap());
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let min = table(&out, "wilson_min").values("min_re_w").unwrap();
    assert!(min[0] > -1.0 && (min[1] + 2.0).abs() < 0.01, "{min:?}");
    let t0 = table(&out, "transport_0");
    assert_eq!(t0.rows.len(), 129);
    assert!(t0.values("s2").unwrap().iter().all(|s| (s - 1.0).abs() < 1e-6));
    assert_eq!(table(&out, "transport_summary").rows.len(), 2);
}

const CQED: &str = r#"
seed = 3

[cqed]
[cqed.hardware]
kappa = 0.004
"#;

#[test]
fn default_cqed_config_maps_and_fits() {
    let cfg = RunConfig::from_toml(CQED).unwrap();
    let out = commands::cqed(cfg.cqed.as_ref().unwrap(), cfg.seed);
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert!(out.warnings.is_empty(), "{:?}", out.warnings);
    let m = table(&out, "cqed_mapping");
    let res = m.values("residual").unwrap()[0];
    let norm = m.values("h_norm").unwrap()[0];
    assert!(res < 1e-3 * norm, "{res} vs {norm}");
    assert!((m.values("kappa_eff").unwrap()[0] - 0.0005).abs() < 1e-12);
    let fid = table(&out, "cqed_fit").values("fidelity").unwrap();
    assert!(fid.iter().all(|f| *f > 0.999), "{fid:?}");
    let traj = table(&out, "cqed_trajectories");
    assert_eq!(traj.rows.len(), 4 * 12);
    assert_eq!(table(&out, "cqed_dressed").rows.len(), 4);
    assert_eq!(table(&out, "cqed_drives").rows.len(), 4);
}

#[test]
fn lossless_cqed_has_zero_effective_loss() {
    let cfg = RunConfig::from_toml("[cqed]\n").unwrap();
    let out = commands::cqed(cfg.cqed.as_ref().unwrap(), cfg.seed);
    let m = table(&out, "cqed_mapping");
    assert_eq!(m.values("kappa_eff").unwrap()[0], 0.0);
    assert_eq!(m.values("kappa_eff_unreduced").unwrap()[0], 0.0);
}

#[test]
fn strong_drives_warn() {
    let cfg = RunConfig::from_toml("[cqed.drive]\nLambda1 = 0.02\nLambda2 = 0.001\n").unwrap();
    let out = commands::cqed(cfg.cqed.as_ref().unwrap(), cfg.seed);
    assert!(out.warnings.iter().any(|w| w.contains("g_r/10")), "{:?}", out.warnings);
}

#[test]
fn explicit_drives_must_pair() {
    let cfg = RunConfig::from_toml(
        r#"
        [cqed.drives]
        lambda = [0.004, 0.003, 0.002, 0.004]
        xi = [5.0, 5.0, 5.0, 5.0]
        phi = [0.1, 0.2, 0.3, -0.1]
        Xi = 0.0
        "#,
    )
    .unwrap();
    let out = commands::cqed(cfg.cqed.as_ref().unwrap(), cfg.seed);
    assert!(out.failures.iter().any(|f| f.starts_with("mapping")), "{:?}", out.failures);
    let both = RunConfig::from_toml("[cqed.drive]\n[cqed.drives]\nlambda=[0,0,0,0]\nxi=[0,0,0,0]\nphi=[0,0,0,0]\nXi=0\n");
    assert_eq!(both.unwrap_err().field.as_deref(), Some("cqed.drives"));
}

#[test]
fn cqed_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "q.toml", CQED);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_cmd("cqed", &cfg, out, &["--format", "json"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let other = write_config(dir.path(), "r.toml", &CQED.replace("seed = 3", "seed = 4"));
    let c = dir.path().join("c");
    run_cmd("cqed", &other, &c, &["--format", "json"]);
    let traj = |d: &Path| fs::read(d.join("cqed_trajectories.json")).unwrap();
    assert_ne!(traj(&a), traj(&c));
}

#[test]
fn config_round_trips_through_echo() {
    for text in [SPECTRUM, CQED] {
        let cfg = RunConfig::from_toml(text).unwrap();
        let echoed = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&echoed).unwrap(), cfg);
    }
}
