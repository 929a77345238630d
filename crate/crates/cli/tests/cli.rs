use std::path::Path;
use std::process::{Command, Output};

use microtensile::record::read_record;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_microtensile"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn monotonic_cu_record_analyzes_to_preset_uts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mono.csv");
    let json = dir.path().join("mono.json");
    ok(&["simulate", "--config", "cu-300nm-monotonic", "--out", s(&csv)]);
    assert!(dir.path().join("mono.meta.json").exists());
    let text = ok(&["analyze", s(&csv), "--out", s(&json)]);
    assert!(text.contains("UTS"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let uts = doc["report"]["uts"].as_f64().unwrap();
    assert!((uts / 575e6 - 1.0).abs() < 0.01, "{uts}");
    assert!(doc["report"]["note"].as_str().unwrap().contains("L0"));
}

#[test]
fn fatigue_anchor_config_fails_near_3300_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fat.csv");
    ok(&["simulate", "--config", "cu-300nm-fatigue-d2.7", "--out", s(&csv)]);
    let rec = read_record(&csv).unwrap();
    let o = rec.fatigue.unwrap();
    assert!(o.is_failure());
    assert!((3200..=3400).contains(&o.cycles_completed), "{o:?}");
}

#[test]
fn missing_config_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let out = bin(&["simulate", "--config", s(&dir.path().join("nope.toml")), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_errors_carry_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[geometry]\nthickness = \"300 nm\"\nthicknes = \"1 um\"\n").unwrap();
    let out = bin(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("thicknes"), "{err}");
}

#[test]
fn truncated_record_reports_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    ok(&["simulate", "--config", "cu-300nm-elastic", "--out", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let cut = &text[..text.len() - 30];
    std::fs::write(&csv, cut).unwrap();
    let rows = cut.lines().count();
    let out = bin(&["analyze", s(&csv), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("row {rows}")), "{err}");
}

#[test]
fn elastic_record_reports_yield_not_reached() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("el.csv");
    ok(&["simulate", "--config", "cu-300nm-elastic", "--out", s(&csv)]);
    let text = ok(&["analyze", s(&csv), "--out", s(&dir.path().join("el.json"))]);
    assert!(text.contains("not reached"), "{text}");
}

#[test]
fn seed_flag_changes_noise_only() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["simulate", "--config", "cu-300nm-monotonic", "--out", s(&a), "--seed", "5"]);
    ok(&["simulate", "--config", "cu-300nm-monotonic", "--out", s(&b), "--seed", "6"]);
    let (ra, rb) = (read_record(&a).unwrap(), read_record(&b).unwrap());
    assert_eq!(ra.metadata.seed, 5);
    assert_ne!(ra.samples, rb.samples);
    assert_eq!(ra.samples.len(), rb.samples.len());
}

#[test]
fn bundled_sweep_splits_runouts_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    ok(&["sweep", "--config", "cu-300nm-sweep", "--out", s(&out), "--jobs", "2"]);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let status: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(status, ["runout", "runout", "runout", "failed", "failed"]);

    let plot = ok(&["plotdata", "--kind", "s-n", s(&out.join("summary.csv"))]);
    let rows: Vec<&str> = plot.lines().collect();
    assert_eq!(rows[0], "log10_N,sigma_a_MPa,sigma_m_MPa,censored");
    assert_eq!(rows.len(), 6);
    assert!(rows[1..].iter().any(|r| r.ends_with(",1")));

    let again = dir.path().join("again");
    ok(&["sweep", "--config", "cu-300nm-sweep", "--out", s(&again), "--jobs", "1"]);
    for f in ["summary.csv", "sn.csv", "sn_fit.json", "excluded.csv"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn all_infeasible_grid_is_an_error_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    std::fs::write(
        &cfg,
        r#"
[geometry]
thickness = "300 nm"
[material]
preset = "cu-300nm"
[sweep]
means = ["0.1 um", "0.2 um"]
amplitudes = ["1 um"]
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin(&["sweep", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let report = std::fs::read_to_string(out_dir.join("excluded.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);
    assert!(report.contains("A/2 > d"));
}

#[test]
fn plotdata_formats_and_unknown_kind() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    ok(&["simulate", "--config", "cu-300nm-elastic", "--out", s(&csv)]);
    let ss = ok(&["plotdata", "--kind", "stress-strain", s(&csv)]);
    assert!(ss.starts_with("strain,stress_MPa,series\n"));
    let wf = ok(&["plotdata", "--kind", "waveform", s(&csv)]);
    assert!(wf.starts_with("t_s,u_act_um,series\n"));
    let out = bin(&["plotdata", "--kind", "histogram", s(&csv)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("possible values"));
}

#[test]
fn calibrate_and_compliance_helpers() {
    let doc: serde_json::Value =
        serde_json::from_str(&ok(&["calibrate", "--config", "cu-300nm-elastic"])).unwrap();
    let k = doc["k_align"].as_f64().unwrap();
    assert!((k - 25_537.19).abs() < 0.01, "{k}");

    let out = bin(&["calibrate", "--config", "cu-300nm-elastic", "--rate", "200 MPa/um"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("allow at most"));

    let beam = ok(&[
        "compliance",
        "beam",
        "--youngs-modulus",
        "169 GPa",
        "--width",
        "10 um",
        "--thickness",
        "2 um",
        "--length",
        "200 um",
    ]);
    assert_eq!(beam.trim(), "1.69000000e0 N/m");
    let series = ok(&["compliance", "series", "100 N/m", "100 N/m"]);
    assert_eq!(series.trim(), "5.00000000e1 N/m");
}

#[test]
fn missing_sweep_section_for_sweep_verb() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["sweep", "--config", "cu-300nm-elastic", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
