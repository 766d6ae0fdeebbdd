use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn nonholo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonholo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NONHOLO_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn status_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or_default().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_torsion_writes_surface_branch() {
    let dir = tempfile::tempdir().unwrap();
    let o = nonholo(&["solve", fixture("torsion.ocp").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(status_line(&o), "status=ok");
    let report = json(&dir.path().join("torsion.json"));
    assert_eq!(report["branch"], "surface");
    assert!(report["residuals"]["adjoint"].as_f64().unwrap() < 1e-10);
    let csv = std::fs::read_to_string(dir.path().join("torsion.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t1,t2,x,y,z,u,v,p_z"));
    assert_eq!(lines.count(), 51 * 51);
}

#[test]
fn check_martinet_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cand = fixture("extremal2.csv");
    let o = nonholo(
        &["check", fixture("martinet.ocp").to_str().unwrap(), "--candidate", cand.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = json(&dir.path().join("martinet.json"));
    let res = report["residuals"].as_object().unwrap();
    assert_eq!(res.len(), 5);
    assert!(res.values().all(|v| v.as_f64().unwrap() < 1e-8), "{res:?}");
}

#[test]
fn failing_check_is_noconv() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("extremal2.csv")).unwrap();
    let mut rows: Vec<String> = text.lines().map(str::to_string).collect();
    rows[10] = rows[10].replace(",1,", ",1.5,");
    let cand = dir.path().join("bad.csv");
    std::fs::write(&cand, rows.join("\n")).unwrap();
    let o = nonholo(
        &["check", fixture("martinet.ocp").to_str().unwrap(), "--candidate", cand.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(status_line(&o), "status=noconv");
}

#[test]
fn geometry_frobenius() {
    let dir = tempfile::tempdir().unwrap();
    let o = nonholo(&["geometry", fixture("martinet.ocp").to_str().unwrap(), "--frobenius"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("frobenius = y\n"), "{s}");
    assert!(s.contains("verdict = nonholonomic\n"), "{s}");
}

#[test]
fn bang_decoupled_minimum_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = nonholo(&["bang", fixture("decoupled.ocp").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = json(&dir.path().join("decoupled.json"));
    assert!((r["tau"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("decoupled.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2,u1,u2,p_x1,p_x2,H,Q_u1,Q_u2\n"), "{}", &csv[..60]);
}

#[test]
fn sheet_and_riemann_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = nonholo(&["sheet", fixture("commuting_sheet.ocp").to_str().unwrap(), "--cic", "--grid", "21"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = json(&dir.path().join("commuting_sheet.json"));
    assert!(r["order_gap"].as_f64().unwrap() < 1e-6);
    assert!(r["cic_sup"].as_f64().unwrap() < 1e-10);
    let o = nonholo(&["riemann", fixture("polar.ocp").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("polar.json"));
    assert!((r["work"].as_f64().unwrap() - r["length"].as_f64().unwrap()).abs() < 1e-10);
    assert!(r["max_excess"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r["christoffel"]["r_thth"], "-r");
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = nonholo(&["solve", fixture("decoupled.ocp").to_str().unwrap(), "--seed", "9"], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["decoupled.csv", "decoupled.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn seed_flag_and_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_nonholo"));
        cmd.args(["riemann", fixture("polar.ocp").to_str().unwrap(), "--out"]).arg(dir.path());
        cmd.env_remove("NONHOLO_SEED");
        if let Some(e) = env {
            cmd.env("NONHOLO_SEED", e);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert_eq!(cmd.output().unwrap().status.code(), Some(0));
        std::fs::read(dir.path().join("polar.json")).unwrap()
    };
    assert_eq!(run(Some("5"), None), run(None, Some("5")));
    assert_ne!(run(Some("5"), None), run(Some("6"), None));
    assert_eq!(run(Some("6"), Some("5")), run(None, Some("5")));
}

#[test]
fn malformed_inputs_exit_invalid_without_panicking() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, Vec<u8>)> = vec![
        ("garbage.ocp", b"this is not a problem file\n\x01\x02".to_vec()),
        ("binary.ocp", vec![0xff, 0xfe, 0x00, 0x41]),
        ("both.ocp", b"[state]\nnames = x\n[dynamics]\npfaff = 1\nfield = 1\n[boundary]\nx0 = 0\n".to_vec()),
        ("nox0.ocp", b"[state]\nnames = x\n[dynamics]\nfield = 1\n[boundary]\nx1 = 0\n".to_vec()),
        ("badexpr.ocp", b"[state]\nnames = x\n[dynamics]\nfield = sin(\n[boundary]\nx0 = 0\n".to_vec()),
        ("empty.ocp", Vec::new()),
    ];
    for (name, bytes) in &cases {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        let o = nonholo(&["solve", path.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(3), "{name}");
        assert_eq!(status_line(&o), "status=invalid", "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.contains("internal error"), "{name}: {err}");
    }
    let err = |name: &str| {
        let o = nonholo(&["solve", dir.path().join(name).to_str().unwrap()], dir.path());
        String::from_utf8_lossy(&o.stderr).into_owned()
    };
    assert!(err("both.ocp").contains("ambiguous dynamics"));
    assert!(err("nox0.ocp").contains("[boundary]"));
    assert!(err("badexpr.ocp").contains("line 4, column"));
    let missing = nonholo(&["solve", "/nonexistent/p.ocp"], dir.path());
    assert_eq!(missing.status.code(), Some(3));
    let flag = nonholo(&["solve", "--grid", "many", "x.ocp"], dir.path());
    assert_eq!(flag.status.code(), Some(3));
    assert_eq!(status_line(&flag), "status=invalid");
    let cand = nonholo(&["check", fixture("martinet.ocp").to_str().unwrap()], dir.path());
    assert_eq!(cand.status.code(), Some(3));
}

#[test]
fn jobs_process_several_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ocp");
    std::fs::write(&bad, "[meta]\n").unwrap();
    let o = nonholo(
        &[
            "solve",
            fixture("torsion.ocp").to_str().unwrap(),
            fixture("decoupled.ocp").to_str().unwrap(),
            bad.to_str().unwrap(),
            "--jobs",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let s = stdout(&o);
    let statuses: Vec<&str> = s.lines().filter(|l| l.starts_with("file_status=")).collect();
    assert_eq!(statuses, ["file_status=ok", "file_status=ok", "file_status=invalid"]);
    assert!(dir.path().join("torsion.csv").exists() && dir.path().join("decoupled.csv").exists());
}
