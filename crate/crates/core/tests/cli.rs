use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reilly-verify"))
        .args(args)
        .current_dir(dir)
        .env_remove("REILLY_VERIFY_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in\n{text}"));
    line.split_once(':').unwrap().1.trim().parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .map(|d| d.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

#[test]
fn generate_round_sphere_reports_its_area() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["generate", "round_sphere", "--radius", "1", "--refine", "4", "-o", "s.wmesh"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let area = value(&stdout(&o), "area");
    assert!((area - 4.0 * std::f64::consts::PI).abs() < 0.01 * 4.0 * std::f64::consts::PI, "{area}");
    let text = std::fs::read_to_string(dir.path().join("s.wmesh")).unwrap();
    let mesh = reilly_verify::mesh::parse_mesh(&text).unwrap();
    assert_eq!(mesh.num_vertices() as f64, value(&stdout(&o), "vertices"));
}

#[test]
fn generate_flat_disk_has_one_boundary_loop() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["generate", "flat_disk", "--radius", "1", "--refine", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "boundary_loops"), 1.0);
    assert!(files(dir.path()).is_empty());
}

#[test]
fn generate_rejects_geodesic_radius_beyond_the_hemisphere() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["generate", "geodesic_sphere_in_S3", "--rho", "2.0", "-o", "g.wmesh"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn spectrum_of_disk_and_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let disk = write(dir.path(), "disk.cfg", "[shape]\nname = flat_disk\n[problems]\nsteklov = true\n");
    let o = cli(&["spectrum", "--config", &disk, "--refine", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let sigma: f64 = line.split("eigenvalue_1 = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((sigma - 1.0).abs() < 0.01, "{sigma}");

    let sphere = write(dir.path(), "sphere.cfg", "[shape]\nname = round_sphere\n");
    let o = cli(&["spectrum", "--config", &sphere, "--refine", "3", "--dump-matrices", "--out", "m"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let lambda: f64 =
        stdout(&o).split("eigenvalue_1 = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((lambda - 2.0).abs() < 0.02, "{lambda}");
    assert_eq!(files(&dir.path().join("m")), ["sphere.mass.coo", "sphere.stiffness.coo"]);
}

#[test]
fn negative_wentzell_parameter_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.cfg", "[shape]\nname = flat_disk\n[problems]\nwentzell = -1\n");
    for cmd in ["spectrum", "check"] {
        let o = cli(&[cmd, "--config", &cfg, "--out", "out", "--dump-matrices"], dir.path());
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(!dir.path().join("out").exists());
    }
}

#[test]
fn check_sphere_reports_reilly_equality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sphere.cfg", "[scenario]\nid = sphere\n[shape]\nname = round_sphere\nrefine = 4\n");
    let o = cli(&["check", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&dir.path().join("out")), ["sphere.csv", "sphere.json", "sphere.run.json"]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/sphere.json")).unwrap()).unwrap();
    let reilly = report["bounds"].as_array().unwrap().iter().find(|b| b["bound_id"] == "REILLY_1_1").unwrap();
    assert_eq!(reilly["status"], "equality_within_tol");
    let csv = std::fs::read_to_string(dir.path().join("out/sphere.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("REILLY_1_1,") && l.ends_with(",equality_within_tol")));
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/sphere.run.json")).unwrap()).unwrap();
    assert!(sidecar["elapsed_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn corrupt_mesh_file_is_rejected_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.wmesh", "WMESH EUCLIDEAN 0\nvertices 3\n0 0 0\n1 0\n");
    let cfg = write(dir.path(), "bad.cfg", "[shape]\nfile = bad.wmesh\n[output]\ndir = out\n");
    let o = cli(&["check", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "[shape]\nname = round_sphere\nrefine = 9\n",
        "[shape]\nname = round_sphere\n[tolerances]\nequality_tol = -1\n",
        "[shape]\nname = round_sphere\n[tensors]\nt = file(missing.txt)\n",
        "[shape]\nname = round_sphere\n[problems]\nsteklov = true\n",
        "[shape]\nname = round_sphere\ncolour = blue\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.cfg"), text);
        let o = cli(&["check", "--config", &cfg, "--out", "out"], dir.path());
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn tensor_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["generate", "round_sphere", "--refine", "2", "-o", "s.wmesh"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let ntri = value(&stdout(&o), "triangles") as usize;
    let rows: String = (0..ntri).map(|t| format!("{t} 1.5 0.0 1.5\n")).collect();
    write(dir.path(), "t.txt", &rows);
    let cfg = write(
        dir.path(),
        "f.cfg",
        "[scenario]\nid = f\n[shape]\nfile = s.wmesh\n[tensors]\nt = file(t.txt)\n[checks]\nbounds = GENERAL_1_7\nidentities = GROSJEAN_PTWISE\n",
    );
    let o = cli(&["check", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/f.json")).unwrap()).unwrap();
    assert_eq!(report["bounds"].as_array().unwrap().len(), 1);
    assert_eq!(report["identities"][0]["status"], "equality_within_tol");
}

#[test]
fn seed_controls_jitter() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: Option<&str>, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_reilly-verify"));
        c.args(["generate", "round_sphere", "--refine", "2", "-o", out]).current_dir(dir.path());
        match seed {
            Some(s) => c.env("REILLY_VERIFY_SEED", s),
            None => c.env_remove("REILLY_VERIFY_SEED"),
        };
        let o = c.output().unwrap();
        (o.status.code(), std::fs::read_to_string(dir.path().join(out)).ok())
    };
    let (c0, plain) = run(None, "a.wmesh");
    let (c1, j1) = run(Some("7"), "b.wmesh");
    let (c2, j2) = run(Some("7"), "c.wmesh");
    assert_eq!((c0, c1, c2), (Some(0), Some(0), Some(0)));
    assert_eq!(j1, j2);
    assert_ne!(plain, j1);
    let (bad, none) = run(Some("seven"), "d.wmesh");
    assert_eq!(bad, Some(2));
    assert!(none.is_none());
}
