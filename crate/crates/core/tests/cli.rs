use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hdelaunay::cli::csv::{read_profile, write_profile};
use hdelaunay::cli::mesh::Mesh;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hdelaunay"));
    c.env_remove("DELAUNAY_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_admissible_and_rejected() {
    let o = run(&["check", "1+y^2", "--kappa", "-1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("admissible: true"));
    assert!(out.contains("x0: 0.549306144334"));

    let o = run(&["check", "0.4", "--kappa", "-1"]);
    assert_eq!(code(&o), 2);
    let out = stdout(&o);
    assert!(out.contains("admissible: false"));
    assert!(out.contains("witness_y: 0\n"));
}

#[test]
fn check_syntax_error() {
    let o = run(&["check", "1+(", "--kappa", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("offset 3"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["check", "1", "--kappa", "2"])), 1);
    assert_eq!(code(&run(&["check", "1"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["build", "sphere", "1", "--kappa", "1", "--theta-samples", "4"])), 1);
    assert_eq!(code(&run(&["build", "sphere", "1", "--kappa", "1", "--model", "disk"])), 1);
    assert_eq!(code(&run(&["portrait", "1", "--kappa", "1", "--format", "obj"])), 1);
    assert_eq!(code(&run(&["build", "unduloid", "1", "--kappa", "1"])), 1);
    assert_eq!(code(&run(&["classify", "1", "--kappa", "1", "--xi", "4"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn json_report_parses() {
    let o = run(&["check", "y^2-0.25", "--kappa", "1", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["admissible"], serde_json::Value::Bool(true));
    assert_eq!(v["sphere_condition"]["multiplicity_sum"], 2);
    assert_eq!(v["zeros"].as_array().unwrap().len(), 2);
}

#[test]
fn classify_examples() {
    let o = run(&["classify", "1", "--kappa", "1", "--xi", "2.0344439"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("kind: torus"));

    let o = run(&["classify", "1", "--kappa", "-1", "--xi", "0.8", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"]["kind"], "unduloid");

    let o = run(&["classify", "1", "--kappa", "-1", "--xi", "1.5", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["classification"]["kind"], "nodoid");
    let x1 = v["classification"]["x1"].as_f64().unwrap();
    assert!((x1.cosh() - 1.287770).abs() < 1e-6);
}

#[test]
fn inadmissible_classify_prints_checker() {
    let o = run(&["classify", "y", "--kappa", "-1", "--xi", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("closed_condition:"));
}

#[test]
fn mismatch_and_numeric_failure() {
    let o = run(&["build", "unduloid", "1", "--kappa", "-1", "--xi", "1.5"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("nodoid"));
    assert_eq!(code(&run(&["build", "torus", "1", "--kappa", "-1"])), 3);
    // A tolerance below round-off cannot be met by the step controller.
    let o = run(&["build", "sphere", "1", "--kappa", "-1", "--rtol", "1e-20", "--atol", "1e-30"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));
}

fn build_to(dir: &Path, args: &[&str]) -> PathBuf {
    let stem = dir.join("surface");
    let mut all: Vec<&str> = args.to_vec();
    let s = stem.to_str().unwrap();
    all.extend(["--out", s]);
    let o = run(&all);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    stem
}

fn round_trips(stem: &Path) -> Mesh {
    let csv_text = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert!(csv_text.starts_with("arc_id,eps,s,x,y,z\r\n"));
    let rows = read_profile(&csv_text).unwrap();
    assert_eq!(write_profile(&rows), csv_text);

    let obj_text = std::fs::read_to_string(stem.with_extension("obj")).unwrap();
    let mesh = Mesh::from_obj(&obj_text).unwrap();
    assert_eq!(mesh.to_obj(), obj_text);
    mesh
}

#[test]
fn sphere_build_files() {
    let dir = tempfile::tempdir().unwrap();
    let stem = build_to(dir.path(), &["build", "sphere", "1+y^2", "--kappa", "-1", "--theta-samples", "24"]);
    let mesh = round_trips(&stem);
    assert!(mesh.is_closed_manifold());
    assert_eq!(mesh.euler_characteristic(), 2);
    // Poincaré disk model: the horizontal coordinates stay inside the unit disk.
    assert!(mesh.vertices.iter().all(|v| v[0].hypot(v[1]) < 1.0));
}

#[test]
fn torus_build_files() {
    let dir = tempfile::tempdir().unwrap();
    let stem = build_to(dir.path(), &["build", "torus", "1", "--kappa", "1", "--theta-samples", "16"]);
    let mesh = round_trips(&stem);
    assert!(mesh.is_closed_manifold());
    assert_eq!(mesh.euler_characteristic(), 0);
}

#[test]
fn open_builds() {
    let dir = tempfile::tempdir().unwrap();
    let stem = build_to(
        dir.path(),
        &["build", "nodoid", "1+y^2", "--kappa", "-1", "--xi", "1.5", "--periods", "3"],
    );
    let mesh = round_trips(&stem);
    assert!(!mesh.is_closed_manifold());
    let interior_ok = mesh.edge_use().values().all(|&n| n <= 2);
    assert!(interior_ok);

    let o = run(&["build", "cylinder", "1", "--kappa", "1", "--eps", "-1", "--format", "report"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let r: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("radius: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((r - (std::f64::consts::PI - 0.5f64.atan())).abs() < 1e-10);

    let o = run(&["build", "unduloid", "1+y^2", "--kappa", "1", "--xi", "0.6", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_profile(&stdout(&o)).unwrap();
    assert!(rows.len() > 10);
}

#[test]
fn stereographic_model_for_spherical_builds() {
    let o = run(&["build", "sphere", "1", "--kappa", "1", "--model", "stereo", "--format", "obj"]);
    assert_eq!(code(&o), 0);
    let mesh = Mesh::from_obj(&stdout(&o)).unwrap();
    assert_eq!(mesh.euler_characteristic(), 2);
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn portrait_goldens() {
    let cases = [
        ("-1", "1", "portrait_h2_eps_plus.svg"),
        ("-1", "-1", "portrait_h2_eps_minus.svg"),
        ("1", "1", "portrait_s2_eps_plus.svg"),
    ];
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (kappa, eps, name) in cases {
        let o = run(&["portrait", "1+y^2", "--kappa", kappa, "--eps", eps]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let svg = stdout(&o);
        assert!(svg.starts_with("<?xml"));
        if eps == "1" {
            assert!(svg.contains("class=\"gamma\""));
        }
        let path = golden_dir().join(name);
        if update {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &svg).unwrap();
        }
        let stored = std::fs::read_to_string(&path).expect("golden present; regenerate with UPDATE_GOLDEN=1");
        assert!(stored == svg, "{name} differs from the golden");
    }
}

#[test]
fn portrait_csv() {
    let o = run(&["portrait", "1", "--kappa", "1", "--format", "csv", "--orbits", "3"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("orbit_id,s,x,y\r\n"));
    assert!(out.lines().count() > 50);
}
