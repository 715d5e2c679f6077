use std::path::Path;
use std::process::{Command, Output};

fn entcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entcap"))
        .args(args)
        .env_remove("ENTCAP_THREADS")
        .output()
        .expect("binary runs")
}

fn gate_file(dir: &Path, name: &str, rows: &[[f64; 4]], unitary: bool) -> String {
    let matrix: Vec<Vec<[f64; 2]>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| [x, 0.0]).collect())
        .collect();
    let body =
        serde_json::json!({"dims": [[2, "A"], [2, "B"]], "matrix": matrix, "unitary": unitary});
    let path = dir.join(name);
    std::fs::write(&path, body.to_string()).unwrap();
    path.display().to_string()
}

const IDENTITY: [[f64; 4]; 4] = [
    [1., 0., 0., 0.],
    [0., 1., 0., 0.],
    [0., 0., 1., 0.],
    [0., 0., 0., 1.],
];
const SWAP: [[f64; 4]; 4] = [
    [1., 0., 0., 0.],
    [0., 0., 1., 0.],
    [0., 1., 0., 0.],
    [0., 0., 0., 1.],
];

fn bracket(out: &Output) -> (f64, f64) {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let b = &v["bracket"];
    (b["lower"].as_f64().unwrap(), b["upper"].as_f64().unwrap())
}

#[test]
fn swap_file_brackets_two_ebits() {
    let dir = tempfile::tempdir().unwrap();
    let f = gate_file(dir.path(), "swap.json", &SWAP, true);
    let (lo, hi) = bracket(&entcap(&["analyze", "--gate-file", &f, "--restarts", "8"]));
    assert!(
        (lo - 2.0).abs() <= 1e-6 && (hi - 2.0).abs() <= 1e-6,
        "[{lo}, {hi}]"
    );
}

#[test]
fn identity_file_brackets_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = gate_file(dir.path(), "id.json", &IDENTITY, true);
    let (lo, hi) = bracket(&entcap(&["analyze", "--gate-file", &f, "--restarts", "8"]));
    assert!(lo.abs() <= 1e-9 && hi.abs() <= 1e-9, "[{lo}, {hi}]");
}

#[test]
fn controlled_shift_bracket() {
    let (lo, hi) = bracket(&entcap(&[
        "analyze",
        "--family",
        "cnot_d:4",
        "--restarts",
        "8",
    ]));
    assert!((lo - 1.0).abs() <= 1e-6, "{lo}");
    assert!(hi <= 1.45 && hi >= lo, "{hi}");
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = SWAP;
    bad[3][3] = 0.5;
    let nonunitary = gate_file(dir.path(), "bad.json", &bad, true);
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"dims\": [[2,").unwrap();
    let missing = dir.path().join("missing.json");
    let cases: Vec<Vec<String>> = vec![
        vec!["analyze".into(), "--gate-file".into(), nonunitary],
        vec![
            "analyze".into(),
            "--gate-file".into(),
            broken.display().to_string(),
        ],
        vec![
            "analyze".into(),
            "--gate-file".into(),
            missing.display().to_string(),
        ],
        vec!["analyze".into(), "--family".into(), "toffoli:2".into()],
        vec!["analyze".into()],
        vec!["phase-curve".into(), "--grid-points".into(), "1".into()],
        vec!["random-qudits".into(), "--dim".into(), "1".into()],
        vec!["cnot-family".into(), "--restarts".into(), "0".into()],
        vec!["cnot-family".into(), "--ancilla-dims".into(), "2".into()],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = entcap(&refs);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(entcap(&["--help"]).status.code(), Some(0));
    assert_eq!(entcap(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_thread_count_is_an_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_entcap"))
        .args(["cnot-family", "--d-max", "2"])
        .env("ENTCAP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn qubit_batch_is_byte_reproducible_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = entcap(&[
            "random-qudits",
            "--n",
            "3",
            "--dim",
            "2",
            "--seed",
            "11",
            "--restarts",
            "8",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("index,unitary_seed,E_LN_unassisted,E_N_dual,gap")
    );
    assert_eq!(lines.count(), 3);

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.csv.summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["max_gap"].as_f64().unwrap() <= 1e-6);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["subcommand"], "random-qudits");
    assert_eq!(manifest["config"]["search"]["restarts"], 8);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(manifest["version"].is_string());
}

#[test]
fn phase_curve_csv() {
    let out = entcap(&["phase-curve", "--grid-points", "3", "--restarts", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0][1..].iter().all(|&x| x == 0.0));
    assert_eq!(rows[1][1], 1.0);
    for row in &rows {
        for v in &row[2..5] {
            assert!((v - row[1]).abs() <= 1e-6, "{row:?}");
        }
        // printed values carry at most 12 significant digits
        for v in row {
            assert_eq!(*v, format!("{v:.11e}").parse::<f64>().unwrap());
        }
    }
}

#[test]
fn cnot_family_json() {
    let out = entcap(&[
        "cnot-family",
        "--d-max",
        "3",
        "--restarts",
        "8",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r["ec_agrees"] == true && r["choi_agrees"] == true && r["thm2_agrees"] == true));
}

#[test]
fn verify_passes() {
    let out = entcap(&["verify", "--restarts", "8"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["groups"].as_array().unwrap().len(), 8);
}
