use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fracle::formats::{read_solution, BinaryMatrix};
use fracle_core::make_grid;
use fracle_core::operators::assemble_integral_fraclap;
use serde_json::{json, Value};

fn fracle(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracle")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config(n: usize, s: f64, p: f64, q: f64, nodes: usize) -> Value {
    json!({
        "grid": {"extent": [[-1.0, 1.0]], "n_interior": [nodes]},
        "exponents": {"n": n, "s": s, "p": p, "q": q},
        // lane_emden(a,b) grows like (b, a)
        "hamiltonian": format!("lane_emden({q},{p})"),
        "output": {"dir": "out"}
    })
}

fn write_config(dir: &Path, name: &str, v: &Value) -> String {
    fs::write(dir.join(name), serde_json::to_string_pretty(v).unwrap()).unwrap();
    name.to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_then_verify_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "le.json", &config(1, 0.25, 3.0, 3.0, 63));
    let o = fracle(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["outcome"], "converged");
    assert_eq!(report["nontrivial"], true);
    assert_eq!(report["exponents"]["theta"], 1.0);
    for f in ["solution.json", "solution.csv", "trace.csv"] {
        assert!(dir.path().join("out").join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 64);
    assert!(csv.starts_with("x,u,v\n"));

    let o = fracle(dir.path(), &["verify", "--solution", "out/solution.json", "--config", &cfg, "--out", "v.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = read_json(&dir.path().join("v.json"));
    assert_eq!(v["passed"], true);
    assert_eq!(v["nontrivial"], true);
}

#[test]
fn pq0_boundary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &config(5, 0.5, 2.5, 2.5, 31));
    let o = fracle(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("(pq0)"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn theta_outside_window_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(1, 0.25, 3.0, 3.0, 31);
    c["theta"] = json!(1.5);
    let cfg = write_config(dir.path(), "c.json", &c);
    let o = fracle(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("(condpq)"), "{}", stderr(&o));
}

#[test]
fn malformed_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut unknown = config(1, 0.25, 3.0, 3.0, 31);
    unknown["solver"] = json!({"metod": "reduction"});
    let mut mismatch = config(1, 0.25, 3.0, 3.0, 31);
    mismatch["hamiltonian"] = json!("power(3,2.5)");
    let mut bad_damping = config(1, 0.25, 3.0, 3.0, 31);
    bad_damping["solver"] = json!({"damping": 1.5});
    for (name, c) in [("u.json", unknown), ("m.json", mismatch), ("d.json", bad_damping)] {
        let cfg = write_config(dir.path(), name, &c);
        let o = fracle(dir.path(), &["solve", "--config", &cfg]);
        assert_eq!(code(&o), 2, "{name}: {}", stderr(&o));
    }
    fs::write(dir.path().join("junk.json"), "{ not json").unwrap();
    assert_eq!(code(&fracle(dir.path(), &["solve", "--config", "junk.json"])), 2);
    assert_eq!(code(&fracle(dir.path(), &["solve", "--config", "missing.json"])), 2);
}

#[test]
fn zero_init_reports_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(1, 0.25, 3.0, 3.0, 31);
    c["solver"] = json!({"init": {"kind": "scaled_mode", "k": 0, "amplitude": 0.0}});
    let cfg = write_config(dir.path(), "c.json", &c);
    let o = fracle(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["outcome"], "trivial");
    assert_eq!(report["nontrivial"], false);
}

#[test]
fn iteration_budget_exhaustion_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(1, 0.25, 3.0, 3.0, 31);
    c["solver"] = json!({"max_iter": 1, "tol": 1e-14});
    let cfg = write_config(dir.path(), "c.json", &c);
    let o = fracle(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert_eq!(read_json(&dir.path().join("out/report.json"))["outcome"], "max_iter_exceeded");
}

#[test]
fn asymmetric_reduction_needs_a_positive_phase() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(1, 0.25, 2.5, 3.5, 31);
    c["solver"] = json!({"method": "reduction"});
    let cfg = write_config(dir.path(), "c.json", &c);
    let o = fracle(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    // the second mode changes sign
    c["solver"] = json!({"method": "reduction", "init": {"kind": "scaled_mode", "k": 1, "amplitude": 1.0}});
    let cfg = write_config(dir.path(), "c.json", &c);
    let o = fracle(dir.path(), &["solve", "--config", &cfg]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert_eq!(read_json(&dir.path().join("out/report.json"))["outcome"], "negative_phase");
}

#[test]
fn solve_from_a_stored_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &config(1, 0.25, 3.0, 3.0, 63));
    assert_eq!(code(&fracle(dir.path(), &["solve", "--config", &cfg])), 0);
    let mut c = config(1, 0.25, 3.0, 3.0, 63);
    c["solver"] = json!({"init": {"kind": "file", "path": "out/solution.json"}, "method": "reduction"});
    c["output"] = json!({"dir": "again"});
    let cfg2 = write_config(dir.path(), "c2.json", &c);
    let o = fracle(dir.path(), &["solve", "--config", &cfg2]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = read_solution(&dir.path().join("out/solution.json")).unwrap();
    let b = read_solution(&dir.path().join("again/solution.json")).unwrap();
    assert!(a.combine(1.0, &b, -1.0).unwrap().sup_norm() < 1e-8);

    // a solution on another grid is rejected before solving
    let mut c = config(1, 0.25, 3.0, 3.0, 31);
    c["solver"] = json!({"init": {"kind": "file", "path": "out/solution.json"}});
    let cfg3 = write_config(dir.path(), "c3.json", &c);
    assert_eq!(code(&fracle(dir.path(), &["solve", "--config", &cfg3])), 2);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &config(1, 0.25, 3.0, 3.0, 31));
    let zero = json!({
        "format": "fracle-solution",
        "version": 1,
        "grid": {"dim": 1, "extent": [[-1.0, 1.0]], "n_interior": [31]},
        "u": vec![0.0; 31],
        "v": vec![0.0; 31],
    });
    fs::write(dir.path().join("zero.json"), zero.to_string()).unwrap();
    let o = fracle(dir.path(), &["verify", "--solution", "zero.json", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["nontrivial"], false);

    let mut bumped = zero.clone();
    bumped["u"][10] = json!(0.5);
    fs::write(dir.path().join("bumped.json"), bumped.to_string()).unwrap();
    assert_eq!(code(&fracle(dir.path(), &["verify", "--solution", "bumped.json", "--config", &cfg])), 4);

    let text = zero.to_string();
    fs::write(dir.path().join("cut.json"), &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&fracle(dir.path(), &["verify", "--solution", "cut.json", "--config", &cfg])), 2);
    let mut short = zero.clone();
    short["u"] = json!(vec![0.0; 30]);
    fs::write(dir.path().join("short.json"), short.to_string()).unwrap();
    assert_eq!(code(&fracle(dir.path(), &["verify", "--solution", "short.json", "--config", &cfg])), 2);
    let mut other = zero;
    other["grid"]["extent"] = json!([[0.0, 1.0]]);
    fs::write(dir.path().join("other.json"), other.to_string()).unwrap();
    assert_eq!(code(&fracle(dir.path(), &["verify", "--solution", "other.json", "--config", &cfg])), 2);
}

#[test]
fn region_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracle(dir.path(), &["region", "--n", "5", "--s", "0.5", "--resolution", "40", "--out", "r.csv", "--svg", "r.svg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 40 * 40);
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",1,1,1,1")));
    let svg = fs::read_to_string(dir.path().join("r.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let tags: Vec<&str> = svg.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert!(tags.iter().all(|t| ["<svg", "<title>n=5", "<rect", "</svg>"].contains(t)), "{tags:?}");

    // small s with p, q far from 2: nothing is admissible
    let o = fracle(
        dir.path(),
        &["region", "--n", "3", "--s", "0.01", "--p-range", "6,8", "--q-range", "6,8", "--resolution", "10", "--out", "e.csv"],
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0,0,0,0")), "{csv}");

    for bad in [["--s", "1.5"], ["--p-range", "3,2"], ["--resolution", "1"]] {
        let mut args = vec!["region", "--n", "5", "--out", "x.csv"];
        if bad[0] != "--s" {
            args.extend(["--s", "0.5"]);
        }
        args.extend(bad);
        assert_eq!(code(&fracle(dir.path(), &args)), 2, "{bad:?}");
    }
    assert_eq!(code(&fracle(dir.path(), &["region", "--n", "5", "--s", "0.5", "--p-range", "3"])), 2);
}

#[test]
fn spectrum_outputs_and_matrix_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracle(
        dir.path(),
        &[
            "spectrum", "--kind", "integral_fractional", "--s", "0.5", "--extent", "-1,1", "--n", "40", "--count", "5",
            "--out", "sp.csv", "--summary", "sp.json", "--matrix", "m.bin", "--eigensystem", "e.bin", "--refine",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let summary = read_json(&dir.path().join("sp.json"));
    assert!(summary["orthonormality_defect"].as_f64().unwrap() < 1e-10);
    let rows = summary["refinement"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows[0]["relative_difference"].as_f64().unwrap() < 0.05);

    let m = BinaryMatrix::read(&dir.path().join("m.bin")).unwrap();
    let grid = make_grid(1, &[(-1.0, 1.0)], &[40]).unwrap();
    let op = assemble_integral_fraclap(&grid, 0.5).unwrap();
    assert_eq!(m.n, 40);
    assert_eq!(m.s, Some(0.5));
    assert_eq!(m.kind, op.kind());
    assert_eq!(m.aux, op.mass());
    for i in 0..40 {
        for j in 0..40 {
            assert_eq!(m.entries[i * 40 + j].to_bits(), op.entries()[(i, j)].to_bits());
        }
    }
    let bytes = m.encode();
    assert_eq!(BinaryMatrix::decode(&bytes).unwrap(), m);
    assert!(BinaryMatrix::decode(&bytes[..bytes.len() - 3]).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(BinaryMatrix::decode(&extra).is_err());
    let mut wrong = bytes;
    wrong[0] = b'X';
    assert!(BinaryMatrix::decode(&wrong).is_err());

    let e = BinaryMatrix::read(&dir.path().join("e.bin")).unwrap();
    assert_eq!(e.aux.len(), 40);
    assert!(e.aux.windows(2).all(|w| w[0] <= w[1]));

    let local = BinaryMatrix { n: 2, kind: String::from("local"), s: None, entries: vec![2.0, -1.0, -1.0, 2.0], aux: vec![] };
    assert_eq!(BinaryMatrix::decode(&local.encode()).unwrap(), local);
}

#[test]
fn spectrum_rejects_invalid_specs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectrum", "--kind", "integral_fractional", "--n", "20"],
        vec!["spectrum", "--kind", "spectral_fractional", "--s", "1.5", "--n", "20"],
        vec!["spectrum", "--kind", "local", "--n", "1"],
        vec!["spectrum", "--kind", "local", "--extent", "1,0", "--n", "20"],
        vec!["spectrum", "--kind", "cubic", "--n", "20"],
    ] {
        assert_eq!(code(&fracle(dir.path(), &args)), 2, "{args:?}");
    }
}

#[test]
fn audit_and_linking() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracle(dir.path(), &["--seed", "3", "audit-hamiltonian", "--hamiltonian", "power(3,2.5)", "--samples", "500"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = read_json(&dir.path().join("audit.json"));
    assert_eq!(a["seed"], 3);
    assert_eq!(code(&fracle(dir.path(), &["audit-hamiltonian", "--hamiltonian", "cubic(3)"])), 2);

    let cfg = write_config(dir.path(), "c.json", &config(1, 0.25, 3.0, 3.0, 31));
    let o = fracle(dir.path(), &["linking", "--config", &cfg, "--samples", "24"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let l = read_json(&dir.path().join("linking.json"));
    assert_eq!(l["passed"], true);
    assert_eq!(l["i3"].as_array().unwrap().len(), 2);

    let o = fracle(dir.path(), &["linking", "--config", &cfg, "--sigma", "1e-9"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
    // a sphere far outside the mountain-pass neighborhood fails I4
    let o = fracle(dir.path(), &["linking", "--config", &cfg, "--rho", "50", "--sigma", "1000", "--big-m", "5000", "--out", "far.json"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert_eq!(read_json(&dir.path().join("far.json"))["i4_pass"], false);
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_fracle"))
            .current_dir(dir.path())
            .env("FRACLE_THREADS", v)
            .args(["region", "--n", "5", "--s", "0.5", "--resolution", "8"])
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("many")), 2);
    assert_eq!(code(&run("2")), 0);
}
