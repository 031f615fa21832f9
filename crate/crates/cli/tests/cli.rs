//! End-to-end runs of the `tfwlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tfwlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfwlab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value of a `key = value` line of the output.
fn printed(o: &Output, key: &str) -> f64 {
    let text = stdout(o);
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in output:\n{text}"));
    line.trim().parse().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn solve_tfw_writes_files_and_reports_a_bounded_charge() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["solve", "--model", "tfw", "--p", "1.6667", "--Z", "1", "--svg", "rho.svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let q = printed(&o, "Q");
    assert!((0.0..1.0).contains(&q), "Q = {q}");
    assert!(dir.path().join("tfw_solution.csv").exists());
    let meta = fs::read_to_string(dir.path().join("tfw_solution.csv.meta")).unwrap();
    assert!(meta.contains("Q=") && meta.contains("euler_residual="));
    assert!(fs::read_to_string(dir.path().join("rho.svg")).unwrap().contains("<polyline"));
}

#[test]
fn solve_tf_is_neutral() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["solve", "--model", "tf", "--p", "1.6667", "--Z", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let n = printed(&o, "N");
    assert!((n - 1.0).abs() <= 0.005, "N = {n}");
    assert!(dir.path().join("tf_solution.csv").exists());
}

#[test]
fn out_of_window_exponent_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["solve", "--model", "tfw", "--p", "0.9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("p = 0.9"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tfwlab(dir.path(), &["solve", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(tfwlab(dir.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(tfwlab(dir.path(), &["solve", "--p", "abc"]).status.code(), Some(1));
    assert_eq!(tfwlab(dir.path(), &["bound-curve", "--jobs", "0"]).status.code(), Some(1));
    assert_eq!(tfwlab(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn too_short_grid_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["solve", "--p", "5/3", "--r-max", "5", "--grid-n", "500"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn default_bound_curve_reproduces_the_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["bound-curve", "--svg", "curve.svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (p, b) = (printed(&o, "argmin p"), printed(&o, "min B"));
    assert!((1.82..=1.86).contains(&p), "argmin p = {p}");
    assert!((99.0..=103.0).contains(&b), "min B = {b}");
    assert_eq!(csv_rows(&dir.path().join("bound_curve.csv")).len(), 90);
    let svg = fs::read_to_string(dir.path().join("curve.svg")).unwrap();
    assert!(svg.contains("<circle"));
}

#[test]
fn coarse_bound_curve_falls_then_rises() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["bound-curve", "--steps", "5", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("bound_curve.csv"));
    let b: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(b.len(), 5);
    let k = (0..b.len()).min_by(|&i, &j| b[i].total_cmp(&b[j])).unwrap();
    assert!(k > 0 && k < b.len() - 1);
    assert!(b[..=k].windows(2).all(|w| w[1] < w[0]));
    assert!(b[k..].windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_outside_the_window_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tfwlab(dir.path(), &["bound-curve", "--p-min", "1.4"]).status.code(), Some(1));
    assert_eq!(tfwlab(dir.path(), &["bound-curve", "--p-max", "2.0"]).status.code(), Some(1));
}

#[test]
fn verify_passes_the_full_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["verify", "--p", "5/3", "--Z", "1", "--checks", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    let text = fs::read_to_string(dir.path().join("verify_report.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 10);
    let json = fs::read_to_string(dir.path().join("verify_report.json")).unwrap();
    assert!(json.contains("\"violation\"") && json.contains("\"location\""));
}

#[test]
fn verify_subset_reports_only_the_selection() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(dir.path(), &["verify", "--checks", "virial", "--out", "sub.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("sub.txt")).unwrap();
    let records: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(records.len(), 1);
    assert!(records[0].starts_with("virial"));
}

#[test]
fn saved_solution_gives_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let checks = "euler,subharmonic_P,lemma_g1,t1,z0,virial,decay";
    assert_eq!(tfwlab(dir.path(), &["solve", "--p", "1.6667"]).status.code(), Some(0));
    let a = tfwlab(dir.path(), &["verify", "--p", "1.6667", "--checks", checks, "--out", "a.txt"]);
    let b = tfwlab(
        dir.path(),
        &["verify", "--solution", "tfw_solution.csv", "--checks", checks, "--out", "b.txt"],
    );
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let ra = fs::read_to_string(dir.path().join("a.txt")).unwrap();
    let rb = fs::read_to_string(dir.path().join("b.txt")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn tampered_solution_fails_verification_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tfwlab(dir.path(), &["solve", "--p", "5/3"]).status.code(), Some(0));
    let path = dir.path().join("tfw_solution.csv");
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let header = rd.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(&header).unwrap();
    for row in rows {
        let mut cells: Vec<String> = row.iter().map(str::to_string).collect();
        let r: f64 = cells[0].parse().unwrap();
        if (1.0..2.0).contains(&r) {
            let psi: f64 = cells[1].parse().unwrap();
            cells[1] = format!("{:e}", 1.2 * psi);
        }
        w.write_record(&cells).unwrap();
    }
    w.flush().unwrap();
    let o = tfwlab(dir.path(), &["verify", "--solution", "tfw_solution.csv", "--checks", "subharmonic_P,decay"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stderr(&o).contains("failed checks"));
    let text = stdout(&o);
    let fails: Vec<&str> = text.lines().filter(|l| l.contains(" FAIL ")).collect();
    assert_eq!(fails.len(), 2, "{text}");
    for line in fails {
        let loc: f64 = line.split("location=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
        assert!((0.9..=2.1).contains(&loc), "{line}");
    }
}

#[test]
fn critical_sweep_stays_below_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfwlab(
        dir.path(),
        &["critical", "--gamma-min", "4", "--gamma-max", "10", "--steps", "7", "--svg", "q.svg"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let gc = 4.0 * std::f64::consts::PI.sqrt();
    let rows = csv_rows(&dir.path().join("critical.csv"));
    assert_eq!(rows.len(), 7);
    for row in &rows {
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        let (gamma, q, bound) = (v[0], v[2], v[3]);
        assert!(q <= bound + 1e-6, "gamma = {gamma}: Q = {q}, bound = {bound}");
        if gamma >= gc {
            assert!(q.abs() <= 1e-3, "gamma = {gamma}: Q = {q}");
            assert_eq!(v[4], 1.0);
        }
    }
    assert!(fs::read_to_string(dir.path().join("q.svg")).unwrap().contains("gamma_c"));
}

#[test]
fn critical_coupling_itself_uses_the_zero_branch() {
    let dir = tempfile::tempdir().unwrap();
    let gc = format!("{:.17}", 4.0 * std::f64::consts::PI.sqrt());
    let o = tfwlab(dir.path(), &["critical", "--gamma-min", &gc, "--gamma-max", &gc, "--out", "one.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("one.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][4], "1");
}

#[test]
fn critical_rejects_other_exponents() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tfwlab(dir.path(), &["critical", "--p", "1.6"]).status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "# coarse sweep\np_min = 1.7\np-max=1.9\nsteps=3\nout=from_cfg.csv\n").unwrap();
    let o = tfwlab(dir.path(), &["bound-curve", "--config", "run.cfg", "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("from_cfg.csv"));
    let ps: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(ps, vec![1.7, 1.9]);

    fs::write(dir.path().join("bad.cfg"), "colour=red\n").unwrap();
    assert_eq!(tfwlab(dir.path(), &["bound-curve", "--config", "bad.cfg"]).status.code(), Some(1));
    assert_eq!(tfwlab(dir.path(), &["bound-curve", "--config", "missing.cfg"]).status.code(), Some(1));
}
