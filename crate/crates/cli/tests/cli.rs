use std::path::Path;
use std::process::{Command, Output};

use convexlab::report::{CheckReport, ContourSheet, ReproduceReport};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convexlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).to_string()
}

fn eval(energy: &str, m: &str) -> f64 {
    let o = run(&["eval", "--energy", energy, "--matrix", m]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    stdout(&o).trim().parse().unwrap()
}

#[test]
fn eval_examples() {
    assert_eq!(eval("w0", "1,0,0,1"), 2.0);
    assert!((eval("aubert", "1,0,0,1") + 1.0 / 6.0).abs() < 1e-15);
    assert!((eval("adm:1.1", "1,0,0,1") + 0.4).abs() < 1e-12);
    assert!((eval("w0", "0,-2,1,0") - (2.0 - 2f64.ln() + 2f64.ln() + 0.5)).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["eval", "--energy", "w0", "--matrix", "1,0,0,-1"]).status.code(), Some(3));
    assert_eq!(run(&["eval", "--energy", "nope", "--matrix", "1,0,0,1"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--energy", "w0", "--matrix", "1,x,0,1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["check", "rank-one", "--energy", "adm:1.2"]).status.code(), Some(1));
    assert_eq!(run(&["check", "rank-one", "--energy", "w0"]).status.code(), Some(0));
    assert_eq!(run(&["reproduce-paper", "--only", "bogus"]).status.code(), Some(2));
}

#[test]
fn check_reports_round_trip() {
    for args in [
        vec!["--json", "check", "rank-one", "--energy", "w0", "--method", "criterion"],
        vec!["--json", "check", "polyconvexity", "--energy", "w0"],
        vec!["--json", "check", "sublevel", "--energy", "w0", "--level", "3", "--from", "1,0.2,0,1", "--to", "0,-2,1,0.5"],
        vec!["--json", "check", "sublevel", "--energy", "aubert", "--level", "0"],
    ] {
        let o = run(&args);
        let text = stdout(&o);
        let r = CheckReport::from_json(&text).unwrap();
        assert_eq!(r.schema_version, 1);
        assert_eq!(r.to_json(), text.trim_end());
        let again = stdout(&run(&args));
        assert_eq!(text, again, "report differs between runs: {args:?}");
    }
}

#[test]
fn polyconvexity_witness_for_w0() {
    let o = run(&["--json", "check", "polyconvexity", "--energy", "w0"]);
    assert_eq!(o.status.code(), Some(1));
    let r = CheckReport::from_json(&stdout(&o)).unwrap();
    assert!(r.witnesses.get("gamma").is_some());
}

#[test]
fn contour_csv_reingests_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w0.csv");
    let o = run(&[
        "contour", "--energy", "w0", "--grid", "-3,3,121", "--levels", "2.5,3,4", "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("lambda1,lambda2,W,band\n"));
    let rows = ContourSheet::parse_csv(&csv).unwrap();
    assert_eq!(rows.len(), 121 * 121);
    let mut in_band = 0;
    for r in &rows {
        let direct = {
            let (a, b) = (r[0].max(r[1]), r[0].min(r[1]));
            let (k, d) = (a / b, a * b);
            k - k.ln() + d.ln() + 1.0 / d
        };
        assert!((r[2] - direct).abs() <= 1e-15 * direct.abs().max(1.0) * 4.0);
        if r[2] <= 2.5 {
            in_band += 1;
            assert!(r[0].min(r[1]) >= 0.3, "level-2.5 node near the axis: {r:?}");
        }
    }
    assert!(in_band > 0);
}

#[test]
fn contour_without_levels_is_values_only() {
    let o = run(&["contour", "--energy", "aubert", "--grid", "-1,1,5"]);
    let csv = stdout(&o);
    assert!(csv.starts_with("lambda1,lambda2,W\n"));
    assert_eq!(csv.lines().count(), 26);
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 3));
}

#[test]
fn aubert_level_zero_contains_the_diagonal() {
    let o = run(&["contour", "--energy", "aubert", "--grid", "-3,3,61", "--levels", "0"]);
    let csv = stdout(&o);
    let diagonal: Vec<&str> = csv.lines().skip(1).filter(|l| {
        let f: Vec<&str> = l.split(',').collect();
        f[0] == f[1]
    }).collect();
    assert_eq!(diagonal.len(), 61);
    assert!(diagonal.iter().all(|l| l.ends_with(",0")));
}

#[test]
fn svg_output() {
    let o = run(&["contour", "--energy", "w0", "--levels", "2.5,3,4", "--format", "svg"]);
    let svg = stdout(&o);
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("#282828"));
    assert_eq!(run(&["contour", "--energy", "w0", "--format", "png"]).status.code(), Some(2));
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# evaluation defaults\nenergy = aubert\nmatrix = 1,0,0,1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v: f64 = stdout(&run(&["--config", c, "eval"])).trim().parse().unwrap();
    assert!((v + 1.0 / 6.0).abs() < 1e-15);
    let v: f64 = stdout(&run(&["--config", c, "eval", "--energy", "w0"])).trim().parse().unwrap();
    assert_eq!(v, 2.0);
    std::fs::write(&cfg, "energy aubert\n").unwrap();
    assert_eq!(run(&["--config", c, "eval"]).status.code(), Some(2));
}

fn write(dir: &Path, name: &str, src: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, src).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn energy_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "w0.energy", "name = w0-file\nh(t) = t - log(t)\nf(t) = log(t) + 1/t\n");
    let v: f64 = stdout(&run(&["eval", "--energy", &format!("file:{good}"), "--matrix", "2,0,0,1"]))
        .trim()
        .parse()
        .unwrap();
    assert!((v - (2.0 - 2f64.ln() + 2f64.ln() + 0.5)).abs() < 1e-14);
    let bad = write(dir.path(), "bad.energy", "h(t) = t\nf(t) = log(t $ 1)\n");
    let o = run(&["eval", "--energy", &format!("file:{bad}"), "--matrix", "1,0,0,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn reproduce_only_and_tampered_w0() {
    let o = run(&["reproduce-paper", "--only", "polyconvexity"]);
    assert_eq!(o.status.code(), Some(0));
    let r = ReproduceReport::from_json(&stdout(&o)).unwrap();
    assert_eq!(r.items.len(), 1);
    assert_eq!(r.items[0].item.name(), "polyconvexity");

    let dir = tempfile::tempdir().unwrap();
    let tampered = write(dir.path(), "tampered.energy", "name = tampered\nh(t) = t - log(t)\nf(t) = log(t)\n");
    let o = run(&["reproduce-paper", "--only", "compactness", "--w0-file", &tampered]);
    assert_eq!(o.status.code(), Some(1));
    let r = ReproduceReport::from_json(&stdout(&o)).unwrap();
    assert!(!r.passed);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL compactness"));
}

#[test]
fn thread_cap_does_not_change_output() {
    let one = Command::new(env!("CARGO_BIN_EXE_convexlab"))
        .args(["reproduce-paper", "--only", "values,compactness"])
        .env("CONVEXLAB_THREADS", "1")
        .output()
        .unwrap();
    let many = run(&["reproduce-paper", "--only", "values,compactness"]);
    assert_eq!(one.stdout, many.stdout);
}
