use std::path::Path;
use std::process::Command as Proc;

use plate_fsi_cli::{execute, parse_args, CliMode, Command, Failure};

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_plate-fsi"))
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn parses_lists_and_defaults() {
    let c = parse_args(["plate-fsi", "convergence", "--n", "4,6", "--mode", "partitioned"]).unwrap();
    assert_eq!(c.command, Command::Convergence);
    assert_eq!(c.ns(), &[4, 6]);
    assert_eq!((c.lambda, c.eps, c.max_iter, c.omega), (1.0, 1e-10, 20, 1.0));
    assert_eq!(c.mode, CliMode::Partitioned);

    let c = parse_args(["plate-fsi", "infsup", "--n", "2,3"]).unwrap();
    assert_eq!(c.command, Command::Infsup);
    assert_eq!(c.ns(), &[2, 3]);
}

#[test]
fn rejects_bad_input() {
    for argv in [
        &["plate-fsi", "coupled", "--n", "0"][..],
        &["plate-fsi", "coupled", "--n", "2,x"],
        &["plate-fsi", "coupled", "--frobnicate"],
        &["plate-fsi", "coupled", "--mode", "hybrid"],
        &["plate-fsi"],
    ] {
        assert!(parse_args(argv.iter().copied()).is_err(), "{argv:?}");
    }
    // parse, then fail the coupling-config checks
    for argv in [
        &["plate-fsi", "coupled", "--omega", "1.5"][..],
        &["plate-fsi", "coupled", "--eps", "0"],
        &["plate-fsi", "convergence", "--n", "6,4"],
        &["plate-fsi", "infsup", "--n", "5"],
    ] {
        let c = parse_args(argv.iter().copied()).unwrap();
        assert!(matches!(execute(&c), Err(Failure::Usage(_))), "{argv:?}");
    }
}

#[test]
fn exit_statuses() {
    let out = bin().args(["coupled", "--n", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["infsup", "--n", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // unwritable output directory: the run itself fails
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = bin().args(["infsup", "--n", "1", "--out"]).arg(blocker.join("sub")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("file"));

    let out = bin().args(["infsup", "--n", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn single_row_convergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["convergence", "--n", "4", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.path().join("convergence.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# plate-fsi convergence --n 4 "));
    assert!(lines[1].starts_with("h,L2_u,rate_L2_u"));
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("2.50000e-01,"));
    assert_eq!(lines[2].split(',').nth(2), Some(""));
    for name in ["L2_u", "H1_u", "L2_p", "L2_w1", "H1_w1", "H2_w1"] {
        let dat = read(&dir.path().join(format!("{name}.dat")));
        assert!(dat.lines().nth(2).unwrap().split(' ').count() == 2);
    }
}

#[test]
fn coupled_rows_match_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["coupled", "--n", "2", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let summary = String::from_utf8(out.stdout).unwrap();
    let iterations: usize = summary
        .split_whitespace()
        .find_map(|w| w.strip_prefix("iterations="))
        .unwrap()
        .parse()
        .unwrap();
    let csv = read(&dir.path().join("iterations.csv"));
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(data.len(), iterations);
    assert!(summary.contains("converged=true"));
}

#[test]
fn infsup_json_has_positive_beta() {
    let dir = tempfile::tempdir().unwrap();
    let c = parse_args(["plate-fsi", "infsup", "--n", "2", "--out", dir.path().to_str().unwrap()]).unwrap();
    let lines = execute(&c).unwrap();
    assert_eq!(lines.len(), 1);
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("infsup.json"))).unwrap();
    let r = &v["reports"][0];
    assert_eq!(r["n"], 2);
    assert!(r["beta"].as_f64().unwrap() > 0.0);
    assert_eq!(r["eigs_tail"].as_array().unwrap().len(), 5);
    assert!(v["config"].as_str().unwrap().starts_with("plate-fsi infsup --n 2"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = bin().args(["stokes", "--n", "2,3", "--out"]).arg(d.path()).output().unwrap();
        assert!(out.status.success());
        let out = bin().args(["plate", "--n", "2,3", "--out"]).arg(d.path()).output().unwrap();
        assert!(out.status.success());
    }
    for f in ["stokes.csv", "plate.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let s = read(&a.path().join("stokes.csv"));
    assert_eq!(s.lines().nth(1), Some("h,L2_u,rate_L2_u,H1_u,rate_H1_u,L2_p,rate_L2_p"));
}
