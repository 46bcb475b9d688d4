//! Command-line outputs: frozen goldens, determinism and exit codes.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{q, Stacked};
use rankone::report::read_table;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn rankone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankone"))
        .args(args)
        .env_remove("RANKONE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn run_into(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = configs().join(config);
    let mut all = vec!["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    let out = rankone(&all);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn parse_rational(s: &str) -> common::Q {
    match s.split_once('/') {
        Some((n, d)) => q(n.parse().unwrap(), d.parse().unwrap()),
        None => q(s.parse().unwrap(), 1),
    }
}

#[test]
fn correlate_csv_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), "r23.toml", &["correlate"]);
    let got = read(dir.path().join("correlate.csv"));
    assert_eq!(String::from_utf8(got).unwrap(), String::from_utf8(read(golden("r23_correlate.csv"))).unwrap());
}

#[test]
fn correlate_golden_agrees_with_stacking() {
    let s = Stacked::r23(8);
    let a = (1usize, vec![0usize]);
    let mu2 = s.column_measure(2);
    let nu = s.measure(&a) / &mu2;
    let table = read_table(&golden("r23_correlate.csv")).unwrap();
    let (series, x, raw, value, status) = (
        table.column("series").unwrap(),
        table.column("x").unwrap(),
        table.column("raw").unwrap(),
        table.column("value").unwrap(),
        table.column("status").unwrap(),
    );
    let mut checked = 0;
    for row in &table.rows {
        let t: usize = row[x].parse().unwrap();
        if row[series] != "A|A" || row[status] != "exact" || t > 30 {
            continue;
        }
        let want = s.correlation_raw(&a, &a, t);
        assert_eq!(parse_rational(&row[raw]), want, "t={t}");
        assert_eq!(parse_rational(&row[value]), want / &mu2 - &nu * &nu, "t={t}");
        checked += 1;
    }
    assert!(checked >= 10);
}

#[test]
fn chart_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(golden("r23_correlate.csv"), dir.path().join("correlate.csv")).unwrap();
    let csv = dir.path().join("correlate.csv");
    run_into(dir.path(), "r23.toml", &["chart", csv.to_str().unwrap()]);
    assert_eq!(read(dir.path().join("correlate.svg")), read(golden("r23_correlate.svg")));
}

#[test]
fn reruns_are_byte_identical() {
    let cases: &[(&str, &[&str])] = &[
        ("r23.toml", &["correlate"]),
        ("r23.toml", &["--format", "json", "slice"]),
        ("r23.toml", &["--format", "json", "diagnose"]),
        ("ornstein.toml", &["build"]),
        ("ornstein.toml", &["--format", "json", "diagnose"]),
        ("ornstein.toml", &["--seed", "11", "ergavg"]),
        ("quadratic.toml", &["poly"]),
    ];
    for (cfg, args) in cases {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_into(d1.path(), cfg, args);
        run_into(d2.path(), cfg, args);
        let mut names: Vec<_> = std::fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            assert_eq!(read(d1.path().join(&name)), read(d2.path().join(&name)), "{cfg} {args:?} {name:?}");
            let csv = d1.path().join(&name);
            if name.to_string_lossy().ends_with(".csv") && read(&csv).starts_with(b"series,") {
                run_into(d1.path(), cfg, &["chart", csv.to_str().unwrap()]);
                run_into(d2.path(), cfg, &["chart", d2.path().join(&name).to_str().unwrap()]);
                let svg = name.to_string_lossy().replace(".csv", ".svg");
                assert_eq!(read(d1.path().join(&svg)), read(d2.path().join(&svg)));
            }
        }
    }
}

#[test]
fn seed_changes_ornstein_heights() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(d1.path(), "ornstein.toml", &["build"]);
    run_into(d2.path(), "ornstein.toml", &["--seed", "8", "build"]);
    assert_ne!(read(d1.path().join("build.csv")), read(d2.path().join("build.csv")));
}

#[test]
fn stdout_when_no_out_dir() {
    let cfg = configs().join("r23.toml");
    let out = rankone(&["--config", cfg.to_str().unwrap(), "build"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,r,h,"));
    assert!(text.lines().any(|l| l.starts_with("3,5,54,")));
}

#[test]
fn empty_report_gives_empty_axes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "series,x,value,value_decimal\n").unwrap();
    let cfg = configs().join("r23.toml");
    let out = rankone(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "chart", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let svg = String::from_utf8(read(dir.path().join("empty.svg"))).unwrap();
    assert!(svg.contains("<svg"));
    assert!(!svg.contains("<polyline"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let r23 = configs().join("r23.toml");
    let r23 = r23.to_str().unwrap();
    assert_eq!(rankone(&["--config", "/nonexistent.toml", "build"]).status.code(), Some(2));
    assert_eq!(rankone(&["--config", r23, "frobnicate"]).status.code(), Some(64));
    assert_eq!(rankone(&["--config", r23, "--format", "xml", "build"]).status.code(), Some(64));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "stages = 3\nbogus = 1\n").unwrap();
    let out = rankone(&["--config", bad.to_str().unwrap(), "build"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let missing = dir.path().join("nope.csv");
    assert_eq!(rankone(&["--config", r23, "chart", missing.to_str().unwrap()]).status.code(), Some(5));

    let build = dir.path().join("build.csv");
    std::fs::write(&build, String::from_utf8(rankone(&["--config", r23, "build"]).stdout).unwrap()).unwrap();
    let out = rankone(&["--config", r23, "chart", build.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("series"));

    assert_eq!(rankone(&["--config", r23, "--ref-column", "9", "build"]).status.code(), Some(2));
}
