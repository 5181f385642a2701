use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bellscope::classify::{witness_is_valid, Witness, WITNESS_THRESHOLD};
use bellscope::quantum::{QubitConfig, QutritConfig};
use bellscope::simplex::Face;
use bellscope_cli::output::*;

fn bellscope(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellscope"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BELLSCOPE_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = bellscope(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    files
}

#[test]
fn classify_reproduces_counts_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let out = tmp.path().join(format);
        ok(&["classify", "--format", format], &out);
        let f = if format == "csv" {
            Format::Csv
        } else {
            Format::Json
        };
        let summary: Vec<SummaryRow> =
            read_rows(&artifact(&out, "classify_summary", f), f).unwrap();
        let counts: Vec<(usize, usize)> = summary.iter().map(|s| (s.faces, s.voids)).collect();
        assert_eq!(
            counts,
            [
                (1, 1),
                (8, 8),
                (28, 28),
                (56, 56),
                (70, 70),
                (56, 40),
                (28, 8),
                (8, 0)
            ]
        );
        let rows: Vec<FaceRow> = read_rows(&artifact(&out, "classify", f), f).unwrap();
        assert_eq!(rows.len(), 255);
        for r in rows.iter().filter(|r| r.verdict == "not_void") {
            let w: Witness =
                read_json(&out.join(format!("witnesses/face_{}.json", r.mask))).unwrap();
            let face = Face::from_mask(r.mask).unwrap();
            assert!(
                witness_is_valid(face, &w, 1e-8, WITNESS_THRESHOLD),
                "mask {}",
                r.mask
            );
        }
        assert_eq!(rows.iter().filter(|r| r.verdict == "not_void").count(), 44);
    }
}

#[test]
fn fixed_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["classify", "--seed", "11"], &a);
    ok(&["classify", "--seed", "11"], &b);
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert!(sa.len() > 2);
    assert_eq!(sa, sb);

    let o1 = Command::new(env!("CARGO_BIN_EXE_bellscope"))
        .args(["classify", "--seed", "11", "--out"])
        .arg(tmp.path().join("c"))
        .env("BELLSCOPE_THREADS", "1")
        .output()
        .unwrap();
    assert!(o1.status.success());
    assert_eq!(snapshot(&tmp.path().join("c")), sa);
}

#[test]
fn boundary_reports_and_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(
        &[
            "boundary",
            "--zeroed",
            "2,3,6,7,8",
            "--method",
            "ml",
            "--curve",
            "2",
            "--profile",
            "20",
        ],
        out,
    );
    let rows: Vec<BoundaryRow> =
        read_rows(&artifact(out, "boundary", Format::Csv), Format::Csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(
        rows[0].mask,
        Face::from_zeroed(&[2, 3, 6, 7, 8]).unwrap().mask()
    );
    assert!(rows[0].mu_star > 0.1 && !rows[0].reproducible);

    let curve: Vec<CurveRow> =
        read_rows(&artifact(out, "boundary_curve", Format::Csv), Format::Csv).unwrap();
    assert_eq!(curve.len(), 6);
    let profile: Vec<ProfileRow> =
        read_rows(&artifact(out, "boundary_profile", Format::Csv), Format::Csv).unwrap();
    assert_eq!(profile.len(), 21);
    assert_eq!(profile[0].mu, 0.0);
    assert_eq!(profile[20].mu, 1.0);

    ok(
        &[
            "boundary", "--mask", "0xce", "--method", "uffink", "--format", "json",
        ],
        &out.join("j"),
    );
    let rows: Vec<BoundaryRow> = read_rows(
        &artifact(&out.join("j"), "boundary", Format::Json),
        Format::Json,
    )
    .unwrap();
    assert!(rows[0].reproducible);
}

#[test]
fn npa_report_and_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(
        &[
            "npa",
            "--level",
            "1",
            "--segment",
            "center:6,8",
            "--format",
            "json",
        ],
        out,
    );
    let r: Vec<NpaReport> =
        read_rows(&artifact(out, "npa_report", Format::Json), Format::Json).unwrap();
    assert!((r[0].mu_star - 0.37868).abs() < 1e-4);
    let grid: Vec<Vec<f64>> = fs::read_to_string(out.join("npa_certificate.txt"))
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(grid.len(), 5);
    for (i, row) in grid.iter().enumerate() {
        assert_eq!(row.len(), 5);
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, grid[j][i]);
        }
    }
    assert_eq!(grid[0][0], 1.0);
}

#[test]
fn hardy_table_matches() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["hardy", "--table1"], tmp.path());
    let rows: Vec<TableRow> = read_rows(
        &artifact(tmp.path(), "hardy_table1", Format::Csv),
        Format::Csv,
    )
    .unwrap();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.abs_diff <= 1e-12));
    assert!(!artifact(tmp.path(), "hardy_gap", Format::Csv).exists());
}

#[test]
fn dimwitness_certifies() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(
        &["dimwitness", "--restarts", "16", "--qutrit-restarts", "40"],
        tmp.path(),
    );
    assert!(stdout.contains("dimension >= 3 certified"));
    let r: Vec<DimWitnessReport> = read_rows(
        &artifact(tmp.path(), "dimwitness", Format::Csv),
        Format::Csv,
    )
    .unwrap();
    assert!(r[0].qubit_chsh_best <= 1e-6 && r[0].qutrit_i3322_best >= 0.20);
    let q: QutritConfig = read_json(&tmp.path().join("witnesses/qutrit_i3322.json")).unwrap();
    q.validate().unwrap();
    let _: QubitConfig = read_json(&tmp.path().join("witnesses/qubit_chsh.json")).unwrap();
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bellscope(&["classify", "--tol-mu", "0"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = bellscope(&["boundary", "--method", "ml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    // a zero tolerance below round-off rejects every searched witness
    let o = bellscope(
        &["classify", "--zero-tol", "1e-300", "--restarts", "2"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no witness found for masks"));
}
