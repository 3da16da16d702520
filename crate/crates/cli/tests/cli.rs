use std::path::Path;
use std::process::{Command, Output};

use hsr_core::io::{read_hmap_file, write_hmap_file};
use hsr_core::{Heatmap, Manifest};
use tempfile::TempDir;

fn hsr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = hsr(dir, args);
    assert!(
        out.status.success(),
        "hsr {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &TempDir, name: &str) -> Vec<u8> {
    std::fs::read(dir.path().join(name)).unwrap()
}

fn gen(dir: &TempDir, extra: &[&str]) {
    let mut args = vec!["gen", "--count", "40", "--seed", "3", "--out", "c.hmap"];
    args.extend_from_slice(extra);
    ok(dir.path(), &args);
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = [
        "gen", "--count", "100", "--sigma", "3", "--size", "64", "--seed", "7",
    ];
    ok(dir.path(), &[&args[..], &["--out", "a.hmap"]].concat());
    ok(dir.path(), &[&args[..], &["--out", "b.hmap"]].concat());
    assert_eq!(read(&dir, "a.hmap"), read(&dir, "b.hmap"));
    assert_eq!(read(&dir, "a.json"), read(&dir, "b.json"));
}

#[test]
fn gen_rejects_bad_flags() {
    let dir = TempDir::new().unwrap();
    let out = hsr(dir.path(), &["gen", "--sigma", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("corpus.hmap").exists());
    assert!(!hsr(dir.path(), &["gen", "--noise", "-1"]).status.success());
    assert!(!hsr(dir.path(), &["gen", "--tail-decay", "2"])
        .status
        .success());
    assert!(!hsr(dir.path(), &["gen", "--dc-ratio", "1.5"])
        .status
        .success());
    assert!(!hsr(dir.path(), &["gen", "--out", "missing/c.hmap"])
        .status
        .success());
}

#[test]
fn gen_writes_every_plane_entry() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--noise", "0.01", "--count", "1000"]);
    let m = Manifest::load(&dir.path().join("corpus.json")).unwrap();
    assert_eq!(m.planes.len(), 1000);
    assert_eq!(
        read_hmap_file(&dir.path().join("corpus.hmap"))
            .unwrap()
            .len(),
        1000
    );
}

#[test]
fn fit_clean_corpus_never_falls_back() {
    let dir = TempDir::new().unwrap();
    gen(&dir, &[]);
    for mode in ["unconstrained", "constrained"] {
        let rows = csv_rows(&ok(
            dir.path(),
            &["fit", "--input", "c.hmap", "--mode", mode],
        ));
        assert_eq!(rows.len(), 40);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r[0], i.to_string());
            assert!(r[1] == mode || r[1].starts_with(mode), "{r:?}");
            assert_eq!(r[7], "");
        }
    }
}

#[test]
fn zero_plane_falls_back() {
    let dir = TempDir::new().unwrap();
    gen(&dir, &[]);
    let path = dir.path().join("c.hmap");
    let mut planes = read_hmap_file(&path).unwrap();
    planes[5] = Heatmap::filled(64, 64, 0.0).unwrap();
    write_hmap_file(&dir.path().join("z.hmap"), &planes).unwrap();
    let rows = csv_rows(&ok(dir.path(), &["fit", "--input", "z.hmap"]));
    assert_eq!(rows[5][1], "fallback-argmax");
    assert_eq!(rows[5][7], "ambiguous-peak");
    assert_eq!(rows[4][1], "unconstrained");
}

#[test]
fn json_and_csv_agree() {
    let dir = TempDir::new().unwrap();
    gen(&dir, &["--noise", "0.05", "--dc-ratio", "0.9"]);
    let csv = ok(dir.path(), &["fit", "--input", "c.hmap"]);
    let json = ok(
        dir.path(),
        &["fit", "--input", "c.hmap", "--format", "json"],
    );
    let json: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), json.len());
    for (r, j) in rows.iter().zip(&json) {
        assert_eq!(r[1], j["branch"].as_str().unwrap());
        for (col, key) in [
            (2, "u"),
            (3, "v"),
            (4, "residual"),
            (5, "peak_x"),
            (6, "peak_y"),
        ] {
            let c: f64 = r[col].parse().unwrap();
            assert_eq!(c, j[key].as_f64().unwrap(), "{key}");
        }
        assert_eq!(r[7], j["cause"].as_str().unwrap_or(""));
    }
}

#[test]
fn inputs_are_left_untouched() {
    let dir = TempDir::new().unwrap();
    gen(&dir, &["--noise", "0.02"]);
    let before = (read(&dir, "c.hmap"), read(&dir, "c.json"));
    ok(dir.path(), &["fit", "--input", "c.hmap", "--out", "f.csv"]);
    ok(
        dir.path(),
        &[
            "eval",
            "--fit",
            "f.csv",
            "--manifest",
            "c.json",
            "--ced-out",
            "ced.csv",
        ],
    );
    ok(dir.path(), &["bench", "--input", "c.hmap"]);
    ok(dir.path(), &["loss", "--input", "c.hmap"]);
    assert_eq!(before, (read(&dir, "c.hmap"), read(&dir, "c.json")));
    assert!(
        !hsr(dir.path(), &["fit", "--input", "c.hmap", "--out", "c.hmap"])
            .status
            .success()
    );
    assert_eq!(before.0, read(&dir, "c.hmap"));
}

fn write_fit(dir: &TempDir, name: &str, rows: &[(f64, f64)]) {
    let mut s = String::from("plane,branch,u,v,residual,peak_x,peak_y,cause\n");
    for (i, (u, v)) in rows.iter().enumerate() {
        s += &format!("{i},unconstrained,{u},{v},0,0,0,\n");
    }
    std::fs::write(dir.path().join(name), s).unwrap();
}

fn write_manifest(dir: &TempDir, truths: &[(f64, f64)], norm: f64) {
    let planes: Vec<_> = truths
        .iter()
        .enumerate()
        .map(|(i, (u, v))| {
            serde_json::json!({"index": i, "u_true": u, "v_true": v, "norm_constant": norm})
        })
        .collect();
    let m = serde_json::json!({"version": 1, "sigma_star": 3.0, "size": 64, "planes": planes});
    std::fs::write(dir.path().join("m.json"), m.to_string()).unwrap();
}

#[test]
fn eval_perfect_predictions() {
    let dir = TempDir::new().unwrap();
    let truths = [(10.25, 11.5), (30.0, 40.75), (5.5, 6.125)];
    write_manifest(&dir, &truths, 64.0);
    write_fit(&dir, "f.csv", &truths);
    let out = ok(
        dir.path(),
        &[
            "eval",
            "--fit",
            "f.csv",
            "--manifest",
            "m.json",
            "--ced-out",
            "ced.csv",
        ],
    );
    assert_eq!(out, "name,nme,std,failure\nsdt,0,0,0\n");
    let ced = String::from_utf8(read(&dir, "ced.csv")).unwrap();
    assert!(ced.lines().skip(1).all(|l| l.ends_with(",1")), "{ced}");
}

#[test]
fn eval_hand_records() {
    let dir = TempDir::new().unwrap();
    write_manifest(&dir, &[(0.0, 0.0), (0.0, 0.0)], 100.0);
    write_fit(&dir, "f.csv", &[(2.0, 0.0), (6.0, 0.0)]);
    let args = [
        "eval",
        "--fit",
        "f.csv",
        "--manifest",
        "m.json",
        "--ced-max",
        "0.08",
        "--ced-steps",
        "5",
        "--ced-out",
        "ced.csv",
        "--name",
        "hand",
    ];
    let out = ok(dir.path(), &args);
    assert_eq!(out, "name,nme,std,failure\nhand,0.04,0.02,0\n");
    assert_eq!(
        String::from_utf8(read(&dir, "ced.csv")).unwrap(),
        "threshold,fraction\n0,0\n0.02,0.5\n0.04,0.5\n0.06,1\n0.08,1\n"
    );

    let strict = ok(
        dir.path(),
        &[
            "eval",
            "--fit",
            "f.csv",
            "--manifest",
            "m.json",
            "--threshold",
            "0.05",
        ],
    );
    assert!(strict.ends_with(",0.5\n"), "{strict}");
    let boundary = ok(
        dir.path(),
        &[
            "eval",
            "--fit",
            "f.csv",
            "--manifest",
            "m.json",
            "--threshold",
            "0.06",
        ],
    );
    assert!(boundary.ends_with(",0\n"), "{boundary}");

    let json = ok(
        dir.path(),
        &[
            "eval",
            "--fit",
            "f.csv",
            "--manifest",
            "m.json",
            "--format",
            "json",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["nme"], 0.04);
    assert_eq!(v["ced"]["fractions"][100], 1.0);
}

#[test]
fn eval_reads_fit_json() {
    let dir = TempDir::new().unwrap();
    gen(&dir, &[]);
    ok(dir.path(), &["fit", "--input", "c.hmap", "--out", "f.csv"]);
    ok(
        dir.path(),
        &[
            "fit", "--input", "c.hmap", "--format", "json", "--out", "f.json",
        ],
    );
    let a = ok(
        dir.path(),
        &["eval", "--fit", "f.csv", "--manifest", "c.json"],
    );
    let b = ok(
        dir.path(),
        &["eval", "--fit", "f.json", "--manifest", "c.json"],
    );
    assert_eq!(a, b);
}

#[test]
fn eval_rejects_count_mismatch() {
    let dir = TempDir::new().unwrap();
    write_manifest(&dir, &[(0.0, 0.0), (0.0, 0.0)], 100.0);
    write_fit(&dir, "f.csv", &[(2.0, 0.0)]);
    let out = hsr(
        dir.path(),
        &["eval", "--fit", "f.csv", "--manifest", "m.json"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 records"));
}

#[test]
fn bench_clean_table() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &["gen", "--count", "400", "--seed", "1", "--out", "c.hmap"],
    );
    let rows = csv_rows(&ok(dir.path(), &["bench", "--input", "c.hmap"]));
    let err = |i: usize| rows[i][1].parse::<f64>().unwrap();
    assert_eq!(rows[0][0], "argmax");
    assert!((err(0) - 0.25).abs() < 0.02, "{rows:?}");
    assert!(err(1) < 1e-6 && err(2) < 1e-6, "{rows:?}");
}

#[test]
fn bench_side_is_propagated() {
    let dir = TempDir::new().unwrap();
    gen(&dir, &["--noise", "0.03"]);
    let nine = ok(
        dir.path(),
        &[
            "bench",
            "--input",
            "c.hmap",
            "--methods",
            "sdt-unconstrained",
        ],
    );
    let fifteen = ok(
        dir.path(),
        &[
            "bench",
            "--input",
            "c.hmap",
            "--methods",
            "sdt-unconstrained",
            "--side",
            "15",
        ],
    );
    assert_ne!(nine, fifteen);
    assert_eq!(
        hsr(dir.path(), &["bench", "--input", "c.hmap", "--side", "8"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hsr(
            dir.path(),
            &["bench", "--input", "c.hmap", "--methods", "mean"]
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn attn_check_reports() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["attn-check"]);
    assert!(out.lines().nth(1).unwrap().ends_with(",true,true"), "{out}");
    let zero = ok(
        dir.path(),
        &["attn-check", "--gamma", "0", "--format", "json"],
    );
    let v: serde_json::Value = serde_json::from_str(&zero).unwrap();
    assert_eq!(v["identity_at_zero"], true);
    assert_eq!(v["pass"], true);
    let bad = hsr(dir.path(), &["attn-check", "--n", "4", "--o-n", "5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn loss_uses_default_lambda() {
    let dir = TempDir::new().unwrap();
    gen(&dir, &["--noise", "0.02"]);
    let out = ok(dir.path(), &["loss", "--input", "c.hmap"]);
    let row = &csv_rows(&out)[0];
    assert_eq!(row[2], "0.0625");
    let (js, fdl, total): (f64, f64, f64) = (
        row[0].parse().unwrap(),
        row[1].parse().unwrap(),
        row[3].parse().unwrap(),
    );
    assert!(js > 0.0 && fdl > 0.0);
    assert!((total - (js + fdl / 16.0)).abs() <= 1e-8 * total);
    let half = ok(
        dir.path(),
        &["loss", "--input", "c.hmap", "--lambda", "0.5"],
    );
    assert_eq!(csv_rows(&half)[0][2], "0.5");
}

#[test]
fn thread_override_is_validated() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hsr"))
        .args(["gen", "--count", "2"])
        .current_dir(dir.path())
        .env("HSR_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!out.status.success());
}
