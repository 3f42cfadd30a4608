use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn polyspin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyspin")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(record: &'a str, key: &str) -> &'a str {
    record
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in `{record}`"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn gen_graph(dir: &TempDir, n: usize, d: usize, seed: u64) -> PathBuf {
    let p = dir.path().join(format!("g{n}_{d}.txt"));
    let o = polyspin(&["gen", "-n", &n.to_string(), "-d", &d.to_string(), "--seed", &seed.to_string(), "-o", s(&p)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const HARD_CORE: &str = "q 2 delta 0.5\n1 1\n1 0\n";
const ALL_ONES: &str = "q 3 delta 0.5\n1 1 1\n1 1 1\n1 1 1\n";

#[test]
fn gen_writes_certified_graph() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("g.txt");
    let o = polyspin(&["gen", "-n", "64", "-d", "8", "--seed", "1", "-o", s(&p)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 1 + 512);
    let cert = stdout(&o);
    let lambda: f64 = field(&cert, "lambda").parse().unwrap();
    assert!(lambda <= 2.0 * 8f64.sqrt());
    assert_eq!(field(&cert, "pass"), "true");
}

#[test]
fn gen_small_cases() {
    let o = polyspin(&["gen", "-n", "2", "-d", "3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = polyspin(&["gen", "-n", "3", "-d", "3", "--seed", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 9);
    let cert = String::from_utf8(o.stderr).unwrap();
    let lambda: f64 = field(&cert, "lambda").parse().unwrap();
    assert!(lambda.abs() < 1e-9);

    // the seed is mandatory
    let o = polyspin(&["gen", "-n", "3", "-d", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_exact_path_record() {
    let dir = TempDir::new().unwrap();
    let g = gen_graph(&dir, 3, 3, 1);
    let m = write(&dir, "hc.txt", HARD_CORE);
    let o = polyspin(&["estimate", "-g", s(&g), "-m", s(&m), "--eps", "0.5", "--seed", "7"]);
    assert!(o.status.success());
    let rec = stdout(&o);
    assert_eq!(field(&rec, "mode"), "exact");
    // 2·(2³ − 1) + 1 independent sets
    let ln_z: f64 = field(&rec, "lnZ").parse().unwrap();
    assert!((ln_z - 15f64.ln()).abs() < 1e-12);
    assert_eq!(field(&rec, "seed"), "7");
}

#[test]
fn estimate_strict_rejects_small_degree() {
    let dir = TempDir::new().unwrap();
    let g = gen_graph(&dir, 32, 8, 3);
    let m = write(&dir, "hc.txt", HARD_CORE);
    let o = polyspin(&["estimate", "-g", s(&g), "-m", s(&m), "-e", "0.1", "-s", "1", "--mode", "strict"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn estimate_all_ones_json() {
    let dir = TempDir::new().unwrap();
    let g = gen_graph(&dir, 4, 3, 2);
    let m = write(&dir, "ones.txt", ALL_ONES);
    let o = polyspin(&["--format", "json", "estimate", "-g", s(&g), "-m", s(&m), "-e", "0.2", "-s", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let ln_z = v["lnZ"].as_f64().unwrap();
    assert!((ln_z - 8.0 * 3f64.ln()).abs() < 1e-9);
    assert_eq!(v["mode"], "exact");
}

#[test]
fn parse_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let g = gen_graph(&dir, 3, 3, 1);
    let bad = write(&dir, "bad.txt", "q 2 delta 0.5\n1 x\n1 0\n");
    let asym = write(&dir, "asym.txt", "q 2 delta 0.5\n1 0.5\n0 1\n");
    let m = write(&dir, "hc.txt", HARD_CORE);
    let junk = write(&dir, "junk.txt", "not a graph\n");
    for (gp, mp) in [(&g, &bad), (&g, &asym), (&junk, &m)] {
        let o = polyspin(&["estimate", "-g", s(gp), "-m", s(mp), "-e", "0.5", "-s", "1"]);
        assert_eq!(o.status.code(), Some(1));
    }
    let missing = dir.path().join("missing.txt");
    let o = polyspin(&["estimate", "-g", s(&missing), "-m", s(&m), "-e", "0.5", "-s", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_zero_count_gives_empty_file() {
    let dir = TempDir::new().unwrap();
    let g = gen_graph(&dir, 3, 3, 1);
    let m = write(&dir, "hc.txt", HARD_CORE);
    let out = dir.path().join("out.txt");
    let o = polyspin(&["sample", "-g", s(&g), "-m", s(&m), "-e", "0.1", "-s", "1", "-c", "0", "-o", s(&out)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "");
}

#[test]
fn sample_all_ones_is_uniform() {
    let dir = TempDir::new().unwrap();
    let g = gen_graph(&dir, 4, 3, 5);
    let m = write(&dir, "ones.txt", ALL_ONES);
    let out = dir.path().join("out.txt");
    let o = polyspin(&["sample", "-g", s(&g), "-m", s(&m), "-e", "0.1", "-s", "3", "-c", "1000", "-o", s(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<usize>> = text
        .lines()
        .map(|l| l.split(' ').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1000);
    let sigma = (1000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for v in 0..8 {
        for spin in 0..3 {
            let c = rows.iter().filter(|r| r[v] == spin).count() as f64;
            assert!((c - 1000.0 / 3.0).abs() <= 4.0 * sigma, "vertex {v} spin {spin}: {c}");
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let g = gen_graph(&dir, 3, 3, 1);
    let m = write(&dir, "hc.txt", HARD_CORE);
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = polyspin(&[
            "--threads", threads, "sample", "-g", s(&g), "-m", s(&m), "-e", "0.2", "-s", "11", "-c", "200", "--epsilon", "0.5",
            "--size-cap", "6", "--median-runs", "1", "--no-exact", "-o", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(&out).unwrap()
    };
    let a = run("1", "a.txt");
    assert_eq!(a, run("4", "b.txt"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 200);

    let est = |threads: &str| {
        let o = polyspin(&[
            "--threads", threads, "estimate", "-g", s(&g), "-m", s(&m), "-e", "0.2", "-s", "11", "--epsilon", "0.5", "--size-cap", "6",
            "--no-exact",
        ]);
        assert!(o.status.success());
        let rec = stdout(&o);
        (field(&rec, "lnZ").to_string(), field(&rec, "mode").to_string())
    };
    let (x, mode) = est("1");
    assert_eq!(mode, "lab");
    assert_eq!((x, mode), est("3"));
}

#[test]
fn gen_is_deterministic() {
    let a = polyspin(&["gen", "-n", "20", "-d", "4", "--seed", "9"]);
    let b = polyspin(&["gen", "-n", "20", "-d", "4", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let c = polyspin(&["gen", "-n", "20", "-d", "4", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn verify_quick_passes() {
    let o = polyspin(&["verify", "quick"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
