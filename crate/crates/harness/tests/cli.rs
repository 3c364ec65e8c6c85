use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flock::io::read_table;
use flock::seeds::sha256_hex;

fn flock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flock")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).trim().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn equality_with(replacements: &[(&str, &str)]) -> String {
    let mut text = std::fs::read_to_string(configs().join("equality.toml")).unwrap();
    for (from, to) in replacements {
        assert!(text.contains(from), "{from}");
        text = text.replace(from, to);
    }
    text
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_zero_horizon_writes_one_snapshot_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &equality_with(&[("t_end = 5.0", "t_end = 0.0"), ("checkpoints = [0.5, 1.0, 2.0, 5.0]", "")]));
    let out = dir.path().join("run");
    let res = flock(&["simulate", "--config", &cfg, "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let (_, rows) = read_table(&std::fs::read_to_string(out.join("moments.csv")).unwrap(), "m").unwrap();
    assert_eq!(rows.len(), 1);
    let snaps: Vec<_> = std::fs::read_dir(out.join("snapshots")).unwrap().collect();
    assert_eq!(snaps.len(), 1);
}

#[test]
fn simulate_is_deterministic_and_manifest_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("acceptance.toml");
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("n = 256", "n = 40")
        .replace("t_end = 50.0", "t_end = 2.0")
        .replace("checkpoints = [1.0, 8.0, 10.0]", "checkpoints = [1.0]")
        .replace("time = 8.0", "time = 2.0");
    let cfg = write(dir.path(), "c.toml", &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = flock(&["simulate", "--config", &cfg, "--out", s(out)]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
    }
    let read = |p: &Path| std::fs::read(p.join("moments.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    let listed: Vec<(String, String)> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect();
    let mut on_disk = Vec::new();
    for entry in walk(&a) {
        let rel = entry.strip_prefix(&a).unwrap().to_str().unwrap().replace('\\', "/");
        if rel != "manifest.json" {
            on_disk.push(rel);
        }
    }
    on_disk.sort();
    let mut names: Vec<String> = listed.iter().map(|f| f.0.clone()).collect();
    names.sort();
    assert_eq!(names, on_disk);
    for (path, hash) in &listed {
        assert_eq!(&sha256_hex(&std::fs::read(a.join(path)).unwrap()), hash, "{path}");
    }

    let other_seed = dir.path().join("c");
    assert_eq!(code(&flock(&["simulate", "--config", &cfg, "--out", s(&other_seed), "--seed", "5"])), 0);
    assert_ne!(read(&a), read(&other_seed));
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn simulate_equality_case_follows_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = flock(&["simulate", "--config", s(&configs().join("equality.toml")), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let (header, rows) = read_table(&std::fs::read_to_string(out.join("moments.csv")).unwrap(), "m").unwrap();
    let (t, gf) = (0, header.iter().position(|h| h == "Gf").unwrap());
    let g0 = rows[0][gf];
    assert_eq!(g0, 1.0);
    assert!(rows.len() > 10);
    for r in &rows {
        let exact = g0 * (-2.0 * r[t]).exp();
        assert!((r[gf] - exact).abs() <= 1e-6 * exact, "t = {}: {} vs {exact}", r[t], r[gf]);
    }
}

#[test]
fn simulate_input_and_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &equality_with(&[("dt = 0.01", "dt = 0.01\nstep = 1")]));
    let res = flock(&["simulate", "--config", &bad, "--out", s(&dir.path().join("x"))]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("bad.toml:18"), "{}", stderr(&res));
    assert!(stderr(&res).contains("step"), "{}", stderr(&res));

    let res = flock(&["simulate", "--config", s(&dir.path().join("missing.toml"))]);
    assert_eq!(code(&res), 2);

    let short = write(dir.path(), "short.toml", &equality_with(&[("observer_stride = 10", "observer_stride = 1\nmax_steps = 5")]));
    let out = dir.path().join("partial");
    let res = flock(&["simulate", "--config", &short, "--out", s(&out)]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"partial\""), "{manifest}");
    let (_, rows) = read_table(&std::fs::read_to_string(out.join("moments.csv")).unwrap(), "m").unwrap();
    assert!(rows.len() >= 2);
}

fn discrete(dir: &Path, name: &str, k: usize, rows: &[&[f64]]) -> String {
    let mut text = format!("# discrete {k}\n");
    for r in rows {
        text.push_str(&r.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    write(dir, name, &text)
}

#[test]
fn w1_command() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = discrete(d, "a.csv", 2, &[&[0.2, 0.0, 0.0], &[0.5, 1.0, 2.0], &[0.3, 3.0, -1.0]]);
    let b = discrete(d, "b.csv", 2, &[&[0.4, 1.0, 1.0], &[0.4, 2.0, 2.0], &[0.2, -1.0, 0.0]]);

    let res = flock(&["w1", &a, &a]);
    assert_eq!((code(&res), stdout(&res)), (0, "0.000000000000".to_string()));

    let p = discrete(d, "p.csv", 2, &[&[1.0, 0.0, 0.0]]);
    let q = discrete(d, "q.csv", 2, &[&[1.0, 3.0, 0.0]]);
    assert_eq!(stdout(&flock(&["w1", &p, &q])), "3.000000000000");

    // Values of the coupling LP solved independently.
    for (metric, expect) in [("euclidean", 1.548_528_137_423_856_9), ("sum", 1.9)] {
        let res = flock(&["w1", &a, &b, "--metric", metric]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        let got: f64 = stdout(&res).parse().unwrap();
        assert!((got - expect).abs() <= 1e-9, "{metric}: {got}");
    }

    let line = discrete(d, "line.csv", 1, &[&[1.0, 0.0]]);
    assert_eq!(code(&flock(&["w1", &a, &line])), 2);
    let broken = write(d, "broken.csv", "# discrete 2\n0.5,1\n");
    let res = flock(&["w1", &a, &broken]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("broken.csv:2"), "{}", stderr(&res));
    assert_eq!(code(&flock(&["w1", &a, s(&d.join("nope.csv"))])), 2);
}

#[test]
fn w1_reads_snapshot_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(code(&flock(&["simulate", "--config", s(&configs().join("equality.toml")), "--out", s(&out)])), 0);
    let mut snaps: Vec<PathBuf> = walk(&out.join("snapshots"));
    snaps.sort();
    let (first, last) = (s(&snaps[0]), s(snaps.last().unwrap()));
    assert_eq!(stdout(&flock(&["w1", first, first])), "0.000000000000");
    let e: f64 = stdout(&flock(&["w1", first, last])).parse().unwrap();
    let sum: f64 = stdout(&flock(&["w1", first, last, "--metric", "sum"])).parse().unwrap();
    assert!(e > 0.0 && sum >= e - 1e-12, "{e} {sum}");
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("decay");
    let res = flock(&["verify", "--config", s(&configs().join("equality.toml")), "--suite", "decay", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}{}", stdout(&res), stderr(&res));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let names: Vec<&str> = report["verdicts"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["conservation", "decay"]);
    for v in report["verdicts"].as_array().unwrap() {
        assert!(out.join(v["series"].as_str().unwrap()).exists());
    }

    let adv = dir.path().join("adv");
    let res = flock(&["verify", "--config", s(&configs().join("adversarial.toml")), "--out", s(&adv)]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("A3_smallness"), "{}", stderr(&res));
    assert!(!adv.join("moments.csv").exists());

    let drifting = write(
        dir.path(),
        "drift.toml",
        &equality_with(&[("v = [[1.0], [-1.0]]", "v = [[2.0], [0.0]]"), ("gamma_window = 1.0", "gamma_window = 1.0\nsupport_c_cap = 1e-3")]),
    );
    let res = flock(&["verify", "--config", &drifting, "--suite", "support", "--out", s(&dir.path().join("sup"))]);
    assert_eq!(code(&res), 1, "{}{}", stdout(&res), stderr(&res));
    assert!(stdout(&res).starts_with("FAIL support"), "{}", stdout(&res));

    let res = flock(&["verify", "--config", s(&configs().join("equality.toml")), "--suite", "meanfield"]);
    assert_eq!(code(&res), 2, "explicit atoms have no sampled law: {}", stderr(&res));
    assert_eq!(code(&flock(&["verify", "--config", s(&configs().join("equality.toml")), "--suite", "bogus"])), 2);
}

#[test]
fn check_assumptions_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok");
    let res = flock(&["check-assumptions", "--config", s(&configs().join("acceptance.toml")), "--out", s(&ok)]);
    assert_eq!(code(&res), 0, "{}{}", stdout(&res), stderr(&res));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ok.join("assumptions.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["cstar"].as_f64().unwrap() > 0.0);

    let bad = dir.path().join("bad");
    let res = flock(&["check-assumptions", "--config", s(&configs().join("adversarial.toml")), "--out", s(&bad)]);
    assert_eq!(code(&res), 2);
    assert!(bad.join("assumptions.json").exists());
}
