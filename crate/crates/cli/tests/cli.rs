//! End-to-end checks of the binary: exit codes, output stability, and the
//! snapshot round trip.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_triejoin"))
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, content: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn k5_pruned() -> String {
    let mut out = String::new();
    for i in 0..5 {
        for j in 0..i {
            out.push_str(&format!("{i} {j}\n"));
        }
    }
    out
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

#[test]
fn count_triangle_on_pruned_k5_prints_ten() {
    let fx = Fixture::new();
    let data = fx.file("k5.txt", &k5_pruned());
    let query = fx.file(
        "q.tj",
        "CountTriangle(;w:long) :- R(x,y),S(y,z),T(x,z); w=<<COUNT(*)>>.\n",
    );
    let out = bin()
        .args(["query", "--dataset"])
        .arg(&data)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "10");
}

#[test]
fn parse_error_exits_two() {
    let fx = Fixture::new();
    let data = fx.file("e.txt", "0 1\n");
    let query = fx.file("bad.tj", "Q(x) :-\n");
    let out = bin()
        .args(["query", "--dataset"])
        .arg(&data)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_exits_one() {
    let fx = Fixture::new();
    let query = fx.file("q.tj", "Q(x,y) :- Edge(x,y).\n");
    let out = bin()
        .args(["query", "--dataset", "/nonexistent/never.txt", "--query"])
        .arg(&query)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let fx = Fixture::new();
    let data = fx.file("k5.txt", &k5_pruned());
    let query = fx.file("tri.tj", "Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).\n");
    let run = || {
        let out = bin()
            .args(["query", "--ordering", "random", "--seed", "7", "--dataset"])
            .arg(&data)
            .args(["--query"])
            .arg(&query)
            .output()
            .unwrap();
        assert!(out.status.success());
        stdout(&out)
    };
    assert_eq!(run(), run());
}

#[test]
fn snapshot_round_trip_preserves_results() {
    let fx = Fixture::new();
    let data = fx.file("k5.txt", &k5_pruned());
    let snap = fx.path("k5.snap");
    let query = fx.file(
        "q.tj",
        "CountTriangle(;w:long) :- R(x,y),S(y,z),T(x,z); w=<<COUNT(*)>>.\n",
    );

    let load = bin()
        .args(["load", "--dataset"])
        .arg(&data)
        .args(["--snapshot"])
        .arg(&snap)
        .output()
        .unwrap();
    assert!(load.status.success(), "{}", String::from_utf8_lossy(&load.stderr));
    assert!(snap.exists());

    // Query from the snapshot alone.
    let out = bin()
        .args(["query", "--snapshot"])
        .arg(&snap)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "10");
}

#[test]
fn explain_shows_barbell_shape() {
    let fx = Fixture::new();
    let mut edges = String::new();
    for (a, b) in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (0, 3)] {
        edges.push_str(&format!("{a} {b}\n{b} {a}\n"));
    }
    let data = fx.file("bb.txt", &edges);
    let query = fx.file(
        "bb.tj",
        "CB(;w:long) :- R(x,y),S(y,z),T(x,z),U(x,xp),Rp(xp,yp),Sp(yp,zp),Tp(xp,zp); w=<<COUNT(*)>>.\n",
    );
    let out = bin()
        .args(["explain", "--dataset"])
        .arg(&data)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("fhw 3/2"), "{text}");
    assert!(text.contains("dedup->1"), "{text}");
    assert_eq!(text.matches("node ").count(), 3);

    let forced = bin()
        .args(["explain", "--no-ghd", "--dataset"])
        .arg(&data)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    let text = stdout(&forced);
    assert!(text.contains("fhw 3"), "{text}");
    assert_eq!(text.matches("node ").count(), 1);
}

#[test]
fn bench_repeat_protocol() {
    let fx = Fixture::new();
    let data = fx.file("k5.txt", &k5_pruned());
    let query = fx.file(
        "q.tj",
        "CountTriangle(;w:long) :- R(x,y),S(y,z),T(x,z); w=<<COUNT(*)>>.\n",
    );
    let out = bin()
        .args(["bench", "--repeat", "7", "--dataset"])
        .arg(&data)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["repeats"], 7);
    assert_eq!(doc["timings_ms"].as_array().unwrap().len(), 7);
    let timings: Vec<f64> = doc["timings_ms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let mut sorted = timings.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let expect = sorted[1..6].iter().sum::<f64>() / 5.0;
    let got = doc["mean_ms_trimmed"].as_f64().unwrap();
    assert!((got - expect).abs() < 1e-9);
}

#[test]
fn bench_on_empty_graph_reports_zero_work() {
    let fx = Fixture::new();
    let data = fx.file("empty.txt", "# no edges\n");
    let query = fx.file(
        "q.tj",
        "CountTriangle(;w:long) :- R(x,y),S(y,z),T(x,z); w=<<COUNT(*)>>.\n",
    );
    let out = bin()
        .args(["bench", "--repeat", "3", "--dataset"])
        .arg(&data)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["results"]["scalar"], 0.0);
    assert_eq!(doc["metrics"]["rules"][0]["inner_loop_iterations"], 0);
}

#[test]
fn sssp_query_prints_distances() {
    let fx = Fixture::new();
    let data = fx.file(
        "p.txt",
        "start 1\n1 2\n2 1\n2 3\n3 2\n",
    );
    let query = fx.file(
        "sssp.tj",
        "SSSP(x;y:int) :- Edge(\"start\",x); y=1.\nSSSP(x;y:int)* :- Edge(w,x),SSSP(w); y=<<MIN(w)>>+1.\n",
    );
    let out = bin()
        .args(["query", "--dataset"])
        .arg(&data)
        .args(["--query"])
        .arg(&query)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut lines: Vec<(String, i64)> = stdout(&out)
        .lines()
        .map(|l| {
            let mut it = l.split('\t');
            (
                it.next().unwrap().to_string(),
                it.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    lines.sort();
    assert_eq!(
        lines,
        vec![
            ("1".to_string(), 1),
            ("2".to_string(), 2),
            ("3".to_string(), 3)
        ]
    );
}
