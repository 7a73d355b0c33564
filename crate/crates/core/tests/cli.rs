use std::path::Path;
use std::process::{Command, Output};

use causal_colorder::ordering::OrderingSet;
use causal_colorder::synth::planted_chain;

fn colorder(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorder"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn order_solves_the_three_cycle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("w.json"),
        r#"{"columns":["c1","c2","c3"],"weights":[[0,2,0],[0,0,1],[1,0,0]]}"#,
    )
    .unwrap();
    ok(colorder(dir.path(), &["order", "--preference", "w.json", "--orderings", "o.json"]));
    let set = OrderingSet::load(dir.path().join("o.json")).unwrap();
    assert_eq!(set.optimum, 3.0);
    assert_eq!(set.entries[0].ordering.rank_vector(), vec![1, 2, 3]);

    let w = [[0.0, 2.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let objective = |order: &[usize; 3]| {
        let mut total = 0.0;
        for a in 0..3 {
            for b in a + 1..3 {
                total += w[order[a]][order[b]];
            }
        }
        total
    };
    let best = perms.iter().map(objective).fold(0.0, f64::max);
    assert_eq!(set.optimum, best);
    let kept = perms.iter().filter(|o| objective(o) >= 0.9 * best).count();
    assert_eq!(set.len(), kept);
}

const CONFIG: &str = r#"
seed = 4

[paths]
table = "data.csv"
label_column = "label"
factor_defs = "factors.json"
factor_values = "factor_values.csv"
graph = "out/graph.json"
preference = "out/w.json"
orderings = "out/orderings.json"
scorer = "out/scorer.json"
scores = "out/scores.csv"
report = "out/report.json"

[eval]
seeds = [0, 1, 2]
"#;

fn planted_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    planted_chain(200, 20, 4).write_to(dir.path()).unwrap();
    std::fs::create_dir(dir.path().join("out")).unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    dir
}

#[test]
fn pipeline_writes_full_grid() {
    let dir = planted_dir();
    ok(colorder(dir.path(), &["pipeline", "--config", "run.toml"]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    let cells = report["cells"].as_array().unwrap();
    let labels: Vec<&str> = cells.iter().map(|c| c["config"].as_str().unwrap()).collect();
    assert_eq!(labels, ["causal/factor-count", "causal/uniform", "random/factor-count", "random/uniform"]);
    assert!(cells.iter().all(|c| c["runs"].as_array().unwrap().len() == 3));
}

#[test]
fn pipeline_matches_individual_stages() {
    let whole = planted_dir();
    ok(colorder(whole.path(), &["pipeline", "--config", "run.toml"]));
    let staged = planted_dir();
    for stage in ["discover", "project", "order", "fit", "score", "eval"] {
        ok(colorder(staged.path(), &[stage, "--config", "run.toml"]));
    }
    for artifact in ["graph.json", "w.json", "orderings.json", "scorer.json", "scores.csv", "report.json"] {
        let a = std::fs::read(whole.path().join("out").join(artifact)).unwrap();
        let b = std::fs::read(staged.path().join("out").join(artifact)).unwrap();
        assert!(a == b, "{artifact} differs");
    }
}

#[test]
fn discover_without_factor_values_is_usage_error() {
    let dir = planted_dir();
    let out = colorder(
        dir.path(),
        &["discover", "--table", "data.csv", "--label-column", "label", "--graph", "g.json"],
    );
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_table_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), "a,b\n1,2\n3\n").unwrap();
    std::fs::write(dir.path().join("o.json"), r#"{"optimum":0,"threshold":0,"orderings":[{"ranks":[1,2],"objective":0}]}"#)
        .unwrap();
    let out = colorder(dir.path(), &["export", "--table", "t.csv", "--orderings", "o.json", "--sequences", "s.jsonl"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
