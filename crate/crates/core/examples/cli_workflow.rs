//! Write a planted-chain dataset and a config file that the `colorder` binary can run.
//!
//! cargo run --example cli_workflow -- /tmp/colorder-demo
//! cargo run --bin colorder -- pipeline --config /tmp/colorder-demo/run.toml

use std::path::PathBuf;

use causal_colorder::synth::planted_chain;

const CONFIG: &str = r#"seed = 0

[paths]
table = "data.csv"
label_column = "label"
factor_defs = "factors.json"
factor_values = "factor_values.csv"
graph = "out/graph.json"
preference = "out/preference.json"
orderings = "out/orderings.json"
scorer = "out/scorer.json"
scores = "out/scores.csv"
breakdown = "out/breakdown.csv"
sequences = "out/sequences.jsonl"
report = "out/report.json"
report_table = "out/report.csv"

[eval]
seeds = [0, 1, 2, 3, 4]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("colorder-demo"));
    planted_chain(500, 50, 0).write_to(&dir)?;
    std::fs::create_dir_all(dir.join("out"))?;
    std::fs::write(dir.join("run.toml"), CONFIG)?;
    println!("wrote {}", dir.display());
    println!("next: colorder pipeline --config {}", dir.join("run.toml").display());
    Ok(())
}
