//! Compare causal and random orderings, with and without factor-count weights.
//!
//! cargo run --release --example evaluation_grid [seeds]

use causal_colorder::eval::{compare_report, ExperimentOptions, GridConfig};
use causal_colorder::synth::planted_chain;

fn main() -> causal_colorder::Result<()> {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let fixture = planted_chain(500, 50, 0);

    let report = compare_report(
        &fixture.data,
        &fixture.factors,
        &GridConfig::full_grid(),
        &seeds,
        &ExperimentOptions::default(),
    )?;
    println!("{:<22} {:>8} {:>8}", "config", "AUC", "F1");
    for cell in &report.cells {
        println!("{:<22} {:>8.4} {:>8.4}", cell.config, cell.mean_auc, cell.mean_f1);
    }
    Ok(())
}
