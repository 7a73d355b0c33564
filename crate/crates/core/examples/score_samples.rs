//! Fit the surrogate scorer on normal rows and rank held-out rows by anomaly score.
//!
//! cargo run --release --example score_samples

use causal_colorder::eval::{auc_roc, causal_orderings, split, ExperimentOptions, SplitSpec};
use causal_colorder::scoring::{compute_weights, fit, score_table, FitOptions};
use causal_colorder::synth::planted_chain;

fn main() -> causal_colorder::Result<()> {
    let fixture = planted_chain(500, 50, 7);
    let sp = split(&fixture.data, SplitSpec::new(7))?;
    let orderings = causal_orderings(&fixture.factors, &sp.train_rows, &ExperimentOptions::default())?;
    println!("{} orderings, optimum {:.4}", orderings.len(), orderings.optimum);

    let scorer = fit(&sp.train, &orderings, FitOptions::default())?;
    let weights = compute_weights(&fixture.factors.mapping);
    println!("column weights {:?}", weights.as_slice());

    let report = score_table(&scorer, &sp.test.table, &sp.test_rows, &orderings, &weights)?;
    let mut ranked: Vec<_> = report.samples.iter().zip(&sp.test.labels).collect();
    ranked.sort_by(|a, b| b.0.score.total_cmp(&a.0.score));
    println!("\nhighest scores:");
    for (s, label) in ranked.iter().take(8) {
        println!("  row {:>3}  score {:>7.3}  label {label}", s.id, s.score);
    }
    println!("\nAUC {:.4}", auc_roc(&report.scores(), &sp.test.labels)?);
    Ok(())
}
