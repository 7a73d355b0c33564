//! Hand serialized rows to an outside scorer and read its per-column NLLs back.
//!
//! Here the "outside scorer" is the surrogate itself, so the imported scores must
//! match the native ones.
//!
//! cargo run --release --example external_bridge

use causal_colorder::eval::{causal_orderings, split, ExperimentOptions, SplitSpec};
use causal_colorder::scoring::{
    column_nll, compute_weights, export_sequences, fit, import_external_nll, read_sequences, score_table, FitOptions,
    ScoreReport,
};
use causal_colorder::synth::planted_chain;

fn main() -> causal_colorder::Result<()> {
    let fixture = planted_chain(200, 20, 3);
    let sp = split(&fixture.data, SplitSpec::new(3))?;
    let orderings = causal_orderings(&fixture.factors, &sp.train_rows, &ExperimentOptions::default())?;
    let scorer = fit(&sp.train, &orderings, FitOptions::default())?;
    let weights = compute_weights(&fixture.factors.mapping);

    let mut jsonl = Vec::new();
    export_sequences(&sp.test.table, &sp.test_rows, &orderings, &mut jsonl)?;
    let lines = read_sequences(jsonl.as_slice())?;
    println!("exported {} sequences; first:\n  {}", lines.len(), String::from_utf8_lossy(jsonl.split(|&b| b == b'\n').next().unwrap()));

    let all: Vec<_> = orderings.orderings().cloned().collect();
    let mut csv = String::from("sample,ordering,column,nll\n");
    for line in &lines {
        let i = sp.test_rows.iter().position(|&r| r == line.sample).unwrap();
        let nll = column_nll(&scorer, &sp.test.table.rows()[i], &all[line.ordering])?;
        for &[column, _, _] in &line.spans {
            csv.push_str(&format!("{},{},{column},{}\n", line.sample, line.ordering, nll[column]));
        }
    }

    let nll = import_external_nll(csv.as_bytes(), &sp.test_rows, orderings.len(), scorer.n_columns())?;
    let imported = ScoreReport::from_nll(
        sp.test.table.column_names().into_iter().map(str::to_owned).collect(),
        weights.clone(),
        &sp.test_rows,
        nll,
    )?;
    let native = score_table(&scorer, &sp.test.table, &sp.test_rows, &orderings, &weights)?;
    let worst = native
        .scores()
        .iter()
        .zip(imported.scores())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max |native - imported| = {worst:e}");
    Ok(())
}
