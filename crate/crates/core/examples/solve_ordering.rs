//! Project a factor graph onto columns and enumerate the near-optimal column orderings.
//!
//! cargo run --example solve_ordering

use causal_colorder::factor::FactorMapping;
use causal_colorder::graph::{Edge, FactorCausalGraph};
use causal_colorder::ordering::{enumerate_top_k, project, solve_lop, EnumerateOptions};

fn main() -> causal_colorder::Result<()> {
    let columns: Vec<String> = ["age", "education", "occupation", "income"].map(String::from).into();
    // education is described by two factors; occupation feeds back into f1.
    let mapping = FactorMapping::new(
        vec!["f1".into(), "f2".into(), "f3".into()],
        columns.clone(),
        vec![
            vec![true, true, false, false],
            vec![false, true, true, false],
            vec![true, false, true, true],
        ],
    )?;
    let edge = |from: &str, to: &str, weight| Edge {
        from: from.into(),
        to: to.into(),
        weight,
    };
    let graph = FactorCausalGraph::new(
        mapping.factors().to_vec(),
        vec![edge("f1", "f2", 0.6), edge("f2", "f3", 0.4), edge("f3", "f1", -0.2)],
    )?;

    let w = project(&graph, &mapping)?;
    println!("preference matrix:");
    for (name, row) in columns.iter().zip(w.rows()) {
        println!("  {name:<10} {row:?}");
    }

    let best = solve_lop(&w)?;
    let names = |o: &causal_colorder::table::Ordering| {
        o.order().iter().map(|&c| columns[c].as_str()).collect::<Vec<_>>().join(" > ")
    };
    println!("\noptimum {:.3}: {}", best.optimum, names(&best.witness));

    let set = enumerate_top_k(&w, EnumerateOptions { k: 5, ..Default::default() })?;
    println!("threshold {:.3}, top {}:", set.threshold, set.len());
    for e in &set.entries {
        println!("  {:.3}  {}", e.objective, names(&e.ordering));
    }
    println!("\n{}", set.to_json());
    Ok(())
}
