//! Learn factor graphs with PC on synthetic chain and collider data.
//!
//! cargo run --release --example discover_graph

use causal_colorder::discovery::{discover_pc, PcOptions};
use causal_colorder::synth::{chain_factors, collider_factors};

fn main() -> causal_colorder::Result<()> {
    for (name, values) in [
        ("chain f1 -> f2 -> f3", chain_factors(5000, 0.1, 1)),
        ("collider f1 -> f3 <- f2", collider_factors(5000, 0.1, 2)),
    ] {
        let found = discover_pc(&values, PcOptions::default())?;
        println!("{name}: {} CI tests", found.tests_run);
        // Undirected edges show up once in each direction.
        for e in found.graph.edges() {
            println!("  {} -> {}  MI {:.4} nats", e.from, e.to, e.weight);
        }
        println!("{}\n", found.graph.to_json());
    }
    Ok(())
}
