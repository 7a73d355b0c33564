//! Load a mixed-type CSV, infer column kinds, and serialize one row under two orderings.
//!
//! cargo run --example serialize_table

use causal_colorder::table::{read_table, serialize_with_spans, LoadOptions, Ordering};

const CSV: &str = "\
age,income,occupation,notes
39,77516,Adm-clerical,quiet and careful
50,,Exec-managerial,frequent travel for work
38,215646,Handlers-cleaners,NA
";

fn main() -> causal_colorder::Result<()> {
    let table = read_table(CSV.as_bytes(), &LoadOptions::default())?;
    for col in table.columns() {
        println!("{:<12} {}", col.name, col.kind.as_str());
    }

    let row = &table.rows()[1];
    for ordering in [Ordering::identity(4), Ordering::from_ranks(&[3, 1, 4, 2])?] {
        let (text, spans) = serialize_with_spans(row, &table, &ordering);
        println!("\nranks {:?}\n  {text}", ordering.rank_vector());
        for s in spans {
            println!("  {:<12} bytes {}..{}", table.columns()[s.column].name, s.start, s.end);
        }
    }
    Ok(())
}
