//! Probability tables of the ideal CHSH strategy as CSV and JSON.

use selftest::correlations::{all_questions, probability_table, tables_from_json, tables_to_csv, tables_to_json};
use selftest::strategies::{ideal_strategy, Family};

fn main() -> selftest::Result<()> {
    let s = ideal_strategy(&Family::Chsh { theta: 0.5 })?;
    let tables = all_questions(&s.setting_counts())
        .iter()
        .map(|q| probability_table(&s, q))
        .collect::<selftest::Result<Vec<_>>>()?;
    print!("{}", tables_to_csv(&tables)?);
    let json = tables_to_json(&tables);
    assert_eq!(tables_from_json(&json)?, tables);
    println!("{} tables, JSON round trip exact", tables.len());
    Ok(())
}
