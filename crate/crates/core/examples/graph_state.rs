//! Graph states from a graph file, relabelled so the last two vertices are
//! adjacent and the last has minimal degree.

use selftest::conditions::{graph_anticommutation_check, graph_conditions};
use selftest::pipeline::{verify, VerifyOptions};
use selftest::states::Graph;
use selftest::strategies::{ideal_strategy, Family};

fn main() -> selftest::Result<()> {
    let text = r#"{"n": 5, "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 0], [0, 2]]}"#;
    let (graph, map) = Graph::from_json(text)?.relabel_for_selftest()?;
    println!("relabelling {map:?}, edges {:?}", graph.edges());
    let family = Family::Graph { graph: graph.clone() };
    let s = ideal_strategy(&family)?;
    println!("{} conditions", graph_conditions(&graph)?.len());
    let anti = graph_anticommutation_check(&s, 1e-9)?;
    for e in &anti.entries {
        println!("  {:<32} {:.1e}", e.label, e.residual);
    }
    let r = verify(&s, &family, &VerifyOptions::default())?;
    println!("fidelity {:.12}, passed {}", r.fidelity, r.passed);
    Ok(())
}
