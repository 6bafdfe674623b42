//! Conditions, identities and SWAP isometry for partially entangled GHZ
//! states.

use selftest::conditions::{check, ghz_conditions};
use selftest::pipeline::{verify, VerifyOptions};
use selftest::strategies::{ideal_strategy, Family};

fn main() -> selftest::Result<()> {
    let theta = 0.4;
    for n in 3..=6 {
        let family = Family::Ghz { n, theta };
        let s = ideal_strategy(&family)?;
        let set = ghz_conditions(n, theta)?;
        let report = check(&s, &set, 1e-9)?;
        let full = verify(&s, &family, &VerifyOptions::default())?;
        println!(
            "N={n}: {} conditions, max residual {:.1e}, fidelity {:.12}, passed {}",
            set.len(),
            report.max_residual,
            full.fidelity,
            full.passed
        );
    }
    let set = ghz_conditions(3, theta)?;
    for spec in &set.specs {
        println!("  {:<40} target {:.6}", spec.label, spec.target);
    }
    Ok(())
}
