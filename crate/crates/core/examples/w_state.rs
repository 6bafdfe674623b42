//! W state with the last qubit flipped: conditions, identities and the
//! measurement images under the isometry.

use selftest::conditions::{check, w_conditions, w_operator_identities};
use selftest::pipeline::{verify, VerifyOptions};
use selftest::strategies::{ideal_strategy, Family};

fn main() -> selftest::Result<()> {
    for n in 3..=6 {
        let family = Family::W { n };
        let s = ideal_strategy(&family)?;
        let cond = check(&s, &w_conditions(n)?, 1e-9)?;
        let ids = w_operator_identities(&s, 1e-9)?;
        let r = verify(&s, &family, &VerifyOptions::default())?;
        let meas = r.measurements.as_ref().map_or(f64::NAN, |m| m.max_residual);
        println!(
            "N={n}: {} conditions ({:.1e}), {} identities ({:.1e}), measurements {meas:.1e}, fidelity {:.12}",
            cond.entries.len(),
            cond.max_residual,
            ids.entries.len(),
            ids.max_residual,
            r.fidelity
        );
    }
    Ok(())
}
