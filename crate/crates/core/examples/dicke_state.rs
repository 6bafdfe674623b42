//! Dicke states: the two-step condition set and full verification.

use selftest::conditions::{check, dicke_conditions};
use selftest::pipeline::{verify, VerifyOptions};
use selftest::strategies::{ideal_strategy, Family};

fn main() -> selftest::Result<()> {
    for (n, k) in [(4, 1), (4, 2), (5, 2), (5, 3), (6, 3)] {
        let family = Family::Dicke { n, k };
        let s = ideal_strategy(&family)?;
        let set = dicke_conditions(n, k)?;
        let zeros = set.specs.iter().filter(|c| c.target == 0.0).count();
        let cond = check(&s, &set, 1e-9)?;
        let r = verify(&s, &family, &VerifyOptions::default())?;
        println!(
            "N={n} k={k}: {} projected, {zeros} vanishing, max residual {:.1e}, fidelity {:.12}",
            set.len() - zeros,
            cond.max_residual,
            r.fidelity
        );
    }
    Ok(())
}
