//! White noise breaks the conditions: residuals grow linearly in the noise
//! weight.

use selftest::pipeline::{verify, VerifyOptions};
use selftest::strategies::{ideal_strategy, noise_mix, Family};

fn main() -> selftest::Result<()> {
    let family = Family::W { n: 4 };
    let ideal = ideal_strategy(&family)?;
    for eps in [0.0, 1e-6, 1e-4, 1e-2, 1e-1] {
        let r = verify(&noise_mix(&ideal, eps)?, &family, &VerifyOptions::default())?;
        println!(
            "eps {eps:<7.0e} max residual {:.3e}  fidelity {:.9}  passed {}",
            r.conditions.max_residual, r.fidelity, r.passed
        );
    }
    Ok(())
}
