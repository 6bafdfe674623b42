//! Tilted CHSH values of the ideal two-qubit strategy across angles, and the
//! operator identities behind them.

use std::f64::consts::PI;

use selftest::conditions::tilted_pair_identities;
use selftest::correlations::{tilted_chsh_value, SignFlips};
use selftest::observables::{alpha_from_theta, tilted_chsh_max};
use selftest::strategies::{ideal_strategy, Family};

fn main() -> selftest::Result<()> {
    println!(
        "{:>8} {:>8} {:>12} {:>12} {:>10}",
        "theta", "alpha", "value", "maximum", "identity"
    );
    for k in [12.0, 8.0, 6.0, 5.0, 4.0] {
        let theta = PI / k;
        let alpha = alpha_from_theta(theta)?;
        let s = ideal_strategy(&Family::Chsh { theta })?;
        let value = tilted_chsh_value(&s, (0, 1), alpha, SignFlips::NONE)?;
        let ids = tilted_pair_identities(&s, theta, 1e-9)?;
        println!(
            "{theta:>8.4} {alpha:>8.4} {value:>12.9} {:>12.9} {:>10.1e}",
            tilted_chsh_max(alpha),
            ids.max_residual
        );
    }
    Ok(())
}
