//! Qudit Schmidt states: block check, operator extraction and the Fourier
//! isometry.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selftest::conditions::schmidt_condition_check;
use selftest::isometry::{
    ancilla_registers, extract_schmidt_operators, factorization_check, qudit_isometry, schmidt_chain_residuals,
};
use selftest::states::{schmidt_state, SchmidtCoefficients};
use selftest::strategies::{adversarial_embed, ideal_strategy, AdversarialTransform, Family};

fn main() -> selftest::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, n) = (4, 3);
    let c = SchmidtCoefficients::random(d, &mut rng)?;
    println!("coefficients {:?}", c.values());
    let ideal = ideal_strategy(&Family::Schmidt { n, coeffs: c.clone() })?;
    let s = adversarial_embed(&ideal, &AdversarialTransform::new(vec![2, 1, 2], 8))?;
    println!(
        "block check: {:.1e}",
        schmidt_condition_check(&s, &c, 1e-9)?.max_residual
    );
    let inputs = extract_schmidt_operators(&s, &c, 1e-9)?;
    let chains = schmidt_chain_residuals(&s, &inputs, &c, 1e-8)?;
    for entry in &chains.entries {
        println!("  {:<48} {:.1e}", entry.label, entry.residual);
    }
    let out = qudit_isometry(&inputs, s.state())?;
    let r = factorization_check(&out, &schmidt_state(&c, n)?, &ancilla_registers(n))?;
    println!("fidelity {:.12}, junk dims {:?}", r.target_fidelity, r.junk_dims);
    Ok(())
}
