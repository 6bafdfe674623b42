//! Hide an ideal strategy behind junk and random local unitaries, then pull
//! the target back out.

use selftest::correlations::{all_questions, probability_table};
use selftest::pipeline::{verify, VerifyOptions};
use selftest::strategies::{adversarial_embed, ideal_strategy, AdversarialTransform, Family};

fn main() -> selftest::Result<()> {
    let family = Family::Ghz { n: 3, theta: 0.3 };
    let ideal = ideal_strategy(&family)?;
    let s = adversarial_embed(&ideal, &AdversarialTransform::new(vec![2, 3, 2], 42))?;
    println!("local dims {:?} -> {:?}", ideal.dims(), s.dims());
    let mut drift: f64 = 0.0;
    for q in all_questions(&ideal.setting_counts()) {
        let (a, b) = (probability_table(&ideal, &q)?, probability_table(&s, &q)?);
        drift = a
            .probs()
            .iter()
            .zip(b.probs())
            .fold(drift, |m, (x, y)| m.max((x - y).abs()));
    }
    println!("max correlation change {drift:.1e}");
    let r = verify(&s, &family, &VerifyOptions::default())?;
    println!("fidelity {:.12}, junk dims {:?}", r.fidelity, r.junk_dims);
    if let Some(junk) = &r.junk_state {
        println!("junk norm {:.12}", junk.norm());
    }
    Ok(())
}
