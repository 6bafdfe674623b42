mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selftest::correlations::{all_questions, correlator, probability_table};

const TOL: f64 = 1e-12;

#[test]
fn tables_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let s = common::random_strategy(&mut rng);
        for q in all_questions(&s.setting_counts()) {
            let table = probability_table(&s, &q).unwrap();
            for (a, p) in common::brute_table(&s, &q) {
                let got = table.get(&a);
                assert!(
                    (got - p).abs() < TOL,
                    "case {case} question {} outcome {a:?}: {got} vs {p}",
                    q.label()
                );
            }
        }
    }
}

#[test]
fn correlators_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let s = common::random_strategy(&mut rng);
        for _ in 0..5 {
            let spec = common::random_spec(&s, &mut rng);
            let got = correlator(&s, &spec).unwrap();
            let want = common::brute_correlator(&s, &spec);
            assert!((got - want).abs() < TOL, "case {case}: {got} vs {want}");
        }
    }
}
