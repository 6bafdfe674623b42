use std::f64::consts::{FRAC_PI_4, SQRT_2};

use selftest::conditions::{check, chsh_conditions};
use selftest::correlations::{tilted_chsh_value, SignFlips};
use selftest::pipeline::{verify, VerifyOptions};
use selftest::states::{Graph, SchmidtCoefficients};
use selftest::strategies::{adversarial_embed, ideal_strategy, noise_mix, AdversarialTransform, Family, Strategy};

fn bell() -> Strategy {
    Strategy::from_json(include_str!("fixtures/bell.json")).unwrap()
}

#[test]
fn bell_fixture_loads_and_violates_chsh() {
    let s = bell();
    assert!(s.family().is_none());
    let v = tilted_chsh_value(&s, (0, 1), 0.0, SignFlips::NONE).unwrap();
    assert!((v - 2.0 * SQRT_2).abs() < 1e-12);
    assert!(check(&s, &chsh_conditions(FRAC_PI_4).unwrap(), 1e-9).unwrap().passed);
}

#[test]
fn bell_fixture_passes_full_pipeline() {
    let r = verify(&bell(), &Family::Chsh { theta: FRAC_PI_4 }, &VerifyOptions::default()).unwrap();
    assert!(r.passed, "{:?}", r.failing_labels());
    assert_eq!(r.junk_dims, vec![2, 2]);
}

#[test]
fn serialized_strategies_give_identical_residuals() {
    let family = Family::Dicke { n: 4, k: 2 };
    let s = adversarial_embed(
        &ideal_strategy(&family).unwrap(),
        &AdversarialTransform::new(vec![2, 1, 1, 2], 3),
    )
    .unwrap();
    let back = Strategy::from_json(&s.to_json()).unwrap();
    let a = verify(&s, &family, &VerifyOptions::default()).unwrap();
    let b = verify(&back, &family, &VerifyOptions::default()).unwrap();
    for (x, y) in a.conditions.entries.iter().zip(&b.conditions.entries) {
        assert!((x.residual - y.residual).abs() < 1e-12);
    }
    assert!((a.fidelity - b.fidelity).abs() < 1e-12);
}

#[test]
fn asymmetric_junk_on_one_party() {
    let family = Family::Ghz { n: 3, theta: 0.3 };
    let s = adversarial_embed(
        &ideal_strategy(&family).unwrap(),
        &AdversarialTransform::new(vec![1, 3, 1], 11),
    )
    .unwrap();
    let r = verify(&s, &family, &VerifyOptions::default()).unwrap();
    assert!(r.passed);
    assert!(r.fidelity > 1.0 - 1e-8);
}

#[test]
fn graph_families_on_relabelled_inputs() {
    let (g, _) = Graph::new(4, [(0, 1), (0, 2), (0, 3)])
        .unwrap()
        .relabel_for_selftest()
        .unwrap();
    let family = Family::Graph { graph: g };
    let r = verify(&ideal_strategy(&family).unwrap(), &family, &VerifyOptions::default()).unwrap();
    assert!(r.passed);
}

#[test]
fn noise_lowers_fidelity_and_fails() {
    let family = Family::Schmidt {
        n: 3,
        coeffs: SchmidtCoefficients::from_weights(&[2.0, 1.5, 1.0]).unwrap(),
    };
    let s = noise_mix(&ideal_strategy(&family).unwrap(), 0.01).unwrap();
    let r = verify(&s, &family, &VerifyOptions::default()).unwrap();
    assert!(!r.passed);
    assert!(r.conditions.max_residual > 1e-4);
}
