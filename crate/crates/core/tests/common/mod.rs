//! Brute-force reference evaluation shared by integration tests: builds the
//! full operator as a Kronecker product and traces it against the density
//! matrix.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use selftest::correlations::{CorrelatorSpec, LocalOp, ProductTerm, QuestionTuple};
use selftest::linalg::{random_unitary, CMatrix, StateVector};
use selftest::observables::{PartyMeasurements, Pvm};
use selftest::strategies::{noise_mix, Strategy};

pub type M = DMatrix<Complex64>;

/// Random strategy: 2 to 3 parties, local dims 2 to 4 (total ≤ 64), 1 to 3
/// settings per party with 2 or 3 outcomes, random joint state and noise.
pub fn random_strategy<R: Rng>(rng: &mut R) -> Strategy {
    let n = rng.random_range(2..=3);
    let dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=4)).collect();
    assert!(dims.iter().product::<usize>() <= 64);
    let total: usize = dims.iter().product();
    let amps: Vec<Complex64> = (0..total)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let state = StateVector::normalized(dims.clone(), amps).unwrap();
    let parties = dims
        .iter()
        .map(|&d| {
            let settings = (0..rng.random_range(1..=3))
                .map(|_| random_pvm(d, rng.random_range(2..=d.min(3)), rng))
                .collect();
            PartyMeasurements::new(settings).unwrap()
        })
        .collect();
    let s = Strategy::new(state, parties).unwrap();
    if rng.random_bool(0.5) {
        noise_mix(&s, rng.random_range(0.0..1.0)).unwrap()
    } else {
        s
    }
}

/// Columns of a random unitary split into `outcomes` non-empty groups
/// (`outcomes ≤ d`).
pub fn random_pvm<R: Rng>(d: usize, outcomes: usize, rng: &mut R) -> Pvm {
    let u = random_unitary(d, rng);
    let mut groups = vec![Vec::new(); outcomes];
    for col in 0..d {
        let g = if col < outcomes {
            col
        } else {
            rng.random_range(0..outcomes)
        };
        groups[g].push(col);
    }
    let projectors = groups
        .iter()
        .map(|cols| {
            let mut p = CMatrix::zeros(d, d);
            for &c in cols {
                let v = u.column(c);
                p += v * v.adjoint();
            }
            p
        })
        .collect();
    Pvm::new(projectors).unwrap()
}

pub fn density(s: &Strategy) -> M {
    let psi = M::from_column_slice(s.total_dim(), 1, s.state().amplitudes());
    let pure = &psi * psi.adjoint();
    let d = s.total_dim() as f64;
    let eps = s.noise();
    pure * Complex64::new(1.0 - eps, 0.0) + M::identity(s.total_dim(), s.total_dim()) * Complex64::new(eps / d, 0.0)
}

pub fn kron_chain(factors: &[M]) -> M {
    let mut out = M::from_element(1, 1, Complex64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// `Tr(ρ O) = Σ_ij ρ_ij O_ji`.
fn expect(rho: &M, op: &M) -> Complex64 {
    rho.transpose().component_mul(op).sum()
}

/// `p(a|x)` for every outcome tuple, party 0 most significant.
pub fn brute_table(s: &Strategy, q: &QuestionTuple) -> Vec<(Vec<usize>, f64)> {
    let rho = density(s);
    let pvms: Vec<&Pvm> =
        q.0.iter()
            .enumerate()
            .map(|(l, &x)| s.party(l).unwrap().setting(x).unwrap())
            .collect();
    let counts: Vec<usize> = pvms.iter().map(|p| p.outcome_count()).collect();
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut i| {
            let mut a = vec![0; counts.len()];
            for l in (0..counts.len()).rev() {
                a[l] = i % counts[l];
                i /= counts[l];
            }
            let op = kron_chain(
                &pvms
                    .iter()
                    .zip(&a)
                    .map(|(p, &o)| p.projector(o).clone())
                    .collect::<Vec<_>>(),
            );
            (a, expect(&rho, &op).re)
        })
        .collect()
}

fn local(s: &Strategy, l: usize, op: &LocalOp) -> M {
    let party = s.party(l).unwrap();
    let d = s.dims()[l];
    match op {
        LocalOp::Identity => M::identity(d, d),
        LocalOp::Observable(x) => {
            let p = party.setting(*x).unwrap().projectors();
            &p[0] - &p[1]
        }
        LocalOp::Projector { setting, outcome } => party.setting(*setting).unwrap().projector(*outcome).clone(),
        LocalOp::Combination(parts) => parts.iter().fold(M::zeros(d, d), |acc, (c, o)| {
            acc + local(s, l, o) * Complex64::new(*c, 0.0)
        }),
    }
}

/// `Σ_terms coeff · Tr(ρ ⊗_l M_l)` with at most one op per party per term.
pub fn brute_correlator(s: &Strategy, spec: &CorrelatorSpec) -> f64 {
    let rho = density(s);
    let n = s.party_count();
    spec.terms
        .iter()
        .map(|t| {
            let mut factors: Vec<M> = s.dims().iter().map(|&d| M::identity(d, d)).collect();
            for (l, op) in &t.ops {
                factors[*l] = local(s, *l, op);
            }
            assert_eq!(factors.len(), n);
            t.coeff * expect(&rho, &kron_chain(&factors)).re
        })
        .sum()
}

/// Random correlator with one op per party per term; `Observable` only on
/// two-outcome settings.
pub fn random_spec<R: Rng>(s: &Strategy, rng: &mut R) -> CorrelatorSpec {
    let terms = (0..rng.random_range(1..=3))
        .map(|_| {
            let mut ops = Vec::new();
            for l in 0..s.party_count() {
                let party = s.party(l).unwrap();
                let x = rng.random_range(0..party.setting_count());
                let outcomes = party.setting(x).unwrap().outcome_count();
                let op = match rng.random_range(0..4) {
                    0 => continue,
                    1 if outcomes == 2 => LocalOp::Observable(x),
                    2 => LocalOp::Combination(vec![
                        (0.5, LocalOp::Identity),
                        (-1.5, LocalOp::projector(x, rng.random_range(0..outcomes))),
                    ]),
                    _ => LocalOp::projector(x, rng.random_range(0..outcomes)),
                };
                ops.push((l, op));
            }
            if ops.is_empty() {
                ops.push((0, LocalOp::projector(0, 0)));
            }
            ProductTerm::new(rng.random_range(-2.0..2.0), ops)
        })
        .collect();
    CorrelatorSpec::new("random", terms, 0.0)
}
