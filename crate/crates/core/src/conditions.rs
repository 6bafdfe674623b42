//! Self-testing condition sets for each family, evaluated as correlator
//! specs, and the operator identities they imply.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_4, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::{
    block_structure_check, chsh_terms, correlator, probability_table, schmidt_questions, tilted_chsh_terms,
    CorrelatorSpec, LocalOp, ProductTerm, SignFlips,
};
use crate::error::{Error, Result};
use crate::linalg::{apply_on_registers, sub_norm, vec_norm, CMatrix, C64};
use crate::observables::{alpha_from_theta, extract_zx, mu_from_theta, tilted_chsh_max, CHSH_X_COEFFS, CHSH_Z_COEFFS};
use crate::states::{binomial, Graph, SchmidtCoefficients};
use crate::strategies::{Family, Strategy};

/// One measured quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub label: String,
    pub measured: f64,
    pub target: f64,
    pub residual: f64,
}

impl ResidualEntry {
    pub fn new(label: impl Into<String>, measured: f64, target: f64) -> Self {
        ResidualEntry {
            label: label.into(),
            measured,
            target,
            residual: (measured - target).abs(),
        }
    }

    /// A norm that should vanish.
    pub fn norm(label: impl Into<String>, value: f64) -> Self {
        ResidualEntry::new(label, value, 0.0)
    }
}

/// Residuals of a family of checks. NaN residuals count as failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub entries: Vec<ResidualEntry>,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckReport {
    pub fn from_entries(entries: Vec<ResidualEntry>, tol: f64) -> Self {
        let max_residual = entries.iter().fold(0.0f64, |acc, e| {
            if e.residual.is_nan() || acc.is_nan() {
                f64::NAN
            } else {
                acc.max(e.residual)
            }
        });
        let passed = entries.iter().all(|e| e.residual <= tol);
        CheckReport {
            entries,
            max_residual,
            tol,
            passed,
        }
    }

    pub fn merge(reports: impl IntoIterator<Item = CheckReport>, tol: f64) -> Self {
        CheckReport::from_entries(reports.into_iter().flat_map(|r| r.entries).collect(), tol)
    }

    pub fn failing(&self) -> impl Iterator<Item = &ResidualEntry> {
        self.entries
            .iter()
            .filter(move |e| e.residual.is_nan() || e.residual > self.tol)
    }
}

/// Correlator specs and the family they certify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSet {
    pub family: Family,
    pub specs: Vec<CorrelatorSpec>,
}

impl ConditionSet {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("condition sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }
}

fn z_plus() -> LocalOp {
    LocalOp::projector(0, 0)
}

fn z_minus() -> LocalOp {
    LocalOp::projector(0, 1)
}

fn pattern(bits: &[usize]) -> String {
    bits.iter().map(|&b| if b == 0 { '+' } else { '-' }).collect()
}

fn bits_of(value: usize, len: usize) -> Vec<usize> {
    (0..len).map(|l| (value >> (len - 1 - l)) & 1).collect()
}

/// The two-party tilted CHSH condition at angle θ.
pub fn chsh_conditions(theta: f64) -> Result<ConditionSet> {
    let alpha = alpha_from_theta(theta)?;
    Ok(ConditionSet {
        family: Family::Chsh { theta },
        specs: vec![CorrelatorSpec::new(
            "tilted CHSH (0,1)",
            tilted_chsh_terms((0, 1), alpha, SignFlips::NONE),
            tilted_chsh_max(alpha),
        )],
    })
}

/// Computational marginals, σ_x patterns of the first `N-2` parties, and
/// the projected tilted CHSH between the last two parties.
pub fn ghz_conditions(n: usize, theta: f64) -> Result<ConditionSet> {
    let family = Family::Ghz { n, theta };
    family.validate()?;
    let alpha = alpha_from_theta(theta)?;
    let c2 = theta.cos().powi(2);
    let (a, b) = (n - 2, n - 1);
    let mut specs = Vec::new();
    for i in 0..=a {
        specs.push(CorrelatorSpec::new(
            format!("Z+ marginal, party {i}"),
            vec![ProductTerm::new(1.0, vec![(i, z_plus())])],
            c2,
        ));
    }
    for i in 0..a {
        specs.push(CorrelatorSpec::new(
            format!("Z+ pair, parties ({i},{a})"),
            vec![ProductTerm::new(1.0, vec![(i, z_plus()), (a, z_plus())])],
            c2,
        ));
    }
    let weight = 1.0 / (1usize << a) as f64;
    let patterns: Vec<Vec<usize>> = (0..1usize << a).map(|v| bits_of(v, a)).collect();
    for bits in &patterns {
        let ops = bits
            .iter()
            .enumerate()
            .map(|(i, &o)| (i, LocalOp::projector(1, o)))
            .collect();
        specs.push(CorrelatorSpec::new(
            format!("X pattern {}", pattern(bits)),
            vec![ProductTerm::new(1.0, ops)],
            weight,
        ));
    }
    for bits in &patterns {
        let odd = bits.iter().sum::<usize>() % 2 == 1;
        let conditions: Vec<_> = bits
            .iter()
            .enumerate()
            .map(|(i, &o)| (i, LocalOp::projector(1, o)))
            .collect();
        specs.push(
            CorrelatorSpec::new(
                format!("projected tilted CHSH ({a},{b}), X pattern {}", pattern(bits)),
                tilted_chsh_terms((a, b), alpha, SignFlips::parity(odd)),
                tilted_chsh_max(alpha) * weight,
            )
            .conditioned_on(&conditions),
        );
    }
    Ok(ConditionSet { family, specs })
}

/// CHSH between `i` and the last party `b`, `Z_i D + Z_i E + X_i D - X_i E`.
fn w_bell(i: usize, b: usize) -> Vec<ProductTerm> {
    chsh_terms(
        i,
        b,
        [LocalOp::Observable(0), LocalOp::Observable(1)],
        [LocalOp::Observable(0), LocalOp::Observable(1)],
        0.0,
    )
}

/// Conditions for `σ_x` on the last party applied to the W state.
pub fn w_conditions(n: usize) -> Result<ConditionSet> {
    let family = Family::W { n };
    family.validate()?;
    let nf = n as f64;
    let last = n - 1;
    let mut specs = Vec::new();
    for i in 0..last {
        let others: Vec<(usize, LocalOp)> = (0..last).filter(|&l| l != i).map(|l| (l, z_plus())).collect();
        specs.push(CorrelatorSpec::new(
            format!("Z+ on all but {i}"),
            vec![ProductTerm::new(1.0, others.clone())],
            2.0 / nf,
        ));
        specs.push(
            CorrelatorSpec::new(
                format!("projected CHSH ({i},{last})"),
                w_bell(i, last),
                4.0 * SQRT_2 / nf,
            )
            .conditioned_on(&others),
        );
        specs.push(CorrelatorSpec::new(
            format!("Z- marginal, party {i}"),
            vec![ProductTerm::new(1.0, vec![(i, z_minus())])],
            1.0 / nf,
        ));
        let mut ops = others;
        ops.push((i, z_minus()));
        specs.push(CorrelatorSpec::new(
            format!("Z- on {i}, Z+ on the rest"),
            vec![ProductTerm::new(1.0, ops)],
            1.0 / nf,
        ));
    }
    Ok(ConditionSet { family, specs })
}

/// Subsets of `0..n` of size `k` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            if n - v < k - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// `(I ± (D+E)/√2)/2` on the last party.
fn last_z_projector(outcome: usize) -> LocalOp {
    let s = if outcome == 0 { 0.5 } else { -0.5 };
    LocalOp::Combination(vec![
        (0.5, LocalOp::Identity),
        (s * CHSH_Z_COEFFS[0], LocalOp::Observable(0)),
        (s * CHSH_Z_COEFFS[1], LocalOp::Observable(1)),
    ])
}

/// Conditions for `σ_x` on the last party applied to the Dicke state with
/// `k` excitations. For `k < ⌊n/2⌋` the set for `n - k` is conjugated by
/// `σ_x` on every party.
pub fn dicke_conditions(n: usize, k: usize) -> Result<ConditionSet> {
    let family = Family::Dicke { n, k };
    family.validate()?;
    if k < n / 2 {
        let mirror = dicke_conditions(n, n - k)?;
        let last = n - 1;
        let specs = mirror
            .specs
            .into_iter()
            .map(|spec| CorrelatorSpec {
                label: format!("{} [complemented]", spec.label),
                terms: spec
                    .terms
                    .into_iter()
                    .map(|t| ProductTerm {
                        coeff: t.coeff,
                        ops: t.ops.into_iter().map(|(l, op)| (l, flip_all(&op, l == last))).collect(),
                    })
                    .collect(),
                target: spec.target,
            })
            .collect();
        return Ok(ConditionSet { family, specs });
    }
    let last = n - 1;
    let norm = binomial(n, k) as f64;
    let mut specs = Vec::new();
    for s in subsets(last, n - k - 1) {
        let rest: Vec<usize> = (0..last).filter(|l| !s.contains(l)).collect();
        let projected: Vec<(usize, LocalOp)> = s.iter().map(|&l| (l, z_plus())).collect();
        let tag = format!("S={s:?}");
        for &i in &rest {
            let mut flipped = projected.clone();
            flipped.extend(rest.iter().filter(|&&l| l != i).map(|&l| (l, z_minus())));
            specs.push(CorrelatorSpec::new(
                format!("{tag}: Z- on all but {i}"),
                vec![ProductTerm::new(1.0, flipped.clone())],
                2.0 / norm,
            ));
            specs.push(
                CorrelatorSpec::new(
                    format!("{tag}: projected CHSH ({i},{last})"),
                    w_bell(i, last),
                    4.0 * SQRT_2 / norm,
                )
                .conditioned_on(&flipped),
            );
            let mut single = projected.clone();
            single.push((i, z_plus()));
            specs.push(CorrelatorSpec::new(
                format!("{tag}: Z+ on {i}"),
                vec![ProductTerm::new(1.0, single)],
                1.0 / norm,
            ));
            let mut ops = flipped;
            ops.push((i, z_plus()));
            specs.push(CorrelatorSpec::new(
                format!("{tag}: Z+ on {i}, Z- on the rest"),
                vec![ProductTerm::new(1.0, ops)],
                1.0 / norm,
            ));
        }
    }
    for ones in subsets(last, k + 1) {
        for tail in 0..2 {
            let mut ops: Vec<(usize, LocalOp)> = (0..last)
                .map(|l| (l, if ones.contains(&l) { z_minus() } else { z_plus() }))
                .collect();
            ops.push((last, last_z_projector(tail)));
            let bits: Vec<usize> = (0..last).map(|l| ones.contains(&l) as usize).chain([tail]).collect();
            specs.push(CorrelatorSpec::new(
                format!("Z pattern {} vanishes", pattern(&bits)),
                vec![ProductTerm::new(1.0, ops)],
                0.0,
            ));
        }
    }
    Ok(ConditionSet { family, specs })
}

/// Conjugation by `σ_x`: `Z → -Z`, `X → X`, `D → -E`, `E → -D`.
fn flip_all(op: &LocalOp, last: bool) -> LocalOp {
    op.map_leaves(&|leaf| match (leaf, last) {
        (LocalOp::Identity, _) => LocalOp::Identity,
        (LocalOp::Observable(0), false) => LocalOp::Observable(0).scaled(-1.0),
        (LocalOp::Projector { setting: 0, outcome }, false) => LocalOp::projector(0, 1 - outcome),
        (LocalOp::Observable(x), true) => LocalOp::Observable(1 - x).scaled(-1.0),
        (LocalOp::Projector { setting, outcome }, true) => LocalOp::projector(1 - setting, 1 - outcome),
        (other, _) => other.clone(),
    })
}

fn minus_count(nu: &[usize], bits: &[usize], within: &BTreeSet<usize>) -> usize {
    nu.iter()
        .zip(bits)
        .filter(|(l, &b)| b == 1 && within.contains(l))
        .count()
}

/// Conditions for the graph state of a labelled graph (see
/// [`Graph::relabel_for_selftest`]). The last party's `Z` and `X` are
/// `(D+E)/√2` and `(D-E)/√2`.
pub fn graph_conditions(g: &Graph) -> Result<ConditionSet> {
    let family = Family::Graph { graph: g.clone() };
    family.validate()?;
    let n = g.vertex_count();
    let (a, b) = (n - 2, n - 1);
    let z_of = |l: usize| {
        if l == b {
            LocalOp::Combination(vec![
                (CHSH_Z_COEFFS[0], LocalOp::Observable(0)),
                (CHSH_Z_COEFFS[1], LocalOp::Observable(1)),
            ])
        } else {
            LocalOp::Observable(0)
        }
    };
    let x_of = |l: usize| {
        if l == b {
            LocalOp::Combination(vec![
                (CHSH_X_COEFFS[0], LocalOp::Observable(0)),
                (CHSH_X_COEFFS[1], LocalOp::Observable(1)),
            ])
        } else {
            LocalOp::Observable(1)
        }
    };
    let z_proj = |l: usize, o: usize| {
        if l == b {
            last_z_projector(o)
        } else {
            LocalOp::projector(0, o)
        }
    };
    let mut specs = Vec::new();

    let nu: Vec<usize> = g.pair_neighbors(a, b)?.into_iter().collect();
    let na: BTreeSet<usize> = g.neighbors(a)?;
    let nb: BTreeSet<usize> = g.neighbors(b)?;
    let weight = 1.0 / (1usize << nu.len()) as f64;
    for v in 0..1usize << nu.len() {
        let bits = bits_of(v, nu.len());
        let proj: Vec<(usize, LocalOp)> = nu.iter().zip(&bits).map(|(&l, &o)| (l, z_proj(l, o))).collect();
        let tag = format!("pair ({a},{b}), tau={}", pattern(&bits));
        if !nu.is_empty() {
            specs.push(CorrelatorSpec::new(
                format!("{tag}: Z marginal"),
                vec![ProductTerm::new(1.0, proj.clone())],
                weight,
            ));
        }
        // The branch carries stabilizers (-1)^{m_a} X_a Z_b and (-1)^{m_b} Z_a X_b.
        let sa = if minus_count(&nu, &bits, &na) % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        let sb = if minus_count(&nu, &bits, &nb) % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        specs.push(
            CorrelatorSpec::new(
                format!("{tag}: projected CHSH"),
                chsh_terms(
                    a,
                    b,
                    [LocalOp::Observable(1).scaled(sa), LocalOp::Observable(0).scaled(sb)],
                    [LocalOp::Observable(0), LocalOp::Observable(1)],
                    0.0,
                ),
                2.0 * SQRT_2 * weight,
            )
            .conditioned_on(&proj),
        );
    }

    for &(u, v) in g.edges() {
        if (u.min(v), u.max(v)) == (a, b) {
            continue;
        }
        let nu: Vec<usize> = g.pair_neighbors(u, v)?.into_iter().collect();
        let weight = 1.0 / (1usize << nu.len()) as f64;
        for t in 0..1usize << nu.len() {
            let bits = bits_of(t, nu.len());
            let proj: Vec<(usize, LocalOp)> = nu.iter().zip(&bits).map(|(&l, &o)| (l, z_proj(l, o))).collect();
            if !nu.is_empty() {
                specs.push(CorrelatorSpec::new(
                    format!("pair ({u},{v}), tau={}: Z marginal", pattern(&bits)),
                    vec![ProductTerm::new(1.0, proj.clone())],
                    weight,
                ));
            }
            for (i, j) in [(u, v), (v, u)] {
                let nj = g.neighbors(j)?;
                let sign = if minus_count(&nu, &bits, &nj) % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                let mut ops = proj.clone();
                ops.push((i, z_of(i)));
                ops.push((j, x_of(j)));
                specs.push(CorrelatorSpec::new(
                    format!("pair ({i},{j}), tau={}: Z_{i} X_{j}", pattern(&bits)),
                    vec![ProductTerm::new(1.0, ops)],
                    sign * weight,
                ));
            }
        }
    }
    Ok(ConditionSet { family, specs })
}

/// Condition set of a correlator-based family. Schmidt families are checked
/// on tables instead, see [`schmidt_condition_check`].
pub fn conditions_for(family: &Family) -> Result<ConditionSet> {
    match family {
        Family::Chsh { theta } => chsh_conditions(*theta),
        Family::Ghz { n, theta } => ghz_conditions(*n, *theta),
        Family::W { n } => w_conditions(*n),
        Family::Dicke { n, k } => dicke_conditions(*n, *k),
        Family::Graph { graph } => graph_conditions(graph),
        Family::Schmidt { .. } => Err(Error::Domain(
            "Schmidt conditions are table-based; use schmidt_condition_check".into(),
        )),
    }
}

/// Evaluates every spec; residual is `|measured - target|`.
pub fn check(s: &Strategy, conditions: &ConditionSet, tol: f64) -> Result<CheckReport> {
    s.check_arity(&conditions.family)?;
    let entries = conditions
        .specs
        .par_iter()
        .map(|spec| {
            Ok(ResidualEntry::new(
                spec.label.clone(),
                correlator(s, spec)?,
                spec.target,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_entries(entries, tol))
}

/// Computes the unshifted and shifted tables and compares them with the
/// ideal block structure.
pub fn schmidt_condition_check(s: &Strategy, c: &SchmidtCoefficients, tol: f64) -> Result<CheckReport> {
    let n = s.party_count();
    s.check_arity(&Family::Schmidt { n, coeffs: c.clone() })?;
    let (unshifted, shifted) = schmidt_questions(n);
    let questions: Vec<_> = unshifted.into_iter().chain(shifted).collect();
    let tables = questions
        .par_iter()
        .map(|q| probability_table(s, q))
        .collect::<Result<Vec<_>>>()?;
    block_structure_check(&tables, c, tol)
}

/// Per-party `Z` and `X` as Hermitian unitaries: settings 0 and 1 for every
/// party but the last, and the regularized combinations of the last party's
/// two settings at angle `mu`.
#[derive(Debug, Clone)]
pub struct QubitFrame {
    pub z: Vec<CMatrix>,
    pub x: Vec<CMatrix>,
}

impl QubitFrame {
    pub fn from_strategy(s: &Strategy, mu: f64) -> Result<Self> {
        let n = s.party_count();
        let mut z = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        for l in 0..n {
            let (a0, a1) = (s.observable(l, 0)?, s.observable(l, 1)?);
            if l + 1 == n {
                let (zl, xl) = extract_zx(&a0, &a1, mu)?;
                z.push(zl.into_matrix());
                x.push(xl.into_matrix());
            } else {
                z.push(a0);
                x.push(a1);
            }
        }
        Ok(QubitFrame { z, x })
    }
}

/// Applies `ops` in order, the first entry acting first.
pub(crate) fn apply_chain(s: &Strategy, v: &[C64], ops: &[(usize, &CMatrix)]) -> Result<Vec<C64>> {
    let mut out = v.to_vec();
    for (l, m) in ops {
        out = apply_on_registers(&out, s.dims(), &[*l], m)?;
    }
    Ok(out)
}

fn combine(a: &[C64], ca: f64, b: &[C64], cb: f64) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x * ca + y * cb).collect()
}

/// Two-party identities `Z_A ψ = Z_B ψ` and
/// `cos θ X_A (I - Z_A) ψ = sin θ X_B (I + Z_A) ψ`, with the B-side
/// operators regularized from its tilted pair.
pub fn tilted_pair_identities(s: &Strategy, theta: f64, tol: f64) -> Result<CheckReport> {
    if s.party_count() != 2 {
        return Err(Error::Dimension(format!("expected 2 parties, got {}", s.party_count())));
    }
    let f = QubitFrame::from_strategy(s, mu_from_theta(theta)?)?;
    let psi = s.state().amplitudes();
    let za = apply_chain(s, psi, &[(0, &f.z[0])])?;
    let zb = apply_chain(s, psi, &[(1, &f.z[1])])?;
    let minus = combine(psi, 1.0, &za, -1.0);
    let plus = combine(psi, 1.0, &za, 1.0);
    let lhs = apply_chain(s, &minus, &[(0, &f.x[0])])?;
    let rhs = apply_chain(s, &plus, &[(1, &f.x[1])])?;
    let entries = vec![
        ResidualEntry::norm("Z_A psi = Z_B psi", sub_norm(&za, &zb)),
        ResidualEntry::norm(
            "cos X_A (I - Z_A) psi = sin X_B (I + Z_A) psi",
            vec_norm(&combine(&lhs, theta.cos(), &rhs, -theta.sin())),
        ),
    ];
    Ok(CheckReport::from_entries(entries, tol))
}

/// `Z_i ψ = Z_0 ψ` for every party and
/// `X_0 ⋯ X_{N-1} (I - Z_0) ψ = tan θ (I + Z_0) ψ`. Evaluated on the pure
/// state; noise weight is ignored.
pub fn ghz_operator_identities(s: &Strategy, theta: f64, tol: f64) -> Result<CheckReport> {
    let n = s.party_count();
    if n < 2 {
        return Err(Error::Dimension("need at least 2 parties".into()));
    }
    let f = QubitFrame::from_strategy(s, mu_from_theta(theta)?)?;
    let psi = s.state().amplitudes();
    let z0 = apply_chain(s, psi, &[(0, &f.z[0])])?;
    let mut entries = Vec::new();
    for i in 1..n {
        let zi = apply_chain(s, psi, &[(i, &f.z[i])])?;
        entries.push(ResidualEntry::norm(format!("Z_{i} psi = Z_0 psi"), sub_norm(&zi, &z0)));
    }
    let minus = combine(psi, 1.0, &z0, -1.0);
    let plus = combine(psi, 1.0, &z0, 1.0);
    let xs: Vec<(usize, &CMatrix)> = f.x.iter().enumerate().collect();
    let lhs = apply_chain(s, &minus, &xs)?;
    entries.push(ResidualEntry::norm(
        "X...X (I - Z_0) psi = tan(theta) (I + Z_0) psi",
        vec_norm(&combine(&lhs, 1.0, &plus, -theta.tan())),
    ));
    Ok(CheckReport::from_entries(entries, tol))
}

fn projector_plus(z: &CMatrix) -> CMatrix {
    let id = CMatrix::identity(z.nrows(), z.ncols());
    (id + z) * C64::new(0.5, 0.0)
}

fn projector_minus(z: &CMatrix) -> CMatrix {
    let id = CMatrix::identity(z.nrows(), z.ncols());
    (id - z) * C64::new(0.5, 0.0)
}

/// Identities on the branches `ψ̃_i = √(N/2) Π_{l≠i} Z_l^+ ψ` between each
/// party `i` and the last party, plus `Z_i^- Z_j^- ψ = 0`.
pub fn w_operator_identities(s: &Strategy, tol: f64) -> Result<CheckReport> {
    let n = s.party_count();
    if n < 3 {
        return Err(Error::Dimension("need at least 3 parties".into()));
    }
    let f = QubitFrame::from_strategy(s, FRAC_PI_4)?;
    let last = n - 1;
    let psi = s.state().amplitudes();
    let plus: Vec<CMatrix> = f.z.iter().map(projector_plus).collect();
    let minus: Vec<CMatrix> = f.z.iter().map(projector_minus).collect();
    let scale = (n as f64 / 2.0).sqrt();
    let mut entries = Vec::new();
    for i in 0..last {
        let proj: Vec<(usize, &CMatrix)> = (0..last).filter(|&l| l != i).map(|l| (l, &plus[l])).collect();
        branch_identities(s, &f, &proj, i, scale, 1.0, &format!("psi_{i}"), &mut entries)?;
    }
    for i in 0..last {
        for j in i + 1..last {
            let v = apply_chain(s, psi, &[(i, &minus[i]), (j, &minus[j])])?;
            entries.push(ResidualEntry::norm(format!("Z-_{i} Z-_{j} psi"), vec_norm(&v)));
        }
    }
    Ok(CheckReport::from_entries(entries, tol))
}

/// The branch identities of the W test on every projected branch used by
/// the Dicke conditions, in the `σ_x`-transformed frame (`Z → -Z`).
pub fn dicke_operator_identities(s: &Strategy, k: usize, tol: f64) -> Result<CheckReport> {
    let n = s.party_count();
    Family::Dicke { n, k }.validate()?;
    // Small k is the σ_x-conjugate of n - k: projections swap and Z keeps
    // its sign.
    let complement = k < n / 2;
    let kk = if complement { n - k } else { k };
    let sigma = if complement { 1.0 } else { -1.0 };
    let f = QubitFrame::from_strategy(s, FRAC_PI_4)?;
    let last = n - 1;
    let plus: Vec<CMatrix> = f.z.iter().map(projector_plus).collect();
    let minus: Vec<CMatrix> = f.z.iter().map(projector_minus).collect();
    let (on_s, on_r) = if complement { (&minus, &plus) } else { (&plus, &minus) };
    let scale = (binomial(n, kk) as f64 / 2.0).sqrt();
    let mut entries = Vec::new();
    for set in subsets(last, n - kk - 1) {
        let rest: Vec<usize> = (0..last).filter(|l| !set.contains(l)).collect();
        for &i in &rest {
            let proj: Vec<(usize, &CMatrix)> = set
                .iter()
                .map(|&l| (l, &on_s[l]))
                .chain(rest.iter().filter(|&&l| l != i).map(|&l| (l, &on_r[l])))
                .collect();
            branch_identities(
                s,
                &f,
                &proj,
                i,
                scale,
                sigma,
                &format!("S={set:?}, psi_{i}"),
                &mut entries,
            )?;
        }
    }
    Ok(CheckReport::from_entries(entries, tol))
}

/// `(Z_i - Z_N)ψ̃`, `[X_i(I + σZ_N) - X_N(I - σZ_i)]ψ̃` and `{Z_i, X_i}ψ̃`
/// on `ψ̃ = scale · Π proj ψ`.
#[allow(clippy::too_many_arguments)]
fn branch_identities(
    s: &Strategy,
    f: &QubitFrame,
    proj: &[(usize, &CMatrix)],
    i: usize,
    scale: f64,
    sigma: f64,
    tag: &str,
    entries: &mut Vec<ResidualEntry>,
) -> Result<()> {
    let last = s.party_count() - 1;
    let branch: Vec<C64> = apply_chain(s, s.state().amplitudes(), proj)?
        .into_iter()
        .map(|a| a * scale)
        .collect();
    let zi = apply_chain(s, &branch, &[(i, &f.z[i])])?;
    let zn = apply_chain(s, &branch, &[(last, &f.z[last])])?;
    entries.push(ResidualEntry::norm(format!("(Z_{i} - Z_N) {tag}"), sub_norm(&zi, &zn)));

    let t1 = apply_chain(s, &combine(&branch, 1.0, &zn, sigma), &[(i, &f.x[i])])?;
    let t2 = apply_chain(s, &combine(&branch, 1.0, &zi, -sigma), &[(last, &f.x[last])])?;
    entries.push(ResidualEntry::norm(
        format!("[X_{i}(I + Z_N) - X_N(I - Z_{i})] {tag}"),
        sub_norm(&t1, &t2),
    ));

    let zx = apply_chain(s, &branch, &[(i, &f.x[i]), (i, &f.z[i])])?;
    let xz = apply_chain(s, &branch, &[(i, &f.z[i]), (i, &f.x[i])])?;
    entries.push(ResidualEntry::norm(
        format!("{{Z_{i}, X_{i}}} {tag}"),
        vec_norm(&combine(&zx, 1.0, &xz, 1.0)),
    ));
    Ok(())
}

/// `{X_i, Z_i} ψ = 0` for every party.
pub fn graph_anticommutation_check(s: &Strategy, tol: f64) -> Result<CheckReport> {
    anticommutation_check(s, FRAC_PI_4, tol)
}

pub fn anticommutation_check(s: &Strategy, mu: f64, tol: f64) -> Result<CheckReport> {
    let f = QubitFrame::from_strategy(s, mu)?;
    let psi = s.state().amplitudes();
    let entries = (0..s.party_count())
        .map(|i| {
            let zx = apply_chain(s, psi, &[(i, &f.x[i]), (i, &f.z[i])])?;
            let xz = apply_chain(s, psi, &[(i, &f.z[i]), (i, &f.x[i])])?;
            Ok(ResidualEntry::norm(
                format!("{{X_{i}, Z_{i}}} psi"),
                vec_norm(&combine(&zx, 1.0, &xz, 1.0)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_entries(entries, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_z, StateVector};
    use crate::observables::{ideal_ghz_measurements_with, BinaryObservable, LastPartyAngle, PartyMeasurements};
    use crate::states::ghz_state;
    use crate::strategies::{adversarial_embed, ideal_strategy, noise_mix, AdversarialTransform};
    use std::f64::consts::PI;

    const TOL: f64 = 1e-9;

    fn passes(family: Family) -> CheckReport {
        let s = ideal_strategy(&family).unwrap();
        let report = check(&s, &conditions_for(&family).unwrap(), TOL).unwrap();
        assert!(report.passed, "{family:?}: {:?}", report.failing().next());
        report
    }

    #[test]
    fn report_bookkeeping() {
        let empty = CheckReport::from_entries(vec![], 1e-9);
        assert!(empty.passed);
        assert_eq!(empty.max_residual, 0.0);
        let nan = CheckReport::from_entries(vec![ResidualEntry::norm("x", f64::NAN)], 1e-9);
        assert!(!nan.passed);
        assert_eq!(nan.failing().count(), 1);
    }

    #[test]
    fn empty_condition_set_passes() {
        let s = ideal_strategy(&Family::W { n: 3 }).unwrap();
        let set = ConditionSet {
            family: Family::W { n: 3 },
            specs: vec![],
        };
        let r = check(&s, &set, TOL).unwrap();
        assert!(r.passed && r.max_residual == 0.0);
    }

    #[test]
    fn ghz_spec_count_and_pass() {
        for n in 3..=6 {
            let set = ghz_conditions(n, 0.3).unwrap();
            assert_eq!(set.len(), (2 * n - 3) + 2 * (1 << (n - 2)));
            passes(Family::Ghz { n, theta: 0.3 });
        }
    }

    #[test]
    fn ghz_four_party_matches_hand_written_set() {
        let theta = PI / 7.0;
        let alpha = alpha_from_theta(theta).unwrap();
        let set = ghz_conditions(4, theta).unwrap();
        let c2 = theta.cos().powi(2);
        // Five computational conditions: A, B, C singles, then AC and BC.
        let expected_ops: Vec<Vec<(usize, LocalOp)>> = vec![
            vec![(0, z_plus())],
            vec![(1, z_plus())],
            vec![(2, z_plus())],
            vec![(0, z_plus()), (2, z_plus())],
            vec![(1, z_plus()), (2, z_plus())],
        ];
        for (spec, ops) in set.specs.iter().zip(&expected_ops) {
            assert_eq!(spec.terms, vec![ProductTerm::new(1.0, ops.clone())]);
            assert_eq!(spec.target, c2);
        }
        for a in 0..2 {
            for b in 0..2 {
                let idx = 5 + 2 * a + b;
                let proj = vec![(0, LocalOp::projector(1, a)), (1, LocalOp::projector(1, b))];
                assert_eq!(set.specs[idx].terms, vec![ProductTerm::new(1.0, proj.clone())]);
                assert_eq!(set.specs[idx].target, 0.25);
                // αC0 + C0D0 + C0D1 + (-1)^{a+b}(C1D0 - C1D1), built by hand.
                let s = if (a + b) % 2 == 1 { -1.0 } else { 1.0 };
                let c0 = LocalOp::Observable(0);
                let c1 = LocalOp::Observable(1).scaled(s);
                let mut hand = vec![
                    ProductTerm::new(alpha, vec![(2, c0.clone())]),
                    ProductTerm::new(1.0, vec![(2, c0.clone()), (3, LocalOp::Observable(0))]),
                    ProductTerm::new(1.0, vec![(2, c0), (3, LocalOp::Observable(1))]),
                    ProductTerm::new(1.0, vec![(2, c1.clone()), (3, LocalOp::Observable(0))]),
                    ProductTerm::new(-1.0, vec![(2, c1), (3, LocalOp::Observable(1))]),
                ];
                for t in &mut hand {
                    let mut ops = proj.clone();
                    ops.append(&mut t.ops);
                    t.ops = ops;
                }
                assert_eq!(set.specs[9 + 2 * a + b].terms, hand);
                assert!((set.specs[9 + 2 * a + b].target - (8.0 + 2.0 * alpha * alpha).sqrt() / 4.0).abs() < 1e-15);
            }
        }
        assert_eq!(set.len(), 13);
    }

    #[test]
    fn ghz_values_on_ideal() {
        let theta = 0.5;
        let s = ideal_strategy(&Family::Ghz { n: 4, theta }).unwrap();
        let set = ghz_conditions(4, theta).unwrap();
        let v = correlator(&s, &set.specs[0]).unwrap();
        assert!((v - theta.cos().powi(2)).abs() < 1e-14);
        let v = correlator(&s, &set.specs[5]).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn ghz_swapped_last_party_fails() {
        let theta = 0.4;
        let family = Family::Ghz { n: 3, theta };
        let ideal = ideal_strategy(&family).unwrap();
        let mut parties = ideal.parties().to_vec();
        let last = parties.pop().unwrap();
        parties.push(PartyMeasurements::new(vec![last.settings()[1].clone(), last.settings()[0].clone()]).unwrap());
        let s = Strategy::new(ideal.state().clone(), parties).unwrap();
        let r = check(&s, &conditions_for(&family).unwrap(), TOL).unwrap();
        assert!(!r.passed && r.max_residual >= 0.1, "{}", r.max_residual);
    }

    #[test]
    fn ghz_theta_angle_for_last_party_fails() {
        let theta = PI / 8.0;
        let s = Strategy::new(
            ghz_state(3, theta).unwrap(),
            ideal_ghz_measurements_with(3, theta, LastPartyAngle::Theta).unwrap(),
        )
        .unwrap();
        let r = check(&s, &ghz_conditions(3, theta).unwrap(), TOL).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn ghz_identities_ideal_and_embedded() {
        for n in [2, 3, 5] {
            let theta = 0.35;
            let s = Strategy::new(
                ghz_state(n, theta).unwrap(),
                crate::observables::ideal_ghz_measurements(n, theta).unwrap(),
            )
            .unwrap();
            assert!(ghz_operator_identities(&s, theta, TOL).unwrap().passed);
            let e = adversarial_embed(&s, &AdversarialTransform::new(vec![2; n], 3)).unwrap();
            assert!(ghz_operator_identities(&e, theta, TOL).unwrap().passed);
        }
    }

    #[test]
    fn pair_identities_equal_angle_case() {
        let theta = PI / 4.0;
        let s = ideal_strategy(&Family::Chsh { theta }).unwrap();
        let a = tilted_pair_identities(&s, theta, TOL).unwrap();
        let b = ghz_operator_identities(&s, theta, TOL).unwrap();
        assert!(a.passed && b.passed);
        let e = adversarial_embed(&s, &AdversarialTransform::new(vec![3, 2], 11)).unwrap();
        assert!(tilted_pair_identities(&e, theta, TOL).unwrap().passed);
    }

    #[test]
    fn w_conditions_three_parties() {
        let set = w_conditions(3).unwrap();
        assert_eq!(set.len(), 8);
        let targets: BTreeSet<u64> = set.specs.iter().map(|s| s.target.to_bits()).collect();
        let expected: BTreeSet<u64> = [2.0 / 3.0, 4.0 * SQRT_2 / 3.0, 1.0 / 3.0]
            .iter()
            .map(|t: &f64| t.to_bits())
            .collect();
        assert_eq!(targets, expected);
        for n in 3..=6 {
            assert_eq!(w_conditions(n).unwrap().len(), 4 * (n - 1));
            passes(Family::W { n });
            let s = ideal_strategy(&Family::W { n }).unwrap();
            assert!(w_operator_identities(&s, TOL).unwrap().passed);
        }
    }

    #[test]
    fn w_identities_on_product_state() {
        // |0...0⟩ with ideal settings: the projected CHSH identity holds
        // trivially on the first branch, but the marginals are wrong.
        let n = 3;
        let ideal = ideal_strategy(&Family::W { n }).unwrap();
        let s = Strategy::new(
            StateVector::basis(vec![2; n], &[0; 3]).unwrap(),
            ideal.parties().to_vec(),
        )
        .unwrap();
        let ids = w_operator_identities(&s, TOL).unwrap();
        assert!(ids.entries[0].residual < TOL);
        let r = check(&s, &w_conditions(n).unwrap(), TOL).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn dicke_subsets_and_pass() {
        let set = dicke_conditions(4, 2).unwrap();
        let subset_tags: BTreeSet<String> = set
            .specs
            .iter()
            .filter_map(|s| {
                s.label
                    .split(':')
                    .next()
                    .filter(|t| t.starts_with("S="))
                    .map(str::to_string)
            })
            .collect();
        assert_eq!(subset_tags.len(), 3);
        for (n, k) in [(4, 2), (5, 2), (5, 3), (6, 3), (4, 3), (5, 1), (6, 2), (6, 1), (3, 1)] {
            passes(Family::Dicke { n, k });
        }
    }

    #[test]
    fn dicke_identities() {
        for (n, k) in [(4, 2), (5, 2), (5, 3), (6, 3), (5, 1), (6, 2), (4, 3)] {
            let s = ideal_strategy(&Family::Dicke { n, k }).unwrap();
            let r = dicke_operator_identities(&s, k, TOL).unwrap();
            assert!(r.passed, "({n},{k}) {:?}", r.failing().next());
            let e = adversarial_embed(&s, &AdversarialTransform::new(vec![2; n], 8)).unwrap();
            assert!(dicke_operator_identities(&e, k, TOL).unwrap().passed);
        }
        // The W state violates the Dicke branch identities for k = 2.
        let w = ideal_strategy(&Family::W { n: 4 }).unwrap();
        assert!(!dicke_operator_identities(&w, 2, TOL).unwrap().passed);
    }

    #[test]
    fn xx_relation_holds_on_branches_only() {
        // X_i X_N maps the (-,-) part of the branch to the (+,+) part; the
        // unprojected state is not invariant under X_i X_N.
        let n = 4;
        let s = ideal_strategy(&Family::W { n }).unwrap();
        let f = QubitFrame::from_strategy(&s, FRAC_PI_4).unwrap();
        let psi = s.state().amplitudes();
        let last = n - 1;
        let plus: Vec<CMatrix> = f.z.iter().map(projector_plus).collect();
        let minus: Vec<CMatrix> = f.z.iter().map(projector_minus).collect();
        for i in 0..last {
            let rest: Vec<(usize, &CMatrix)> = (0..last).filter(|&l| l != i).map(|l| (l, &plus[l])).collect();
            let branch = apply_chain(&s, psi, &rest).unwrap();
            let lhs = apply_chain(
                &s,
                &branch,
                &[(i, &minus[i]), (last, &minus[last]), (i, &f.x[i]), (last, &f.x[last])],
            )
            .unwrap();
            let rhs = apply_chain(&s, &branch, &[(i, &plus[i]), (last, &plus[last])]).unwrap();
            assert!(sub_norm(&lhs, &rhs) < 1e-12);
            let flipped = apply_chain(&s, psi, &[(i, &f.x[i]), (last, &f.x[last])]).unwrap();
            assert!(sub_norm(&flipped, psi) > 0.5);
        }
    }

    #[test]
    fn dicke_top_k_is_transformed_w() {
        // k = n-1: one empty subset, four specs per party, no vanishing patterns.
        let n = 4;
        let set = dicke_conditions(n, n - 1).unwrap();
        assert_eq!(set.len(), 4 * (n - 1));
    }

    #[test]
    fn dicke_conditions_reject_w_state() {
        let fam = Family::Dicke { n: 4, k: 2 };
        let w = ideal_strategy(&Family::W { n: 4 }).unwrap();
        let r = check(&w, &conditions_for(&fam).unwrap(), TOL).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn graph_conditions_pass() {
        let single = Graph::new(2, [(0, 1)]).unwrap();
        let set = graph_conditions(&single).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.specs[0].target - 2.0 * SQRT_2).abs() < 1e-15);
        for n in 3..=7 {
            for g in [
                Graph::path(n).unwrap(),
                Graph::ring(n).unwrap(),
                Graph::star(n).unwrap(),
            ] {
                let (g, _) = g.relabel_for_selftest().unwrap();
                passes(Family::Graph { graph: g.clone() });
                let s = ideal_strategy(&Family::Graph { graph: g }).unwrap();
                assert!(graph_anticommutation_check(&s, TOL).unwrap().passed);
            }
        }
    }

    #[test]
    fn star_pattern_count() {
        let (g, _) = Graph::star(4).unwrap().relabel_for_selftest().unwrap();
        let set = graph_conditions(&g).unwrap();
        let n = 4;
        let nu = g.pair_neighbors(n - 2, n - 1).unwrap().len();
        let bell = set.specs.iter().filter(|s| s.label.contains("projected CHSH")).count();
        assert_eq!(bell, 1 << nu);
    }

    #[test]
    fn equal_z_and_x_anticommutator() {
        let z = BinaryObservable::new(sigma_z()).unwrap();
        let party = PartyMeasurements::from_observables(vec![z.clone(), z]).unwrap();
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let s = Strategy::new(crate::states::graph_state(&g), vec![party.clone(), party]).unwrap();
        let r = anticommutation_check(&s, FRAC_PI_4, TOL).unwrap();
        assert!((r.entries[0].residual - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noise_breaks_every_family() {
        let graph = Graph::ring(4).unwrap().relabel_for_selftest().unwrap().0;
        for family in [
            Family::Chsh { theta: 0.5 },
            Family::Ghz { n: 3, theta: 0.5 },
            Family::W { n: 4 },
            Family::Dicke { n: 5, k: 2 },
            Family::Graph { graph },
        ] {
            let s = noise_mix(&ideal_strategy(&family).unwrap(), 0.01).unwrap();
            let r = check(&s, &conditions_for(&family).unwrap(), TOL).unwrap();
            assert!(r.max_residual > 1e-4, "{family:?}");
        }
    }

    #[test]
    fn ghz_noise_residual_scale() {
        let family = Family::Ghz { n: 4, theta: 0.5 };
        let eps = 0.01;
        let s = noise_mix(&ideal_strategy(&family).unwrap(), eps).unwrap();
        let set = conditions_for(&family).unwrap();
        let r = check(&s, &set, TOL).unwrap();
        let last = r.entries.last().unwrap();
        let ratio = last.residual / (eps * last.target);
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn schmidt_checks() {
        let c = SchmidtCoefficients::from_weights(&[3.0, 2.0, 1.0]).unwrap();
        let s = ideal_strategy(&Family::Schmidt {
            n: 3,
            coeffs: c.clone(),
        })
        .unwrap();
        assert!(schmidt_condition_check(&s, &c, TOL).unwrap().passed);
        let other = SchmidtCoefficients::from_weights(&[3.0, 2.0, 1.2]).unwrap();
        let r = schmidt_condition_check(&s, &other, TOL).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn schmidt_qubit_agrees_with_ghz() {
        let theta = 0.3;
        let c = SchmidtCoefficients::qubit(theta).unwrap();
        let s = ideal_strategy(&Family::Schmidt {
            n: 3,
            coeffs: c.clone(),
        })
        .unwrap();
        let ghz = ideal_strategy(&Family::Ghz { n: 3, theta }).unwrap();
        let a = schmidt_condition_check(&s, &c, TOL).unwrap().passed;
        let b = check(&ghz, &ghz_conditions(3, theta).unwrap(), TOL).unwrap().passed;
        assert_eq!(a, b);
        let noisy = noise_mix(&s, 0.01).unwrap();
        let noisy_ghz = noise_mix(&ghz, 0.01).unwrap();
        assert_eq!(
            schmidt_condition_check(&noisy, &c, TOL).unwrap().passed,
            check(&noisy_ghz, &ghz_conditions(3, theta).unwrap(), TOL)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn generators_are_deterministic_and_serialize() {
        let g = Graph::path(4).unwrap().relabel_for_selftest().unwrap().0;
        for set in [
            ghz_conditions(4, 0.2).unwrap(),
            dicke_conditions(5, 1).unwrap(),
            graph_conditions(&g).unwrap(),
        ] {
            let again = conditions_for(&set.family).unwrap();
            assert_eq!(set, again);
            assert_eq!(ConditionSet::from_json(&set.to_json()).unwrap(), set);
        }
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let s = ideal_strategy(&Family::W { n: 3 }).unwrap();
        assert!(check(&s, &w_conditions(4).unwrap(), TOL).is_err());
    }

    #[test]
    fn subsets_enumeration() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(2, 3).is_empty());
    }
}
