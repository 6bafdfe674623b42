//! Correlation data of a strategy: outcome-probability tables, correlators
//! of product operators, tilted CHSH values, and the block structure of
//! Schmidt-state tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::conditions::{CheckReport, ResidualEntry};
use crate::error::{Error, Result};
use crate::linalg::{apply_on_registers, inner, trace, vec_norm, CMatrix, C64};
use crate::observables::{
    block_angles, block_basis, block_count, padding_outcome, shifted_block_angles, PartyMeasurements,
};
use crate::states::SchmidtCoefficients;
use crate::strategies::{ghz_block_strategy, Strategy};

/// Largest imaginary part tolerated in a correlator of Hermitian operators.
pub const IMAG_TOL: f64 = 1e-10;

/// One setting index per party.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestionTuple(pub Vec<usize>);

impl QuestionTuple {
    pub fn new(x: Vec<usize>) -> Self {
        QuestionTuple(x)
    }

    pub fn settings(&self) -> &[usize] {
        &self.0
    }

    pub fn label(&self) -> String {
        join(&self.0)
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-")
}

/// Every question in `Π_l {0, …, counts[l]-1}`, party 0 varying slowest.
pub fn all_questions(counts: &[usize]) -> Vec<QuestionTuple> {
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut i| {
            let mut x = vec![0; counts.len()];
            for l in (0..counts.len()).rev() {
                x[l] = i % counts[l];
                i /= counts[l];
            }
            QuestionTuple(x)
        })
        .collect()
}

/// `p(a|x)` over all outcome tuples of one question, dense and row-major
/// (party 0 most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    question: QuestionTuple,
    outcome_counts: Vec<usize>,
    probs: Vec<f64>,
}

impl CorrelationTable {
    pub fn new(question: QuestionTuple, outcome_counts: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if question.0.len() != outcome_counts.len() {
            return Err(Error::Dimension("question and outcome counts differ in length".into()));
        }
        if probs.len() != outcome_counts.iter().product::<usize>() {
            return Err(Error::Dimension(format!(
                "{} probabilities for outcome counts {outcome_counts:?}",
                probs.len()
            )));
        }
        Ok(CorrelationTable {
            question,
            outcome_counts,
            probs,
        })
    }

    pub fn question(&self) -> &QuestionTuple {
        &self.question
    }

    pub fn outcome_counts(&self) -> &[usize] {
        &self.outcome_counts
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index(&self, a: &[usize]) -> usize {
        a.iter()
            .zip(&self.outcome_counts)
            .fold(0, |acc, (&ai, &n)| acc * n + ai)
    }

    pub fn outcome(&self, mut index: usize) -> Vec<usize> {
        let mut a = vec![0; self.outcome_counts.len()];
        for l in (0..a.len()).rev() {
            a[l] = index % self.outcome_counts[l];
            index /= self.outcome_counts[l];
        }
        a
    }

    pub fn get(&self, a: &[usize]) -> f64 {
        self.probs[self.index(a)]
    }

    /// Entries ≥ -tol and total within tol of one.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some(i) = self.probs.iter().position(|&p| p < -tol || !p.is_finite()) {
            return Err(Error::Correlation(format!(
                "entry {:?} = {} is negative",
                self.outcome(i),
                self.probs[i]
            )));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::Correlation(format!("table sums to {sum}")));
        }
        Ok(())
    }

    /// Marginal distribution over the parties in `keep` (increasing order).
    pub fn marginal(&self, keep: &[usize]) -> Vec<f64> {
        let kept: Vec<usize> = keep.iter().map(|&l| self.outcome_counts[l]).collect();
        let mut out = vec![0.0; kept.iter().product()];
        for (i, &p) in self.probs.iter().enumerate() {
            let a = self.outcome(i);
            let j = keep.iter().zip(&kept).fold(0, |acc, (&l, &n)| acc * n + a[l]);
            out[j] += p;
        }
        out
    }
}

/// Outcome probabilities `⟨ψ| ⊗_l M^{a_l}_{x_l,l} |ψ⟩` (trace form under
/// white noise).
pub fn probability_table(s: &Strategy, question: &QuestionTuple) -> Result<CorrelationTable> {
    let counts = s.outcome_counts(&question.0)?;
    let projectors: Vec<&[CMatrix]> = question
        .0
        .iter()
        .enumerate()
        .map(|(l, &x)| Ok(s.party(l)?.setting(x)?.projectors()))
        .collect::<Result<_>>()?;
    let eps = s.noise();
    let mut probs = vec![0.0; counts.iter().product()];
    let mut walker = TableWalker {
        dims: s.dims(),
        projectors: &projectors,
        eps,
        probs: &mut probs,
    };
    walker.descend(0, s.state().amplitudes().to_vec(), 1.0, 0)?;
    CorrelationTable::new(question.clone(), counts, probs)
}

struct TableWalker<'a> {
    dims: &'a [usize],
    projectors: &'a [&'a [CMatrix]],
    eps: f64,
    probs: &'a mut [f64],
}

impl TableWalker<'_> {
    // Projects party `level` onto each outcome in turn; the pure part of a
    // leaf is the squared norm of the projected vector.
    fn descend(&mut self, level: usize, v: Vec<C64>, mixed: f64, index: usize) -> Result<()> {
        if level == self.dims.len() {
            let pure = vec_norm(&v).powi(2);
            self.probs[index] = (1.0 - self.eps) * pure + self.eps * mixed;
            return Ok(());
        }
        let outcomes = self.projectors[level];
        for (a, p) in outcomes.iter().enumerate() {
            let w = apply_on_registers(&v, self.dims, &[level], p)?;
            let tr = trace(p).re / self.dims[level] as f64;
            self.descend(level + 1, w, mixed * tr, index * outcomes.len() + a)?;
        }
        Ok(())
    }
}

/// Role of one party's operator in a product term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalOp {
    Identity,
    /// `P^0 - P^1` of a two-outcome setting.
    Observable(usize),
    Projector {
        setting: usize,
        outcome: usize,
    },
    /// Real linear combination, e.g. `(D + E)/√2`.
    Combination(Vec<(f64, LocalOp)>),
}

impl LocalOp {
    pub fn projector(setting: usize, outcome: usize) -> Self {
        LocalOp::Projector { setting, outcome }
    }

    pub fn scaled(self, c: f64) -> Self {
        if c == 1.0 {
            self
        } else {
            LocalOp::Combination(vec![(c, self)])
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            LocalOp::Identity => true,
            LocalOp::Combination(parts) => parts.is_empty(),
            _ => false,
        }
    }

    /// Operator on the party's space; `None` stands for the identity.
    pub fn matrix(&self, party: &PartyMeasurements) -> Result<Option<CMatrix>> {
        Ok(match self {
            LocalOp::Identity => None,
            LocalOp::Observable(x) => Some(party.observable(*x)?),
            LocalOp::Projector { setting, outcome } => {
                let pvm = party.setting(*setting)?;
                if *outcome >= pvm.outcome_count() {
                    return Err(Error::Dimension(format!(
                        "outcome {outcome} out of range for setting {setting} ({} outcomes)",
                        pvm.outcome_count()
                    )));
                }
                Some(pvm.projector(*outcome).clone())
            }
            LocalOp::Combination(parts) => {
                let dim = party.dim();
                let mut acc = CMatrix::zeros(dim, dim);
                for (c, op) in parts {
                    let m = op.matrix(party)?.unwrap_or_else(|| CMatrix::identity(dim, dim));
                    acc += m * C64::new(*c, 0.0);
                }
                Some(acc)
            }
        })
    }

    /// Rewrites settings and outcomes through `f`, recursing into
    /// combinations. Returned operators replace the leaf.
    pub fn map_leaves(&self, f: &impl Fn(&LocalOp) -> LocalOp) -> LocalOp {
        match self {
            LocalOp::Combination(parts) => {
                LocalOp::Combination(parts.iter().map(|(c, op)| (*c, op.map_leaves(f))).collect())
            }
            leaf => f(leaf),
        }
    }
}

/// `coeff · ⊗_l O_l`; parties not listed act trivially. Several entries for
/// the same party multiply in listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, LocalOp)>,
}

impl ProductTerm {
    pub fn new(coeff: f64, ops: Vec<(usize, LocalOp)>) -> Self {
        ProductTerm { coeff, ops }
    }

    pub fn with(mut self, party: usize, op: LocalOp) -> Self {
        self.ops.push((party, op));
        self
    }
}

/// A linear combination of product operators and the value it should take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSpec {
    pub label: String,
    pub terms: Vec<ProductTerm>,
    pub target: f64,
}

impl CorrelatorSpec {
    pub fn new(label: impl Into<String>, terms: Vec<ProductTerm>, target: f64) -> Self {
        CorrelatorSpec {
            label: label.into(),
            terms,
            target,
        }
    }

    /// Multiply every term by the same local operators (e.g. projections of
    /// spectator parties).
    pub fn conditioned_on(mut self, ops: &[(usize, LocalOp)]) -> Self {
        for t in &mut self.terms {
            let mut all = ops.to_vec();
            all.append(&mut t.ops);
            t.ops = all;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.terms.iter().any(|t| t.ops.iter().any(|(_, op)| !op.is_identity())) {
            return Err(Error::Correlation(format!(
                "spec `{}` has no non-identity operator",
                self.label
            )));
        }
        Ok(())
    }
}

/// `⟨⊗_l O_l⟩` with `ops[l] = None` meaning identity.
pub fn product_expectation(s: &Strategy, ops: &[(usize, Option<CMatrix>)]) -> Result<C64> {
    let dims = s.dims();
    let psi = s.state().amplitudes();
    let mut v = psi.to_vec();
    let mut mixed = C64::new(1.0, 0.0);
    let mut touched = vec![false; dims.len()];
    for (l, op) in ops {
        let Some(m) = op else { continue };
        if *l >= dims.len() {
            return Err(Error::Dimension(format!("party {l} out of range")));
        }
        v = apply_on_registers(&v, dims, &[*l], m)?;
        touched[*l] = true;
    }
    let eps = s.noise();
    if eps > 0.0 {
        // Tr(⊗O)/D factorizes per party; several operators on one party
        // multiply before tracing.
        for (l, &d) in dims.iter().enumerate() {
            if !touched[l] {
                continue;
            }
            let mut m = CMatrix::identity(d, d);
            for (_, op) in ops.iter().filter(|(p, _)| *p == l) {
                if let Some(o) = op {
                    m = o * m;
                }
            }
            mixed *= trace(&m) / d as f64;
        }
    }
    Ok(inner(psi, &v) * (1.0 - eps) + mixed * eps)
}

fn term_value(s: &Strategy, term: &ProductTerm) -> Result<C64> {
    let ops = term
        .ops
        .iter()
        .map(|(l, op)| Ok((*l, op.matrix(s.party(*l)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(product_expectation(s, &ops)? * term.coeff)
}

/// Real value of a correlator spec.
pub fn correlator(s: &Strategy, spec: &CorrelatorSpec) -> Result<f64> {
    spec.validate()?;
    let mut total = C64::new(0.0, 0.0);
    for t in &spec.terms {
        total += term_value(s, t)?;
    }
    if total.im.abs() > IMAG_TOL {
        return Err(Error::Correlation(format!(
            "spec `{}` has imaginary part {:.3e}",
            spec.label, total.im
        )));
    }
    Ok(total.re)
}

/// Relabellings of the tilted CHSH expression: negate `A_x` or `B_y`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignFlips {
    pub a: [bool; 2],
    pub b: [bool; 2],
}

impl SignFlips {
    pub const NONE: SignFlips = SignFlips {
        a: [false, false],
        b: [false, false],
    };

    /// Negates `A_1`; used when an odd number of spectators answered `-`.
    pub fn parity(odd: bool) -> Self {
        SignFlips {
            a: [false, odd],
            b: [false, false],
        }
    }
}

fn sign(flip: bool) -> f64 {
    if flip {
        -1.0
    } else {
        1.0
    }
}

/// `α A_0 + A_0B_0 + A_0B_1 + A_1B_0 - A_1B_1` with arbitrary local
/// operators standing in for `A_x` and `B_y`.
pub fn chsh_terms(a: usize, b: usize, a_ops: [LocalOp; 2], b_ops: [LocalOp; 2], alpha: f64) -> Vec<ProductTerm> {
    let [a0, a1] = a_ops;
    let [b0, b1] = b_ops;
    let mut terms = Vec::with_capacity(5);
    if alpha != 0.0 {
        terms.push(ProductTerm::new(alpha, vec![(a, a0.clone())]));
    }
    terms.push(ProductTerm::new(1.0, vec![(a, a0.clone()), (b, b0.clone())]));
    terms.push(ProductTerm::new(1.0, vec![(a, a0), (b, b1.clone())]));
    terms.push(ProductTerm::new(1.0, vec![(a, a1.clone()), (b, b0)]));
    terms.push(ProductTerm::new(-1.0, vec![(a, a1), (b, b1)]));
    terms
}

/// Tilted CHSH operator between parties `pair.0` (the `A` side, carrying the
/// marginal term) and `pair.1`, on settings 0 and 1.
pub fn tilted_chsh_terms(pair: (usize, usize), alpha: f64, flips: SignFlips) -> Vec<ProductTerm> {
    let obs = |x: usize, f: bool| LocalOp::Observable(x).scaled(sign(f));
    chsh_terms(
        pair.0,
        pair.1,
        [obs(0, flips.a[0]), obs(1, flips.a[1])],
        [obs(0, flips.b[0]), obs(1, flips.b[1])],
        alpha,
    )
}

fn check_chsh_pair(s: &Strategy, pair: (usize, usize)) -> Result<()> {
    if pair.0 == pair.1 {
        return Err(Error::Dimension("tilted CHSH needs two distinct parties".into()));
    }
    for l in [pair.0, pair.1] {
        let p = s.party(l)?;
        if p.setting_count() < 2 {
            return Err(Error::Dimension(format!(
                "party {l} has {} settings, need 2",
                p.setting_count()
            )));
        }
        for x in 0..2 {
            if p.setting(x)?.outcome_count() != 2 {
                return Err(Error::Dimension(format!("party {l} setting {x} is not two-outcome")));
            }
        }
    }
    Ok(())
}

pub fn tilted_chsh_value(s: &Strategy, pair: (usize, usize), alpha: f64, flips: SignFlips) -> Result<f64> {
    check_chsh_pair(s, pair)?;
    let spec = CorrelatorSpec::new("tilted CHSH", tilted_chsh_terms(pair, alpha, flips), 0.0);
    correlator(s, &spec)
}

/// A spectator party projected onto one outcome of one setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Projection {
    pub party: usize,
    pub setting: usize,
    pub outcome: usize,
}

/// `⟨ψ| Π_l P_l ⊗ B |ψ⟩`: the tilted CHSH operator of `pair` evaluated on
/// the (unnormalized) branch selected by the spectator projections.
pub fn conditional_chsh(
    s: &Strategy,
    projections: &[Projection],
    pair: (usize, usize),
    alpha: f64,
    flips: SignFlips,
) -> Result<f64> {
    check_chsh_pair(s, pair)?;
    if let Some(p) = projections.iter().find(|p| p.party == pair.0 || p.party == pair.1) {
        return Err(Error::Dimension(format!(
            "party {} is both projected and in the Bell pair",
            p.party
        )));
    }
    let conditions: Vec<(usize, LocalOp)> = projections
        .iter()
        .map(|p| (p.party, LocalOp::projector(p.setting, p.outcome)))
        .collect();
    let spec = CorrelatorSpec::new("conditional tilted CHSH", tilted_chsh_terms(pair, alpha, flips), 0.0)
        .conditioned_on(&conditions);
    correlator(s, &spec)
}

/// Questions whose tables make up the Schmidt block structure: unshifted
/// `{0,1}^N` and shifted `{0,2}^{N-1} × {2,3}`.
pub fn schmidt_questions(n: usize) -> (Vec<QuestionTuple>, Vec<QuestionTuple>) {
    let unshifted = all_questions(&vec![2; n]);
    let shifted = unshifted
        .iter()
        .map(|q| {
            let mut x: Vec<usize> = q.0.iter().map(|&b| 2 * b).collect();
            x[n - 1] = 2 + q.0[n - 1];
            QuestionTuple(x)
        })
        .collect();
    (unshifted, shifted)
}

/// Verifies that every table is block-diagonal with blocks equal to the
/// weighted GHZ tables at the block angles. Missing tables are reported as
/// failures.
pub fn block_structure_check(tables: &[CorrelationTable], c: &SchmidtCoefficients, tol: f64) -> Result<CheckReport> {
    let n = tables
        .first()
        .map(|t| t.question.0.len())
        .ok_or_else(|| Error::Correlation("no tables given".into()))?;
    let d = c.dim();
    let by_question: BTreeMap<&QuestionTuple, &CorrelationTable> = tables.iter().map(|t| (&t.question, t)).collect();
    let (unshifted, shifted) = schmidt_questions(n);
    let mut entries = Vec::new();
    for (shift, questions, angles) in [
        (false, unshifted, block_angles(c)),
        (true, shifted, shifted_block_angles(c)),
    ] {
        let references = angles
            .iter()
            .map(|&theta| ghz_block_strategy(n, theta))
            .collect::<Result<Vec<_>>>()?;
        for q in questions {
            let kind = if shift { "shifted" } else { "unshifted" };
            let Some(table) = by_question.get(&q) else {
                entries.push(ResidualEntry::new(
                    format!("{kind} table x={} missing", q.label()),
                    f64::NAN,
                    0.0,
                ));
                continue;
            };
            if table.outcome_counts.iter().any(|&k| k != d) {
                entries.push(ResidualEntry::new(
                    format!("{kind} table x={} has wrong arity", q.label()),
                    f64::NAN,
                    0.0,
                ));
                continue;
            }
            // GHZ question: f(0)=0, f(2)=1 for parties < N; g(2)=0, g(3)=1.
            let ghz_q = QuestionTuple(
                q.0.iter()
                    .enumerate()
                    .map(|(l, &x)| match (shift, l == n - 1) {
                        (false, _) => x,
                        (true, false) => x / 2,
                        (true, true) => x - 2,
                    })
                    .collect(),
            );
            let mut covered = vec![false; table.probs.len()];
            for (m, reference) in references.iter().enumerate() {
                let (b0, b1) = block_basis(m, d, shift)?;
                let weight = c.get(b0).powi(2) + c.get(b1).powi(2);
                let ghz = probability_table(reference, &ghz_q)?;
                let mut worst: f64 = 0.0;
                for bits in 0..(1usize << n) {
                    let b: Vec<usize> = (0..n).map(|l| (bits >> (n - 1 - l)) & 1).collect();
                    let a: Vec<usize> = b.iter().map(|&bit| if bit == 0 { b0 } else { b1 }).collect();
                    let i = table.index(&a);
                    covered[i] = true;
                    worst = worst.max((table.probs[i] - weight * ghz.get(&b)).abs());
                }
                entries.push(ResidualEntry::new(
                    format!("{kind} x={} block {m}", q.label()),
                    worst,
                    0.0,
                ));
            }
            if let Some(j) = padding_outcome(d, shift) {
                let i = table.index(&vec![j; n]);
                covered[i] = true;
                let r = (table.probs[i] - c.get(j).powi(2)).abs();
                entries.push(ResidualEntry::new(
                    format!("{kind} x={} padding outcome {j}", q.label()),
                    r,
                    0.0,
                ));
            }
            let off = table
                .probs
                .iter()
                .zip(&covered)
                .filter(|(_, &c)| !c)
                .fold(0.0f64, |acc, (p, _)| acc.max(p.abs()));
            entries.push(ResidualEntry::new(
                format!("{kind} x={} off-block", q.label()),
                off,
                0.0,
            ));
        }
    }
    debug_assert!(block_count(d) >= 1);
    Ok(CheckReport::from_entries(entries, tol))
}

/// Format for exported numbers: 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Wide CSV: header `question,<outcome tuples>`, one row per table. All
/// tables must share outcome counts.
pub fn tables_to_csv(tables: &[CorrelationTable]) -> Result<String> {
    let Some(first) = tables.first() else {
        return Ok(String::new());
    };
    if let Some(t) = tables.iter().find(|t| t.outcome_counts != first.outcome_counts) {
        return Err(Error::Correlation(format!(
            "table x={} has outcome counts {:?}, expected {:?}",
            t.question.label(),
            t.outcome_counts,
            first.outcome_counts
        )));
    }
    let mut out = String::from("question");
    for i in 0..first.probs.len() {
        write!(out, ",{}", join(&first.outcome(i))).unwrap();
    }
    out.push('\n');
    for t in tables {
        out.push_str(&t.question.label());
        for &p in &t.probs {
            write!(out, ",{}", format_number(p)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// JSON array of `{"question", "outcome_counts", "probs"}` objects.
pub fn tables_to_json(tables: &[CorrelationTable]) -> String {
    let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    let mut out = String::from("[\n");
    for (k, t) in tables.iter().enumerate() {
        let probs: Vec<String> = t.probs.iter().map(|&p| format_number(p)).collect();
        write!(
            out,
            "  {{\"question\": [{}], \"outcome_counts\": [{}], \"probs\": [{}]}}",
            list(&t.question.0),
            list(&t.outcome_counts),
            probs.join(", ")
        )
        .unwrap();
        out.push_str(if k + 1 < tables.len() { ",\n" } else { "\n" });
    }
    out.push(']');
    out.push('\n');
    out
}

#[derive(Deserialize)]
struct TableFile {
    question: Vec<usize>,
    outcome_counts: Vec<usize>,
    probs: Vec<f64>,
}

pub fn tables_from_json(text: &str) -> Result<Vec<CorrelationTable>> {
    let files: Vec<TableFile> = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    files
        .into_iter()
        .map(|f| CorrelationTable::new(QuestionTuple(f.question), f.outcome_counts, f.probs))
        .collect()
}

pub fn tables_from_csv(text: &str) -> Result<Vec<CorrelationTable>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse("header", "empty input"))?;
    let outcomes: Vec<Vec<usize>> = header.split(',').skip(1).map(parse_tuple).collect::<Result<_>>()?;
    let last = outcomes
        .last()
        .ok_or_else(|| Error::parse("header", "no outcome columns"))?;
    let counts: Vec<usize> = last.iter().map(|a| a + 1).collect();
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(row, line)| {
            let mut fields = line.split(',');
            let q = parse_tuple(fields.next().unwrap_or_default())?;
            let probs = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::parse(format!("row {}", row + 2), e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            CorrelationTable::new(QuestionTuple(q), counts.clone(), probs)
        })
        .collect()
}

fn parse_tuple(s: &str) -> Result<Vec<usize>> {
    s.split('-')
        .map(|x| x.trim().parse::<usize>().map_err(|e| Error::parse(s, e.to_string())))
        .collect()
}
