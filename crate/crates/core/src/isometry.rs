//! Local isometries that pull the target state out of a strategy: the qubit
//! SWAP circuit, the qudit Fourier construction, operator extraction for
//! Schmidt strategies, and the junk ⊗ target factorization test.
//!
//! Output registers are `[orig_0, …, orig_{N-1}, anc_0, …, anc_{N-1}]`.

use std::f64::consts::PI;

use crate::conditions::{apply_chain, schmidt_condition_check, CheckReport, QubitFrame, ResidualEntry};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_on_registers, hermitian_defect, identity, kron, permute_registers, sub_norm, support_projector,
    unitary_defect, vec_norm, CMatrix, StateVector, C64, ONE, ZERO,
};
use crate::observables::{
    block_angles, block_basis, block_count, extract_zx, mu_from_theta, padding_outcome, shifted_block_angles,
};
use crate::states::SchmidtCoefficients;
use crate::strategies::Strategy;

/// Tolerance on unitarity of isometry inputs.
pub const INPUT_TOL: f64 = 1e-8;

/// Threshold for the support of the last party's reduced state.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

fn ket(d: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(k, k)] = ONE;
    m
}

/// `I ⊗ |0⟩⟨0| + U ⊗ |1⟩⟨1|` on `(orig, ancilla)`.
fn controlled(u: &CMatrix, anc_dim: usize, k: usize) -> CMatrix {
    let d = u.nrows();
    let mut out = CMatrix::zeros(d * anc_dim, d * anc_dim);
    for j in 0..anc_dim {
        let block = if j == k { u.clone() } else { identity(d) };
        out += kron(&block, &ket(anc_dim, j));
    }
    out
}

fn hadamard() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    crate::linalg::real_matrix(2, 2, &[h, h, h, -h])
}

fn append_ancillas(dims: &[usize], amps: &[C64], anc: usize) -> (Vec<usize>, Vec<C64>) {
    let n = dims.len();
    let mut out_dims = dims.to_vec();
    out_dims.extend(std::iter::repeat_n(anc, n));
    let stride = anc.pow(n as u32);
    let mut out = vec![ZERO; amps.len() * stride];
    for (i, a) in amps.iter().enumerate() {
        out[i * stride] = *a;
    }
    (out_dims, out)
}

fn check_hermitian_unitary(m: &CMatrix, what: &str) -> Result<()> {
    if hermitian_defect(m) > INPUT_TOL || unitary_defect(m) > INPUT_TOL {
        return Err(Error::Operator(format!("{what} is not a Hermitian unitary")));
    }
    Ok(())
}

/// SWAP circuit on raw amplitudes: per party an ancilla qubit in `|0⟩`,
/// `H`, controlled-`Z`, `H`, controlled-`X`. Returns the output dims.
pub fn qubit_swap_isometry_raw(frame: &QubitFrame, dims: &[usize], amps: &[C64]) -> Result<(Vec<usize>, Vec<C64>)> {
    let n = dims.len();
    if frame.z.len() != n || frame.x.len() != n {
        return Err(Error::Dimension(format!(
            "frame has {} parties, state {n}",
            frame.z.len()
        )));
    }
    let (out_dims, mut v) = append_ancillas(dims, amps, 2);
    let h = hadamard();
    for l in 0..n {
        check_hermitian_unitary(&frame.z[l], &format!("Z_{l}"))?;
        check_hermitian_unitary(&frame.x[l], &format!("X_{l}"))?;
        let anc = n + l;
        v = apply_on_registers(&v, &out_dims, &[anc], &h)?;
        v = apply_on_registers(&v, &out_dims, &[l, anc], &controlled(&frame.z[l], 2, 1))?;
        v = apply_on_registers(&v, &out_dims, &[anc], &h)?;
        v = apply_on_registers(&v, &out_dims, &[l, anc], &controlled(&frame.x[l], 2, 1))?;
    }
    Ok((out_dims, v))
}

pub fn qubit_swap_isometry(frame: &QubitFrame, psi: &StateVector) -> Result<StateVector> {
    let (dims, v) = qubit_swap_isometry_raw(frame, psi.dims(), psi.amplitudes())?;
    StateVector::new(dims, v)
}

/// Projector sets `{P^(k)}` and correction unitaries `{X^(k)}` for the
/// qudit isometry, one list per party.
#[derive(Debug, Clone)]
pub struct QuditIsometryInputs {
    pub d: usize,
    pub projectors: Vec<Vec<CMatrix>>,
    pub chains: Vec<Vec<CMatrix>>,
}

impl QuditIsometryInputs {
    /// `Σ_k ω^k P^(k) + (I - Σ_k P^(k))`.
    pub fn z_operator(&self, party: usize) -> CMatrix {
        let ps = &self.projectors[party];
        let dim = ps[0].nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        let mut z = CMatrix::zeros(dim, dim);
        for (k, p) in ps.iter().enumerate() {
            z += p * omega(self.d, k as i64);
            sum += p;
        }
        z + identity(dim) - sum
    }

    fn validate(&self, dims: &[usize]) -> Result<()> {
        let n = dims.len();
        if self.projectors.len() != n || self.chains.len() != n {
            return Err(Error::Dimension("isometry inputs do not match the party count".into()));
        }
        for (l, &dim) in dims.iter().enumerate() {
            if self.projectors[l].len() != self.d || self.chains[l].len() != self.d {
                return Err(Error::Dimension(format!(
                    "party {l} needs {} projectors and chains",
                    self.d
                )));
            }
            for m in self.projectors[l].iter().chain(&self.chains[l]) {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::Dimension(format!("party {l} operator has the wrong size")));
                }
            }
            if l + 1 < n {
                let total: CMatrix = self.projectors[l].iter().sum();
                if (total - identity(dim)).iter().any(|z| z.norm() > INPUT_TOL) {
                    return Err(Error::Operator(format!("projectors of party {l} are not complete")));
                }
            }
            if unitary_defect(&self.z_operator(l)) > INPUT_TOL {
                return Err(Error::Operator(format!("Z of party {l} is not unitary")));
            }
            for (k, x) in self.chains[l].iter().enumerate() {
                if unitary_defect(x) > INPUT_TOL {
                    return Err(Error::Operator(format!("X^({k}) of party {l} is not unitary")));
                }
            }
        }
        Ok(())
    }
}

fn omega(d: usize, k: i64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (k.rem_euclid(d as i64)) as f64 / d as f64)
}

fn fourier(d: usize) -> CMatrix {
    let s = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |k, m| omega(d, (m * k) as i64) * s)
}

/// Stages of the qudit isometry, in order of application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Fourier,
    PhaseKick,
    InverseFourier,
    Correction,
}

/// Qudit isometry up to and including `until`, applied party by party.
pub fn qudit_isometry_until(
    inputs: &QuditIsometryInputs,
    dims: &[usize],
    amps: &[C64],
    until: Stage,
) -> Result<(Vec<usize>, Vec<C64>)> {
    inputs.validate(dims)?;
    let n = dims.len();
    let d = inputs.d;
    let (out_dims, mut v) = append_ancillas(dims, amps, d);
    let f = fourier(d);
    let f_inv = f.adjoint();
    for (l, &dim) in dims.iter().enumerate() {
        let anc = n + l;
        v = apply_on_registers(&v, &out_dims, &[anc], &f)?;
        if until == Stage::Fourier {
            continue;
        }
        let z = inputs.z_operator(l);
        let mut s_op = CMatrix::zeros(dim * d, dim * d);
        let mut zk = identity(dim);
        for k in 0..d {
            s_op += kron(&zk, &ket(d, k));
            zk = &z * zk;
        }
        v = apply_on_registers(&v, &out_dims, &[l, anc], &s_op)?;
        if until == Stage::PhaseKick {
            continue;
        }
        v = apply_on_registers(&v, &out_dims, &[anc], &f_inv)?;
        if until == Stage::InverseFourier {
            continue;
        }
        let mut r_op = CMatrix::zeros(dim * d, dim * d);
        for (k, x) in inputs.chains[l].iter().enumerate() {
            r_op += kron(x, &ket(d, k));
        }
        v = apply_on_registers(&v, &out_dims, &[l, anc], &r_op)?;
    }
    Ok((out_dims, v))
}

pub fn qudit_isometry_raw(
    inputs: &QuditIsometryInputs,
    dims: &[usize],
    amps: &[C64],
) -> Result<(Vec<usize>, Vec<C64>)> {
    qudit_isometry_until(inputs, dims, amps, Stage::Correction)
}

pub fn qudit_isometry(inputs: &QuditIsometryInputs, psi: &StateVector) -> Result<StateVector> {
    let (dims, v) = qudit_isometry_raw(inputs, psi.dims(), psi.amplitudes())?;
    StateVector::new(dims, v)
}

/// `P^{b0} - P^{b1}` on a two-outcome block, identity elsewhere.
fn unitarized(projectors: &[CMatrix], b0: usize, b1: usize) -> CMatrix {
    let dim = projectors[0].nrows();
    identity(dim) - &projectors[b0] - &projectors[b1] + &projectors[b0] - &projectors[b1]
}

fn block_identity(projectors: &[CMatrix], b0: usize, b1: usize) -> CMatrix {
    &projectors[b0] + &projectors[b1]
}

/// Projectors and chains for a strategy that reproduces the ideal Schmidt
/// correlations; fails if the block check does not pass at `tol`.
pub fn extract_schmidt_operators(s: &Strategy, c: &SchmidtCoefficients, tol: f64) -> Result<QuditIsometryInputs> {
    let report = schmidt_condition_check(s, c, tol)?;
    if !report.passed {
        return Err(Error::Strategy(format!(
            "correlations differ from the ideal Schmidt tables (max residual {:.3e})",
            report.max_residual
        )));
    }
    extract_schmidt_operators_unchecked(s, c)
}

/// Extraction without the correlation precondition.
pub fn extract_schmidt_operators_unchecked(s: &Strategy, c: &SchmidtCoefficients) -> Result<QuditIsometryInputs> {
    let n = s.party_count();
    let d = c.dim();
    let blocks = block_count(d);
    let mus: Vec<f64> = block_angles(c).into_iter().map(mu_from_theta).collect::<Result<_>>()?;
    let mus_shifted: Vec<f64> = shifted_block_angles(c)
        .into_iter()
        .map(mu_from_theta)
        .collect::<Result<_>>()?;
    let mut projectors = Vec::with_capacity(n);
    let mut chains = Vec::with_capacity(n);
    for l in 0..n {
        let party = s.party(l)?;
        let setting = |x: usize| -> Result<&[CMatrix]> {
            let pvm = party.setting(x)?;
            if pvm.outcome_count() != d {
                return Err(Error::Dimension(format!(
                    "party {l} setting {x} has {} outcomes, need {d}",
                    pvm.outcome_count()
                )));
            }
            Ok(pvm.projectors())
        };
        let mut xs = Vec::with_capacity(blocks);
        let mut ys = Vec::with_capacity(blocks);
        let ps: Vec<CMatrix>;
        if l + 1 < n {
            ps = setting(0)?.to_vec();
            for m in 0..blocks {
                let (b0, b1) = block_basis(m, d, false)?;
                xs.push(unitarized(setting(1)?, b0, b1));
                let (b0, b1) = block_basis(m, d, true)?;
                ys.push(unitarized(setting(2)?, b0, b1));
            }
        } else {
            let dim = party.dim();
            let mut raw = vec![CMatrix::zeros(dim, dim); d];
            for m in 0..blocks {
                let (b0, b1) = block_basis(m, d, false)?;
                let (s0, s1) = (setting(0)?, setting(1)?);
                let (zu, xu) = extract_zx(&unitarized(s0, b0, b1), &unitarized(s1, b0, b1), mus[m])?;
                let cover = support_projector(
                    &(block_identity(s0, b0, b1) + block_identity(s1, b0, b1)),
                    SUPPORT_THRESHOLD,
                )?;
                let zt = &cover * zu.matrix() * &cover;
                let half = C64::new(0.5, 0.0);
                raw[b0] = (&cover + &zt) * half;
                raw[b1] = (&cover - &zt) * half;
                xs.push(xu.into_matrix());
                let (b0, b1) = block_basis(m, d, true)?;
                let (s2, s3) = (setting(2)?, setting(3)?);
                let (_, yu) = extract_zx(&unitarized(s2, b0, b1), &unitarized(s3, b0, b1), mus_shifted[m])?;
                ys.push(yu.into_matrix());
            }
            if let Some(j) = padding_outcome(d, false) {
                raw[j] = setting(0)?[j].clone();
            }
            // Restrict to the support of the reduced state, where the
            // projectors act as an orthogonal family on ψ.
            let rho = s.state().reduced_density(&[l])?;
            let support = support_projector(&rho, SUPPORT_THRESHOLD)?;
            ps = raw.iter().map(|p| &support * p * &support).collect();
        }
        let dim = party.dim();
        let mut chain = Vec::with_capacity(d);
        chain.push(identity(dim));
        for k in 1..d {
            let m = k / 2;
            let mut x = identity(dim);
            for j in 0..m {
                x = x * &xs[j] * &ys[j];
            }
            if k % 2 == 1 {
                x *= &xs[m];
            }
            chain.push(x);
        }
        projectors.push(ps);
        chains.push(chain);
    }
    Ok(QuditIsometryInputs { d, projectors, chains })
}

/// Residuals of `P_l^(k) ψ = P_0^(k) ψ` and
/// `X_0^(k) ⋯ X_{N-1}^(k) P_0^(k) ψ = (c_k/c_0) P_0^(0) ψ`.
pub fn schmidt_chain_residuals(
    s: &Strategy,
    inputs: &QuditIsometryInputs,
    c: &SchmidtCoefficients,
    tol: f64,
) -> Result<CheckReport> {
    let n = s.party_count();
    let psi = s.state().amplitudes();
    let mut entries = Vec::new();
    let p0: Vec<Vec<C64>> = (0..inputs.d)
        .map(|k| apply_chain(s, psi, &[(0, &inputs.projectors[0][k])]))
        .collect::<Result<_>>()?;
    for k in 0..inputs.d {
        for l in 1..n {
            let pl = apply_chain(s, psi, &[(l, &inputs.projectors[l][k])])?;
            entries.push(ResidualEntry::norm(
                format!("P_{l}^({k}) psi = P_0^({k}) psi"),
                sub_norm(&pl, &p0[k]),
            ));
        }
        let ops: Vec<(usize, &CMatrix)> = (0..n).map(|l| (l, &inputs.chains[l][k])).collect();
        let lhs = apply_chain(s, &p0[k], &ops)?;
        let ratio = c.get(k) / c.get(0);
        let rhs: Vec<C64> = p0[0].iter().map(|a| a * ratio).collect();
        entries.push(ResidualEntry::norm(
            format!("X^({k}) chain maps P^({k}) psi to P^(0) psi"),
            sub_norm(&lhs, &rhs),
        ));
    }
    Ok(CheckReport::from_entries(entries, tol))
}

/// Overlap of an isometry output with `junk ⊗ target`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    /// `⟨t|ρ_T|t⟩` for the reduced state on the target registers.
    pub target_fidelity: f64,
    /// Normalized `(I ⊗ ⟨t|) out`, absent when the overlap vanishes.
    pub junk_state: Option<StateVector>,
    pub junk_dims: Vec<usize>,
    /// `‖out - junk_raw ⊗ t‖`, with `junk_raw` unnormalized.
    pub residual_norm: f64,
}

/// Splits registers into the complement (in order) and the target.
struct Split {
    order: Vec<usize>,
    comp_dims: Vec<usize>,
    target_len: usize,
}

fn split(dims: &[usize], target_registers: &[usize], target: &StateVector) -> Result<Split> {
    let mut seen = vec![false; dims.len()];
    for &r in target_registers {
        if r >= dims.len() || seen[r] {
            return Err(Error::Dimension(format!("invalid target register {r}")));
        }
        seen[r] = true;
    }
    let tdims: Vec<usize> = target_registers.iter().map(|&r| dims[r]).collect();
    if tdims != target.dims() {
        return Err(Error::Dimension(format!(
            "target dims {:?} vs registers {tdims:?}",
            target.dims()
        )));
    }
    let comp: Vec<usize> = (0..dims.len()).filter(|r| !seen[*r]).collect();
    let comp_dims = comp.iter().map(|&r| dims[r]).collect();
    let order = comp.into_iter().chain(target_registers.iter().copied()).collect();
    Ok(Split {
        order,
        comp_dims,
        target_len: target.len(),
    })
}

/// `(I ⊗ ⟨t|) v` with the complement registers in their original order.
pub fn project_target(
    dims: &[usize],
    v: &[C64],
    target: &StateVector,
    target_registers: &[usize],
) -> Result<(Vec<usize>, Vec<C64>)> {
    let sp = split(dims, target_registers, target)?;
    let (perm, _) = permute_registers(v, dims, &sp.order)?;
    let t = target.amplitudes();
    let junk = perm
        .chunks(sp.target_len)
        .map(|row| row.iter().zip(t).map(|(a, b)| b.conj() * a).sum())
        .collect();
    Ok((sp.comp_dims, junk))
}

/// `junk ⊗ op·t` laid out in the original register order.
pub fn embed_product(
    dims: &[usize],
    junk: &[C64],
    target: &[C64],
    target_registers: &[usize],
    template: &StateVector,
) -> Result<Vec<C64>> {
    let sp = split(dims, target_registers, template)?;
    let prod: Vec<C64> = junk.iter().flat_map(|j| target.iter().map(move |t| j * t)).collect();
    let ordered_dims: Vec<usize> = sp.order.iter().map(|&r| dims[r]).collect();
    let mut inverse = vec![0; sp.order.len()];
    for (k, &r) in sp.order.iter().enumerate() {
        inverse[r] = k;
    }
    Ok(permute_registers(&prod, &ordered_dims, &inverse)?.0)
}

pub fn factorization_check(
    output: &StateVector,
    target: &StateVector,
    target_registers: &[usize],
) -> Result<FactorizationReport> {
    factorization_check_raw(output.dims(), output.amplitudes(), target, target_registers)
}

pub fn factorization_check_raw(
    dims: &[usize],
    output: &[C64],
    target: &StateVector,
    target_registers: &[usize],
) -> Result<FactorizationReport> {
    let (junk_dims, junk) = project_target(dims, output, target, target_registers)?;
    let rebuilt = embed_product(dims, &junk, target.amplitudes(), target_registers, target)?;
    let norm = vec_norm(&junk);
    let junk_state = if norm > 1e-12 {
        Some(StateVector::normalized(junk_dims.clone(), junk)?)
    } else {
        None
    };
    Ok(FactorizationReport {
        target_fidelity: norm * norm,
        junk_state,
        junk_dims,
        residual_norm: sub_norm(output, &rebuilt),
    })
}

/// Either isometry, ready to apply to raw amplitude vectors.
#[derive(Debug, Clone)]
pub enum LocalIsometry {
    Qubit(QubitFrame),
    Qudit(QuditIsometryInputs),
}

impl LocalIsometry {
    pub fn apply(&self, dims: &[usize], amps: &[C64]) -> Result<(Vec<usize>, Vec<C64>)> {
        match self {
            LocalIsometry::Qubit(f) => qubit_swap_isometry_raw(f, dims, amps),
            LocalIsometry::Qudit(q) => qudit_isometry_raw(q, dims, amps),
        }
    }

    pub fn ancilla_dim(&self) -> usize {
        match self {
            LocalIsometry::Qubit(_) => 2,
            LocalIsometry::Qudit(q) => q.d,
        }
    }
}

/// Ancilla registers of an `n`-party isometry output.
pub fn ancilla_registers(n: usize) -> Vec<usize> {
    (n..2 * n).collect()
}

/// `‖Φ(M ψ) - junk ⊗ M̃ t‖` for every two-outcome setting of every party,
/// with `M̃` the matching observable of `reference` (an ideal strategy on
/// the target state).
pub fn measurement_selftest_check(
    s: &Strategy,
    iso: &LocalIsometry,
    reference: &Strategy,
    tol: f64,
) -> Result<CheckReport> {
    let n = s.party_count();
    let target = reference.state();
    let anc = ancilla_registers(n);
    let (dims, out) = iso.apply(s.dims(), s.state().amplitudes())?;
    let (_, junk) = project_target(&dims, &out, target, &anc)?;
    let mut entries = Vec::new();
    let identity_image = embed_product(&dims, &junk, target.amplitudes(), &anc, target)?;
    entries.push(ResidualEntry::norm(
        "Phi(psi) = junk (x) target",
        sub_norm(&out, &identity_image),
    ));
    for l in 0..n {
        let party = s.party(l)?;
        for x in 0..party.setting_count() {
            if party.setting(x)?.outcome_count() != 2 {
                continue;
            }
            let m = party.observable(x)?;
            let mpsi = apply_on_registers(s.state().amplitudes(), s.dims(), &[l], &m)?;
            let (_, image) = iso.apply(s.dims(), &mpsi)?;
            let ideal = reference.observable(l, x)?;
            let mt = apply_on_registers(target.amplitudes(), target.dims(), &[l], &ideal)?;
            let expected = embed_product(&dims, &junk, &mt, &anc, target)?;
            entries.push(ResidualEntry::norm(
                format!("Phi(M_{l},{x} psi) = junk (x) M~ target"),
                sub_norm(&image, &expected),
            ));
        }
    }
    Ok(CheckReport::from_entries(entries, tol))
}
