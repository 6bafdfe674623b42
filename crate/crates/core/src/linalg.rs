//! Dense complex linear algebra over small multipartite Hilbert spaces.
//!
//! Index convention: for a register list `dims = [d_0, d_1, ..., d_{n-1}]` the
//! flattened basis index of `|i_0 i_1 ... i_{n-1}⟩` is
//! `i_0 * (d_1 * ... * d_{n-1}) + ... + i_{n-1}`, i.e. register 0 is the most
//! significant digit. [`kron`] follows the same rule (first factor most
//! significant), and every helper that touches individual registers goes
//! through [`Registers`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used when a matrix is required to be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance used when a matrix is required to be unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Default threshold below which an eigenvalue counts as zero in
/// [`regularized_polar`].
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Real matrix helper, row-major.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_iterator(
        rows,
        cols,
        (0..rows * cols).map(|k| {
            let (c, r) = (k / rows, k % rows);
            C64::new(entries[r * cols + c], 0.0)
        }),
    )
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    hermitian_defect(m) <= tol
}

pub fn unitary_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m.adjoint() * m - identity(m.nrows())))
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    unitary_defect(m) <= tol
}

/// Kronecker product `a ⊗ b`, first factor most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence of matrices; the empty product is `[1]`.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors.into_iter().fold(identity(1), |acc, f| kron(&acc, f))
}

/// `I ⊗ ... ⊗ op ⊗ ... ⊗ I` with `op` at position `party`.
pub fn embed_local(op: &CMatrix, party: usize, dims: &[usize]) -> Result<CMatrix> {
    let d = *dims
        .get(party)
        .ok_or_else(|| Error::Dimension(format!("party {party} not in {dims:?}")))?;
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, party {party} has dimension {d}",
            op.nrows(),
            op.ncols()
        )));
    }
    let left: usize = dims[..party].iter().product();
    let right: usize = dims[party + 1..].iter().product();
    Ok(kron(&kron(&identity(left), op), &identity(right)))
}

/// Binary observable to its outcome projectors `(I + W)/2`, `(I - W)/2`.
pub fn projectors_from_binary(w: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if !w.is_square() {
        return Err(Error::Dimension("observable must be square".into()));
    }
    let defect = hermitian_defect(w);
    if defect > 1e-9 {
        return Err(Error::Operator(format!(
            "observable is not Hermitian (defect {defect:.3e})"
        )));
    }
    let id = identity(w.nrows());
    let sq = max_abs(&(w * w - &id));
    if sq > 1e-9 {
        return Err(Error::Operator(format!(
            "spectrum is not contained in {{-1, +1}} (|W^2 - I| = {sq:.3e})"
        )));
    }
    let half = C64::new(0.5, 0.0);
    Ok(((&id + w) * half, (&id - w) * half))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::Dimension("eigendecomposition needs a square matrix".into()));
    }
    let scale = max_abs(m).max(1.0);
    let defect = hermitian_defect(m);
    if defect > 1e-9 * scale {
        return Err(Error::Operator(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// Hermitian unitary `sign(M)` with zero eigenvalues (|λ| < `zero_tol`)
/// mapped to `+1`.
pub fn regularized_polar(m: &CMatrix, zero_tol: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let sign = if lambda.abs() < zero_tol || lambda > 0.0 {
            1.0
        } else {
            -1.0
        };
        let v = vectors.column(k);
        out += (v * v.adjoint()) * C64::new(sign, 0.0);
    }
    Ok(out)
}

/// Orthogonal projector onto the span of eigenvectors of a Hermitian PSD
/// matrix with eigenvalue above `threshold`.
pub fn support_projector(m: &CMatrix, threshold: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        if lambda > threshold {
            let v = vectors.column(k);
            out += v * v.adjoint();
        }
    }
    Ok(out)
}

/// Register bookkeeping for a flattened tensor-product index.
#[derive(Debug, Clone)]
pub struct Registers {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Registers {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Registers {
            dims: dims.to_vec(),
            strides,
            total: dims.iter().product(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn digit(&self, index: usize, reg: usize) -> usize {
        (index / self.strides[reg]) % self.dims[reg]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|r| self.digit(index, r)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Offsets of every joint value of `regs` (first listed register most
    /// significant), relative to a base index whose `regs` digits are zero.
    pub fn offsets(&self, regs: &[usize]) -> Vec<usize> {
        let sub = Registers::new(&regs.iter().map(|&r| self.dims[r]).collect::<Vec<_>>());
        (0..sub.total())
            .map(|s| {
                regs.iter()
                    .enumerate()
                    .map(|(k, &r)| sub.digit(s, k) * self.strides[r])
                    .sum()
            })
            .collect()
    }

    /// Base indices: all indices whose `regs` digits are zero.
    pub fn bases(&self, regs: &[usize]) -> Vec<usize> {
        (0..self.total)
            .filter(|&i| regs.iter().all(|&r| self.digit(i, r) == 0))
            .collect()
    }
}

/// Apply `op`, acting on the listed registers (in listed order), to a
/// flattened amplitude vector.
pub fn apply_on_registers(amps: &[C64], dims: &[usize], regs: &[usize], op: &CMatrix) -> Result<Vec<C64>> {
    let layout = Registers::new(dims);
    if amps.len() != layout.total() {
        return Err(Error::Dimension(format!(
            "vector of length {} does not match dims {dims:?}",
            amps.len()
        )));
    }
    if let Some(&r) = regs.iter().find(|&&r| r >= dims.len()) {
        return Err(Error::Dimension(format!("register {r} not in {dims:?}")));
    }
    let offsets = layout.offsets(regs);
    if op.nrows() != offsets.len() || op.ncols() != offsets.len() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, registers {regs:?} span dimension {}",
            op.nrows(),
            op.ncols(),
            offsets.len()
        )));
    }
    let mut out = vec![ZERO; amps.len()];
    let mut gathered = vec![ZERO; offsets.len()];
    for base in layout.bases(regs) {
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = amps[base + off];
        }
        for (row, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (col, g) in gathered.iter().enumerate() {
                let entry = op[(row, col)];
                if entry != ZERO {
                    acc += entry * g;
                }
            }
            out[base + off] = acc;
        }
    }
    Ok(out)
}

/// Reorder registers: output register `k` is input register `order[k]`.
pub fn permute_registers(amps: &[C64], dims: &[usize], order: &[usize]) -> Result<(Vec<C64>, Vec<usize>)> {
    let mut seen = vec![false; dims.len()];
    if order.len() != dims.len()
        || order
            .iter()
            .any(|&r| r >= dims.len() || std::mem::replace(&mut seen[r], true))
    {
        return Err(Error::Dimension(format!(
            "{order:?} is not a permutation of {} registers",
            dims.len()
        )));
    }
    let src = Registers::new(dims);
    let new_dims: Vec<usize> = order.iter().map(|&r| dims[r]).collect();
    let dst = Registers::new(&new_dims);
    let mut out = vec![ZERO; amps.len()];
    let mut digits = vec![0; dims.len()];
    for (i, &a) in amps.iter().enumerate() {
        for (k, &r) in order.iter().enumerate() {
            digits[k] = src.digit(i, r);
        }
        out[dst.index(&digits)] = a;
    }
    Ok((out, new_dims))
}

/// Normalized amplitude vector over a tensor-factored Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

/// Norm tolerance enforced when a state is constructed from raw amplitudes.
pub const STATE_NORM_TOL: f64 = 1e-10;

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        check_dims(&dims)?;
        let total: usize = dims.iter().product();
        if amps.len() != total {
            return Err(Error::Dimension(format!(
                "{} amplitudes for dims {dims:?} (expected {total})",
                amps.len()
            )));
        }
        let norm = vec_norm(&amps);
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::Domain(format!("state has norm {norm}, expected 1")));
        }
        Ok(StateVector { dims, amps })
    }

    /// Normalizes `amps`; fails on the zero vector.
    pub fn normalized(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amps);
        if norm == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        let scale = 1.0 / norm;
        Self::new(dims, amps.into_iter().map(|a| a * scale).collect())
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        check_dims(&dims)?;
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(d, n)| d >= n) {
            return Err(Error::Dimension(format!("basis label {digits:?} invalid for {dims:?}")));
        }
        let layout = Registers::new(&dims);
        let mut amps = vec![ZERO; layout.total()];
        amps[layout.index(digits)] = ONE;
        Ok(StateVector { dims, amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amps)
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_column_slice(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    /// `|⟨self|other⟩|`, the phase-free overlap.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let amps = tensor_amplitudes(&self.amps, &other.amps);
        StateVector { dims, amps }
    }

    /// Apply a single-register operator; the result need not be normalized.
    pub fn apply_local(&self, op: &CMatrix, party: usize) -> Result<Vec<C64>> {
        apply_on_registers(&self.amps, &self.dims, &[party], op)
    }

    /// Apply a unitary to one register, keeping the result as a state.
    pub fn apply_unitary(&self, u: &CMatrix, party: usize) -> Result<StateVector> {
        let amps = self.apply_local(u, party)?;
        StateVector::new(self.dims.clone(), amps)
    }

    pub fn density_matrix(&self) -> CMatrix {
        let v = self.to_vector();
        &v * v.adjoint()
    }

    /// Reduced density operator on `keep`, computed from the amplitudes.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<CMatrix> {
        reduced_density(&self.amps, &self.dims, keep)
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Dimension(format!("invalid dimension list {dims:?}")));
    }
    Ok(())
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn tensor_amplitudes(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

pub fn sub_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Reduced density operator of the (possibly unnormalized) vector `amps` on
/// the registers `keep`, in increasing register order.
pub fn reduced_density(amps: &[C64], dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let (keep, traced) = split_registers(dims.len(), keep)?;
    let mut order = keep.clone();
    order.extend_from_slice(&traced);
    let (perm, _) = permute_registers(amps, dims, &order)?;
    let kd: usize = keep.iter().map(|&r| dims[r]).product();
    let td: usize = traced.iter().map(|&r| dims[r]).product();
    // Row-major (kd x td) reshape: rho = M M^dagger.
    let m = CMatrix::from_fn(kd, td, |r, c| perm[r * td + c]);
    Ok(&m * m.adjoint())
}

fn split_registers(n: usize, keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut mask = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(Error::Dimension(format!("register {k} out of range for {n} registers")));
        }
        mask[k] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&r| mask[r]).collect();
    let traced: Vec<usize> = (0..n).filter(|&r| !mask[r]).collect();
    Ok((keep, traced))
}

/// Partial trace of a density operator, keeping the registers in `keep`.
pub fn partial_trace(rho: &CMatrix, keep: &[usize], dims: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, dims {dims:?} give {total}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let (keep, traced) = split_registers(dims.len(), keep)?;
    let layout = Registers::new(dims);
    let kept = Registers::new(&keep.iter().map(|&r| dims[r]).collect::<Vec<_>>());
    let rest = Registers::new(&traced.iter().map(|&r| dims[r]).collect::<Vec<_>>());
    let mut digits = vec![0; dims.len()];
    let mut full_index = |k: usize, t: usize| {
        for (pos, &r) in keep.iter().enumerate() {
            digits[r] = kept.digit(k, pos);
        }
        for (pos, &r) in traced.iter().enumerate() {
            digits[r] = rest.digit(t, pos);
        }
        layout.index(&digits)
    };
    let mut out = CMatrix::zeros(kept.total(), kept.total());
    for a in 0..kept.total() {
        for b in 0..kept.total() {
            let mut acc = ZERO;
            for t in 0..rest.total() {
                let i = full_index(a, t);
                let j = full_index(b, t);
                acc += rho[(i, j)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity(rho: &CMatrix, psi: &StateVector) -> Result<f64> {
    if rho.nrows() != psi.len() || rho.ncols() != psi.len() {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, state has length {}",
            rho.nrows(),
            rho.ncols(),
            psi.len()
        )));
    }
    let v = psi.to_vector();
    Ok((v.adjoint() * rho * &v)[(0, 0)].re)
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for row in 0..dim {
            u[(row, k)] *= phase;
        }
    }
    u
}

/// Random normalized state over `dims`.
pub fn random_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> StateVector {
    let total: usize = dims.iter().product();
    let amps = (0..total)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::normalized(dims.to_vec(), amps).expect("gaussian vector is nonzero")
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}
