//! Measurement families: binary observables, projective measurements, the
//! ideal settings of every family, and extraction of regularized operators
//! from an arbitrary two-setting party.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_defect, identity, max_abs, projectors_from_binary, real_matrix, regularized_polar, sigma_x, sigma_z,
    CMatrix, C64, DEFAULT_ZERO_TOL,
};
use crate::states::{Graph, SchmidtCoefficients};

/// Tolerance for the PVM and binary-observable invariants.
pub const MEASUREMENT_TOL: f64 = 1e-10;

/// Hermitian operator with spectrum in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryObservable {
    matrix: CMatrix,
}

impl BinaryObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("observable must be square".into()));
        }
        let herm = hermitian_defect(&matrix);
        let sq = max_abs(&(&matrix * &matrix - identity(matrix.nrows())));
        if herm > MEASUREMENT_TOL || sq > MEASUREMENT_TOL {
            return Err(Error::Operator(format!(
                "not a binary observable (hermitian defect {herm:.2e}, |M^2 - I| = {sq:.2e})"
            )));
        }
        Ok(BinaryObservable { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Two-outcome PVM: outcome 0 is the `+1` eigenspace, outcome 1 the `-1`.
    pub fn to_pvm(&self) -> Pvm {
        let (plus, minus) = projectors_from_binary(&self.matrix).expect("validated observable");
        Pvm {
            outcomes: vec![plus, minus],
        }
    }
}

/// Complete set of mutually orthogonal projectors, one per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Pvm {
    outcomes: Vec<CMatrix>,
}

impl Pvm {
    pub fn new(outcomes: Vec<CMatrix>) -> Result<Self> {
        let pvm = Pvm { outcomes };
        pvm.validate(MEASUREMENT_TOL)?;
        Ok(pvm)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let first = self
            .outcomes
            .first()
            .ok_or_else(|| Error::Operator("measurement has no outcomes".into()))?;
        let dim = first.nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        for (a, p) in self.outcomes.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "outcome {a} has shape {:?}, expected {dim}x{dim}",
                    p.shape()
                )));
            }
            let herm = hermitian_defect(p);
            let idem = max_abs(&(p * p - p));
            if herm > tol || idem > tol {
                return Err(Error::Operator(format!(
                    "outcome {a} is not a projector (hermitian defect {herm:.2e}, idempotence {idem:.2e})"
                )));
            }
            for (b, q) in self.outcomes.iter().enumerate().skip(a + 1) {
                let overlap = max_abs(&(p * q));
                if overlap > tol {
                    return Err(Error::Operator(format!(
                        "outcomes {a} and {b} are not orthogonal ({overlap:.2e})"
                    )));
                }
            }
            sum += p;
        }
        let completeness = max_abs(&(sum - identity(dim)));
        if completeness > tol {
            return Err(Error::Operator(format!(
                "projectors do not sum to identity ({completeness:.2e})"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].nrows()
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn projector(&self, outcome: usize) -> &CMatrix {
        &self.outcomes[outcome]
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.outcomes
    }

    /// `P_0 - P_1` for two-outcome measurements.
    pub fn observable(&self) -> Result<CMatrix> {
        match self.outcomes.as_slice() {
            [p, m] => Ok(p - m),
            _ => Err(Error::Operator(format!(
                "observable needs a two-outcome measurement, found {} outcomes",
                self.outcomes.len()
            ))),
        }
    }

    /// Conjugate every projector: `P -> U P U†`.
    pub fn conjugated(&self, u: &CMatrix) -> Pvm {
        Pvm {
            outcomes: self.outcomes.iter().map(|p| u * p * u.adjoint()).collect(),
        }
    }

    /// Extend every projector to `P ⊗ I_junk`.
    pub fn extended(&self, junk_dim: usize) -> Pvm {
        let id = identity(junk_dim);
        Pvm {
            outcomes: self.outcomes.iter().map(|p| p.kronecker(&id)).collect(),
        }
    }

    pub(crate) fn from_raw(outcomes: Vec<CMatrix>) -> Pvm {
        Pvm { outcomes }
    }
}

impl From<BinaryObservable> for Pvm {
    fn from(o: BinaryObservable) -> Self {
        o.to_pvm()
    }
}

/// Measurement settings of one party, indexed by question.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyMeasurements {
    settings: Vec<Pvm>,
}

impl PartyMeasurements {
    pub fn new(settings: Vec<Pvm>) -> Result<Self> {
        let dim = settings
            .first()
            .ok_or_else(|| Error::Operator("party has no measurement settings".into()))?
            .dim();
        if let Some(x) = settings.iter().position(|s| s.dim() != dim) {
            return Err(Error::Dimension(format!(
                "setting {x} acts on a different dimension than setting 0"
            )));
        }
        Ok(PartyMeasurements { settings })
    }

    pub fn from_observables(obs: Vec<BinaryObservable>) -> Result<Self> {
        Self::new(obs.into_iter().map(Pvm::from).collect())
    }

    pub fn dim(&self) -> usize {
        self.settings[0].dim()
    }

    pub fn setting_count(&self) -> usize {
        self.settings.len()
    }

    pub fn setting(&self, x: usize) -> Result<&Pvm> {
        self.settings
            .get(x)
            .ok_or_else(|| Error::Dimension(format!("setting {x} out of range ({} settings)", self.settings.len())))
    }

    pub fn settings(&self) -> &[Pvm] {
        &self.settings
    }

    pub fn observable(&self, x: usize) -> Result<CMatrix> {
        self.setting(x)?.observable()
    }

    pub(crate) fn map_settings(&self, f: impl Fn(&Pvm) -> Pvm) -> PartyMeasurements {
        PartyMeasurements {
            settings: self.settings.iter().map(f).collect(),
        }
    }
}

/// `cos μ σ_z ± sin μ σ_x`
pub fn tilted_pair(mu: f64) -> Result<(BinaryObservable, BinaryObservable)> {
    if !(mu > 0.0 && mu < FRAC_PI_2) {
        return Err(Error::Domain(format!("mu = {mu} not in (0, pi/2)")));
    }
    Ok(tilted_pair_unchecked(mu))
}

fn tilted_pair_unchecked(mu: f64) -> (BinaryObservable, BinaryObservable) {
    let (c, s) = (mu.cos(), mu.sin());
    let plus = real_matrix(2, 2, &[c, s, s, -c]);
    let minus = real_matrix(2, 2, &[c, -s, -s, -c]);
    (
        BinaryObservable::new(plus).expect("unit vector on the Bloch sphere"),
        BinaryObservable::new(minus).expect("unit vector on the Bloch sphere"),
    )
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= FRAC_PI_4 + 1e-15) {
        return Err(Error::Domain(format!("theta = {theta} not in (0, pi/4]")));
    }
    Ok(())
}

/// Tilt `α = 2 cos 2θ / √(1 + sin² 2θ)` of the tilted CHSH expression.
pub fn alpha_from_theta(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let s = (2.0 * theta).sin();
    Ok(2.0 * (2.0 * theta).cos() / (1.0 + s * s).sqrt())
}

/// `μ = arctan sin 2θ`; any θ ∈ (0, π/2) is accepted so the block angles of
/// Schmidt states are covered.
pub fn mu_from_theta(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::Domain(format!("theta = {theta} not in (0, pi/2)")));
    }
    Ok((2.0 * theta).sin().atan())
}

/// Inverse of [`alpha_from_theta`], from `sin 2θ = √((4 - α²)/(4 + α²))`.
pub fn theta_from_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} not in [0, 2)")));
    }
    let a2 = alpha * alpha;
    Ok(((4.0 - a2) / (4.0 + a2)).sqrt().asin() / 2.0)
}

/// Maximal quantum value `√(8 + 2α²)` of the tilted CHSH expression.
pub fn tilted_chsh_max(alpha: f64) -> f64 {
    (8.0 + 2.0 * alpha * alpha).sqrt()
}

/// Regularized `(Z, X)` for a party holding a tilted pair `B0, B1`:
/// `Z = sign((B0 + B1)/2cos μ)`, `X = sign((B0 - B1)/2sin μ)`, zero
/// eigenvalues mapped to `+1`.
pub fn extract_zx(b0: &CMatrix, b1: &CMatrix, mu: f64) -> Result<(BinaryObservable, BinaryObservable)> {
    extract_zx_with_tol(b0, b1, mu, DEFAULT_ZERO_TOL)
}

pub fn extract_zx_with_tol(
    b0: &CMatrix,
    b1: &CMatrix,
    mu: f64,
    zero_tol: f64,
) -> Result<(BinaryObservable, BinaryObservable)> {
    if !(mu > 0.0 && mu < FRAC_PI_2) {
        return Err(Error::Domain(format!("mu = {mu} not in (0, pi/2)")));
    }
    if b0.shape() != b1.shape() {
        return Err(Error::Dimension("observables act on different spaces".into()));
    }
    let z = (b0 + b1) * C64::new(1.0 / (2.0 * mu.cos()), 0.0);
    let x = (b0 - b1) * C64::new(1.0 / (2.0 * mu.sin()), 0.0);
    Ok((
        BinaryObservable::new(regularized_polar(&z, zero_tol)?)?,
        BinaryObservable::new(regularized_polar(&x, zero_tol)?)?,
    ))
}

/// Basis pair `{2m, 2m+1}` (or `{2m+1, 2m+2}` when shifted), mod `d`.
pub fn block_basis(m: usize, d: usize, shifted: bool) -> Result<(usize, usize)> {
    let first = 2 * m + usize::from(shifted);
    if d < 2 || first >= d || (!shifted && first + 1 >= d) {
        return Err(Error::Dimension(format!(
            "block {m}{} does not fit in dimension {d}",
            if shifted { "'" } else { "" }
        )));
    }
    Ok((first, (first + 1) % d))
}

/// Embed a 2×2 operator on the block basis pair, zero elsewhere.
pub fn block_observable(a: &CMatrix, m: usize, d: usize, shifted: bool) -> Result<CMatrix> {
    if a.shape() != (2, 2) {
        return Err(Error::Dimension("block operator must be 2x2".into()));
    }
    let (b0, b1) = block_basis(m, d, shifted)?;
    let idx = [b0, b1];
    let mut out = CMatrix::zeros(d, d);
    for r in 0..2 {
        for c in 0..2 {
            out[(idx[r], idx[c])] = a[(r, c)];
        }
    }
    Ok(out)
}

/// Number of 2×2 blocks in a direct-sum setting of local dimension `d`.
pub fn block_count(d: usize) -> usize {
    d / 2
}

/// Outcome left outside every block (odd `d` only): `d-1` unshifted, `0`
/// shifted.
pub fn padding_outcome(d: usize, shifted: bool) -> Option<usize> {
    (d % 2 == 1).then_some(if shifted { 0 } else { d - 1 })
}

/// Eigenbasis measurement of `⊕_m [A_m]` (plus the rank-one padding for odd
/// `d`). The first basis vector of each block labels the `+1` eigenvector.
pub fn direct_sum_pvm(d: usize, shifted: bool, block: impl Fn(usize) -> Result<BinaryObservable>) -> Result<Pvm> {
    let mut outcomes = vec![CMatrix::zeros(d, d); d];
    for m in 0..block_count(d) {
        let a = block(m)?;
        if a.dim() != 2 {
            return Err(Error::Dimension("block observable must be 2x2".into()));
        }
        let (plus, minus) = projectors_from_binary(a.matrix())?;
        let (b0, b1) = block_basis(m, d, shifted)?;
        outcomes[b0] = block_observable(&plus, m, d, shifted)?;
        outcomes[b1] = block_observable(&minus, m, d, shifted)?;
    }
    if let Some(j) = padding_outcome(d, shifted) {
        outcomes[j][(j, j)] = C64::new(1.0, 0.0);
    }
    Pvm::new(outcomes)
}

pub fn computational_pvm(d: usize) -> Pvm {
    Pvm::from_raw(
        (0..d)
            .map(|j| {
                let mut p = CMatrix::zeros(d, d);
                p[(j, j)] = C64::new(1.0, 0.0);
                p
            })
            .collect(),
    )
}

fn pauli(m: CMatrix) -> BinaryObservable {
    BinaryObservable::new(m).expect("Pauli matrices are binary observables")
}

fn pauli_party() -> PartyMeasurements {
    PartyMeasurements::from_observables(vec![pauli(sigma_z()), pauli(sigma_x())]).expect("qubit settings")
}

/// Angle used for the last party's ideal GHZ observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LastPartyAngle {
    /// `μ = arctan sin 2θ`; attains the maximal tilted CHSH value.
    #[default]
    Mu,
    /// `θ` itself; kept for comparison, fails the self-test for θ < π/4.
    Theta,
}

/// Ideal GHZ settings: `{σ_z, σ_x}` for parties `0..N-1`, tilted pair for
/// the last party.
pub fn ideal_ghz_measurements(n: usize, theta: f64) -> Result<Vec<PartyMeasurements>> {
    ideal_ghz_measurements_with(n, theta, LastPartyAngle::Mu)
}

pub fn ideal_ghz_measurements_with(n: usize, theta: f64, angle: LastPartyAngle) -> Result<Vec<PartyMeasurements>> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 parties, got {n}")));
    }
    check_theta(theta)?;
    let mu = match angle {
        LastPartyAngle::Mu => mu_from_theta(theta)?,
        LastPartyAngle::Theta => theta,
    };
    tilted_last_measurements(n, mu)
}

/// `{σ_z, σ_x}` for parties `0..N-1` and `tilted_pair(mu)` for the last.
pub(crate) fn tilted_last_measurements(n: usize, mu: f64) -> Result<Vec<PartyMeasurements>> {
    let (b0, b1) = tilted_pair(mu)?;
    let mut parties = vec![pauli_party(); n - 1];
    parties.push(PartyMeasurements::from_observables(vec![b0, b1])?);
    Ok(parties)
}

/// Block angles `θ_m = arctan(c_{2m+1}/c_{2m})`.
pub fn block_angles(c: &SchmidtCoefficients) -> Vec<f64> {
    (0..block_count(c.dim()))
        .map(|m| (c.get(2 * m + 1) / c.get(2 * m)).atan())
        .collect()
}

/// Shifted block angles `θ'_m = arctan(c_{2m+2}/c_{2m+1})`, indices mod d.
pub fn shifted_block_angles(c: &SchmidtCoefficients) -> Vec<f64> {
    (0..block_count(c.dim()))
        .map(|m| (c.get(2 * m + 2) / c.get(2 * m + 1)).atan())
        .collect()
}

/// Ideal settings for `Σ_j c_j |j⟩^{⊗N}`: three `d`-outcome settings for
/// parties `0..N-1` (computational, unshifted σ_x blocks, shifted σ_x
/// blocks) and four for the last party (tilted blocks, unshifted then
/// shifted).
pub fn ideal_schmidt_measurements(c: &SchmidtCoefficients, n: usize) -> Result<Vec<PartyMeasurements>> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 parties, got {n}")));
    }
    let d = c.dim();
    let sx = || Ok(pauli(sigma_x()));
    let first = PartyMeasurements::new(vec![
        computational_pvm(d),
        direct_sum_pvm(d, false, |_| sx())?,
        direct_sum_pvm(d, true, |_| sx())?,
    ])?;
    let mus: Vec<f64> = block_angles(c).into_iter().map(mu_from_theta).collect::<Result<_>>()?;
    let mus_shifted: Vec<f64> = shifted_block_angles(c)
        .into_iter()
        .map(mu_from_theta)
        .collect::<Result<_>>()?;
    let tilted = |angles: &[f64], shifted: bool, plus: bool| {
        direct_sum_pvm(d, shifted, |m| {
            let (b0, b1) = tilted_pair(angles[m])?;
            Ok(if plus { b0 } else { b1 })
        })
    };
    let last = PartyMeasurements::new(vec![
        tilted(&mus, false, true)?,
        tilted(&mus, false, false)?,
        tilted(&mus_shifted, true, true)?,
        tilted(&mus_shifted, true, false)?,
    ])?;
    let mut parties = vec![first; n - 1];
    parties.push(last);
    Ok(parties)
}

/// CHSH-optimal pair `D = (σ_z + σ_x)/√2`, `E = (σ_z - σ_x)/√2`.
pub fn chsh_pair() -> (BinaryObservable, BinaryObservable) {
    tilted_pair_unchecked(FRAC_PI_4)
}

fn pauli_with_chsh_last(n: usize) -> Result<Vec<PartyMeasurements>> {
    let (d, e) = chsh_pair();
    let mut parties = vec![pauli_party(); n - 1];
    parties.push(PartyMeasurements::from_observables(vec![d, e])?);
    Ok(parties)
}

/// W/Dicke settings: `{σ_z, σ_x}` for parties `0..N-1`, `{D, E}` for the last.
pub fn ideal_w_measurements(n: usize) -> Result<Vec<PartyMeasurements>> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 parties, got {n}")));
    }
    pauli_with_chsh_last(n)
}

pub fn ideal_graph_measurements(g: &Graph) -> Result<Vec<PartyMeasurements>> {
    if g.vertex_count() < 2 {
        return Err(Error::Domain("graph self-test needs at least 2 vertices".into()));
    }
    pauli_with_chsh_last(g.vertex_count())
}

/// `(D + E)/√2` and `(D - E)/√2` written as coefficients on the two settings.
pub const CHSH_Z_COEFFS: [f64; 2] = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
pub const CHSH_X_COEFFS: [f64; 2] = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen, random_unitary, ZERO};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn tilted_pair_examples() {
        let (b0, b1) = tilted_pair(FRAC_PI_4).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!(close(b0.matrix(), &((sigma_z() + sigma_x()) * C64::new(s, 0.0)), 1e-15));
        assert!(close(b1.matrix(), &((sigma_z() - sigma_x()) * C64::new(s, 0.0)), 1e-15));
        for mu in [0.1, 0.5, 1.2] {
            let (b0, b1) = tilted_pair(mu).unwrap();
            let sum = b0.matrix() + b1.matrix();
            assert!(close(&sum, &(sigma_z() * C64::new(2.0 * mu.cos(), 0.0)), 1e-15));
            for b in [b0, b1] {
                let (values, _) = hermitian_eigen(b.matrix()).unwrap();
                assert!((values[0] + 1.0).abs() < 1e-14 && (values[1] - 1.0).abs() < 1e-14);
            }
        }
        assert!(tilted_pair(0.0).is_err());
        assert!(tilted_pair(FRAC_PI_2).is_err());
    }

    #[test]
    fn angle_relations() {
        assert!(alpha_from_theta(FRAC_PI_4).unwrap().abs() < 1e-15);
        assert!((mu_from_theta(FRAC_PI_4).unwrap() - FRAC_PI_4).abs() < 1e-15);
        for k in 1..=50 {
            let theta = FRAC_PI_4 * k as f64 / 50.0;
            let back = theta_from_alpha(alpha_from_theta(theta).unwrap()).unwrap();
            assert!((back - theta).abs() < 1e-12, "theta {theta}: {back}");
        }
        assert!(alpha_from_theta(0.0).is_err());
        assert!(alpha_from_theta(1.0).is_err());
        assert!(theta_from_alpha(2.0).is_err());
        assert!(theta_from_alpha(-0.1).is_err());
    }

    #[test]
    fn extract_zx_ideal_pair() {
        for theta in [PI / 12.0, PI / 8.0, PI / 6.0, PI / 4.0] {
            let mu = mu_from_theta(theta).unwrap();
            let (b0, b1) = tilted_pair(mu).unwrap();
            let (z, x) = extract_zx(b0.matrix(), b1.matrix(), mu).unwrap();
            assert!(close(z.matrix(), &sigma_z(), 1e-14));
            assert!(close(x.matrix(), &sigma_x(), 1e-14));
        }
    }

    #[test]
    fn extract_zx_is_basis_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mu = 0.6;
        let (b0, b1) = tilted_pair(mu).unwrap();
        let u = random_unitary(2, &mut rng);
        let conj = |m: &CMatrix| u.adjoint() * m * &u;
        let (z, x) = extract_zx(&conj(b0.matrix()), &conj(b1.matrix()), mu).unwrap();
        assert!(close(z.matrix(), &conj(&sigma_z()), 1e-13));
        assert!(close(x.matrix(), &conj(&sigma_x()), 1e-13));
    }

    #[test]
    fn extract_zx_degenerate_pair() {
        let (z, x) = extract_zx(&sigma_z(), &sigma_z(), FRAC_PI_4).unwrap();
        assert!(close(z.matrix(), &sigma_z(), 1e-15));
        assert!(close(x.matrix(), &identity(2), 1e-15));
    }

    #[test]
    fn block_observable_examples() {
        let z0 = block_observable(&sigma_z(), 0, 4, false).unwrap();
        let expected = real_matrix(4, 4, &[1., 0., 0., 0., 0., -1., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.]);
        assert!(close(&z0, &expected, 0.0));

        let x0 = block_observable(&sigma_x(), 0, 3, true).unwrap();
        let expected = real_matrix(3, 3, &[0., 0., 0., 0., 0., 1., 0., 1., 0.]);
        assert!(close(&x0, &expected, 0.0));

        // Shifted wrap for even d: block 1' in d = 4 spans {|3⟩, |0⟩}.
        let w = block_observable(&sigma_z(), 1, 4, true).unwrap();
        assert_eq!(w[(3, 3)].re, 1.0);
        assert_eq!(w[(0, 0)].re, -1.0);
        assert!(block_observable(&sigma_z(), 1, 3, false).is_err());
        assert!(block_observable(&sigma_z(), 1, 3, true).is_err());
    }

    #[test]
    fn block_basis_index_arithmetic() {
        for d in 2..9 {
            for shifted in [false, true] {
                let mut covered: Vec<usize> = Vec::new();
                for m in 0..block_count(d) {
                    let (a, b) = block_basis(m, d, shifted).unwrap();
                    assert_eq!(a, (2 * m + usize::from(shifted)) % d);
                    assert_eq!(b, (2 * m + 1 + usize::from(shifted)) % d);
                    covered.extend([a, b]);
                }
                covered.extend(padding_outcome(d, shifted));
                covered.sort();
                assert_eq!(covered, (0..d).collect::<Vec<_>>(), "d={d} shifted={shifted}");
            }
        }
    }

    #[test]
    fn block_family_sums_to_complete_observable() {
        for d in 2..7 {
            for shifted in [false, true] {
                let blocks: Vec<CMatrix> = (0..block_count(d))
                    .map(|m| block_observable(&identity(2), m, d, shifted).unwrap())
                    .collect();
                let mut total = CMatrix::zeros(d, d);
                for (i, a) in blocks.iter().enumerate() {
                    for b in blocks.iter().skip(i + 1) {
                        assert!(max_abs(&(a * b)) == 0.0);
                    }
                    total += a;
                }
                if let Some(j) = padding_outcome(d, shifted) {
                    total[(j, j)] += C64::new(1.0, 0.0);
                }
                assert!(close(&total, &identity(d), 0.0));
            }
        }
    }

    #[test]
    fn schmidt_measurements_reduce_to_ghz_for_qubits() {
        let theta = 0.5;
        let c = SchmidtCoefficients::qubit(theta).unwrap();
        let schmidt = ideal_schmidt_measurements(&c, 3).unwrap();
        let ghz = ideal_ghz_measurements(3, theta).unwrap();
        for (s, g) in schmidt.iter().zip(&ghz) {
            for x in 0..2 {
                for a in 0..2 {
                    assert!(close(
                        s.setting(x).unwrap().projector(a),
                        g.setting(x).unwrap().projector(a),
                        1e-14
                    ));
                }
            }
        }
    }

    #[test]
    fn schmidt_measurements_are_valid_pvms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 2..6 {
            let c = SchmidtCoefficients::random(d, &mut rng).unwrap();
            let parties = ideal_schmidt_measurements(&c, 3).unwrap();
            assert_eq!(parties[0].setting_count(), 3);
            assert_eq!(parties[2].setting_count(), 4);
            for p in &parties {
                for s in p.settings() {
                    s.validate(MEASUREMENT_TOL).unwrap();
                    assert_eq!(s.outcome_count(), d);
                }
            }
        }
    }

    #[test]
    fn odd_dimension_padding_outcome() {
        let u = 1.0 / 3f64.sqrt();
        let c = SchmidtCoefficients::new(vec![u, u, u]).unwrap();
        let parties = ideal_schmidt_measurements(&c, 3).unwrap();
        let p = parties[0].setting(1).unwrap().projector(2);
        let mut expected = CMatrix::zeros(3, 3);
        expected[(2, 2)] = C64::new(1.0, 0.0);
        assert!(close(p, &expected, 0.0));
        let shifted = parties[0].setting(2).unwrap().projector(0);
        assert_eq!(shifted[(0, 0)].re, 1.0);
        assert_eq!(shifted[(1, 1)], ZERO);
    }

    #[test]
    fn ghz_last_party_angles() {
        let parties = ideal_ghz_measurements(3, FRAC_PI_4).unwrap();
        let (d, e) = chsh_pair();
        assert!(close(&parties[2].observable(0).unwrap(), d.matrix(), 1e-15));
        assert!(close(&parties[2].observable(1).unwrap(), e.matrix(), 1e-15));
        let theta = PI / 6.0;
        let by_theta = ideal_ghz_measurements_with(3, theta, LastPartyAngle::Theta).unwrap();
        let expected = real_matrix(2, 2, &[theta.cos(), theta.sin(), theta.sin(), -theta.cos()]);
        assert!(close(&by_theta[2].observable(0).unwrap(), &expected, 1e-15));
    }

    #[test]
    fn chsh_pair_sum() {
        let (d, e) = chsh_pair();
        let sum = d.matrix() + e.matrix();
        assert!(close(&sum, &(sigma_z() * C64::new(2f64.sqrt(), 0.0)), 1e-15));
    }

    #[test]
    fn pvm_validation_errors() {
        let half = identity(2) * C64::new(0.5, 0.0);
        assert!(Pvm::new(vec![half.clone(), half]).is_err());
        assert!(Pvm::new(vec![computational_pvm(2).projector(0).clone()]).is_err());
        assert!(Pvm::new(vec![]).is_err());
        assert!(BinaryObservable::new(identity(2) * C64::new(2.0, 0.0)).is_err());
        assert!(PartyMeasurements::new(vec![computational_pvm(2), computational_pvm(3)]).is_err());
    }
}
