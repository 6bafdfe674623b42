//! Strategies: a joint state plus per-party measurement settings. Ideal
//! strategies for every family, adversarial re-embeddings, white-noise
//! mixing and the JSON file format.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    identity, permute_registers, random_state, random_unitary, tensor_amplitudes, CMatrix, StateVector, C64,
};
use crate::observables::{
    ideal_ghz_measurements, ideal_graph_measurements, ideal_schmidt_measurements, ideal_w_measurements,
    tilted_last_measurements, PartyMeasurements, Pvm,
};
use crate::states::{
    ghz_like, ghz_state, graph_state, schmidt_state, x_dicke_state, x_w_state, Graph, SchmidtCoefficients,
};

/// Upper bound on the joint Hilbert-space dimension of any strategy we build.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Self-testing family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Family {
    /// Two parties, tilted CHSH at angle θ.
    Chsh {
        theta: f64,
    },
    Ghz {
        n: usize,
        theta: f64,
    },
    Schmidt {
        n: usize,
        coeffs: SchmidtCoefficients,
    },
    /// `σ_x` on the last party applied to the W state.
    W {
        n: usize,
    },
    /// `σ_x` on the last party applied to the Dicke state with `k` excitations.
    Dicke {
        n: usize,
        k: usize,
    },
    Graph {
        graph: Graph,
    },
}

impl Family {
    pub fn parties(&self) -> usize {
        match self {
            Family::Chsh { .. } => 2,
            Family::Ghz { n, .. } | Family::Schmidt { n, .. } | Family::W { n } | Family::Dicke { n, .. } => *n,
            Family::Graph { graph } => graph.vertex_count(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Chsh { .. } => "chsh",
            Family::Ghz { .. } => "ghz",
            Family::Schmidt { .. } => "schmidt",
            Family::W { .. } => "w",
            Family::Dicke { .. } => "dicke",
            Family::Graph { .. } => "graph",
        }
    }

    /// Local dimension of every party in the ideal strategy.
    pub fn local_dim(&self) -> usize {
        match self {
            Family::Schmidt { coeffs, .. } => coeffs.dim(),
            _ => 2,
        }
    }

    /// Settings per party in the ideal strategy.
    pub fn setting_counts(&self) -> Vec<usize> {
        let n = self.parties();
        match self {
            Family::Schmidt { .. } => {
                let mut v = vec![3; n - 1];
                v.push(4);
                v
            }
            _ => vec![2; n],
        }
    }

    /// Range checks shared by every consumer of the parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Chsh { theta } => ghz_state(2, *theta).map(|_| ()),
            Family::Ghz { n, theta } => {
                if *n < 3 {
                    return Err(Error::Domain(format!("GHZ family needs n >= 3, got {n}")));
                }
                ghz_state(*n, *theta).map(|_| ())
            }
            Family::Schmidt { n, .. } => {
                if *n < 2 {
                    return Err(Error::Domain(format!("Schmidt family needs n >= 2, got {n}")));
                }
                Ok(())
            }
            Family::W { n } => {
                if *n < 3 {
                    return Err(Error::Domain(format!("W family needs n >= 3, got {n}")));
                }
                Ok(())
            }
            Family::Dicke { n, k } => {
                if *n < 3 || *k == 0 || *k >= *n {
                    return Err(Error::Domain(format!(
                        "Dicke family needs n >= 3 and 1 <= k <= n-1, got n={n}, k={k}"
                    )));
                }
                Ok(())
            }
            Family::Graph { graph } => {
                if graph.vertex_count() < 2 {
                    return Err(Error::Graph("need at least 2 vertices".into()));
                }
                if !graph.is_selftest_labelled() {
                    return Err(Error::Graph(
                        "vertices n-2 and n-1 must be adjacent and n-1 must have minimal degree; relabel first".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The state the family certifies.
    pub fn target_state(&self) -> Result<StateVector> {
        self.validate()?;
        match self {
            Family::Chsh { theta } => ghz_state(2, *theta),
            Family::Ghz { n, theta } => ghz_state(*n, *theta),
            Family::Schmidt { n, coeffs } => schmidt_state(coeffs, *n),
            Family::W { n } => x_w_state(*n),
            Family::Dicke { n, k } => x_dicke_state(*n, *k),
            Family::Graph { graph } => Ok(graph_state(graph)),
        }
    }
}

/// Joint state, measurement settings, and an optional white-noise weight `ε`
/// under which correlations are evaluated against
/// `ρ = (1-ε)|ψ⟩⟨ψ| + ε I/D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    state: StateVector,
    parties: Vec<PartyMeasurements>,
    noise: f64,
    family: Option<Family>,
}

impl Strategy {
    pub fn new(state: StateVector, parties: Vec<PartyMeasurements>) -> Result<Self> {
        if parties.len() != state.parties() {
            return Err(Error::Strategy(format!(
                "state has {} parties but {} measurement lists were given",
                state.parties(),
                parties.len()
            )));
        }
        for (l, (p, &d)) in parties.iter().zip(state.dims()).enumerate() {
            if p.dim() != d {
                return Err(Error::Strategy(format!(
                    "party {l} measures on dimension {} but holds {d}",
                    p.dim()
                )));
            }
        }
        let total: usize = state.dims().iter().product();
        if total > MAX_TOTAL_DIM {
            return Err(Error::Dimension(format!(
                "total dimension {total} exceeds {MAX_TOTAL_DIM}"
            )));
        }
        Ok(Strategy {
            state,
            parties,
            noise: 0.0,
            family: None,
        })
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn dims(&self) -> &[usize] {
        self.state.dims()
    }

    pub fn total_dim(&self) -> usize {
        self.state.len()
    }

    pub fn party_count(&self) -> usize {
        self.parties.len()
    }

    pub fn parties(&self) -> &[PartyMeasurements] {
        &self.parties
    }

    pub fn party(&self, l: usize) -> Result<&PartyMeasurements> {
        self.parties
            .get(l)
            .ok_or_else(|| Error::Dimension(format!("party {l} out of range ({} parties)", self.parties.len())))
    }

    /// `P_0 - P_1` of a two-outcome setting.
    pub fn observable(&self, party: usize, setting: usize) -> Result<CMatrix> {
        self.party(party)?.observable(setting)
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn family(&self) -> Option<&Family> {
        self.family.as_ref()
    }

    pub fn setting_counts(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.setting_count()).collect()
    }

    pub fn outcome_counts(&self, question: &[usize]) -> Result<Vec<usize>> {
        if question.len() != self.parties.len() {
            return Err(Error::Dimension(format!(
                "question has {} entries for {} parties",
                question.len(),
                self.parties.len()
            )));
        }
        question
            .iter()
            .enumerate()
            .map(|(l, &x)| Ok(self.parties[l].setting(x)?.outcome_count()))
            .collect()
    }

    /// Checks that the strategy has the question/answer arity of `family`.
    pub fn check_arity(&self, family: &Family) -> Result<()> {
        family.validate()?;
        if self.party_count() != family.parties() {
            return Err(Error::Strategy(format!(
                "{} family expects {} parties, strategy has {}",
                family.name(),
                family.parties(),
                self.party_count()
            )));
        }
        let outcomes = family.local_dim();
        for (l, (p, &want)) in self.parties.iter().zip(&family.setting_counts()).enumerate() {
            if p.setting_count() != want {
                return Err(Error::Strategy(format!(
                    "{} family expects {want} settings for party {l}, found {}",
                    family.name(),
                    p.setting_count()
                )));
            }
            if let Some(x) = p.settings().iter().position(|s| s.outcome_count() != outcomes) {
                return Err(Error::Strategy(format!(
                    "{} family expects {outcomes} outcomes, party {l} setting {x} has {}",
                    family.name(),
                    p.settings()[x].outcome_count()
                )));
            }
        }
        Ok(())
    }
}

/// Ideal strategy of a family, tagged with it.
pub fn ideal_strategy(family: &Family) -> Result<Strategy> {
    let state = family.target_state()?;
    let parties = match family {
        Family::Chsh { theta } => ideal_ghz_measurements(2, *theta)?,
        Family::Ghz { n, theta } => ideal_ghz_measurements(*n, *theta)?,
        Family::Schmidt { n, coeffs } => ideal_schmidt_measurements(coeffs, *n)?,
        Family::W { n } | Family::Dicke { n, .. } => ideal_w_measurements(*n)?,
        Family::Graph { graph } => ideal_graph_measurements(graph)?,
    };
    Ok(Strategy::new(state, parties)?.with_family(family.clone()))
}

/// GHZ-type strategy at any angle θ ∈ (0, π/2), with the last party's tilted
/// pair at `arctan sin 2θ`. These are the reference blocks of Schmidt tables.
pub(crate) fn ghz_block_strategy(n: usize, theta: f64) -> Result<Strategy> {
    let mu = crate::observables::mu_from_theta(theta)?;
    Strategy::new(ghz_like(n, theta), tilted_last_measurements(n, mu)?)
}

/// White-noise mixture `(1-ε)|ψ⟩⟨ψ| + ε I/D` of a strategy.
pub fn noise_mix(s: &Strategy, epsilon: f64) -> Result<Strategy> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("noise weight {epsilon} not in [0, 1]")));
    }
    let mut out = s.clone();
    out.noise = epsilon;
    Ok(out)
}

/// Junk factors and local unitaries applied to a strategy. All randomness is
/// drawn from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialTransform {
    pub junk_dims: Vec<usize>,
    pub seed: u64,
    /// Joint junk state over `junk_dims`; a random entangled state if absent.
    pub junk_state: Option<StateVector>,
    /// Skip the local unitaries (junk factors only).
    pub skip_unitaries: bool,
}

impl AdversarialTransform {
    pub fn new(junk_dims: Vec<usize>, seed: u64) -> Self {
        AdversarialTransform {
            junk_dims,
            seed,
            junk_state: None,
            skip_unitaries: false,
        }
    }

    /// No junk, no rotation.
    pub fn identity(parties: usize) -> Self {
        AdversarialTransform {
            junk_dims: vec![1; parties],
            seed: 0,
            junk_state: None,
            skip_unitaries: true,
        }
    }
}

/// Tensor junk onto every party and rotate each local space by a random
/// unitary. Correlations are unchanged.
pub fn adversarial_embed(s: &Strategy, t: &AdversarialTransform) -> Result<Strategy> {
    let n = s.party_count();
    if t.junk_dims.len() != n {
        return Err(Error::Dimension(format!(
            "{} junk dimensions for {n} parties",
            t.junk_dims.len()
        )));
    }
    if t.junk_dims.contains(&0) {
        return Err(Error::Dimension("junk dimensions must be at least 1".into()));
    }
    let new_dims: Vec<usize> = s.dims().iter().zip(&t.junk_dims).map(|(d, j)| d * j).collect();
    let total = new_dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&t| t <= MAX_TOTAL_DIM)
        .ok_or_else(|| {
            Error::Dimension(format!(
                "embedded dimensions {new_dims:?} exceed the {MAX_TOTAL_DIM} limit"
            ))
        })?;
    debug_assert!(total > 0);

    let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
    let junk = match &t.junk_state {
        Some(j) => {
            if j.dims() != t.junk_dims.as_slice() {
                return Err(Error::Dimension(format!(
                    "junk state dims {:?} differ from {:?}",
                    j.dims(),
                    t.junk_dims
                )));
            }
            j.clone()
        }
        None => random_state(&t.junk_dims, &mut rng),
    };

    // [orig_0..orig_{n-1}, junk_0..junk_{n-1}] -> [orig_0, junk_0, orig_1, ...]
    let amps = tensor_amplitudes(s.state().amplitudes(), junk.amplitudes());
    let mut dims: Vec<usize> = s.dims().to_vec();
    dims.extend_from_slice(&t.junk_dims);
    let order: Vec<usize> = (0..n).flat_map(|l| [l, n + l]).collect();
    let (amps, _) = permute_registers(&amps, &dims, &order)?;
    let mut state = StateVector::new(new_dims.clone(), amps)?;

    let mut parties = Vec::with_capacity(n);
    for (l, p) in s.parties().iter().enumerate() {
        let u = if t.skip_unitaries {
            identity(new_dims[l])
        } else {
            random_unitary(new_dims[l], &mut rng)
        };
        state = state.apply_unitary(&u, l)?;
        parties.push(p.map_settings(|pvm| pvm.extended(t.junk_dims[l]).conjugated(&u)));
    }
    let mut out = Strategy::new(state, parties)?;
    out.noise = s.noise;
    out.family = s.family.clone();
    Ok(out)
}

// ---- serialization ----

#[derive(Serialize, Deserialize)]
struct ComplexVecFile {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ComplexMatrixFile {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SettingFile {
    projectors: Vec<ComplexMatrixFile>,
}

#[derive(Serialize, Deserialize)]
struct PartyFile {
    settings: Vec<SettingFile>,
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<Family>,
    #[serde(default, skip_serializing_if = "is_zero")]
    noise: f64,
    dims: Vec<usize>,
    state: ComplexVecFile,
    parties: Vec<PartyFile>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn matrix_to_file(m: &CMatrix) -> ComplexMatrixFile {
    let rows = |f: fn(&C64) -> f64| {
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect())
            .collect()
    };
    ComplexMatrixFile {
        re: rows(|z| z.re),
        im: rows(|z| z.im),
    }
}

fn matrix_from_file(f: &ComplexMatrixFile, dim: usize, path: &str) -> Result<CMatrix> {
    if f.re.len() != dim || f.im.len() != dim {
        return Err(Error::parse(path, format!("expected {dim} rows in `re` and `im`")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        if f.re[r].len() != dim || f.im[r].len() != dim {
            return Err(Error::parse(
                format!("{path}.re[{r}]"),
                format!("expected {dim} columns"),
            ));
        }
        for c in 0..dim {
            m[(r, c)] = C64::new(f.re[r][c], f.im[r][c]);
        }
    }
    Ok(m)
}

impl Strategy {
    /// JSON text; lossless (shortest round-trip float formatting).
    pub fn to_json(&self) -> String {
        let file = StrategyFile {
            family: self.family.clone(),
            noise: self.noise,
            dims: self.dims().to_vec(),
            state: ComplexVecFile {
                re: self.state.amplitudes().iter().map(|z| z.re).collect(),
                im: self.state.amplitudes().iter().map(|z| z.im).collect(),
            },
            parties: self
                .parties
                .iter()
                .map(|p| PartyFile {
                    settings: p
                        .settings()
                        .iter()
                        .map(|s| SettingFile {
                            projectors: s.projectors().iter().map(matrix_to_file).collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("strategy serializes")
    }

    /// Parse and validate a strategy file.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: StrategyFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let dims = file.dims;
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::parse("dims", "must be a non-empty list of positive integers"));
        }
        if file.state.re.len() != total || file.state.im.len() != total {
            return Err(Error::parse(
                "state",
                format!(
                    "expected {total} amplitudes in `re` and `im`, found {} and {}",
                    file.state.re.len(),
                    file.state.im.len()
                ),
            ));
        }
        let amps = file
            .state
            .re
            .iter()
            .zip(&file.state.im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        let state = StateVector::new(dims.clone(), amps).map_err(|e| Error::parse("state", e.to_string()))?;
        if file.parties.len() != dims.len() {
            return Err(Error::parse(
                "parties",
                format!("expected {} parties, found {}", dims.len(), file.parties.len()),
            ));
        }
        let mut parties = Vec::with_capacity(dims.len());
        for (l, (p, &d)) in file.parties.iter().zip(&dims).enumerate() {
            let mut settings = Vec::with_capacity(p.settings.len());
            for (x, s) in p.settings.iter().enumerate() {
                let path = format!("parties[{l}].settings[{x}]");
                let projectors = s
                    .projectors
                    .iter()
                    .enumerate()
                    .map(|(a, m)| matrix_from_file(m, d, &format!("{path}.projectors[{a}]")))
                    .collect::<Result<Vec<_>>>()?;
                settings.push(Pvm::new(projectors).map_err(|e| Error::parse(&path, e.to_string()))?);
            }
            parties.push(
                PartyMeasurements::new(settings).map_err(|e| Error::parse(format!("parties[{l}]"), e.to_string()))?,
            );
        }
        let mut s = Strategy::new(state, parties)?;
        if !(0.0..=1.0).contains(&file.noise) {
            return Err(Error::parse("noise", "must lie in [0, 1]"));
        }
        s.noise = file.noise;
        if let Some(f) = file.family {
            f.validate().map_err(|e| Error::parse("family", e.to_string()))?;
            s.family = Some(f);
        }
        Ok(s)
    }
}
