//! Reference states: partially entangled GHZ, Schmidt, Dicke/W and graph states.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sigma_x, Registers, StateVector, C64, ZERO};

/// Tolerance on `Σ c_j² = 1` for Schmidt coefficients.
pub const SCHMIDT_NORM_TOL: f64 = 1e-12;

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        Graph::new(f.n, f.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<Graph> for GraphFile {
    fn from(g: Graph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Graph(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
            if a == b {
                return Err(Error::Graph(format!("self-loop on vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::Graph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn path(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|v| (v - 1, v)))
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Graph("a ring needs at least 3 vertices".into()));
        }
        Graph::new(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    /// Star with center 0 and `n - 1` leaves.
    pub fn star(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|v| (0, v)))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("graph", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return Err(Error::Graph(format!("vertex {v} out of range for {} vertices", self.n)));
        }
        Ok(())
    }

    pub fn neighbors(&self, v: usize) -> Result<BTreeSet<usize>> {
        self.check_vertex(v)?;
        Ok(self
            .edges
            .iter()
            .filter_map(|&(a, b)| match (a == v, b == v) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect())
    }

    /// `(ν_i ∪ ν_j) \ {i, j}`
    pub fn pair_neighbors(&self, i: usize, j: usize) -> Result<BTreeSet<usize>> {
        let mut set = self.neighbors(i)?;
        set.extend(self.neighbors(j)?);
        set.remove(&i);
        set.remove(&j);
        Ok(set)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Relabel the graph so that the last vertex has minimal degree and is
    /// adjacent to the second-to-last one. Returns the relabelled graph and
    /// the map `old label -> new label`.
    pub fn relabel_for_selftest(&self) -> Result<(Graph, Vec<usize>)> {
        if self.n < 2 {
            return Err(Error::Graph("need at least two vertices".into()));
        }
        if let Some(v) = (0..self.n).find(|&v| self.degree(v) == 0) {
            return Err(Error::Graph(format!("vertex {v} is isolated")));
        }
        let last = (0..self.n).min_by_key(|&v| (self.degree(v), v)).expect("non-empty");
        let partner = *self.neighbors(last)?.iter().next().expect("not isolated");
        let mut map = vec![0; self.n];
        let mut next = 0;
        for (v, slot) in map.iter_mut().enumerate() {
            if v == last {
                *slot = self.n - 1;
            } else if v == partner {
                *slot = self.n - 2;
            } else {
                *slot = next;
                next += 1;
            }
        }
        let g = Graph::new(self.n, self.edges.iter().map(|&(a, b)| (map[a], map[b])))?;
        Ok((g, map))
    }

    /// True when the labelling satisfies the convention used by the graph
    /// self-test: vertices `n-2`, `n-1` adjacent and `n-1` of minimal degree.
    pub fn is_selftest_labelled(&self) -> bool {
        let n = self.n;
        n >= 2 && self.has_edge(n - 2, n - 1) && (0..n).all(|v| self.degree(n - 1) <= self.degree(v))
    }
}

/// Schmidt coefficients `c_0, ..., c_{d-1}` with `0 < c_j < 1`, `Σ c_j² = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SchmidtCoefficients(Vec<f64>);

impl TryFrom<Vec<f64>> for SchmidtCoefficients {
    type Error = Error;

    fn try_from(c: Vec<f64>) -> Result<Self> {
        SchmidtCoefficients::new(c)
    }
}

impl From<SchmidtCoefficients> for Vec<f64> {
    fn from(c: SchmidtCoefficients) -> Self {
        c.0
    }
}

impl SchmidtCoefficients {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.len() < 2 {
            return Err(Error::Domain("need at least two Schmidt coefficients".into()));
        }
        if let Some(x) = c.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Domain(format!("Schmidt coefficient {x} not in (0, 1)")));
        }
        let norm: f64 = c.iter().map(|x| x * x).sum();
        if (norm - 1.0).abs() > SCHMIDT_NORM_TOL {
            return Err(Error::Domain(format!("squared coefficients sum to {norm}, expected 1")));
        }
        Ok(SchmidtCoefficients(c))
    }

    /// Normalize positive weights into Schmidt coefficients.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let norm = weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Domain("weights must not all vanish".into()));
        }
        Self::new(weights.iter().map(|w| w / norm).collect())
    }

    /// Random coefficients with every `c_j` bounded away from 0.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.0)).collect();
        Self::from_weights(&w)
    }

    /// `(cos θ, sin θ)`
    pub fn qubit(theta: f64) -> Result<Self> {
        Self::new(vec![theta.cos(), theta.sin()])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Coefficient with the index taken mod `d`.
    pub fn get(&self, j: usize) -> f64 {
        self.0[j % self.0.len()]
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= FRAC_PI_4 + 1e-15) {
        return Err(Error::Domain(format!("theta = {theta} not in (0, pi/4]")));
    }
    Ok(())
}

/// `cos θ |0…0⟩ + sin θ |1…1⟩`, θ ∈ (0, π/4].
pub fn ghz_state(n: usize, theta: f64) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::Domain(format!("GHZ state needs at least 2 parties, got {n}")));
    }
    check_angle(theta)?;
    Ok(ghz_like(n, theta))
}

/// Two-term superposition for any angle; used for the blocks of Schmidt
/// states, where the block angle may exceed π/4.
pub(crate) fn ghz_like(n: usize, theta: f64) -> StateVector {
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = C64::new(theta.cos(), 0.0);
    amps[(1 << n) - 1] = C64::new(theta.sin(), 0.0);
    StateVector::new(vec![2; n], amps).expect("normalized by construction")
}

/// `Σ_j c_j |j⟩^{⊗N}`
pub fn schmidt_state(c: &SchmidtCoefficients, n: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "Schmidt state needs at least 2 parties, got {n}"
        )));
    }
    let d = c.dim();
    let layout = Registers::new(&vec![d; n]);
    let mut amps = vec![ZERO; layout.total()];
    for (j, &cj) in c.values().iter().enumerate() {
        amps[layout.index(&vec![j; n])] = C64::new(cj, 0.0);
    }
    StateVector::new(vec![d; n], amps)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Uniform superposition of all `n`-qubit kets of Hamming weight `k`.
pub fn dicke_state(n: usize, k: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::Domain("Dicke state needs at least one party".into()));
    }
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    let amp = C64::new(1.0 / (binomial(n, k) as f64).sqrt(), 0.0);
    let amps = (0..1usize << n)
        .map(|i| if i.count_ones() as usize == k { amp } else { ZERO })
        .collect();
    StateVector::new(vec![2; n], amps)
}

pub fn w_state(n: usize) -> Result<StateVector> {
    dicke_state(n, 1)
}

/// Dicke state with `σ_x` applied to the last party.
pub fn x_dicke_state(n: usize, k: usize) -> Result<StateVector> {
    dicke_state(n, k)?.apply_unitary(&sigma_x(), n - 1)
}

pub fn x_w_state(n: usize) -> Result<StateVector> {
    x_dicke_state(n, 1)
}

/// Number of edges with both endpoints set in the basis label `bits`
/// (vertex 0 is the most significant bit).
pub fn edge_parity_count(g: &Graph, bits: usize) -> usize {
    let n = g.vertex_count();
    let bit = |v: usize| (bits >> (n - 1 - v)) & 1 == 1;
    g.edges().iter().filter(|&&(a, b)| bit(a) && bit(b)).count()
}

/// `2^{-N/2} Σ_i (-1)^{μ(i)} |i⟩`
pub fn graph_state(g: &Graph) -> StateVector {
    let n = g.vertex_count();
    let amp = 1.0 / ((1usize << n) as f64).sqrt();
    let amps = (0..1usize << n)
        .map(|i| {
            let sign = if edge_parity_count(g, i).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            C64::new(sign * amp, 0.0)
        })
        .collect();
    StateVector::new(vec![2; n], amps).expect("normalized by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{apply_on_registers, embed_local, kron_all, sigma_z, CMatrix, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn real_amps(s: &StateVector) -> Vec<f64> {
        s.amplitudes().iter().map(|a| a.re).collect()
    }

    fn assert_amps(s: &StateVector, expected: &[f64]) {
        assert_eq!(s.len(), expected.len());
        for (a, e) in s.amplitudes().iter().zip(expected) {
            assert!((a.re - e).abs() < 1e-15 && a.im.abs() < 1e-15, "{a} vs {e}");
        }
    }

    #[test]
    fn ghz_examples() {
        let h = FRAC_1_SQRT_2;
        assert_amps(&ghz_state(2, PI / 4.0).unwrap(), &[h, 0.0, 0.0, h]);
        let g3 = ghz_state(3, PI / 4.0).unwrap();
        assert!((g3.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((g3.amplitudes()[7].re - h).abs() < 1e-15);
        let t = PI / 6.0;
        let mut expected = vec![0.0; 8];
        expected[0] = t.cos();
        expected[7] = t.sin();
        assert_amps(&ghz_state(3, t).unwrap(), &expected);
        assert!(ghz_state(3, 0.0).is_err());
        assert!(ghz_state(3, 1.0).is_err());
        assert!(ghz_state(1, 0.5).is_err());
    }

    #[test]
    fn schmidt_examples() {
        let t = 0.4;
        let c = SchmidtCoefficients::qubit(t).unwrap();
        assert_eq!(schmidt_state(&c, 3).unwrap(), ghz_state(3, t).unwrap());

        let u = 1.0 / 3f64.sqrt();
        let c = SchmidtCoefficients::new(vec![u, u, u]).unwrap();
        let s = schmidt_state(&c, 3).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            let expected = if [0, 13, 26].contains(&i) { u } else { 0.0 };
            assert!((a.re - expected).abs() < 1e-15);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let d = rng.random_range(2..6);
            let c = SchmidtCoefficients::random(d, &mut rng).unwrap();
            let norm: f64 = schmidt_state(&c, 3)
                .unwrap()
                .amplitudes()
                .iter()
                .map(|a| a.norm_sqr())
                .sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_coefficient_validation() {
        assert!(SchmidtCoefficients::new(vec![1.0]).is_err());
        assert!(SchmidtCoefficients::new(vec![1.0, 0.0]).is_err());
        assert!(SchmidtCoefficients::new(vec![0.6, 0.6]).is_err());
        assert!(SchmidtCoefficients::new(vec![0.6, 0.8]).is_ok());
        let parsed: std::result::Result<SchmidtCoefficients, _> = serde_json::from_str("[0.5, 0.5]");
        assert!(parsed.is_err());
    }

    #[test]
    fn dicke_examples() {
        let w3 = dicke_state(3, 1).unwrap();
        let u = 1.0 / 3f64.sqrt();
        assert_amps(&w3, &[0.0, u, u, 0.0, u, 0.0, 0.0, 0.0]);
        assert_eq!(w_state(3).unwrap(), w3);

        let mut expected = vec![0.0; 16];
        expected[0] = 1.0;
        assert_amps(&dicke_state(4, 0).unwrap(), &expected);

        // Enumerate weight-2 bitstrings of length 4.
        let d42 = dicke_state(4, 2).unwrap();
        let support: Vec<usize> = (0..16).filter(|i: &usize| i.count_ones() == 2).collect();
        assert_eq!(support.len(), 6);
        for i in 0..16 {
            let expected = if support.contains(&i) { 1.0 / 6f64.sqrt() } else { 0.0 };
            assert!((d42.amplitudes()[i].re - expected).abs() < 1e-15);
        }
        assert!(dicke_state(3, 4).is_err());
    }

    #[test]
    fn x_dicke_examples() {
        let h = FRAC_1_SQRT_2;
        assert_amps(&x_w_state(2).unwrap(), &[h, 0.0, 0.0, h]);
        let u = 1.0 / 3f64.sqrt();
        // |000⟩ + |011⟩ + |101⟩
        assert_amps(&x_w_state(3).unwrap(), &[u, 0.0, 0.0, u, 0.0, u, 0.0, 0.0]);
        for (n, k) in [(4, 2), (5, 3)] {
            let d = dicke_state(n, k).unwrap();
            let flip = embed_local(&sigma_x(), n - 1, &vec![2; n]).unwrap() * d.to_vector();
            let x = x_dicke_state(n, k).unwrap();
            assert!(crate::linalg::sub_norm(x.amplitudes(), flip.as_slice()) < 1e-15);
        }
    }

    #[test]
    fn dicke_complement_equivalence() {
        // |D_N^k⟩ = σ_x^{⊗N} |D_N^{N-k}⟩ (bit complement).
        for n in 2..=6 {
            let flip_all = kron_all(std::iter::repeat_n(&sigma_x(), n).collect::<Vec<_>>());
            for k in 0..=n {
                let a = dicke_state(n, k).unwrap();
                let b = flip_all.clone() * dicke_state(n, n - k).unwrap().to_vector();
                let b = StateVector::new(vec![2; n], b.as_slice().to_vec()).unwrap();
                assert!((a.overlap(&b) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dicke_recursive_decomposition() {
        // Block of the first N-k-1 parties in |i⟩ has norm √C(k+1, k-Ω)/√C(N,k)
        // and is proportional to |D_{k+1}^{k-Ω}⟩.
        for n in 2..=6 {
            for k in 1..n {
                let d = dicke_state(n, k).unwrap();
                let prefix = n - k - 1;
                let rest = k + 1;
                for i in 0..1usize << prefix {
                    let omega = i.count_ones() as usize;
                    let block: Vec<C64> = (0..1usize << rest).map(|j| d.amplitudes()[(i << rest) | j]).collect();
                    let norm = crate::linalg::vec_norm(&block);
                    let expected = if omega <= k {
                        (binomial(rest, k - omega) as f64 / binomial(n, k) as f64).sqrt()
                    } else {
                        0.0
                    };
                    assert!((norm - expected).abs() < 1e-12, "n={n} k={k} i={i}");
                    if expected > 0.0 {
                        let sub = dicke_state(rest, k - omega).unwrap();
                        let overlap = crate::linalg::inner(sub.amplitudes(), &block).norm() / norm;
                        assert!((overlap - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    fn cz_product_state(g: &Graph) -> StateVector {
        let n = g.vertex_count();
        let h = C64::new(1.0 / ((1usize << n) as f64).sqrt(), 0.0);
        let mut amps = vec![h; 1 << n];
        let cz = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]));
        for &(a, b) in g.edges() {
            amps = apply_on_registers(&amps, &vec![2; n], &[a, b], &cz).unwrap();
        }
        StateVector::new(vec![2; n], amps).unwrap()
    }

    #[test]
    fn graph_state_examples() {
        let edge = Graph::new(2, [(0, 1)]).unwrap();
        assert_amps(&graph_state(&edge), &[0.5, 0.5, 0.5, -0.5]);
        let empty = Graph::new(2, []).unwrap();
        assert_amps(&graph_state(&empty), &[0.5; 4]);
        let p3 = Graph::path(3).unwrap();
        assert_eq!(real_amps(&graph_state(&p3)), real_amps(&cz_product_state(&p3)));
    }

    #[test]
    fn graph_state_constructions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in 1..=6 {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            for _ in 0..20 {
                let edges: Vec<_> = pairs.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                let g = Graph::new(n, edges).unwrap();
                let a = graph_state(&g);
                let b = cz_product_state(&g);
                assert!(crate::linalg::sub_norm(a.amplitudes(), b.amplitudes()) < 1e-12);
            }
        }
    }

    #[test]
    fn neighbor_sets() {
        let tri = Graph::ring(3).unwrap();
        assert_eq!(tri.neighbors(0).unwrap(), BTreeSet::from([1, 2]));
        let p = Graph::path(3).unwrap();
        assert_eq!(p.pair_neighbors(0, 1).unwrap(), BTreeSet::from([2]));
        assert!(p.neighbors(3).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = 6;
            let edges: Vec<_> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .filter(|_| rng.random_bool(0.4))
                .collect();
            let g = Graph::new(n, edges).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(g.pair_neighbors(i, j).unwrap(), g.pair_neighbors(j, i).unwrap());
                }
            }
        }
    }

    #[test]
    fn graph_validation_and_json() {
        assert!(Graph::new(2, [(0, 0)]).is_err());
        assert!(Graph::new(2, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, [(0, 2)]).is_err());
        let g = Graph::from_json(r#"{"n": 3, "edges": [[0, 1], [1, 2]]}"#).unwrap();
        assert_eq!(g, Graph::path(3).unwrap());
        assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
        assert!(Graph::from_json(r#"{"n": 3, "edges": [[0, 5]]}"#).is_err());
    }

    #[test]
    fn relabelling_puts_min_degree_last() {
        let star = Graph::star(5).unwrap();
        assert!(!star.is_selftest_labelled());
        let (g, map) = star.relabel_for_selftest().unwrap();
        assert!(g.is_selftest_labelled());
        assert_eq!(map[0], 3);
        assert_eq!(g.edges().len(), star.edges().len());
        assert!(Graph::new(3, [(0, 1)]).unwrap().relabel_for_selftest().is_err());
    }

    #[test]
    fn constructors_have_unit_norm() {
        let mut states = vec![
            ghz_state(5, 0.3).unwrap(),
            x_w_state(5).unwrap(),
            dicke_state(6, 3).unwrap(),
        ];
        states.push(graph_state(&Graph::ring(5).unwrap()));
        for s in states {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        let _ = sigma_z();
    }
}
