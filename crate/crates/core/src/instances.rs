//! Random instance generators: GOE matrices, random d-regular graphs and
//! Gaussian n×d matrices, plus Sylvester Hadamard matrices and top-k
//! spectral projectors.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::json::{self, SCHEMA};
use crate::linalg;

/// Give up on the configuration model after this many rejected pairings.
pub const MAX_PAIRING_ATTEMPTS: u64 = 1_000_000;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Provenance block naming the generator and the normal sampler.
pub fn rng_provenance(seed: u64) -> Value {
    json!({
        "rng": "ChaCha20Rng::seed_from_u64",
        "normal": "rand_distr::StandardNormal (ziggurat)",
        "seed": seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoeInstance {
    pub n: usize,
    pub g: DMatrix<f64>,
    pub seed: u64,
}

/// G = (W + Wᵀ)/√2 with W i.i.d. standard normal.
pub fn sample_goe(n: usize, seed: u64) -> Result<GoeInstance> {
    if n == 0 {
        return Err(Error::Param("GOE needs n >= 1".into()));
    }
    let mut r = rng(seed);
    let w: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut r));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(n, n, |i, j| (w[(i, j)] + w[(j, i)]) * s);
    Ok(GoeInstance { n, g, seed })
}

/// Kolmogorov distance between the empirical law of `eigs` (already scaled
/// by 1/√n) and the semicircle on [−2, 2].
pub fn semicircle_ks_distance(eigs: &[f64]) -> f64 {
    let cdf = |x: f64| -> f64 {
        let x = x.clamp(-2.0, 2.0);
        0.5 + (x * (4.0 - x * x).sqrt() / 2.0 + 2.0 * (x / 2.0).asin()) / (2.0 * std::f64::consts::PI)
    };
    let mut e = eigs.to_vec();
    e.sort_by(f64::total_cmp);
    let m = e.len() as f64;
    e.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / m).abs().max((f - (k + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularGraph {
    pub n: usize,
    pub d: usize,
    /// Sorted neighbor lists.
    pub adj: Vec<Vec<usize>>,
    pub seed: u64,
    pub attempts: u64,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    #[serde(default)]
    schema: String,
    kind: String,
    n: usize,
    d: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    attempts: u64,
}

impl RegularGraph {
    /// Build from an edge list, checking regularity and simplicity.
    pub fn from_edges(n: usize, d: usize, edges: &[[usize; 2]]) -> Result<Self> {
        let mut adj = vec![Vec::with_capacity(d); n];
        for &[u, v] in edges {
            if u >= n || v >= n {
                return Err(Error::IndexOutOfRange { index: u.max(v), len: n });
            }
            if u == v {
                return Err(Error::Malformed(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, nb) in adj.iter_mut().enumerate() {
            nb.sort_unstable();
            if nb.len() != d {
                return Err(Error::Malformed(format!("vertex {u} has degree {}", nb.len())));
            }
            if nb.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Malformed(format!("multi-edge at {u}")));
            }
        }
        Ok(RegularGraph {
            n,
            d,
            adj,
            seed: 0,
            attempts: 0,
        })
    }

    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e = Vec::with_capacity(self.n * self.d / 2);
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                if u < v {
                    e.push([u, v]);
                }
            }
        }
        e
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                a[(u, v)] = 1.0;
            }
        }
        a
    }

    /// max{λ₂, |λ_n|} of the adjacency matrix.
    pub fn nontrivial_spectral_radius(&self) -> f64 {
        let ev = linalg::sym_eigenvalues(&self.adjacency());
        let k = ev.len();
        if k < 2 {
            return 0.0;
        }
        ev[k - 2].max(ev[0].abs())
    }

    /// Whether the ball of radius r around v induces a tree.
    pub fn ball_is_tree(&self, v: usize, r: usize) -> bool {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::from([v]);
        dist[v] = 0;
        let mut ball = vec![v];
        while let Some(u) = queue.pop_front() {
            if dist[u] == r {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    ball.push(w);
                    queue.push_back(w);
                }
            }
        }
        let mut twice_edges = 0;
        for &u in &ball {
            twice_edges += self.adj[u].iter().filter(|&&w| dist[w] != usize::MAX).count();
        }
        twice_edges / 2 + 1 == ball.len()
    }

    /// Vertices whose radius-r ball is not a tree.
    pub fn non_tree_vertices(&self, r: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| !self.ball_is_tree(v, r)).collect()
    }

    /// Graph distances from v, truncated at `max` (usize::MAX beyond).
    pub fn distances_from(&self, v: usize, max: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::from([v]);
        dist[v] = 0;
        while let Some(u) = queue.pop_front() {
            if dist[u] == max {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_string(&GraphFile {
            schema: SCHEMA.into(),
            kind: "regular".into(),
            n: self.n,
            d: self.d,
            edges: self.edges(),
            seed: self.seed,
            attempts: self.attempts,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: GraphFile = serde_json::from_str(s)?;
        if f.kind != "regular" {
            return Err(Error::Malformed(format!("expected kind regular, got {}", f.kind)));
        }
        let mut g = Self::from_edges(f.n, f.d, &f.edges)?;
        g.seed = f.seed;
        g.attempts = f.attempts;
        Ok(g)
    }
}

/// Configuration model: pair up n·d half-edges uniformly and reject the
/// whole pairing on any loop or repeated edge.
pub fn sample_regular_graph(n: usize, d: usize, seed: u64) -> Result<RegularGraph> {
    if n * d % 2 == 1 {
        return Err(Error::Param(format!("n*d = {} is odd", n * d)));
    }
    if d >= n {
        return Err(Error::Param(format!("degree {d} needs more than {n} vertices")));
    }
    let mut r = rng(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    for attempt in 1..=MAX_PAIRING_ATTEMPTS {
        stubs.shuffle(&mut r);
        adj.iter_mut().for_each(Vec::clear);
        let simple = stubs.chunks_exact(2).all(|p| {
            let (u, v) = (p[0], p[1]);
            if u == v || adj[u].contains(&v) {
                return false;
            }
            adj[u].push(v);
            adj[v].push(u);
            true
        });
        if simple {
            adj.iter_mut().for_each(|nb| nb.sort_unstable());
            return Ok(RegularGraph {
                n,
                d,
                adj,
                seed,
                attempts: attempt,
            });
        }
    }
    Err(Error::Param(format!(
        "no simple {d}-regular pairing on {n} vertices after {MAX_PAIRING_ATTEMPTS} attempts"
    )))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceInstance {
    pub n: usize,
    pub d: usize,
    /// n × d, entries N(0, 1/d).
    pub mg: DMatrix<f64>,
    pub seed: u64,
}

pub fn sample_gaussian_matrix(n: usize, d: usize, seed: u64) -> Result<SubspaceInstance> {
    if d == 0 || n == 0 {
        return Err(Error::Param("Gaussian matrix needs n, d >= 1".into()));
    }
    let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("finite positive sd");
    let mut r = rng(seed);
    let mg = DMatrix::from_fn(n, d, |_, _| normal.sample(&mut r));
    Ok(SubspaceInstance { n, d, mg, seed })
}

/// Dense matrix artifact shared by the GOE and subspace instances.
#[derive(Serialize, Deserialize)]
pub struct MatrixFile {
    #[serde(default)]
    pub schema: String,
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub provenance: Value,
}

impl MatrixFile {
    pub fn new(kind: &str, m: &DMatrix<f64>, provenance: Value) -> Self {
        MatrixFile {
            schema: SCHEMA.into(),
            kind: kind.into(),
            rows: m.nrows(),
            cols: m.ncols(),
            matrix: json::matrix_rows(m),
            provenance,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_string(self)
    }

    pub fn from_json(s: &str, kind: &str) -> Result<Self> {
        let f: MatrixFile = serde_json::from_str(s)?;
        if f.kind != kind {
            return Err(Error::Malformed(format!("expected kind {kind}, got {}", f.kind)));
        }
        if f.matrix.len() != f.rows {
            return Err(Error::Dimension {
                expected: f.rows,
                got: f.matrix.len(),
            });
        }
        Ok(f)
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        json::matrix_from_rows(&self.matrix, self.cols)
    }
}

impl GoeInstance {
    pub fn to_json(&self) -> Result<String> {
        MatrixFile::new("goe", &self.g, rng_provenance(self.seed)).to_json()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f = MatrixFile::from_json(s, "goe")?;
        let g = f.matrix()?;
        if !g.is_square() || linalg::max_asymmetry(&g) != 0.0 {
            return Err(Error::Malformed("GOE matrix must be exactly symmetric".into()));
        }
        let seed = f.provenance["seed"].as_u64().unwrap_or(0);
        Ok(GoeInstance { n: g.nrows(), g, seed })
    }
}

impl SubspaceInstance {
    pub fn to_json(&self) -> Result<String> {
        MatrixFile::new("subspace", &self.mg, rng_provenance(self.seed)).to_json()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f = MatrixFile::from_json(s, "subspace")?;
        let mg = f.matrix()?;
        let seed = f.provenance["seed"].as_u64().unwrap_or(0);
        Ok(SubspaceInstance {
            n: mg.nrows(),
            d: mg.ncols(),
            mg,
            seed,
        })
    }
}

/// Sylvester Hadamard matrix of order κ scaled by 1/√κ.
pub fn hadamard(kappa: usize) -> Result<DMatrix<f64>> {
    if !kappa.is_power_of_two() {
        return Err(Error::Param(format!("{kappa} is not a power of 2")));
    }
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < kappa {
        let k = h.nrows();
        h = DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            let v = h[(i % k, j % k)];
            if i >= k && j >= k {
                -v
            } else {
                v
            }
        });
    }
    Ok(h / (kappa as f64).sqrt())
}

/// Projector onto the top-k eigenvectors of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct TopK {
    pub projector: DMatrix<f64>,
    /// Top k eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

pub fn projector_topk(g: &DMatrix<f64>, k: usize) -> Result<TopK> {
    let n = g.nrows();
    if k == 0 || k > n {
        return Err(Error::Param(format!("k = {k} outside 1..={n}")));
    }
    let (vals, vecs) = linalg::sym_eigen(g);
    let top = vecs.columns(n - k, k);
    let p = top * top.transpose();
    let projector = DMatrix::from_fn(n, n, |i, j| if i <= j { p[(i, j)] } else { p[(j, i)] });
    let eigenvalues = (n - k..n).rev().map(|i| vals[i]).collect();
    Ok(TopK { projector, eigenvalues })
}
