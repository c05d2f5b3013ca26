//! Degree-2 seed solutions: Boolean vector in a random subspace, the
//! Sherrington–Kirkpatrick top-eigenspace seed, and the Gaussian-wave Max Cut
//! seed built from nonbacktracking polynomials.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::instances::{self, projector_topk, GoeInstance, RegularGraph, SubspaceInstance};
use crate::linalg;
use crate::moments::Degree2Solution;

/// Margin added to every automatically chosen damping γ.
pub const GAMMA_MARGIN: f64 = 1e-9;

fn auto_gamma(max_scaled_diag: f64) -> f64 {
    ((1.0 - 1.0 / max_scaled_diag).max(0.0) + GAMMA_MARGIN).min(1.0)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Param(format!("gamma = {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// Off-diagonal part scaled by `scale`, unit diagonal.
fn damped(m: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = (i.min(j), i.max(j));
            scale * m[(a, b)]
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvsReport {
    pub n: usize,
    pub d: usize,
    /// 100·√(log n / d), usually above 1 at desk scale.
    pub gamma_nominal: f64,
    pub gamma_eff: f64,
    pub max_row_norm_sq: f64,
    pub min_row_norm_sq: f64,
    pub spectral_norm_sq: f64,
    /// (n + d + 2√(dn) + t² + 2(√d+√n)t)/d at t = 6.
    pub spectral_norm_sq_bound: f64,
    /// (d/n)·⟨Mg Mgᵀ, X⟩.
    pub objective: f64,
    /// (1−γ)(1 − 4(√d+6)/√n)·n.
    pub objective_floor: f64,
}

/// Objective matrix (d/n)·Mg Mgᵀ of the Boolean-vector problem.
pub fn boolean_vector_objective(inst: &SubspaceInstance) -> DMatrix<f64> {
    (&inst.mg * inst.mg.transpose()) * (inst.d as f64 / inst.n as f64)
}

/// X[i,j] = (1−γ)(Mg Mgᵀ)[i,j] off the diagonal, X[i,i] = 1.
pub fn seed_boolean_vector(inst: &SubspaceInstance, gamma: Option<f64>) -> Result<(Degree2Solution, BvsReport)> {
    let (n, d) = (inst.n, inst.d);
    let gram = &inst.mg * inst.mg.transpose();
    let diag: Vec<f64> = (0..n).map(|i| gram[(i, i)]).collect();
    let max_row = diag.iter().copied().fold(0.0, f64::max);
    let min_row = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if max_row <= 0.0 {
        return Err(Error::Param("all rows of Mg vanish".into()));
    }
    let gamma_eff = match gamma {
        Some(g) => {
            check_gamma(g)?;
            g
        }
        None => auto_gamma(max_row),
    };
    let x = damped(&gram, 1.0 - gamma_eff);
    let a = boolean_vector_objective(inst);
    let (nf, df) = (n as f64, d as f64);
    let t = 6.0;
    let report = BvsReport {
        n,
        d,
        gamma_nominal: 100.0 * (nf.ln() / df).sqrt(),
        gamma_eff,
        max_row_norm_sq: max_row,
        min_row_norm_sq: min_row,
        spectral_norm_sq: linalg::lambda_max(&gram),
        spectral_norm_sq_bound: (nf + df + 2.0 * (df * nf).sqrt() + t * t + 2.0 * (df.sqrt() + nf.sqrt()) * t) / df,
        objective: a.dot(&x),
        objective_floor: (1.0 - gamma_eff) * (1.0 - 4.0 * (df.sqrt() + t) / nf.sqrt()) * nf,
    };
    let prov = json!({
        "seed": "boolean_vector",
        "instance": instances::rng_provenance(inst.seed),
        "n": n,
        "d": d,
        "gamma": gamma_eff,
    });
    Ok((Degree2Solution::new(x, prov)?, report))
}

/// Relative deviation of xᵀMg(MgᵀMg)⁻¹Mgᵀx from (d/n)·xᵀMg Mgᵀx.
pub fn projection_deviation(inst: &SubspaceInstance, x: &DVector<f64>) -> Result<f64> {
    let mtm = inst.mg.transpose() * &inst.mg;
    let chol = mtm
        .cholesky()
        .ok_or_else(|| Error::Param("Mg has dependent columns".into()))?;
    let mx = inst.mg.transpose() * x;
    let exact = mx.dot(&chol.solve(&mx));
    let approx = inst.d as f64 / inst.n as f64 * mx.norm_squared();
    Ok((exact - approx).abs() / exact)
}

/// Deviations for `count` uniformly random ±1 vectors.
pub fn projection_deviation_study(inst: &SubspaceInstance, count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut r = instances::rng(seed);
    (0..count)
        .map(|_| {
            let x = DVector::from_fn(inst.n, |_, _| if r.random::<bool>() { 1.0 } else { -1.0 });
            projection_deviation(inst, &x)
        })
        .collect()
}

pub fn default_sk_k(n: usize) -> usize {
    ((n as f64).powf(0.7).ceil() as usize).clamp(1, n.max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkReport {
    pub n: usize,
    pub k: usize,
    pub gamma_eff: f64,
    pub max_projector_diag: f64,
    pub lambda_k: f64,
    /// ⟨G, X⟩ / n^{3/2}.
    pub objective_normalized: f64,
    /// (1−γ)(n/k)·Σ_{i≤k} λ_i / n^{3/2}.
    pub spectral_term: f64,
    /// Σ G_ii·(1 − X'_ii) / n^{3/2}, X' the undamped diagonal.
    pub diagonal_term: f64,
    /// |objective − spectral − diagonal|.
    pub identity_residual: f64,
    /// (1−γ)·λ_k/√n − |diagonal_term|.
    pub lower_bound: f64,
}

/// X = (1−γ)(n/k)Π off the diagonal with unit diagonal, Π the top-k projector.
pub fn seed_sk(g: &GoeInstance, k: usize, gamma: Option<f64>) -> Result<(Degree2Solution, SkReport)> {
    let n = g.n;
    let top = projector_topk(&g.g, k)?;
    let scale = n as f64 / k as f64;
    let max_diag = (0..n).map(|i| top.projector[(i, i)]).fold(0.0, f64::max);
    let gamma_eff = match gamma {
        Some(v) => {
            check_gamma(v)?;
            v
        }
        None => auto_gamma(scale * max_diag),
    };
    let x = damped(&top.projector, (1.0 - gamma_eff) * scale);
    let n32 = (n as f64).powf(1.5);
    let objective = g.g.dot(&x);
    let spectral = (1.0 - gamma_eff) * scale * top.eigenvalues.iter().sum::<f64>();
    let diagonal: f64 = (0..n)
        .map(|i| g.g[(i, i)] * (1.0 - (1.0 - gamma_eff) * scale * top.projector[(i, i)]))
        .sum();
    let lambda_k = *top.eigenvalues.last().expect("k >= 1");
    let report = SkReport {
        n,
        k,
        gamma_eff,
        max_projector_diag: max_diag,
        lambda_k,
        objective_normalized: objective / n32,
        spectral_term: spectral / n32,
        diagonal_term: diagonal / n32,
        identity_residual: (objective - spectral - diagonal).abs() / n32,
        lower_bound: (1.0 - gamma_eff) * lambda_k / (n as f64).sqrt() - (diagonal / n32).abs(),
    };
    let prov = json!({
        "seed": "sk",
        "instance": instances::rng_provenance(g.seed),
        "n": n,
        "k": k,
        "gamma": gamma_eff,
    });
    Ok((Degree2Solution::new(x, prov)?, report))
}

/// g_t(x): g_0 = 1, g_1 = x, g_2 = x² − d, g_t = x·g_{t−1} − (d−1)·g_{t−2}.
pub fn nonbacktracking_poly(t: usize, d: usize, x: f64) -> f64 {
    let d = d as f64;
    match t {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (x, x * x - d);
            for _ in 2..t {
                let c = x * b - (d - 1.0) * a;
                a = b;
                b = c;
            }
            b
        }
    }
}

/// M·A for symmetric sparse A given by adjacency lists (column combination).
fn times_adjacency<T>(m: &DMatrix<T>, g: &RegularGraph, zero: T) -> DMatrix<T>
where
    T: nalgebra::Scalar + std::ops::AddAssign + Copy,
{
    let mut out = DMatrix::from_element(m.nrows(), m.ncols(), zero);
    for (v, nb) in g.adj.iter().enumerate() {
        let mut col = out.column_mut(v);
        for &w in nb {
            for (o, &x) in col.iter_mut().zip(m.column(w).iter()) {
                *o += x;
            }
        }
    }
    out
}

/// All g_0(A)..g_t(A) by the three-term recurrence.
fn nonbacktracking_sequence<T>(t: usize, g: &RegularGraph, [zero, one, d, d1]: [T; 4]) -> Vec<DMatrix<T>>
where
    T: nalgebra::Scalar + std::ops::AddAssign + std::ops::Sub<Output = T> + std::ops::Mul<Output = T> + Copy,
{
    let n = g.n;
    let id = DMatrix::from_fn(n, n, |i, j| if i == j { one } else { zero });
    let mut seq = vec![id];
    if t >= 1 {
        seq.push(times_adjacency(&seq[0], g, zero));
    }
    for s in 2..=t {
        let coef = if s == 2 { d } else { d1 };
        let next = times_adjacency(&seq[s - 1], g, zero);
        let prev = &seq[s - 2];
        let m = DMatrix::from_fn(n, n, |i, j| next[(i, j)] - coef * prev[(i, j)]);
        seq.push(m);
    }
    seq
}

/// g_t(A_G): entry (u, v) counts nonbacktracking walks of length t from u to v.
pub fn nonbacktracking_matrix(t: usize, g: &RegularGraph) -> DMatrix<i64> {
    let d = g.d as i64;
    nonbacktracking_sequence(t, g, [0, 1, d, d - 1]).pop().expect("t + 1 matrices")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwaveParams {
    pub epsilon: f64,
    pub d: usize,
    pub rho: f64,
    pub c: usize,
    pub amp: f64,
    /// Vertices whose radius-(2C+1) ball is not a tree.
    pub bad_set: Vec<usize>,
}

/// Largest C tried before giving up on the radius condition.
pub const MAX_TREE_RADIUS_C: usize = 200;

fn amp_for(d: usize, rho: f64, c: usize) -> f64 {
    let df = d as f64;
    let mut s = 1.0;
    for l in 1..=c {
        s += df * (df - 1.0).powi(l as i32 - 1) * rho.powi(2 * l as i32);
    }
    (1.0 / s).sqrt()
}

/// ρ = −(1−ε)/√(d−1); C the least C ≥ 1 with amp²·(d/(d−1))·(1−ε)^C ≤ ε;
/// amp from the unit-norm identity.
pub fn gwave_params(g: &RegularGraph, epsilon: f64) -> Result<GwaveParams> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Param(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    let d = g.d;
    if d < 3 {
        return Err(Error::Param(format!("Gaussian waves need d >= 3, got {d}")));
    }
    let df = d as f64;
    let rho = -(1.0 - epsilon) / (df - 1.0).sqrt();
    let c = (1..=MAX_TREE_RADIUS_C)
        .find(|&c| amp_for(d, rho, c).powi(2) * df / (df - 1.0) * (1.0 - epsilon).powi(c as i32) <= epsilon)
        .ok_or_else(|| Error::Param(format!("no C <= {MAX_TREE_RADIUS_C} for epsilon = {epsilon}")))?;
    Ok(GwaveParams {
        epsilon,
        d,
        rho,
        c,
        amp: amp_for(d, rho, c),
        bad_set: g.non_tree_vertices(2 * c + 1),
    })
}

impl GwaveParams {
    /// amp²·(1 + Σ_{ℓ≤C} d(d−1)^{ℓ−1}ρ^{2ℓ}), which should be 1.
    pub fn unit_norm(&self) -> f64 {
        let df = self.d as f64;
        let shells: f64 = (1..=self.c)
            .map(|l| df * (df - 1.0).powi(l as i32 - 1) * self.rho.powi(2 * l as i32))
            .sum();
        self.amp * self.amp * (1.0 + shells)
    }

    /// g(d) = amp·Σ_{i≤C} ρ^i g_i(d).
    pub fn g_of_d(&self) -> f64 {
        let df = self.d as f64;
        self.amp
            * (0..=self.c)
                .map(|i| self.rho.powi(i as i32) * nonbacktracking_poly(i, self.d, df))
                .sum::<f64>()
    }

    /// 2·((d−1)/d)·ρ·(1 − amp²ρ^{2C}d(d−1)^{C−1}), the edge formula as printed.
    pub fn edge_inner_product_printed(&self) -> f64 {
        let df = self.d as f64;
        2.0 * ((df - 1.0) / df)
            * self.rho
            * (1.0 - self.amp * self.amp * self.rho.powi(2 * self.c as i32) * df * (df - 1.0).powi(self.c as i32 - 1))
    }

    /// 2·amp²·ρ·Σ_{ℓ<C} ((d−1)ρ²)^ℓ, the tree sum for an edge between good vertices.
    pub fn edge_inner_product(&self) -> f64 {
        let r = (self.d as f64 - 1.0) * self.rho * self.rho;
        2.0 * self.amp * self.amp * self.rho * (0..self.c).map(|l| r.powi(l as i32)).sum::<f64>()
    }

    /// −(1−2ε)·2√(d−1)/d.
    pub fn edge_target(&self) -> f64 {
        let df = self.d as f64;
        -(1.0 - 2.0 * self.epsilon) * 2.0 * (df - 1.0).sqrt() / df
    }
}

/// g(A) = amp·Σ_{i≤C} ρ^i g_i(A). Column v is the wave vector x_v of a good v.
pub fn gwave_matrix(g: &RegularGraph, p: &GwaveParams) -> DMatrix<f64> {
    let d = g.d as f64;
    let seq = nonbacktracking_sequence(p.c, g, [0.0, 1.0, d, d - 1.0]);
    let mut out = DMatrix::zeros(g.n, g.n);
    for (i, m) in seq.iter().enumerate() {
        out += m * (p.amp * p.rho.powi(i as i32));
    }
    out
}

/// Wave vectors as columns, with indicator vectors for bad vertices.
pub fn gwave_vectors(g: &RegularGraph, p: &GwaveParams) -> DMatrix<f64> {
    let mut x = gwave_matrix(g, p);
    for &v in &p.bad_set {
        x.column_mut(v).fill(0.0);
        x[(v, v)] = 1.0;
    }
    x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCutReport {
    pub n: usize,
    pub d: usize,
    pub params: GwaveParams,
    pub bad_count: usize,
    pub bad_fraction: f64,
    /// λ_min of g(A)² − g(d)²·J/n.
    pub lambda_min_w: f64,
    /// ⟨−A, X⟩.
    pub objective: f64,
    /// max over u of ‖X[u, V∖{u}]‖₂.
    pub max_row_norm: f64,
    pub spectral_norm: f64,
    /// Extremes of ⟨x_v, x_w⟩ over edges between good vertices.
    pub good_edge_inner: Option<[f64; 2]>,
    pub edge_inner_product: f64,
    pub edge_inner_product_printed: f64,
    pub edge_target: f64,
    /// n·max |⟨x_v,x_w⟩ − X[v,w]| over distinct good pairs.
    pub gram_offset_kappa: f64,
}

/// Stages 1–3: g(A), W = g(A)² − g(d)²·J/n, then zero the bad rows and
/// columns and put ones on the diagonal.
pub fn seed_maxcut(g: &RegularGraph, epsilon: f64) -> Result<(Degree2Solution, MaxCutReport)> {
    let p = gwave_params(g, epsilon)?;
    let n = g.n;
    let ga = gwave_matrix(g, &p);
    let inner = &ga * &ga;
    let shift = p.g_of_d().powi(2) / n as f64;
    let w = inner.map(|v| v - shift);
    let w = DMatrix::from_fn(n, n, |i, j| if i <= j { w[(i, j)] } else { w[(j, i)] });
    let lambda_min_w = linalg::lambda_min(&w);

    let mut bad = vec![false; n];
    for &v in &p.bad_set {
        bad[v] = true;
    }
    let x = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if bad[i] || bad[j] {
            0.0
        } else {
            w[(i, j)]
        }
    });

    let mut objective = 0.0;
    let mut edge_range: Option<[f64; 2]> = None;
    for (u, nb) in g.adj.iter().enumerate() {
        for &v in nb {
            objective -= x[(u, v)];
            if u < v && !bad[u] && !bad[v] {
                let e = inner[(u, v)];
                edge_range = Some(match edge_range {
                    None => [e, e],
                    Some([lo, hi]) => [lo.min(e), hi.max(e)],
                });
            }
        }
    }
    let max_row_norm = (0..n)
        .map(|u| (0..n).filter(|&v| v != u).map(|v| x[(u, v)].powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let good_count = n - p.bad_set.len();
    let gram_offset_kappa = if good_count >= 2 { shift * n as f64 } else { 0.0 };

    let report = MaxCutReport {
        n,
        d: g.d,
        bad_count: p.bad_set.len(),
        bad_fraction: p.bad_set.len() as f64 / n as f64,
        lambda_min_w,
        objective,
        max_row_norm,
        spectral_norm: linalg::sym_norm(&x),
        good_edge_inner: edge_range,
        edge_inner_product: p.edge_inner_product(),
        edge_inner_product_printed: p.edge_inner_product_printed(),
        edge_target: p.edge_target(),
        gram_offset_kappa,
        params: p,
    };
    let prov = json!({
        "seed": "maxcut",
        "graph_seed": g.seed,
        "n": n,
        "d": g.d,
        "epsilon": epsilon,
        "C": report.params.c,
    });
    Ok((Degree2Solution::new(x, prov)?, report))
}
