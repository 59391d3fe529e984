//! Radial localization profiles around high-degree vertices, and the
//! operator family built on the pruned graph: the centered matrix H, its
//! pruned counterpart, and the block-diagonal surrogate that pins each
//! profile at its predicted eigenvalue.

use crate::graph::{
    ball_and_spheres, build_scaled_matrix, normalized_degrees, Adjacency, DegreeProfile,
    GraphSample, MatrixKind, ScaledMatrix,
};
use crate::prune::PrunedGraph;
use crate::spectra::{eig_extremal_with, eig_sym_dense, MatVec};
use crate::{dom_err, par_err, Error, Result};

/// Above this dimension, operator norms switch from a dense eigensolve to
/// Lanczos on the matrix-vector form.
pub const DENSE_NORM_CUTOFF: usize = 4096;

/// Lanczos budget for norms of large operators.
const NORM_LANCZOS_ITERS: usize = 200;
const NORM_LANCZOS_TOL: f64 = 1e-8;

/// A radial vector sum_i sigma^i u_i 1_{S_i}/||1_{S_i}|| supported on the
/// spheres S_0..S_{r_star} around `x` in a pruned graph.
#[derive(Clone, Debug)]
pub struct LocalizationProfile {
    pub x: u32,
    /// +1 or -1; odd spheres get sign sigma^i.
    pub sigma: i32,
    /// Normalized degree of `x` in the base graph.
    pub alpha: f64,
    /// Predicted eigenvalue Lambda(alpha), carried with its sign separately.
    pub lam: f64,
    /// Radial weights u_0..u_{r_star}.
    pub weights: Vec<f64>,
    /// Sphere vertex lists S_0..S_{r_star}, each sorted ascending.
    pub spheres: Vec<Vec<u32>>,
}

impl LocalizationProfile {
    pub fn r_star(&self) -> usize {
        self.weights.len() - 1
    }

    /// Per-sphere coefficient sigma^i u_i / sqrt(|S_i|).
    pub fn coefficient(&self, i: usize) -> f64 {
        let sign = if self.sigma < 0 && i % 2 == 1 { -1.0 } else { 1.0 };
        sign * self.weights[i] / (self.spheres[i].len() as f64).sqrt()
    }

    /// Materialize as a length-n vector.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.accumulate(1.0, &mut v);
        v
    }

    /// out += coef * v for the implicit vector v.
    pub fn accumulate(&self, coef: f64, out: &mut [f64]) {
        for i in 0..self.weights.len() {
            let c = coef * self.coefficient(i);
            for &y in &self.spheres[i] {
                out[y as usize] += c;
            }
        }
    }

    /// Inner product with a dense vector.
    pub fn dot(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.weights.len() {
            let mut s = 0.0;
            for &y in &self.spheres[i] {
                s += v[y as usize];
            }
            acc += self.coefficient(i) * s;
        }
        acc
    }

    /// Mass outside the radius-r ball: sum_{i > r} u_i^2.
    pub fn tail_mass(&self, r: usize) -> f64 {
        self.weights.iter().skip(r + 1).map(|u| u * u).sum()
    }
}

/// Exponential-decay envelope (alpha - 1)^{-r} satisfied by the radial
/// weights: the mass beyond radius r never exceeds it.
pub fn tail_bound(alpha: f64, r: usize) -> f64 {
    (alpha - 1.0).powi(-(r as i32))
}

/// Radial weights u_0..u_{r_star} for center degree ratio `alpha`:
/// u_i = sqrt(alpha) (alpha-1)^{-i/2} u_0 for 0 < i < r_star, and
/// u_{r_star} = (alpha-1)^{-(r_star-1)/2} u_0, normalized to unit sum of
/// squares. The last weight is chosen so the two signed variants of the
/// radial vector are orthogonal.
pub fn profile_weights(alpha: f64, r_star: usize) -> Result<Vec<f64>> {
    if !(alpha > 1.0) {
        return Err(dom_err(format!("profile weights need alpha > 1, got {alpha}")));
    }
    if r_star == 0 {
        return Err(par_err("profile weights need r_star >= 1".to_string()));
    }
    let q = 1.0 / (alpha - 1.0);
    let mut sq = Vec::with_capacity(r_star + 1);
    sq.push(1.0);
    let mut qi = 1.0;
    for _ in 1..r_star {
        qi *= q;
        sq.push(alpha * qi);
    }
    sq.push(qi); // q^{r_star - 1}
    let total: f64 = sq.iter().sum();
    Ok(sq.iter().map(|s| (s / total).sqrt()).collect())
}

/// Build the profile for center `x` and sign `sigma` on the pruned graph.
/// The degree ratio alpha comes from the base graph; the spheres come from
/// the pruned one.
pub fn build_profile(p: &PrunedGraph, x: u32, sigma: i32) -> Result<LocalizationProfile> {
    if sigma != 1 && sigma != -1 {
        return Err(par_err(format!("sigma must be +1 or -1, got {sigma}")));
    }
    if (x as usize) >= p.base.n {
        return Err(par_err(format!("vertex {x} out of range")));
    }
    let alpha = p.base.neighbors(x).len() as f64 / p.base.d;
    let weights = profile_weights(alpha, p.r_star)?;
    let spheres = ball_and_spheres(p, x, p.r_star);
    for i in 0..=p.r_star {
        if spheres.get(i).map_or(true, |s| s.is_empty()) {
            return Err(Error::Contract(format!(
                "degenerate support: sphere {i} around vertex {x} is empty"
            )));
        }
    }
    let lam = crate::phase::lambda(alpha)?;
    Ok(LocalizationProfile { x, sigma, alpha, lam, weights, spheres })
}

/// The operator family tied to one pruned graph: H on the base graph, the
/// centered pruned operator, the projection onto the profile span, and the
/// block-diagonal surrogate.
pub struct PrunedOperators {
    pub n: usize,
    pub d: f64,
    pub seed: u64,
    pub tau: f64,
    pub r_star: usize,
    pub xi: f64,
    /// H = (A - (d/n)(J - I)) / sqrt(d) on the base graph.
    pub h: ScaledMatrix,
    /// Pruned adjacency over sqrt(d), without centering.
    pub a_tau: ScaledMatrix,
    /// chi[x] is true when x lies outside every radius-2r_star ball around
    /// a pruning hub; the centering of the pruned operator acts only there.
    pub chi: Vec<bool>,
    /// Profile centers: vertices with alpha >= 2 + xi^{1/4} that are also
    /// pruning hubs (support disjointness needs the pruned separation).
    pub centers: Vec<u32>,
    /// Threshold vertices skipped because a profile sphere was empty.
    pub skipped: Vec<u32>,
    /// Two profiles per center, sigma = +1 then -1, in center order.
    pub profiles: Vec<LocalizationProfile>,
}

/// Which operator a `PrunedOp` view applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    /// Centered base operator H.
    H,
    /// Centered pruned operator.
    HTau,
    /// Block-diagonal surrogate.
    HHat,
    /// H minus the pruned operator.
    DiffHMinusHTau,
    /// Pruned operator minus the surrogate.
    DiffHTauMinusHHat,
    /// (I - Pi) H_tau (I - Pi).
    ComplementBlock,
}

/// Borrowed matrix-vector view of one member of the family.
pub struct PrunedOp<'a> {
    ops: &'a PrunedOperators,
    kind: OpKind,
}

impl MatVec for PrunedOp<'_> {
    fn dim(&self) -> usize {
        self.ops.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let o = self.ops;
        match self.kind {
            OpKind::H => o.h.matvec(x, y),
            OpKind::HTau => o.h_tau_apply(x, y),
            OpKind::HHat => o.h_hat_apply(x, y),
            OpKind::DiffHMinusHTau => {
                let mut t = vec![0.0; o.n];
                o.h.matvec(x, y);
                o.h_tau_apply(x, &mut t);
                for i in 0..o.n {
                    y[i] -= t[i];
                }
            }
            OpKind::DiffHTauMinusHHat => {
                let mut t = vec![0.0; o.n];
                o.h_tau_apply(x, y);
                o.h_hat_apply(x, &mut t);
                for i in 0..o.n {
                    y[i] -= t[i];
                }
            }
            OpKind::ComplementBlock => o.complement_block_apply(x, y),
        }
    }
}

impl PrunedOperators {
    pub fn op(&self, kind: OpKind) -> PrunedOp<'_> {
        PrunedOp { ops: self, kind }
    }

    /// y = H_tau x with the centering restricted by chi: the mean-field
    /// part (sqrt(d)/n)(J - I) is subtracted only on the chi vertices.
    pub fn h_tau_apply(&self, x: &[f64], y: &mut [f64]) {
        self.a_tau.matvec(x, y);
        // same expression as the full centering, so an unpruned graph with
        // all-pass chi reproduces H bit for bit
        let c = self.d / self.n as f64 / self.d.sqrt();
        let mut s = 0.0;
        for i in 0..self.n {
            if self.chi[i] {
                s += x[i];
            }
        }
        for i in 0..self.n {
            if self.chi[i] {
                y[i] -= c * (s - x[i]);
            }
        }
    }

    /// y = Pi x, the orthogonal projection onto the profile span.
    pub fn pi_apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for p in &self.profiles {
            p.accumulate(p.dot(x), y);
        }
    }

    /// y = (I - Pi) H_tau (I - Pi) x.
    pub fn complement_block_apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let mut t = vec![0.0; n];
        self.pi_apply(x, &mut t);
        let w: Vec<f64> = (0..n).map(|i| x[i] - t[i]).collect();
        self.h_tau_apply(&w, y);
        self.pi_apply(&y.to_vec(), &mut t);
        for i in 0..n {
            y[i] -= t[i];
        }
    }

    /// y = H_hat x where H_hat pins each profile at sigma * Lambda(alpha)
    /// and acts as the pruned operator on the orthogonal complement.
    pub fn h_hat_apply(&self, x: &[f64], y: &mut [f64]) {
        self.complement_block_apply(x, y);
        for p in &self.profiles {
            p.accumulate(p.sigma as f64 * p.lam * p.dot(x), y);
        }
    }
}

/// Assemble the operator family for a consistent base/pruned pair at error
/// scale `xi` (profile centers need alpha >= 2 + xi^{1/4}).
pub fn build_pruned_operators(
    g: &GraphSample,
    p: &PrunedGraph,
    xi: f64,
) -> Result<PrunedOperators> {
    if p.base.n != g.n || p.base.seed != g.seed || p.base.d != g.d {
        return Err(par_err("pruned graph does not belong to this sample".to_string()));
    }
    if !(xi > 0.0) {
        return Err(par_err(format!("need xi > 0, got {xi}")));
    }
    let n = g.n;
    let threshold = 2.0 + xi.powf(0.25);
    let degrees = normalized_degrees(g);

    let mut chi = vec![true; n];
    for &hub in &p.v_tau {
        for sphere in ball_and_spheres(p, hub, 2 * p.r_star) {
            for v in sphere {
                chi[v as usize] = false;
            }
        }
    }

    let mut centers = Vec::new();
    let mut skipped = Vec::new();
    let mut profiles = Vec::new();
    for &x in &p.v_tau {
        if degrees.alpha[x as usize] < threshold {
            continue;
        }
        match (build_profile(p, x, 1), build_profile(p, x, -1)) {
            (Ok(plus), Ok(minus)) => {
                centers.push(x);
                profiles.push(plus);
                profiles.push(minus);
            }
            _ => skipped.push(x),
        }
    }

    let h = build_scaled_matrix(g, MatrixKind::CenteredH, None);
    let pruned_sample = GraphSample::from_edges(n, g.d, g.seed, &p.edges())?;
    let a_tau = build_scaled_matrix(&pruned_sample, MatrixKind::AdjacencyOverSqrtD, None);

    Ok(PrunedOperators {
        n,
        d: g.d,
        seed: g.seed,
        tau: p.tau,
        r_star: p.r_star,
        xi,
        h,
        a_tau,
        chi,
        centers,
        skipped,
        profiles,
    })
}

/// || (H_tau - sigma Lambda(alpha)) v ||_2 for one profile.
pub fn profile_residual(ops: &PrunedOperators, prof: &LocalizationProfile) -> f64 {
    let v = prof.dense(ops.n);
    let mut y = vec![0.0; ops.n];
    ops.h_tau_apply(&v, &mut y);
    let target = prof.sigma as f64 * prof.lam;
    let mut acc = 0.0;
    for i in 0..ops.n {
        let r = y[i] - target * v[i];
        acc += r * r;
    }
    acc.sqrt()
}

/// Spectral norm of a symmetric operator: dense eigensolve up to
/// `DENSE_NORM_CUTOFF`, Lanczos beyond.
pub fn operator_norm<M: MatVec>(m: &M) -> Result<f64> {
    let n = m.dim();
    if n <= DENSE_NORM_CUTOFF {
        let mut a = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            m.apply(&e, &mut y);
            e[j] = 0.0;
            for i in 0..n {
                a[i * n + j] = y[i];
            }
        }
        let eig = eig_sym_dense(&a, n, false)?;
        let top = eig.values.first().copied().unwrap_or(0.0);
        let bot = eig.values.last().copied().unwrap_or(0.0);
        Ok(top.abs().max(bot.abs()))
    } else {
        let eig = eig_extremal_with(m, 1, NORM_LANCZOS_ITERS, NORM_LANCZOS_TOL)?;
        let top = eig.values.first().copied().unwrap_or(0.0);
        let bot = eig.values.last().copied().unwrap_or(0.0);
        Ok(top.abs().max(bot.abs()))
    }
}

/// The three block-approximation norms, serialized with the run context.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ApproximationReport {
    pub norm_h_htau: f64,
    pub norm_htau_hhat: f64,
    pub norm_complement_block: f64,
    pub tau: f64,
    pub r_star: usize,
    pub seed: u64,
}

/// ||H - H_tau||, ||H_tau - H_hat||, ||(I - Pi) H_tau (I - Pi)||.
pub fn approximation_report(ops: &PrunedOperators) -> Result<ApproximationReport> {
    Ok(ApproximationReport {
        norm_h_htau: operator_norm(&ops.op(OpKind::DiffHMinusHTau))?,
        norm_htau_hhat: operator_norm(&ops.op(OpKind::DiffHTauMinusHHat))?,
        norm_complement_block: operator_norm(&ops.op(OpKind::ComplementBlock))?,
        tau: ops.tau,
        r_star: ops.r_star,
        seed: ops.seed,
    })
}

/// Default slack constant in the degree-weighted quadratic-form bound.
pub const QUADRATIC_FORM_C: f64 = 1.0;

/// Smallest eigenvalue of I + (1 + 2 d^{-1/2}) Q + c max(log n / d^2,
/// d^{-1/2}) I - |H|, where Q = diag(alpha) and |H| is the spectral
/// absolute value. Nonnegative margin certifies |H| against the
/// degree-weighted bound at slack c.
pub fn quadratic_form_margin(
    h: &[f64],
    n: usize,
    d: f64,
    alpha: &[f64],
    c: f64,
) -> Result<f64> {
    if alpha.len() != n || h.len() != n * n {
        return Err(par_err("quadratic form margin: shape mismatch".to_string()));
    }
    let eig = eig_sym_dense(h, n, true)?;
    let u = eig.vectors.as_ref().expect("vectors requested");
    // m = bound diagonal - sum_k |lambda_k| u_k u_k^T
    let mut m = vec![0.0; n * n];
    for (k, &lam) in eig.values.iter().enumerate() {
        let w = lam.abs();
        let col = &u[k * n..(k + 1) * n];
        for i in 0..n {
            let wi = w * col[i];
            for j in i..n {
                m[i * n + j] -= wi * col[j];
            }
        }
    }
    let extra = c * ((n as f64).ln() / (d * d)).max(1.0 / d.sqrt());
    let q_coef = 1.0 + 2.0 / d.sqrt();
    for i in 0..n {
        m[i * n + i] += 1.0 + q_coef * alpha[i] + extra;
        for j in i + 1..n {
            m[j * n + i] = m[i * n + j];
        }
    }
    let bound_eig = eig_sym_dense(&m, n, false)?;
    bound_eig
        .values
        .last()
        .copied()
        .ok_or_else(|| Error::Numeric("empty spectrum".to_string()))
}

/// Margin of the degree-weighted quadratic-form bound for the family's
/// base operator H, at the default slack.
pub fn ihara_bass_check(ops: &PrunedOperators, profile: &DegreeProfile) -> Result<f64> {
    let h = ops.h.to_dense();
    quadratic_form_margin(&h, ops.n, ops.d, &profile.alpha, QUADRATIC_FORM_C)
}
