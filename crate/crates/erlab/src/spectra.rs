//! Symmetric eigensolvers (dense and Lanczos-extremal), Krylov
//! tridiagonalization around a vertex, the Z(alpha) operator, and tree-norm
//! bound checks.

use crate::graph::{GraphSample, ScaledMatrix};
use crate::{dom_err, par_err, Error, Result};

/// How a decomposition was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigMethod {
    Dense,
    LanczosExtremal,
}

/// Eigenvalues in descending order with optional orthonormal eigenvectors
/// (flat column-major, column j belongs to values[j]).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
    pub method: EigMethod,
}

impl EigenDecomposition {
    pub fn vector(&self, j: usize) -> Option<&[f64]> {
        self.vectors.as_ref().map(|v| &v[j * self.n..(j + 1) * self.n])
    }
}

/// Anything that can apply a symmetric operator to a vector.
pub trait MatVec {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl MatVec for ScaledMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }
}

/// Dense symmetric matrix view (row-major).
pub struct DenseSym<'a> {
    pub a: &'a [f64],
    pub n: usize,
}

impl MatVec for DenseSym<'_> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

// ---------------------------------------------------------------------------
// In-repo dense symmetric solver: Householder reduction + implicit-shift QL.
// Used below the faer cutoff, for tridiagonal matrices, and in builds without
// the `dense-faer` feature.
// ---------------------------------------------------------------------------

/// Householder reduction of the symmetric matrix in `a` to tridiagonal form.
/// On return `d` is the diagonal, `e[1..]` the subdiagonal, and `a` holds the
/// accumulated orthogonal transform Q with A = Q T Q^T.
fn tred2(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i;
        let mut h = 0.0;
        if l > 1 {
            let mut scale = 0.0;
            for k in 0..l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l - 1];
            } else {
                for k in 0..l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let mut f = a[i * n + l - 1];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l - 1] = f - g;
                f = 0.0;
                for j in 0..l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..l {
                    let fj = a[i * n + j];
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        a[j * n + k] -= fj * e[k] + gj * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on a tridiagonal (d, e[1..]); if `z` is given its columns
/// are rotated along, turning the tred2 transform into eigenvectors.
fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // Deflation floor: a purely relative test stalls on subnormal coupling
    // debris between zero eigenvalues, where eps * (|d[m]| + |d[m+1]|)
    // underflows to zero while e[m] stays nonzero.
    let anorm = (0..n).map(|i| d[i].abs() + e[i].abs()).fold(0.0f64, f64::max);
    let floor = (f64::EPSILON * anorm).max(f64::MIN_POSITIVE / f64::EPSILON);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd.max(floor) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::Numeric("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    for k in 0..n {
                        f = zm[k * n + i + 1];
                        zm[k * n + i + 1] = s * zm[k * n + i] + c * f;
                        zm[k * n + i] = c * zm[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Sort descending, carrying optional flat column-major vectors along.
fn sort_desc(values: &mut [f64], vectors: Option<&mut Vec<f64>>, n: usize) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
    let sorted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    values.copy_from_slice(&sorted);
    if let Some(v) = vectors {
        let old = v.clone();
        for (new_col, &src) in idx.iter().enumerate() {
            v[new_col * n..(new_col + 1) * n].copy_from_slice(&old[src * n..(src + 1) * n]);
        }
    }
}

/// In-repo dense path (always available).
fn dense_eig_inrepo(a: &[f64], n: usize, want_vectors: bool) -> Result<EigenDecomposition> {
    let mut work = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut work, n, &mut d, &mut e);
    tql2(&mut d, &mut e, Some(&mut work), n)?;
    // columns of the row-major accumulator are the eigenvectors; flip to the
    // contiguous column-major layout used everywhere else
    let mut vectors = if want_vectors {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[j * n + i] = work[i * n + j];
            }
        }
        Some(v)
    } else {
        None
    };
    sort_desc(&mut d, vectors.as_mut(), n);
    Ok(EigenDecomposition {
        n,
        values: d,
        vectors,
        method: EigMethod::Dense,
    })
}

#[cfg(feature = "dense-faer")]
fn dense_eig_faer(a: &[f64], n: usize, want_vectors: bool) -> Result<EigenDecomposition> {
    let mut m = faer::Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[i * n + j];
        }
    }
    faer_eig_mat(m, want_vectors)
}

/// Eigendecomposition of a faer matrix, descending order.
#[cfg(feature = "dense-faer")]
pub(crate) fn faer_eig_mat(m: faer::Mat<f64>, want_vectors: bool) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if want_vectors {
        let evd = m
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Numeric(format!("dense eigensolver failed: {e:?}")))?;
        let s = evd.S();
        let u = evd.U();
        let mut values = Vec::with_capacity(n);
        let mut vectors = vec![0.0; n * n];
        for j in 0..n {
            let src = n - 1 - j; // ascending -> descending
            values.push(s[src]);
            for i in 0..n {
                vectors[j * n + i] = u[(i, src)];
            }
        }
        Ok(EigenDecomposition {
            n,
            values,
            vectors: Some(vectors),
            method: EigMethod::Dense,
        })
    } else {
        let mut values = m
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numeric(format!("dense eigensolver failed: {e:?}")))?;
        values.reverse();
        Ok(EigenDecomposition {
            n,
            values,
            vectors: None,
            method: EigMethod::Dense,
        })
    }
}

#[cfg(feature = "dense-faer")]
const FAER_CUTOFF: usize = 96;

fn check_symmetric(a: &[f64], n: usize) -> Result<()> {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::Contract(format!(
                    "matrix not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Dense symmetric eigendecomposition, descending eigenvalues.
pub fn eig_sym_dense(a: &[f64], n: usize, want_vectors: bool) -> Result<EigenDecomposition> {
    if a.len() != n * n {
        return Err(par_err("matrix buffer has wrong length"));
    }
    check_symmetric(a, n)?;
    #[cfg(feature = "dense-faer")]
    {
        if n >= FAER_CUTOFF {
            return dense_eig_faer(a, n, want_vectors);
        }
    }
    dense_eig_inrepo(a, n, want_vectors)
}

/// Spectral norm (largest |eigenvalue|) of a small dense symmetric matrix.
/// Feature-independent; meant for component blocks and other tiny systems.
pub fn dense_sym_norm(a: &[f64], n: usize) -> f64 {
    let mut work = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut work, n, &mut d, &mut e);
    tql2(&mut d, &mut e, None, n).expect("QL on small block");
    d.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Lanczos with full reorthogonalization: the `k` largest and `k` smallest
/// Ritz pairs after up to `max_iters` steps (default 200, tolerance 1e-8).
pub fn eig_extremal<M: MatVec>(m: &M, k: usize) -> Result<EigenDecomposition> {
    eig_extremal_with(m, k, 200, 1e-8)
}

pub fn eig_extremal_with<M: MatVec>(
    m: &M,
    k: usize,
    max_iters: usize,
    tol: f64,
) -> Result<EigenDecomposition> {
    let n = m.dim();
    if k == 0 || 2 * k > n {
        return Err(par_err(format!("extremal count k={k} out of range for n={n}")));
    }
    let steps = max_iters.min(n);
    // deterministic pseudorandom start vector
    let mut stream = crate::rng::Stream::new(0xE16, n as u64);
    let mut v: Vec<f64> = (0..n).map(|_| stream.next_unit() - 0.5).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    // residual norm of the step after the last accepted one
    let mut final_beta = 0.0;
    for j in 0..steps {
        m.apply(&basis[j], &mut w);
        let a_j: f64 = basis[j].iter().zip(&w).map(|(x, y)| x * y).sum();
        alpha.push(a_j);
        for (x, y) in w.iter_mut().zip(&basis[j]) {
            *x -= a_j * y;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (x, y) in w.iter_mut().zip(&basis[j - 1]) {
                *x -= b * y;
            }
        }
        // full reorthogonalization, two passes
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&w).map(|(x, y)| x * y).sum();
                for (x, y) in w.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let b_j = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        final_beta = b_j;
        if j + 1 == steps || b_j < 1e-12 {
            break;
        }
        beta.push(b_j);
        basis.push(w.iter().map(|x| x / b_j).collect());
    }

    let s = alpha.len();
    let mut d = alpha.clone();
    let mut e = vec![0.0; s];
    e[1..s].copy_from_slice(&beta[..s - 1]);
    let mut z: Vec<f64> = vec![0.0; s * s];
    for i in 0..s {
        z[i * s + i] = 1.0;
    }
    tql2(&mut d, &mut e, Some(&mut z), s)?;
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());

    let mut picks: Vec<usize> = Vec::with_capacity(2 * k);
    picks.extend(order.iter().take(k).copied()); // k largest
    picks.extend(order.iter().rev().take(k).rev().copied()); // k smallest, descending
    let norm_est = d.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let last_beta = final_beta;
    let mut values = Vec::with_capacity(2 * k);
    let mut vectors = vec![0.0; 2 * k * n];
    for (col, &ri) in picks.iter().enumerate() {
        values.push(d[ri]);
        // Ritz residual bound |beta_s * z[s-1, ri]|
        let resid = (last_beta * z[(s - 1) * s + ri]).abs();
        if resid > tol * norm_est {
            return Err(Error::Numeric(format!(
                "Lanczos Ritz pair {col} unconverged: residual {resid:.3e}"
            )));
        }
        let target = &mut vectors[col * n..(col + 1) * n];
        for (jj, q) in basis.iter().enumerate() {
            let c = z[jj * s + ri];
            for (t, x) in target.iter_mut().zip(q) {
                *t += c * x;
            }
        }
    }
    Ok(EigenDecomposition {
        n,
        values,
        vectors: Some(vectors),
        method: EigMethod::LanczosExtremal,
    })
}

/// Dispatcher honoring the two contract modes.
pub fn eig_sym(
    a: &[f64],
    n: usize,
    method: EigMethod,
    k: Option<usize>,
) -> Result<EigenDecomposition> {
    match method {
        EigMethod::Dense => eig_sym_dense(a, n, true),
        EigMethod::LanczosExtremal => {
            check_symmetric(a, n)?;
            let view = DenseSym { a, n };
            eig_extremal(&view, k.unwrap_or(1))
        }
    }
}

/// All eigenvalues of a sparse scaled matrix, descending. With faer the
/// dense buffer is filled straight from the sparse rows.
pub fn eig_sym_scaled_values(m: &ScaledMatrix) -> Result<Vec<f64>> {
    #[cfg(feature = "dense-faer")]
    {
        let e = faer_eig_mat(scaled_to_faer(m), false)?;
        return Ok(e.values);
    }
    #[cfg(not(feature = "dense-faer"))]
    {
        let e = dense_eig_inrepo(&m.to_dense(), m.n, false)?;
        Ok(e.values)
    }
}

#[cfg(feature = "dense-faer")]
pub(crate) fn scaled_to_faer(m: &ScaledMatrix) -> faer::Mat<f64> {
    let n = m.n;
    let mut a = faer::Mat::<f64>::zeros(n, n);
    if m.kind == crate::graph::MatrixKind::CenteredH {
        let p_over = m.d / n as f64 / m.d.sqrt();
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    a[(i, j)] = -p_over;
                }
            }
        }
    }
    for i in 0..n {
        let (cols, vals) = m.row(i as u32);
        for (c, v) in cols.iter().zip(vals) {
            a[(i, *c as usize)] += *v;
        }
    }
    a
}

/// Full eigendecomposition of a sparse scaled matrix, streamed in descending
/// order to `visit(rank, eigenvalue, vector)` with a reused vector buffer.
/// Avoids holding a second n x n copy of the eigenvector matrix.
pub fn visit_eigenpairs_scaled(
    m: &ScaledMatrix,
    mut visit: impl FnMut(usize, f64, &[f64]),
) -> Result<()> {
    let n = m.n;
    #[cfg(feature = "dense-faer")]
    {
        let a = scaled_to_faer(m);
        let evd = a
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Numeric(format!("dense eigensolver failed: {e:?}")))?;
        let s = evd.S();
        let u = evd.U();
        let mut buf = vec![0.0; n];
        for j in 0..n {
            let src = n - 1 - j;
            for i in 0..n {
                buf[i] = u[(i, src)];
            }
            visit(j, s[src], &buf);
        }
        Ok(())
    }
    #[cfg(not(feature = "dense-faer"))]
    {
        let e = dense_eig_inrepo(&m.to_dense(), n, true)?;
        for j in 0..n {
            visit(j, e.values[j], e.vector(j).unwrap());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tridiagonal objects
// ---------------------------------------------------------------------------

/// Where a tridiagonal matrix came from.
#[derive(Clone, Debug)]
pub enum TridiagOrigin {
    /// Krylov tridiagonalization of a matrix around a vertex.
    Matrix { center: u32 },
    /// The analytic Z(alpha) operator.
    Analytic { alpha: f64 },
}

/// Symmetric tridiagonal matrix (diag, offdiag) with provenance.
#[derive(Clone, Debug)]
pub struct TridiagMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub origin: TridiagOrigin,
    /// Set when Krylov iteration stopped early (invariant subspace reached).
    pub breakdown: bool,
}

impl TridiagMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = vec![0.0; n];
        if n > 1 {
            e[1..].copy_from_slice(&self.offdiag);
        }
        tql2(&mut d, &mut e, None, n)?;
        d.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(d)
    }

    /// Full eigendecomposition (small dimensions).
    pub fn eigen(&self) -> Result<EigenDecomposition> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = vec![0.0; n];
        if n > 1 {
            e[1..].copy_from_slice(&self.offdiag);
        }
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        tql2(&mut d, &mut e, Some(&mut z), n)?;
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[j * n + i] = z[i * n + j];
            }
        }
        let mut vectors = Some(v);
        sort_desc(&mut d, vectors.as_mut(), n);
        Ok(EigenDecomposition {
            n,
            values: d,
            vectors,
            method: EigMethod::Dense,
        })
    }

    /// Largest eigenvalue.
    pub fn top_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// (Z^k)_{00} via k tridiagonal matvecs.
    pub fn moment(&self, k: usize) -> f64 {
        let n = self.dim();
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        let mut w = vec![0.0; n];
        for _ in 0..k {
            for i in 0..n {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.offdiag[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.offdiag[i] * v[i + 1];
                }
                w[i] = acc;
            }
            std::mem::swap(&mut v, &mut w);
        }
        v[0]
    }

    /// Scale the whole matrix by `c` (norm scales likewise).
    pub fn scaled(&self, c: f64) -> TridiagMatrix {
        TridiagMatrix {
            diag: self.diag.iter().map(|x| c * x).collect(),
            offdiag: self.offdiag.iter().map(|x| c * x).collect(),
            origin: self.origin.clone(),
            breakdown: self.breakdown,
        }
    }
}

/// Krylov tridiagonalization of `m` around basis vector `x`: Gram-Schmidt on
/// {1_x, M 1_x, .., M^r 1_x}. Moments satisfy (Z^k)_{00} = <1_x, M^k 1_x>.
/// Breakdown below norm 1e-10 truncates and sets the flag.
pub fn tridiagonalize<M: MatVec>(m: &M, x: u32, r: usize) -> Result<TridiagMatrix> {
    let n = m.dim();
    if (x as usize) >= n {
        return Err(par_err(format!("center {x} out of range")));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(r + 1);
    let mut e0 = vec![0.0; n];
    e0[x as usize] = 1.0;
    basis.push(e0);
    let mut diag = Vec::new();
    let mut off = Vec::new();
    let mut breakdown = false;
    let mut w = vec![0.0; n];
    for j in 0..=r {
        m.apply(&basis[j], &mut w);
        let a_j: f64 = basis[j].iter().zip(&w).map(|(a, b)| a * b).sum();
        diag.push(a_j);
        if j == r {
            break;
        }
        for (t, q) in w.iter_mut().zip(&basis[j]) {
            *t -= a_j * q;
        }
        if j > 0 {
            let b = off[j - 1];
            for (t, q) in w.iter_mut().zip(&basis[j - 1]) {
                *t -= b * q;
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (t, qq) in w.iter_mut().zip(q) {
                    *t -= c * qq;
                }
            }
        }
        let b_j = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        if b_j < 1e-10 {
            breakdown = true;
            break;
        }
        off.push(b_j);
        basis.push(w.iter().map(|t| t / b_j).collect());
    }
    Ok(TridiagMatrix {
        diag,
        offdiag: off,
        origin: TridiagOrigin::Matrix { center: x },
        breakdown,
    })
}

/// Z(alpha) truncation: (r+1)x(r+1), zero diagonal, offdiagonal
/// (sqrt(alpha), 1, 1, ..).
pub fn z_alpha_matrix(alpha: f64, r: usize) -> Result<TridiagMatrix> {
    if alpha < 0.0 {
        return Err(dom_err(format!("Z(alpha) needs alpha >= 0, got {alpha}")));
    }
    if r < 1 {
        return Err(par_err("Z truncation needs r >= 1".to_string()));
    }
    let mut off = vec![1.0; r];
    off[0] = alpha.sqrt();
    Ok(TridiagMatrix {
        diag: vec![0.0; r + 1],
        offdiag: off,
        origin: TridiagOrigin::Analytic { alpha },
        breakdown: false,
    })
}

/// Explicit rooted (p,q)-tree truncated at `depth`: the root has p children,
/// every other vertex has q children. Returned as a GraphSample with d = 1 so
/// the scaled matrix is the plain adjacency.
pub fn tree_graph(p: usize, q: usize, depth: usize) -> Result<GraphSample> {
    if p < 1 || q < 1 {
        return Err(par_err("tree needs p, q >= 1".to_string()));
    }
    let mut size: usize = 1;
    let mut level = p;
    for _ in 0..depth {
        size = size
            .checked_add(level)
            .filter(|&s| s <= 5_000_000)
            .ok_or_else(|| par_err("tree too large to materialize".to_string()))?;
        level = level
            .checked_mul(q)
            .ok_or_else(|| par_err("tree too large to materialize".to_string()))?;
    }
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(size - 1);
    let mut next_id = 1u32;
    let mut frontier = vec![0u32];
    for lvl in 0..depth {
        let fanout = if lvl == 0 { p } else { q };
        let mut new_frontier = Vec::with_capacity(frontier.len() * fanout);
        for &parent in &frontier {
            for _ in 0..fanout {
                edges.push((parent, next_id));
                new_frontier.push(next_id);
                next_id += 1;
            }
        }
        frontier = new_frontier;
    }
    GraphSample::from_edges(size, 1.0, 0, &edges)
}

/// Outcome of the tree-norm bound check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TreeNormRecord {
    pub p: usize,
    pub q: usize,
    pub depth: usize,
    pub norm: f64,
    /// sqrt(q) * Lambda(max(p/q, 2))
    pub bound: f64,
    /// 2 sqrt(q), valid for any forest of maximal degree q+1
    pub forest_bound: f64,
    pub within_bound: bool,
}

/// Adjacency norm of the depth-truncated (p,q)-tree against its closed-form
/// bound. The radial (level-indicator) subspace is invariant and contains the
/// Perron vector, so the norm equals the top eigenvalue of the radial
/// tridiagonal sqrt(q) Z_depth(p/q); explicit trees cross-check this in tests.
pub fn tree_norm_check(p: usize, q: usize, depth: usize) -> Result<TreeNormRecord> {
    if p < 1 || q < 1 || depth < 1 {
        return Err(par_err("tree_norm_check needs p, q, depth >= 1".to_string()));
    }
    let z = z_alpha_matrix(p as f64 / q as f64, depth)?;
    let norm = z.scaled((q as f64).sqrt()).top_eigenvalue()?;
    let bound = (q as f64).sqrt() * crate::phase::lambda((p as f64 / q as f64).max(2.0))?;
    let forest_bound = 2.0 * (q as f64).sqrt();
    Ok(TreeNormRecord {
        p,
        q,
        depth,
        norm,
        bound,
        forest_bound,
        within_bound: norm <= bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_scaled_matrix, Adjacency, MatrixKind};

    fn sym_from(rows: &[&[f64]]) -> (Vec<f64>, usize) {
        let n = rows.len();
        let mut a = vec![0.0; n * n];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a[i * n + j] = *v;
            }
        }
        (a, n)
    }

    #[test]
    fn diag_matrix_sorted() {
        let (a, n) = sym_from(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let e = eig_sym_dense(&a, n, true).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn k2_adjacency() {
        let (a, n) = sym_from(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = eig_sym_dense(&a, n, true).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let v = e.vector(0).unwrap();
        let r = 1.0 / 2.0f64.sqrt();
        assert!((v[0].abs() - r).abs() < 1e-12 && (v[1].abs() - r).abs() < 1e-12);
    }

    #[test]
    fn star_pm_sqrt_d() {
        // star with hub 0 and 5 spokes: nonzero eigenvalues +-sqrt(5)
        let g = GraphSample::from_edges(
            6,
            1.0,
            0,
            &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)],
        )
        .unwrap();
        let m = build_scaled_matrix(&g, MatrixKind::AdjacencyOverSqrtD, None);
        let e = eig_sym_dense(&m.to_dense(), 6, false).unwrap();
        assert!((e.values[0] - 5.0f64.sqrt()).abs() < 1e-12);
        assert!((e.values[5] + 5.0f64.sqrt()).abs() < 1e-12);
        for v in &e.values[1..5] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn nonsymmetric_rejected() {
        let (mut a, n) = sym_from(&[&[0.0, 1.0], &[1.0, 0.0]]);
        a[1] = 2.0;
        assert!(matches!(
            eig_sym_dense(&a, n, false),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn residual_and_orthogonality_contract() {
        let mut stream = crate::rng::Stream::new(17, 0);
        let n = 80;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = stream.next_unit() - 0.5;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let e = eig_sym_dense(&a, n, true).unwrap();
        let norm = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let view = DenseSym { a: &a, n };
        let mut y = vec![0.0; n];
        for j in (0..n).step_by(7) {
            let w = e.vector(j).unwrap();
            view.apply(w, &mut y);
            let resid: f64 = y
                .iter()
                .zip(w)
                .map(|(p, q)| (p - e.values[j] * q).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-8 * norm, "residual {resid:.3e}");
            for j2 in (0..n).step_by(11) {
                let w2 = e.vector(j2).unwrap();
                let dot: f64 = w.iter().zip(w2).map(|(p, q)| p * q).sum();
                let want = if j == j2 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
        }
    }

    #[cfg(feature = "dense-faer")]
    #[test]
    fn inrepo_matches_faer() {
        let mut stream = crate::rng::Stream::new(4, 1);
        let n = 120;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = stream.next_unit() - 0.5;
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let e1 = dense_eig_inrepo(&a, n, true).unwrap();
        let e2 = dense_eig_faer(&a, n, true).unwrap();
        for (x, y) in e1.values.iter().zip(&e2.values) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        // eigenvectors agree up to sign
        for j in [0usize, 5, 77, n - 1] {
            let v1 = e1.vector(j).unwrap();
            let v2 = e2.vector(j).unwrap();
            let dot: f64 = v1.iter().zip(v2).map(|(p, q)| p * q).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8, "col {j}: |dot|={}", dot.abs());
        }
    }

    #[test]
    fn lanczos_matches_dense_extremes() {
        let g = crate::graph::generate_er(400, 6.0, 3).unwrap();
        let m = build_scaled_matrix(&g, MatrixKind::AdjacencyOverSqrtD, None);
        let dense = eig_sym_dense(&m.to_dense(), 400, false).unwrap();
        let ext = eig_extremal_with(&m, 3, 400, 1e-8).unwrap();
        assert_eq!(ext.values.len(), 6);
        for i in 0..3 {
            assert!(
                (ext.values[i] - dense.values[i]).abs() < 1e-7,
                "top {i}: {} vs {}",
                ext.values[i],
                dense.values[i]
            );
            assert!(
                (ext.values[5 - i] - dense.values[399 - i]).abs() < 1e-7,
                "bottom {i}"
            );
        }
    }

    #[test]
    fn z_alpha_reference_values() {
        // frozen dense-spectrum oracle values for the Z truncations
        let top1 = z_alpha_matrix(1.0, 40).unwrap().top_eigenvalue().unwrap();
        assert!((top1 - 1.994_407_594_362_360).abs() < 1e-9, "Z_40(1): {top1}");
        assert!((top1 - 2.0 * (std::f64::consts::PI / 42.0).cos()).abs() < 1e-12);
        let top3 = z_alpha_matrix(3.0, 40).unwrap().top_eigenvalue().unwrap();
        assert!((top3 - 2.121_320_343_559_401).abs() < 1e-9, "Z_40(3): {top3}");
        let top4 = z_alpha_matrix(4.0, 40).unwrap().top_eigenvalue().unwrap();
        assert!(
            (top4 - 4.0 / 3.0f64.sqrt()).abs() < 1e-6,
            "Z_40(4) vs Lambda(4): {top4}"
        );
        assert!(z_alpha_matrix(-0.5, 10).is_err());
        assert!(z_alpha_matrix(1.0, 0).is_err());
    }

    #[test]
    fn z_alpha_top_nondecreasing_in_alpha() {
        let mut prev = 0.0;
        let mut alpha = 2.0;
        while alpha <= 6.0 {
            let t = z_alpha_matrix(alpha, 30).unwrap().top_eigenvalue().unwrap();
            assert!(t >= prev - 1e-12);
            prev = t;
            alpha += 0.25;
        }
    }

    #[test]
    fn z_alpha_eigenvector_decay() {
        // top eigenvector of Z_40(3): interior ratio -> (alpha-1)^{-1/2}
        let e = z_alpha_matrix(3.0, 40).unwrap().eigen().unwrap();
        let v = e.vector(0).unwrap();
        let want = 1.0 / 2.0f64.sqrt();
        for i in 5..15 {
            let ratio = v[i + 1] / v[i];
            assert!((ratio - want).abs() < 1e-3, "i={i}: {ratio}");
        }
    }

    #[test]
    fn tridiagonalize_tree_root() {
        // depth-3 (4,2)-tree: offdiag (sqrt 4, sqrt 2, sqrt 2)
        let t = tree_graph(4, 2, 3).unwrap();
        let m = build_scaled_matrix(&t, MatrixKind::AdjacencyOverSqrtD, None);
        let z = tridiagonalize(&m, 0, 3).unwrap();
        assert!(!z.breakdown);
        for d in &z.diag {
            assert!(d.abs() < 1e-12);
        }
        assert!((z.offdiag[0] - 2.0).abs() < 1e-12);
        assert!((z.offdiag[1] - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((z.offdiag[2] - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tridiagonalize_moments_and_interlacing() {
        let g = crate::graph::generate_er(200, 5.0, 9).unwrap();
        let m = build_scaled_matrix(&g, MatrixKind::AdjacencyOverSqrtD, None);
        let r = 6;
        let z = tridiagonalize(&m, 11, r).unwrap();
        // (Z^2)_00 = D_x / d for the scaled adjacency
        let deg = g.degree(11) as f64;
        assert!((z.moment(2) - deg / 5.0).abs() < 1e-10);
        // moment identity up to 2r against explicit powers
        let n = 200;
        let dense = m.to_dense();
        let view = DenseSym { a: &dense, n };
        let mut v = vec![0.0; n];
        v[11] = 1.0;
        let mut w = vec![0.0; n];
        for k in 1..=(2 * r) {
            view.apply(&v.clone(), &mut w);
            std::mem::swap(&mut v, &mut w);
            let want = v[11];
            let got = z.moment(k);
            let denom = want.abs().max(1.0);
            assert!(
                ((got - want) / denom).abs() < 1e-8,
                "moment {k}: {got} vs {want}"
            );
        }
        // eigenvalues of the projection interlace: contained in the full range
        let full = eig_sym_dense(&dense, n, false).unwrap();
        let sub = z.eigenvalues().unwrap();
        for (i, t) in sub.iter().enumerate() {
            assert!(*t <= full.values[i] + 1e-9, "upper interlace at {i}");
            assert!(
                *t >= full.values[n - (sub.len() - i)] - 1e-9,
                "lower interlace at {i}"
            );
        }
    }

    #[test]
    fn tridiagonalize_diagonal_breaks_down() {
        let (a, n) = sym_from(&[&[2.0, 0.0], &[0.0, 5.0]]);
        let view = DenseSym { a: &a, n };
        let z = tridiagonalize(&view, 0, 3).unwrap();
        assert!(z.breakdown);
        assert_eq!(z.diag.len(), 1);
        assert_eq!(z.diag[0], 2.0);
    }

    #[test]
    fn tree_norm_frozen_references() {
        // depth-8 records, frozen from the radial-spectrum oracle
        let r = tree_norm_check(3, 3, 8).unwrap();
        assert!((r.norm - 3.294_556_414_185).abs() < 1e-9, "{}", r.norm);
        assert!((r.bound - 2.0 * 3.0f64.sqrt()).abs() < 1e-12);
        assert!(r.within_bound);
        let r = tree_norm_check(9, 3, 8).unwrap();
        assert!((r.norm - 3.672_400_164_717).abs() < 1e-9, "{}", r.norm);
        assert!((r.bound - 3.674_234_614_175).abs() < 1e-9);
        assert!(r.within_bound && r.bound - r.norm < 2e-3);
        let r = tree_norm_check(20, 4, 8).unwrap();
        assert!((r.norm - 4.999_978_539_867).abs() < 1e-9, "{}", r.norm);
        assert!((r.bound - 5.0).abs() < 1e-12);
        assert!(r.within_bound);
        // path case p=q=1: depth 5 gives P_6, norm 2 cos(pi/7)
        let r = tree_norm_check(1, 1, 5).unwrap();
        assert!((r.norm - 2.0 * (std::f64::consts::PI / 7.0).cos()).abs() < 1e-12);
        assert!(r.norm <= r.forest_bound);
    }

    #[test]
    fn scaled_visitor_matches_dense() {
        let g = crate::graph::generate_er(150, 5.0, 21).unwrap();
        let m = build_scaled_matrix(&g, MatrixKind::CenteredH, None);
        let dense = m.to_dense();
        let full = eig_sym_dense(&dense, 150, false).unwrap();
        let vals = eig_sym_scaled_values(&m).unwrap();
        for (a, b) in vals.iter().zip(&full.values) {
            assert!((a - b).abs() < 1e-9);
        }
        let view = DenseSym { a: &dense, n: 150 };
        let mut y = vec![0.0; 150];
        let mut seen = 0usize;
        visit_eigenpairs_scaled(&m, |j, lam, v| {
            assert!((lam - full.values[j]).abs() < 1e-9);
            view.apply(v, &mut y);
            let resid: f64 = y
                .iter()
                .zip(v)
                .map(|(p, q)| (p - lam * q).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(resid < 1e-8, "rank {j}: residual {resid:.3e}");
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 150);
    }

    #[test]
    fn tree_norm_explicit_cross_check() {
        // the radial value equals the true adjacency norm of the explicit tree
        for &(p, q, depth) in &[(3usize, 3usize, 4usize), (9, 3, 4), (2, 4, 4), (1, 1, 5)] {
            let radial = tree_norm_check(p, q, depth).unwrap().norm;
            let t = tree_graph(p, q, depth).unwrap();
            let m = build_scaled_matrix(&t, MatrixKind::AdjacencyOverSqrtD, None);
            let explicit = if t.n <= 600 {
                eig_sym_dense(&m.to_dense(), t.n, false).unwrap().values[0]
            } else {
                eig_extremal(&m, 1).unwrap().values[0]
            };
            assert!(
                (radial - explicit).abs() < 1e-7,
                "(p={p},q={q},depth={depth}): radial {radial} vs explicit {explicit}"
            );
        }
    }
}
