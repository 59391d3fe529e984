//! Green functions G(z) = (M - z)^{-1} of the scaled graph matrices, their
//! minors, the Ward identity, typical-vertex statistics, diagonal
//! approximation reports, self-consistent-equation residuals, and the
//! infinity-norm instability probe for the naive self-consistent operator.

use num_complex::Complex64;

use crate::graph::{MatrixKind, ScaledMatrix};
use crate::measures::{m_alpha, m_semicircle};
use crate::{num_err, par_err, Error, Result};

/// Largest n handled by dense complex LU; above it only diagonal entries are
/// available, through column-wise iterative solves.
pub const GREEN_DENSE_CUTOFF: usize = 4096;
/// Below this size the in-repo elimination runs even when faer is compiled in.
#[cfg(feature = "dense-faer")]
const SMALL_LU_CUTOFF: usize = 96;
const COCG_TOL: f64 = 1e-11;
const COCG_MAX_ITERS: usize = 20_000;

/// Spectral-domain half-width parameter kappa used by default grids.
pub const KAPPA_DEFAULT: f64 = 0.1;
/// Default typicality constant; the threshold is a (log N / d^2)^{1/3}.
pub const TYPICALITY_A_DEFAULT: f64 = 2.0;
/// Upper end of the default eta grid.
pub const ETA_GRID_L: f64 = 3.0;

/// Resolvent of a scaled matrix at z, possibly with a vertex set excluded
/// (rows and columns of the minor M^(T) removed; those entries read 0 here).
#[derive(Clone, Debug)]
pub struct GreenFunction {
    pub z: Complex64,
    pub n: usize,
    pub kind: MatrixKind,
    pub d: f64,
    /// Sorted excluded set T.
    pub excluded: Vec<u32>,
    /// G_xx for every x, 0 at excluded vertices.
    pub diag: Vec<Complex64>,
    /// Row-major n x n when requested; excluded rows/columns are 0.
    pub full: Option<Vec<Complex64>>,
}

impl GreenFunction {
    pub fn is_excluded(&self, x: u32) -> bool {
        self.excluded.binary_search(&x).is_ok()
    }

    pub fn entry(&self, x: u32, y: u32) -> Result<Complex64> {
        let full = self
            .full
            .as_ref()
            .ok_or_else(|| Error::Contract("full Green function not held".to_string()))?;
        Ok(full[x as usize * self.n + y as usize])
    }

    /// g(z) = N^{-1} tr G over the retained vertices.
    pub fn g_avg(&self) -> Complex64 {
        let kept = self.n - self.excluded.len();
        if kept == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let sum: Complex64 = self.diag.iter().sum();
        sum / kept as f64
    }
}

/// Plain Gauss-Jordan inverse with partial pivoting; used directly for small
/// systems and as the only dense path when faer is compiled out.
fn complex_inverse_elim(a: &[Complex64], k: usize) -> Result<Vec<Complex64>> {
    let mut m = a.to_vec();
    let mut inv = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        inv[i * k + i] = Complex64::new(1.0, 0.0);
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.norm())).max(1.0);
    for col in 0..k {
        let mut piv = col;
        let mut best = m[col * k + col].norm();
        for r in col + 1..k {
            let v = m[r * k + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= scale * 1e-200 {
            return Err(num_err("singular shifted matrix in Green function solve".to_string()));
        }
        if piv != col {
            for j in 0..k {
                m.swap(col * k + j, piv * k + j);
                inv.swap(col * k + j, piv * k + j);
            }
        }
        let inv_p = Complex64::new(1.0, 0.0) / m[col * k + col];
        for j in 0..k {
            m[col * k + j] *= inv_p;
            inv[col * k + j] *= inv_p;
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let factor = m[r * k + col];
            if factor.norm() == 0.0 {
                continue;
            }
            for j in 0..k {
                let mv = m[col * k + j];
                let iv = inv[col * k + j];
                m[r * k + j] -= factor * mv;
                inv[r * k + j] -= factor * iv;
            }
        }
    }
    Ok(inv)
}

#[cfg(feature = "dense-faer")]
fn complex_inverse(a: &[Complex64], k: usize) -> Result<Vec<Complex64>> {
    if k <= SMALL_LU_CUTOFF {
        return complex_inverse_elim(a, k);
    }
    use faer::linalg::solvers::DenseSolveCore;
    let m = faer::Mat::from_fn(k, k, |i, j| {
        let v = a[i * k + j];
        faer::c64::new(v.re, v.im)
    });
    let lu = m.partial_piv_lu();
    let inv = lu.inverse();
    let mut out = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in 0..k {
            let v = inv[(i, j)];
            out[i * k + j] = Complex64::new(v.re, v.im);
        }
    }
    Ok(out)
}

#[cfg(not(feature = "dense-faer"))]
fn complex_inverse(a: &[Complex64], k: usize) -> Result<Vec<Complex64>> {
    complex_inverse_elim(a, k)
}

fn check_z(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(par_err(format!("spectral parameter needs Im z > 0, got {z}")));
    }
    Ok(())
}

fn normalize_excluded(excluded: &[u32], n: usize) -> Result<Vec<u32>> {
    let mut t = excluded.to_vec();
    t.sort_unstable();
    t.dedup();
    if let Some(&last) = t.last() {
        if last as usize >= n {
            return Err(par_err(format!("excluded vertex {last} out of range for n = {n}")));
        }
    }
    Ok(t)
}

/// Resolvent by dense complex LU (n <= 4096) or, above that, column-wise
/// iterative solves for the diagonal only.
pub fn green_function(
    m: &ScaledMatrix,
    z: Complex64,
    want_full: bool,
    excluded: &[u32],
) -> Result<GreenFunction> {
    check_z(z)?;
    let n = m.n;
    let t = normalize_excluded(excluded, n)?;
    if t.len() == n {
        return Err(par_err("cannot exclude every vertex".to_string()));
    }
    if n > GREEN_DENSE_CUTOFF {
        if want_full {
            return Err(par_err(format!(
                "full Green function limited to n <= {GREEN_DENSE_CUTOFF}, got {n}"
            )));
        }
        let diag = green_diag_sparse(m, z, &t, COCG_TOL, COCG_MAX_ITERS)?;
        return finish_green(m, z, t, diag, None);
    }

    let keep: Vec<usize> = (0..n).filter(|i| t.binary_search(&(*i as u32)).is_err()).collect();
    let k = keep.len();
    let dense = m.to_dense();
    let mut a = vec![Complex64::new(0.0, 0.0); k * k];
    for (ii, &i) in keep.iter().enumerate() {
        for (jj, &j) in keep.iter().enumerate() {
            a[ii * k + jj] = Complex64::new(dense[i * n + j], 0.0);
        }
        a[ii * k + ii] -= z;
    }
    let inv = complex_inverse(&a, k)?;

    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    for (ii, &i) in keep.iter().enumerate() {
        diag[i] = inv[ii * k + ii];
    }
    let full = if want_full {
        let mut f = vec![Complex64::new(0.0, 0.0); n * n];
        for (ii, &i) in keep.iter().enumerate() {
            for (jj, &j) in keep.iter().enumerate() {
                f[i * n + j] = inv[ii * k + jj];
            }
        }
        Some(f)
    } else {
        None
    };
    finish_green(m, z, t, diag, full)
}

fn finish_green(
    m: &ScaledMatrix,
    z: Complex64,
    excluded: Vec<u32>,
    diag: Vec<Complex64>,
    full: Option<Vec<Complex64>>,
) -> Result<GreenFunction> {
    for (x, g) in diag.iter().enumerate() {
        if !g.re.is_finite() || !g.im.is_finite() {
            return Err(num_err(format!("non-finite Green entry at vertex {x}")));
        }
        if excluded.binary_search(&(x as u32)).is_err() && !(g.im > 0.0) {
            return Err(num_err(format!(
                "Im G_xx = {} not positive at vertex {x}; solve broke down",
                g.im
            )));
        }
    }
    Ok(GreenFunction { z, n: m.n, kind: m.kind, d: m.d, excluded, diag, full })
}

/// Diagonal of the resolvent by conjugate-orthogonal CG column solves, the
/// path for matrices too large to invert densely.
pub fn green_diag_sparse(
    m: &ScaledMatrix,
    z: Complex64,
    excluded: &[u32],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<Complex64>> {
    check_z(z)?;
    let n = m.n;
    let t = normalize_excluded(excluded, n)?;
    let keep_mask: Vec<bool> = (0..n).map(|i| t.binary_search(&(i as u32)).is_err()).collect();

    let mut re_in = vec![0.0; n];
    let mut im_in = vec![0.0; n];
    let mut re_out = vec![0.0; n];
    let mut im_out = vec![0.0; n];
    let mut apply = |v: &[Complex64], out: &mut [Complex64]| {
        for i in 0..n {
            if keep_mask[i] {
                re_in[i] = v[i].re;
                im_in[i] = v[i].im;
            } else {
                re_in[i] = 0.0;
                im_in[i] = 0.0;
            }
        }
        m.matvec(&re_in, &mut re_out);
        m.matvec(&im_in, &mut im_out);
        for i in 0..n {
            out[i] = if keep_mask[i] {
                Complex64::new(re_out[i], im_out[i]) - z * v[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    };

    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    let mut av = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..n {
        if !keep_mask[x] {
            continue;
        }
        // COCG on the complex symmetric system (M - z) g = e_x
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        let mut r = vec![Complex64::new(0.0, 0.0); n];
        r[x] = Complex64::new(1.0, 0.0);
        let mut p = r.clone();
        let mut rho: Complex64 = r.iter().map(|v| v * v).sum();
        let mut converged = false;
        for _ in 0..max_iters {
            apply(&p, &mut av);
            let denom: Complex64 = p.iter().zip(av.iter()).map(|(a, b)| a * b).sum();
            if denom.norm() == 0.0 {
                return Err(num_err(format!("iterative solve broke down at column {x}")));
            }
            let alpha = rho / denom;
            let mut rnorm2 = 0.0;
            for i in 0..n {
                g[i] += alpha * p[i];
                r[i] -= alpha * av[i];
                rnorm2 += r[i].norm_sqr();
            }
            if rnorm2.sqrt() <= tol {
                converged = true;
                break;
            }
            let rho_next: Complex64 = r.iter().map(|v| v * v).sum();
            if rho.norm() == 0.0 {
                return Err(num_err(format!("iterative solve stagnated at column {x}")));
            }
            let beta = rho_next / rho;
            rho = rho_next;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if !converged {
            return Err(num_err(format!(
                "iterative solve for column {x} missed tolerance {tol} in {max_iters} iterations"
            )));
        }
        diag[x] = g[x];
    }
    Ok(diag)
}

/// Max over x of the relative Ward identity defect
/// |sum_y |G_xy|^2 - Im G_xx / Im z| / (Im G_xx / Im z).
pub fn ward_residual(g: &GreenFunction) -> Result<f64> {
    let full = g
        .full
        .as_ref()
        .ok_or_else(|| Error::Contract("Ward residual needs the full Green function".to_string()))?;
    let n = g.n;
    let mut worst = 0.0f64;
    for x in 0..n {
        if g.is_excluded(x as u32) {
            continue;
        }
        let row_sum: f64 = (0..n).map(|y| full[x * n + y].norm_sqr()).sum();
        let target = g.diag[x].im / g.z.im;
        worst = worst.max((row_sum - target).abs() / target);
    }
    Ok(worst)
}

/// Diagonal of the one-vertex minor G^(x) by the rank-one update
/// G^(x)_yy = G_yy - G_yx G_xy / G_xx; entries at x and excluded read 0.
pub fn minor_diag(g: &GreenFunction, x: u32) -> Result<Vec<Complex64>> {
    let full = g
        .full
        .as_ref()
        .ok_or_else(|| Error::Contract("minor update needs the full Green function".to_string()))?;
    if x as usize >= g.n || g.is_excluded(x) {
        return Err(par_err(format!("minor vertex {x} outside the retained set")));
    }
    let n = g.n;
    let gxx = g.diag[x as usize];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for y in 0..n {
        if y == x as usize || g.is_excluded(y as u32) {
            continue;
        }
        out[y] = g.diag[y] - full[y * n + x as usize] * full[x as usize * n + y] / gxx;
    }
    Ok(out)
}

/// Squared entries of the H part in M = H + f e e^*: uniform on edges,
/// uniform on non-edges, plus the diagonal H entry. The rank-one f part
/// never enters these sums.
struct HSquares {
    sq_nb: f64,
    sq_bg: f64,
    h_diag: f64,
}

fn h_squares(m: &ScaledMatrix) -> HSquares {
    let n = m.n as f64;
    let p = m.d / n;
    match m.kind {
        MatrixKind::CenteredH => HSquares {
            sq_nb: (1.0 - p) * (1.0 - p) / m.d,
            sq_bg: p * p / m.d,
            h_diag: 0.0,
        },
        MatrixKind::AdjacencyOverSqrtD => HSquares {
            sq_nb: (1.0 - p) * (1.0 - p) / m.d,
            sq_bg: p * p / m.d,
            h_diag: -p / m.d.sqrt(),
        },
        MatrixKind::SparseWigner => HSquares { sq_nb: 1.0 / m.d, sq_bg: 0.0, h_diag: 0.0 },
    }
}

/// beta_x = sum_y |H_xy|^2 for the sparse part of the kind's decomposition.
pub fn beta_profile(m: &ScaledMatrix) -> Vec<f64> {
    let hs = h_squares(m);
    let n = m.n;
    (0..n as u32)
        .map(|x| {
            let deg = m.row(x).0.len();
            deg as f64 * hs.sq_nb + (n - 1 - deg) as f64 * hs.sq_bg + hs.h_diag * hs.h_diag
        })
        .collect()
}

/// Per-vertex typicality statistics at the Green function's z.
#[derive(Clone, Debug)]
pub struct TypicalityReport {
    pub a: f64,
    /// phi_a = a (log N / d^2)^{1/3}
    pub threshold: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<Complex64>,
    /// {x : |Phi_x| v |Psi_x| <= phi_a}, ascending.
    pub typical: Vec<u32>,
    pub beta: Vec<f64>,
}

fn check_pair(m: &ScaledMatrix, g: &GreenFunction) -> Result<()> {
    if m.n != g.n || m.kind != g.kind || m.d != g.d {
        return Err(par_err("matrix does not match the Green function".to_string()));
    }
    Ok(())
}

/// Phi_x = sum_{y != x} (|H_xy|^2 - 1/N) and
/// Psi_x = sum_{y != x} (|H_xy|^2 - 1/N) G^(x)_yy, with the minor diagonals
/// obtained by rank-one updates.
pub fn typicality(m: &ScaledMatrix, g: &GreenFunction, a: f64) -> Result<TypicalityReport> {
    check_pair(m, g)?;
    if !(a > 0.0) {
        return Err(par_err(format!("typicality constant must be positive, got {a}")));
    }
    if !g.excluded.is_empty() {
        return Err(par_err("typicality expects the unreduced Green function".to_string()));
    }
    let n = m.n;
    let hs = h_squares(m);
    let inv_n = 1.0 / n as f64;
    let w_nb = hs.sq_nb - inv_n;
    let w_bg = hs.sq_bg - inv_n;
    let threshold = a * ((n as f64).ln() / (m.d * m.d)).powf(1.0 / 3.0);

    let mut phi = Vec::with_capacity(n);
    let mut psi = Vec::with_capacity(n);
    let mut typical = Vec::new();
    for x in 0..n as u32 {
        let deg = m.row(x).0.len();
        let phi_x = deg as f64 * w_nb + (n - 1 - deg) as f64 * w_bg;
        let md = minor_diag(g, x)?;
        let total: Complex64 = md.iter().sum();
        let nb_sum: Complex64 = m.row(x).0.iter().map(|&y| md[y as usize]).sum();
        let psi_x = total * w_bg + nb_sum * (w_nb - w_bg);
        if phi_x.abs().max(psi_x.norm()) <= threshold {
            typical.push(x);
        }
        phi.push(phi_x);
        psi.push(psi_x);
    }
    Ok(TypicalityReport { a, threshold, phi, psi, typical, beta: beta_profile(m) })
}

/// Largest squared-H mass any vertex puts on atypical neighbours,
/// sum_{y atypical, y != x} |H_xy|^2, and that mass over the threshold.
pub fn neighbor_atypical_mass(m: &ScaledMatrix, rep: &TypicalityReport) -> (f64, f64) {
    let n = m.n;
    let hs = h_squares(m);
    let mut atypical = vec![true; n];
    for &x in &rep.typical {
        atypical[x as usize] = false;
    }
    let total_atypical = atypical.iter().filter(|&&b| b).count();
    let mut worst = 0.0f64;
    for x in 0..n as u32 {
        let nb = m.row(x).0;
        let nb_atypical = nb.iter().filter(|&&y| atypical[y as usize]).count();
        let bg_atypical = total_atypical - nb_atypical - usize::from(atypical[x as usize]);
        let mass = nb_atypical as f64 * hs.sq_nb + bg_atypical as f64 * hs.sq_bg;
        worst = worst.max(mass);
    }
    (worst, worst / rep.threshold)
}

/// Diagonal-approximation errors of the local law at one z.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LocalLawReport {
    pub re_z: f64,
    pub im_z: f64,
    /// max_x |G_xx - m_{beta_x}(z)|
    pub max_diag_err: f64,
    /// |N^{-1} tr G - m(z)|
    pub avg_err: f64,
    /// reference rate (log N / d^2)^{1/3}
    pub rate_ref: f64,
}

pub fn local_law_report(g: &GreenFunction, beta: &[f64], d: f64) -> Result<LocalLawReport> {
    if beta.len() != g.n {
        return Err(par_err("beta profile length does not match".to_string()));
    }
    if !(d > 0.0) {
        return Err(par_err(format!("rate reference needs d > 0, got {d}")));
    }
    let mut worst = 0.0f64;
    for x in 0..g.n {
        if g.is_excluded(x as u32) {
            continue;
        }
        let target = m_alpha(beta[x], g.z)?;
        worst = worst.max((g.diag[x] - target).norm());
    }
    let avg_err = (g.g_avg() - m_semicircle(g.z)?).norm();
    Ok(LocalLawReport {
        re_z: g.z.re,
        im_z: g.z.im,
        max_diag_err: worst,
        avg_err,
        rate_ref: ((g.n as f64).ln() / (d * d)).powf(1.0 / 3.0),
    })
}

/// Largest off-diagonal Green entry among retained vertices.
pub fn offdiag_max(g: &GreenFunction) -> Result<f64> {
    let full = g
        .full
        .as_ref()
        .ok_or_else(|| Error::Contract("off-diagonal scan needs the full Green function".to_string()))?;
    let n = g.n;
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                worst = worst.max(full[x * n + y].norm());
            }
        }
    }
    Ok(worst)
}

/// Residuals of the self-consistent equation.
#[derive(Clone, Debug)]
pub struct SceReport {
    /// Y_x = 1/G_xx + z + sum_{y != x} |H_xy|^2 G^(x)_yy
    pub y: Vec<Complex64>,
    /// eps_x = 1/G_xx + z + |T|^{-1} sum_{y in T} G_yy
    pub eps: Vec<Complex64>,
    pub max_y: f64,
    pub max_eps_typical: f64,
    /// max_{x in T} |G_xx - m(z)|
    pub max_gap_typical: f64,
    /// fitted stability constant max_gap / max_eps over the typical set
    pub stability_constant: f64,
}

pub fn sce_residual(m: &ScaledMatrix, g: &GreenFunction, typical: &[u32]) -> Result<SceReport> {
    check_pair(m, g)?;
    if !g.excluded.is_empty() {
        return Err(par_err("self-consistent residuals expect the unreduced Green function".to_string()));
    }
    if typical.is_empty() {
        return Err(par_err("empty typical set".to_string()));
    }
    let n = m.n;
    let hs = h_squares(m);
    let t_mean: Complex64 =
        typical.iter().map(|&x| g.diag[x as usize]).sum::<Complex64>() / typical.len() as f64;
    let msc = m_semicircle(g.z)?;

    let mut y = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    let mut max_y = 0.0f64;
    for x in 0..n as u32 {
        let md = minor_diag(g, x)?;
        let total: Complex64 = md.iter().sum();
        let nb_sum: Complex64 = m.row(x).0.iter().map(|&yv| md[yv as usize]).sum();
        let weighted = total * hs.sq_bg + nb_sum * (hs.sq_nb - hs.sq_bg);
        let inv_g = Complex64::new(1.0, 0.0) / g.diag[x as usize];
        let yx = inv_g + g.z + weighted;
        max_y = max_y.max(yx.norm());
        y.push(yx);
        eps.push(inv_g + g.z + t_mean);
    }
    let mut max_eps_typical = 0.0f64;
    let mut max_gap_typical = 0.0f64;
    for &x in typical {
        max_eps_typical = max_eps_typical.max(eps[x as usize].norm());
        max_gap_typical = max_gap_typical.max((g.diag[x as usize] - msc).norm());
    }
    let stability_constant =
        if max_eps_typical > 0.0 { max_gap_typical / max_eps_typical } else { 0.0 };
    Ok(SceReport { y, eps, max_y, max_eps_typical, max_gap_typical, stability_constant })
}

/// Max over x of |1/G_xx - (M_xx - z - sum_{a,b != x} M_xa G^(x)_ab M_bx)|,
/// with the minor reconstructed entrywise from the rank-one update. O(N^3):
/// a cross-check, not a production path.
pub fn schur_residual(m: &ScaledMatrix, g: &GreenFunction) -> Result<f64> {
    check_pair(m, g)?;
    let full = g
        .full
        .as_ref()
        .ok_or_else(|| Error::Contract("Schur check needs the full Green function".to_string()))?;
    if !g.excluded.is_empty() {
        return Err(par_err("Schur check expects the unreduced Green function".to_string()));
    }
    let n = m.n;
    let mut worst = 0.0f64;
    let mut col = vec![0.0f64; n];
    for x in 0..n {
        for a in 0..n {
            col[a] = m.entry(a as u32, x as u32);
        }
        let gxx = g.diag[x];
        // w_a = sum_b G^(x)_ab M_bx with G^(x)_ab = G_ab - G_ax G_xb / G_xx
        let mut quad = Complex64::new(0.0, 0.0);
        let gx_dot: Complex64 =
            (0..n).filter(|&b| b != x).map(|b| full[x * n + b] * col[b]).sum();
        for a in 0..n {
            if a == x {
                continue;
            }
            let row_dot: Complex64 =
                (0..n).filter(|&b| b != x).map(|b| full[a * n + b] * col[b]).sum();
            let w = row_dot - full[a * n + x] * gx_dot / gxx;
            quad += col[a] * w;
        }
        let lhs = Complex64::new(1.0, 0.0) / gxx;
        let rhs = Complex64::new(m.entry(x as u32, x as u32), 0.0) - g.z - quad;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Log-spaced eta grid from L down to N^{kappa - 1}.
pub fn eta_grid(n: usize, kappa: f64, points: usize) -> Result<Vec<f64>> {
    if n < 2 || points < 2 || !(kappa > 0.0 && kappa <= 0.5) {
        return Err(par_err(format!(
            "eta grid needs n >= 2, points >= 2, kappa in (0, 1/2], got {n}, {points}, {kappa}"
        )));
    }
    let lo = (n as f64).powf(kappa - 1.0);
    let (top, bot) = (ETA_GRID_L.ln(), lo.ln());
    Ok((0..points)
        .map(|i| (top + (bot - top) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Radially symmetric test vector against (alpha - S) on the d-regular tree
/// of depth r, completed by a mirrored copy with leaves cross-matched so the
/// graph stays d-regular. Everything reduces to the radial weights b_0..b_r.
#[derive(Clone, Debug)]
pub struct InstabilityProbe {
    pub d: usize,
    pub r: usize,
    pub phase: Complex64,
    /// fitted growth constant: smallest c1 with |a_k| <= e^{c1 k / d}
    pub c1: f64,
    /// damping exponent mu = max(2, 2 c1) log r / r
    pub mu: f64,
    /// radial weights b_k = e^{-mu k} a_k
    pub weights: Vec<Complex64>,
    pub u_norm: f64,
    pub residual_norm: f64,
    /// ||(alpha - S)^{-1}||_{inf -> inf} >= u_norm / residual_norm
    pub lower_bound: f64,
}

pub fn instability_probe(d: usize, r: usize, phase: Complex64) -> Result<InstabilityProbe> {
    if r < 2 {
        return Err(par_err(format!("instability probe needs depth r >= 2, got {r}")));
    }
    if d < 2 {
        return Err(par_err(format!("instability probe needs branching d >= 2, got {d}")));
    }
    if (phase.norm() - 1.0).abs() > 1e-12 {
        return Err(par_err(format!("phase must lie on the unit circle, got |{phase}|")));
    }
    let df = d as f64;
    // a_0 = 1, a_1 = alpha, a_{k+1} = (d/(d-1)) alpha a_k - (1/(d-1)) a_{k-1}
    let mut a = Vec::with_capacity(r + 1);
    a.push(Complex64::new(1.0, 0.0));
    a.push(phase);
    for k in 1..r {
        let next = phase * a[k] * (df / (df - 1.0)) - a[k - 1] / (df - 1.0);
        a.push(next);
    }
    let c1 = (1..=r)
        .map(|k| df * a[k].norm().ln() / k as f64)
        .fold(0.0f64, f64::max);
    let mu = 2.0f64.max(2.0 * c1) * (r as f64).ln() / r as f64;
    let weights: Vec<Complex64> =
        (0..=r).map(|k| a[k] * (-mu * k as f64).exp()).collect();

    let u_norm = weights.iter().fold(0.0f64, |m, w| m.max(w.norm()));
    // residual rows by distance from the root: 0, interior, own leaves,
    // mirror-copy leaves; zero elsewhere by construction
    let mut residual_norm = (phase * weights[0] - weights[1]).norm();
    for k in 1..r {
        let row = phase * weights[k] - (weights[k - 1] + weights[k + 1] * (df - 1.0)) / df;
        residual_norm = residual_norm.max(row.norm());
    }
    residual_norm = residual_norm.max((phase * weights[r] - weights[r - 1] / df).norm());
    residual_norm = residual_norm.max(weights[r].norm() * (df - 1.0) / df);
    if residual_norm == 0.0 {
        return Err(num_err("degenerate zero residual in instability probe".to_string()));
    }
    Ok(InstabilityProbe {
        d,
        r,
        phase,
        c1,
        mu,
        weights,
        u_norm,
        residual_norm,
        lower_bound: u_norm / residual_norm,
    })
}
