//! The semicircle Stieltjes transform m, the shifted family m_alpha, the
//! vertex spectral measures mu_alpha (density on (-2,2) plus atoms), and
//! quadrature consistency between the two routes.

use crate::{dom_err, par_err, Error, Result};
use num_complex::Complex64;

/// Stieltjes transform of the semicircle law: the root of m^2 + z m + 1 = 0
/// in the upper half plane, closed form (-z + sqrt(z^2 - 4))/2.
pub fn m_semicircle(z: Complex64) -> Result<Complex64> {
    if z.im <= 0.0 {
        return Err(dom_err(format!("Im z must be positive, got {}", z.im)));
    }
    let s = (z * z - 4.0).sqrt();
    let m = (-z + s) / 2.0;
    // the two quadratic roots multiply to 1; exactly one lies in C_+
    if m.im > 0.0 {
        Ok(m)
    } else {
        Ok((-z - s) / 2.0)
    }
}

/// m_alpha(z) = -1/(z + alpha m(z)); m_1 = m, m_0(z) = -1/z.
pub fn m_alpha(alpha: f64, z: Complex64) -> Result<Complex64> {
    if alpha < 0.0 {
        return Err(par_err(format!("alpha must be >= 0, got {alpha}")));
    }
    let m = m_semicircle(z)?;
    Ok(-1.0 / (z + alpha * m))
}

/// m and m_alpha at one spectral point, with the defining relations checked.
#[derive(Clone, Copy, Debug)]
pub struct StieltjesValue {
    pub z: Complex64,
    pub m: Complex64,
    pub m_alpha: Complex64,
}

pub fn stieltjes_value(alpha: f64, z: Complex64) -> Result<StieltjesValue> {
    let m = m_semicircle(z)?;
    let ma = m_alpha(alpha, z)?;
    let relation = (1.0 / m + z + m).norm();
    if relation > 1e-12 {
        return Err(Error::Numeric(format!(
            "semicircle relation residual {relation:.3e} at z = {z}"
        )));
    }
    if m.im <= 0.0 || ma.im <= 0.0 {
        return Err(Error::Numeric(format!("Nevanlinna violation at z = {z}")));
    }
    Ok(StieltjesValue { z, m, m_alpha: ma })
}

/// Spectral measure of the infinite rooted tree whose root has alpha d
/// children and all other vertices d children (d -> infinity limit):
/// density g_alpha on (-2,2) plus symmetric atoms.
#[derive(Clone, Copy, Debug)]
pub struct MuAlpha {
    pub alpha: f64,
    /// mass of each of the two atoms at +-atom_location
    pub atom_mass: f64,
    pub atom_location: f64,
}

pub fn mu_alpha(alpha: f64) -> Result<MuAlpha> {
    if alpha < 0.0 {
        return Err(par_err(format!("alpha must be >= 0, got {alpha}")));
    }
    let (atom_mass, atom_location) = if alpha == 0.0 {
        // isolated vertex: the two half-atoms coincide at the origin
        (0.5, 0.0)
    } else if alpha > 2.0 {
        ((alpha - 2.0) / (2.0 * alpha - 2.0), crate::phase::lambda(alpha)?)
    } else {
        (0.0, 0.0)
    };
    Ok(MuAlpha {
        alpha,
        atom_mass,
        atom_location,
    })
}

impl MuAlpha {
    /// Continuous density g_alpha(u) = (alpha/2pi) sqrt(4-u^2) /
    /// ((1-alpha) u^2 + alpha^2) for |u| < 2, zero outside.
    pub fn density(&self, u: f64) -> f64 {
        if u.abs() >= 2.0 || self.alpha == 0.0 {
            return 0.0;
        }
        let a = self.alpha;
        (a / (2.0 * std::f64::consts::PI)) * (4.0 - u * u).sqrt()
            / ((1.0 - a) * u * u + a * a)
    }

    /// Integrate f against the continuous part. The substitution u = 2 sin t
    /// turns the edge square-root into a smooth weight
    /// (2 alpha / pi) cos^2 t / ((2-alpha)^2 + 4(alpha-1) cos^2 t).
    pub fn integrate(&self, f: impl Fn(f64) -> Complex64, tol: f64) -> Result<Complex64> {
        let a = self.alpha;
        if a == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        let weight = |t: f64| {
            let c2 = t.cos().powi(2);
            (2.0 * a / std::f64::consts::PI) * c2 / ((2.0 - a).powi(2) + 4.0 * (a - 1.0) * c2)
        };
        adaptive_gk(&|t| weight(t) * f(2.0 * t.sin()), -half_pi, half_pi, tol)
    }

    /// Total mass: continuous part plus both atoms; a probability measure.
    pub fn total_mass(&self) -> Result<f64> {
        let cont = self.integrate(|_| Complex64::new(1.0, 0.0), 1e-12)?;
        Ok(cont.re + 2.0 * self.atom_mass)
    }
}

/// The transform int d mu_alpha(u) / (u - z) by adaptive quadrature;
/// the independent route to m_alpha.
pub fn stieltjes_quadrature(mu: &MuAlpha, z: Complex64) -> Result<Complex64> {
    if z.im <= 0.0 {
        return Err(dom_err(format!("Im z must be positive, got {}", z.im)));
    }
    let cont = mu.integrate(|u| 1.0 / (u - z), 1e-11)?;
    let s = mu.atom_location;
    let atoms = mu.atom_mass * (1.0 / (s - z) + 1.0 / (-s - z));
    Ok(cont + atoms)
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod 7-15 on a finite interval, complex-valued.
// ---------------------------------------------------------------------------

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_6,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_299,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let sum = f(c - x) + f(c + x);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    kronrod *= h;
    gauss *= h;
    ((kronrod), (kronrod - gauss).norm())
}

/// Recursive bisection until the Kronrod-Gauss gap is below the local budget.
pub(crate) fn adaptive_gk(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Complex64> {
    fn go(
        f: &impl Fn(f64) -> Complex64,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
    ) -> Result<Complex64> {
        let (v, err) = gk15(f, a, b);
        if err <= tol {
            return Ok(v);
        }
        if depth >= 30 {
            return Err(Error::Numeric(format!(
                "quadrature stalled on [{a:.6}, {b:.6}]: achieved {err:.3e}, wanted {tol:.3e}"
            )));
        }
        let mid = 0.5 * (a + b);
        Ok(go(f, a, mid, 0.5 * tol, depth + 1)? + go(f, mid, b, 0.5 * tol, depth + 1)?)
    }
    go(f, a, b, tol, 0)
}

/// The delocalized-phase energy window [-2+kappa, -kappa] u [kappa, 2-kappa],
/// sampled at `per_side` points per interval.
pub fn spectral_window_grid(kappa: f64, per_side: usize) -> Result<Vec<f64>> {
    if !(0.0..0.5).contains(&kappa) || kappa <= 0.0 {
        return Err(par_err(format!("kappa must be in (0, 1/2), got {kappa}")));
    }
    if per_side < 2 {
        return Err(par_err("need at least 2 points per side".to_string()));
    }
    let mut grid = Vec::with_capacity(2 * per_side);
    let step = (2.0 - 2.0 * kappa) / (per_side - 1) as f64;
    for i in 0..per_side {
        grid.push(-2.0 + kappa + i as f64 * step);
    }
    for i in 0..per_side {
        grid.push(kappa + i as f64 * step);
    }
    Ok(grid)
}
