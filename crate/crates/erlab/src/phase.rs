//! Scalar exponent calculus for the phase diagram: Lambda and its inverse,
//! theta_b, rho_b, alpha_max, lambda_max, b_*, f_d, beta_l, the control
//! parameters xi and r_star, and degree-counting comparisons.

use crate::graph::DegreeProfile;
use crate::{dom_err, Result};

/// b_* = 1/(2 log 2 - 1): the semilocalized phase exists only for b < b_*.
pub fn b_star() -> f64 {
    1.0 / (2.0 * std::f64::consts::LN_2 - 1.0)
}

/// Lambda(alpha) = alpha / sqrt(alpha - 1) for alpha >= 2.
pub fn lambda(alpha: f64) -> Result<f64> {
    if alpha < 2.0 {
        return Err(dom_err(format!("Lambda needs alpha >= 2, got {alpha}")));
    }
    Ok(alpha / (alpha - 1.0).sqrt())
}

/// Inverse of Lambda on [2, inf): Lambda^{-1}(l) = (l^2/2)(1 + sqrt(1 - 4/l^2)).
pub fn lambda_inv(l: f64) -> Result<f64> {
    if l < 2.0 {
        return Err(dom_err(format!("Lambda^-1 needs lambda >= 2, got {l}")));
    }
    Ok(l * l / 2.0 * (1.0 + (1.0 - 4.0 / (l * l)).sqrt()))
}

fn entropy(alpha: f64) -> f64 {
    alpha * alpha.ln() - alpha + 1.0
}

/// theta_b(alpha) = max(0, 1 - b (alpha log alpha - alpha + 1)).
pub fn theta(b: f64, alpha: f64) -> f64 {
    (1.0 - b * entropy(alpha)).max(0.0)
}

/// rho_b(lambda): theta_b(Lambda^{-1}(|lambda|)) for |lambda| >= 2, else 1.
pub fn rho(b: f64, l: f64) -> f64 {
    let a = l.abs();
    if a >= 2.0 {
        theta(b, lambda_inv(a).expect("|lambda| >= 2"))
    } else {
        1.0
    }
}

/// Smallest alpha >= 2 with theta_b(alpha) = 0, by bisection on [2, 20].
/// `Ok(None)` marks b >= b_* (no semilocalized phase). b so small that the
/// root leaves [2, 20] is a domain error.
pub fn alpha_max(b: f64) -> Result<Option<f64>> {
    if b <= 0.0 {
        return Err(dom_err(format!("alpha_max needs b > 0, got {b}")));
    }
    if b >= b_star() {
        return Ok(None);
    }
    let target = 1.0 / b;
    if entropy(20.0) < target {
        return Err(dom_err(format!(
            "alpha_max(b={b}) exceeds the bracket [2, 20]"
        )));
    }
    let (mut lo, mut hi) = (2.0f64, 20.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Lambda(alpha_max(b)); `Ok(None)` when the phase is absent.
pub fn lambda_max(b: f64) -> Result<Option<f64>> {
    Ok(match alpha_max(b)? {
        Some(a) => Some(lambda(a)?),
        None => None,
    })
}

/// f_d(alpha) = d (alpha log alpha - alpha + 1) + (1/2) log(2 pi alpha d),
/// the large-deviation rate of the degree tail.
pub fn f_d(alpha: f64, d: f64) -> Result<f64> {
    if alpha < 1.0 {
        return Err(dom_err(format!("f_d needs alpha >= 1, got {alpha}")));
    }
    Ok(d * entropy(alpha) + 0.5 * (2.0 * std::f64::consts::PI * alpha * d).ln())
}

/// Solve f_d(beta) = log(n/l) for beta >= 1 by bisection (f_d is increasing).
pub fn beta_l(d: f64, n: usize, l: f64) -> Result<f64> {
    let target = (n as f64 / l).ln();
    if !(l > 0.0) || target < f_d(1.0, d)? {
        return Err(dom_err(format!(
            "beta_l: l={l} outside (0, n/sqrt(2 pi d)] for n={n}, d={d}"
        )));
    }
    let mut hi = 2.0;
    while f_d(hi, d)? < target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(dom_err("beta_l: bracket expansion failed".to_string()));
        }
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_d(mid, d)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Control parameters tied to one (n, d) choice.
#[derive(Clone, Copy, Debug)]
pub struct PhaseParams {
    pub n: usize,
    pub d: f64,
    pub b: f64,
    /// xi = sqrt(log n) log d / d, the basic error scale.
    pub xi: f64,
    /// Profile radius floor(c sqrt(log n)), clamped to at least 1.
    pub r_star: usize,
    /// The radius constant c (default 0.25).
    pub c: f64,
}

pub const R_STAR_C_DEFAULT: f64 = 0.25;

impl PhaseParams {
    /// Build from n and the expected degree d; b = d / log n is derived.
    pub fn from_degree(n: usize, d: f64) -> Result<PhaseParams> {
        Self::build(n, d, R_STAR_C_DEFAULT)
    }

    /// Build from n and b; d = b log n is derived.
    pub fn from_b(n: usize, b: f64) -> Result<PhaseParams> {
        if n < 3 {
            return Err(dom_err("need n >= 3".to_string()));
        }
        Self::build(n, b * (n as f64).ln(), R_STAR_C_DEFAULT)
    }

    pub fn with_c(mut self, c: f64) -> PhaseParams {
        self.c = c;
        self.r_star = Self::radius(self.n, c);
        self
    }

    fn radius(n: usize, c: f64) -> usize {
        ((c * (n as f64).ln().sqrt()).floor() as usize).max(1)
    }

    fn build(n: usize, d: f64, c: f64) -> Result<PhaseParams> {
        if n < 3 {
            return Err(dom_err("need n >= 3".to_string()));
        }
        if !(d > 1.0) {
            return Err(dom_err(format!("need d > 1, got {d}")));
        }
        let logn = (n as f64).ln();
        Ok(PhaseParams {
            n,
            d,
            b: d / logn,
            xi: logn.sqrt() * d.ln() / d,
            r_star: Self::radius(n, c),
            c,
        })
    }

    /// xi_u = sqrt(log n) / (d u) for a window width u > 0.
    pub fn xi_u(&self, u: f64) -> f64 {
        (self.n as f64).ln().sqrt() / (self.d * u)
    }
}

/// One row of the degree-counting comparison at level alpha.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CountRow {
    pub alpha: f64,
    pub count: usize,
    pub lower: i64,
    pub upper: i64,
    pub contained: bool,
}

/// Compare |{x : alpha_x >= alpha}| with the large-deviation bracket
/// [floor((n e^{-f_d} - 1)(log n)^{-2 zeta}), ceil((n e^{-f_d} + 1)(log n)^{2 zeta})].
pub fn counting_check(
    profile: &DegreeProfile,
    alpha_grid: &[f64],
    zeta: f64,
) -> Result<Vec<CountRow>> {
    let n = profile.alpha.len();
    let logn = (n as f64).ln();
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &a in alpha_grid {
        if a < 2.0 {
            return Err(dom_err(format!("counting_check needs alpha >= 2, got {a}")));
        }
        let count = profile.alpha.iter().filter(|&&x| x >= a).count();
        let mid = n as f64 * (-f_d(a, profile.d)?).exp();
        let lower = ((mid - 1.0) * logn.powf(-2.0 * zeta)).floor() as i64;
        let upper = ((mid + 1.0) * logn.powf(2.0 * zeta)).ceil() as i64;
        rows.push(CountRow {
            alpha: a,
            count,
            lower,
            upper,
            contained: lower <= count as i64 && (count as i64) <= upper,
        });
    }
    Ok(rows)
}
