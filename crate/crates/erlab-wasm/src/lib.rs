//! Browser bindings for three interactive views: the rho_b phase surface,
//! the limiting local spectral measures mu_alpha, and a live small-N
//! eigenvalue/sup-norm scatter. Each export returns a JSON string so the
//! page needs no generated glue types; the math lives in plain functions
//! that host-side tests call directly.

use wasm_bindgen::prelude::wasm_bindgen;

use erlab::graph::{build_scaled_matrix, generate_er, MatrixKind};
use erlab::{measures, phase, spectra};

fn err_json(e: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": format!("{e}") }).to_string()
}

/// rho_b(lambda) and theta-curve data for one b, plus the scalars the page
/// annotates: b_*, alpha_max, lambda_max.
pub fn phase_curve_json(b: f64) -> String {
    if !(b > 0.0) || !b.is_finite() {
        return err_json(format!("need b > 0, got {b}"));
    }
    let inner = || -> erlab::Result<String> {
        let mut lambda = Vec::new();
        let mut rho = Vec::new();
        for i in 0..=300 {
            let l = 2.0 + 2.5 * i as f64 / 300.0;
            lambda.push(l);
            rho.push(phase::rho(b, l));
        }
        Ok(serde_json::json!({
            "b": b,
            "b_star": phase::b_star(),
            "alpha_max": phase::alpha_max(b)?,
            "lambda_max": phase::lambda_max(b)?,
            "edge_exponent": (1.0 - b / phase::b_star()).max(0.0),
            "lambda": lambda,
            "rho": rho,
        })
        .to_string())
    };
    inner().unwrap_or_else(err_json)
}

/// Density of mu_alpha on (-2, 2) with its atoms and total mass.
pub fn measure_json(alpha: f64) -> String {
    let inner = || -> erlab::Result<String> {
        let mu = measures::mu_alpha(alpha)?;
        let mut x = Vec::new();
        let mut density = Vec::new();
        for i in 0..=400 {
            let u = -2.5 + 5.0 * i as f64 / 400.0;
            x.push(u);
            density.push(mu.density(u));
        }
        Ok(serde_json::json!({
            "alpha": alpha,
            "atom_mass": mu.atom_mass,
            "atom_location": mu.atom_location,
            "total_mass": mu.total_mass()?,
            "x": x,
            "density": density,
        })
        .to_string())
    };
    inner().unwrap_or_else(err_json)
}

/// Eigenvalue vs sup-norm scatter for one sampled G(n, d/n), d = b log n.
/// n is capped so the in-browser dense solve stays interactive.
pub fn scatter_json(n: usize, b: f64, seed: u64) -> String {
    if !(3..=600).contains(&n) {
        return err_json(format!("need 3 <= n <= 600 in the browser, got {n}"));
    }
    if !(b > 0.0) || !b.is_finite() {
        return err_json(format!("need b > 0, got {b}"));
    }
    let inner = || -> erlab::Result<String> {
        let d = b * (n as f64).ln();
        let g = generate_er(n, d, seed)?;
        let m = build_scaled_matrix(&g, MatrixKind::AdjacencyOverSqrtD, None);
        let mut eigenvalue = Vec::with_capacity(n);
        let mut inf_norm = Vec::with_capacity(n);
        spectra::visit_eigenpairs_scaled(&m, |_, lam, v| {
            eigenvalue.push(lam);
            inf_norm.push(v.iter().fold(0.0f64, |a, w| a.max(w.abs())));
        })?;
        let gamma: Vec<f64> = inf_norm
            .iter()
            .map(|&i| if i > 0.0 { -(i * i).ln() / (n as f64).ln() } else { f64::NAN })
            .collect();
        let predicted: Vec<f64> = {
            let profile = erlab::graph::normalized_degrees(&g);
            let mut lams: Vec<f64> = profile
                .alpha
                .iter()
                .filter(|&&a| a > 2.0)
                .map(|&a| phase::lambda(a).unwrap_or(f64::NAN))
                .collect();
            lams.sort_by(|p, q| q.partial_cmp(p).unwrap());
            lams
        };
        Ok(serde_json::json!({
            "n": n,
            "b": b,
            "d": d,
            "seed": seed,
            "eigenvalue": eigenvalue,
            "inf_norm": inf_norm,
            "gamma": gamma,
            "predicted_outliers": predicted,
        })
        .to_string())
    };
    inner().unwrap_or_else(err_json)
}

#[wasm_bindgen]
pub fn phase_curve(b: f64) -> String {
    phase_curve_json(b)
}

#[wasm_bindgen]
pub fn measure_density(alpha: f64) -> String {
    measure_json(alpha)
}

#[wasm_bindgen]
pub fn sample_scatter(n: usize, b: f64, seed: u64) -> String {
    scatter_json(n, b, seed)
}
