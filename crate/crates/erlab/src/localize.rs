//! Localization diagnostics: sup-norm exponent, resonant vertex sets,
//! profile overlap and resonant-mass reports, eigenvalue-to-degree rigidity
//! pairing, and scatter rows for the eigenvalue / inf-norm cloud.

use crate::graph::DegreeProfile;
use crate::phase::lambda;
use crate::profile::LocalizationProfile;
use crate::spectra::EigenDecomposition;
use crate::{dom_err, par_err, Error, Result};

/// gamma(w) with ||w||_inf^2 = n^{-gamma}: 0 for a coordinate vector,
/// 1 for the flat unit vector.
pub fn gamma_exponent(w: &[f64]) -> Result<f64> {
    let n = w.len();
    if n < 2 {
        return Err(par_err("gamma exponent needs dimension >= 2".to_string()));
    }
    let norm2: f64 = w.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(dom_err("gamma exponent of the zero vector".to_string()));
    }
    if (norm2.sqrt() - 1.0).abs() > 1e-8 {
        return Err(dom_err(format!(
            "gamma exponent wants a unit vector, got norm {}",
            norm2.sqrt()
        )));
    }
    let linf = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(-(linf * linf).ln() / (n as f64).ln())
}

/// Vertices whose predicted eigenvalue sits within delta of the energy:
/// {x : alpha_x >= 2, |Lambda(alpha_x) - lambda| <= delta}.
#[derive(Clone, Debug)]
pub struct ResonantSet {
    pub lambda: f64,
    pub delta: f64,
    /// Ascending vertex ids.
    pub vertices: Vec<u32>,
}

pub fn resonant_set(profile: &DegreeProfile, lam: f64, delta: f64) -> Result<ResonantSet> {
    if !(lam > 2.0) {
        return Err(par_err(format!("resonant set needs lambda > 2, got {lam}")));
    }
    if !(delta > 0.0 && delta <= lam - 2.0) {
        return Err(par_err(format!(
            "resonant window delta must lie in (0, lambda - 2], got {delta}"
        )));
    }
    let mut vertices = Vec::new();
    for (x, &alpha) in profile.alpha.iter().enumerate() {
        if alpha >= 2.0 {
            let predicted = lambda(alpha)?;
            if (predicted - lam).abs() <= delta {
                vertices.push(x as u32);
            }
        }
    }
    Ok(ResonantSet { lambda: lam, delta, vertices })
}

/// Default resonance window: half the distance to the bulk edge, floored at
/// 0.05 and never exceeding the admissible lambda - 2.
pub fn default_delta(lam: f64) -> f64 {
    (0.5 * (lam - 2.0)).max(0.05).min(lam - 2.0)
}

/// Mass predicted to sit on the resonant set for an eigenvector at energy
/// lambda: sqrt(lambda^2 - 4) / (lambda + sqrt(lambda^2 - 4)).
pub fn predicted_center_mass(lam: f64) -> Result<f64> {
    if lam < 2.0 {
        return Err(dom_err(format!("center mass prediction needs lambda >= 2, got {lam}")));
    }
    let s = (lam * lam - 4.0).sqrt();
    Ok(s / (lam + s))
}

/// Per-eigenvector localization summary.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LocalizationReport {
    pub eigenvalue: f64,
    pub gamma: f64,
    pub overlap: f64,
    pub center_mass: f64,
    pub predicted_center_mass: f64,
    pub l2: f64,
    pub l4: f64,
    pub linf: f64,
}

/// Overlap of `w` with the profile family over the resonant set, and the
/// raw eigenvector mass on that set.
pub fn overlap_report(
    w: &[f64],
    lam: f64,
    resonant: &ResonantSet,
    profiles: &[LocalizationProfile],
) -> LocalizationReport {
    let n = w.len();
    let overlap: f64 = profiles
        .iter()
        .map(|p| {
            let c = p.dot(w);
            c * c
        })
        .sum();
    let center_mass: f64 = resonant
        .vertices
        .iter()
        .map(|&x| w[x as usize] * w[x as usize])
        .sum();
    let l2 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let l4 = w.iter().map(|v| v.powi(4)).sum::<f64>().powf(0.25);
    let linf = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gamma = if linf > 0.0 && n >= 2 {
        -(linf * linf).ln() / (n as f64).ln()
    } else {
        f64::NAN
    };
    LocalizationReport {
        eigenvalue: lam,
        gamma,
        overlap,
        center_mass,
        predicted_center_mass: predicted_center_mass(lam.abs().max(2.0)).unwrap_or(0.0),
        l2,
        l4,
        linf,
    }
}

/// One rigidity row: the i-th largest degree vertex against the (i+1)-th
/// eigenvalue (positive side) or the (N-i+1)-th (negative side, where
/// `predicted` carries the minus sign).
#[derive(Clone, Debug, serde::Serialize)]
pub struct RigidityPair {
    pub rank: usize,
    pub eigenvalue: f64,
    pub predicted: f64,
    pub abs_gap: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct RigidityReport {
    /// |U| where U = {x : Lambda(alpha_x) >= 2 + xi^{1/2}}.
    pub u_size: usize,
    /// 2 |U| rows: for each rank i, the positive-side row then the
    /// negative-side row.
    pub pairs: Vec<RigidityPair>,
    /// max |lambda_i| over |U| + 2 <= i <= N - |U| (1-based, descending);
    /// NaN when that range is empty.
    pub bulk_max: f64,
}

/// Pair the eigenvalues just below the trivial top one with the predicted
/// locations +-Lambda(alpha) of the largest-degree vertices, in rank order.
pub fn rigidity_pairing(
    eigs: &EigenDecomposition,
    profile: &DegreeProfile,
    xi: f64,
) -> Result<RigidityReport> {
    if !(xi > 0.0) {
        return Err(par_err(format!("rigidity pairing needs xi > 0, got {xi}")));
    }
    let n = eigs.n;
    if profile.alpha.len() != n {
        return Err(par_err("degree profile does not match the decomposition".to_string()));
    }
    if eigs.values.len() != n {
        return Err(Error::Contract(
            "rigidity pairing needs the full spectrum".to_string(),
        ));
    }
    let threshold = 2.0 + xi.sqrt();
    let mut members: Vec<(f64, u32)> = Vec::new();
    for (x, &alpha) in profile.alpha.iter().enumerate() {
        if alpha >= 2.0 {
            let predicted = lambda(alpha)?;
            if predicted >= threshold {
                members.push((alpha, x as u32));
            }
        }
    }
    // sigma: alpha descending, vertex id ascending on ties
    members.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let u_size = members.len();

    let mut pairs = Vec::with_capacity(2 * u_size);
    for (i, &(alpha, _)) in members.iter().enumerate() {
        let rank = i + 1;
        let predicted = lambda(alpha)?;
        if rank + 1 > n {
            break;
        }
        let pos = eigs.values[rank]; // lambda_{i+1}, 0-based index i
        pairs.push(RigidityPair {
            rank,
            eigenvalue: pos,
            predicted,
            abs_gap: (pos - predicted).abs(),
        });
        let neg = eigs.values[n - rank]; // lambda_{N-i+1}
        pairs.push(RigidityPair {
            rank,
            eigenvalue: neg,
            predicted: -predicted,
            abs_gap: (neg + predicted).abs(),
        });
    }

    // bulk: 1-based i in [|U| + 2, N - |U|]
    let lo = u_size + 2;
    let hi = n - u_size;
    let bulk_max = if lo <= hi {
        eigs.values[lo - 1..hi]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        f64::NAN
    };

    Ok(RigidityReport { u_size, pairs, bulk_max })
}

/// One scatter row: eigenvalue against the sup norm of its eigenvector.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ScatterRow {
    pub eigenvalue: f64,
    pub inf_norm: f64,
}

/// All (eigenvalue, ||w||_inf) rows of a decomposition, in its order.
pub fn scatter_rows(eigs: &EigenDecomposition) -> Result<Vec<ScatterRow>> {
    if eigs.vectors.is_none() {
        return Err(Error::Contract("scatter rows need eigenvectors".to_string()));
    }
    let mut rows = Vec::with_capacity(eigs.values.len());
    for (j, &lam) in eigs.values.iter().enumerate() {
        let w = eigs.vector(j).expect("vectors present");
        let linf = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rows.push(ScatterRow { eigenvalue: lam, inf_norm: linf });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSample;
    use crate::profile::build_pruned_operators;
    use crate::prune::prune;
    use crate::rng::Stream;
    use crate::spectra::eig_sym_dense;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    fn degree_profile(alpha: &[f64], d: f64) -> DegreeProfile {
        DegreeProfile {
            degree: alpha.iter().map(|a| (a * d).round() as u32).collect(),
            alpha: alpha.to_vec(),
            d,
        }
    }

    #[test]
    fn gamma_limits_and_invariance() {
        let n = 64;
        let mut e0 = vec![0.0; n];
        e0[17] = 1.0;
        assert_close(gamma_exponent(&e0).unwrap(), 0.0, 1e-15, "coordinate vector");

        let flat = vec![(n as f64).powf(-0.5); n];
        assert_close(gamma_exponent(&flat).unwrap(), 1.0, 1e-12, "flat vector");

        let mut rng = Stream::new(3, 3);
        let mut w: Vec<f64> = (0..n).map(|_| rng.next_unit() - 0.5).collect();
        let norm: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut w {
            *v /= norm;
        }
        let g = gamma_exponent(&w).unwrap();
        let flipped: Vec<f64> = w.iter().map(|v| -v).collect();
        assert_eq!(gamma_exponent(&flipped).unwrap(), g, "sign flip");
        let mut permuted = w.clone();
        permuted.rotate_left(13);
        permuted.swap(0, 40);
        assert_eq!(gamma_exponent(&permuted).unwrap(), g, "permutation");

        assert!(gamma_exponent(&vec![0.0; n]).is_err());
        assert!(gamma_exponent(&vec![0.5; n]).is_err());
        assert!(gamma_exponent(&[1.0]).is_err());
    }

    #[test]
    fn resonant_set_membership() {
        // Lambda(5) = 5/2 exactly
        let p = degree_profile(&[5.0, 1.9, 3.0], 2.0);
        let set = resonant_set(&p, 2.5, 0.01).unwrap();
        assert_eq!(set.vertices, vec![0]);

        // alpha = 3: Lambda = 3/sqrt(2) = 2.1213; wide window picks it up
        let set = resonant_set(&p, 2.5, 0.4).unwrap();
        assert_eq!(set.vertices, vec![0, 2]);

        let sub2 = degree_profile(&[1.5, 0.3, 1.99], 2.0);
        assert!(resonant_set(&sub2, 2.5, 0.3).unwrap().vertices.is_empty());

        assert!(resonant_set(&p, 2.0, 0.1).is_err());
        assert!(resonant_set(&p, 2.5, 0.0).is_err());
        assert!(resonant_set(&p, 2.5, 0.6).is_err());
    }

    #[test]
    fn resonant_set_monotone_in_delta() {
        let mut rng = Stream::new(11, 0);
        let alpha: Vec<f64> = (0..200).map(|_| 4.0 * rng.next_unit()).collect();
        let p = degree_profile(&alpha, 3.0);
        let mut prev: Vec<u32> = Vec::new();
        for k in 1..=7 {
            let delta = 0.05 * k as f64;
            let set = resonant_set(&p, 2.4, delta).unwrap();
            for v in &prev {
                assert!(set.vertices.contains(v), "shrank at delta {delta}");
            }
            prev = set.vertices;
        }
    }

    #[test]
    fn default_delta_respects_bounds() {
        for &lam in &[2.001, 2.05, 2.2, 2.5, 3.0, 4.0] {
            let d = default_delta(lam);
            assert!(d > 0.0 && d <= lam - 2.0, "delta {d} out of range at {lam}");
        }
        assert_close(default_delta(4.0), 1.0, 1e-15, "half-width regime");
        assert_close(default_delta(2.02), 0.02, 1e-15, "tight regime capped");
    }

    #[test]
    fn center_mass_pins() {
        assert_close(predicted_center_mass(2.0).unwrap(), 0.0, 1e-15, "edge");
        assert_close(predicted_center_mass(2.5).unwrap(), 0.375, 1e-15, "lambda 2.5");
        assert!(predicted_center_mass(1.5).is_err());
    }

    /// Star center 0 with six leaves, two of which grow a second level.
    fn two_level_star() -> GraphSample {
        let mut edges: Vec<(u32, u32)> = (1..=6).map(|v| (0, v)).collect();
        edges.push((1, 7));
        edges.push((2, 8));
        GraphSample::from_edges(9, 2.0, 7, &edges).unwrap()
    }

    #[test]
    fn overlap_of_profile_with_itself() {
        let g = two_level_star();
        let p = prune(&g, 2.5, 2).unwrap();
        let ops = build_pruned_operators(&g, &p, 1e-8).unwrap();
        assert_eq!(ops.centers, vec![0]);

        let profile = crate::graph::normalized_degrees(&g);
        let lam = ops.profiles[0].lam;
        let set = resonant_set(&profile, lam, 0.05).unwrap();
        assert_eq!(set.vertices, vec![0]);

        let w = ops.profiles[0].dense(g.n);
        let rep = overlap_report(&w, lam, &set, &ops.profiles);
        assert_close(rep.overlap, 1.0, 1e-12, "self overlap");
        assert!(rep.overlap <= 1.0 + 1e-12);
        assert_close(rep.center_mass, ops.profiles[0].weights[0].powi(2), 1e-12, "mass at center");
        assert_close(rep.l2, 1.0, 1e-12, "unit");
        assert!(rep.linf <= rep.l4 && rep.l4 <= rep.l2 + 1e-12, "lp interpolation");

        // Bessel bound for an arbitrary unit vector
        let mut rng = Stream::new(5, 9);
        let mut v: Vec<f64> = (0..g.n).map(|_| rng.next_unit() - 0.5).collect();
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in &mut v {
            *a /= norm;
        }
        let rep = overlap_report(&v, lam, &set, &ops.profiles);
        assert!(rep.overlap <= 1.0 + 1e-12, "Bessel: {}", rep.overlap);
    }

    /// Two detached stars: K_{1,36} (vertices 0..=36) and K_{1,16}
    /// (vertices 37..=53), plus isolated filler to n = 60.
    fn two_star_graph() -> GraphSample {
        let mut edges: Vec<(u32, u32)> = (1..=36).map(|v| (0u32, v)).collect();
        edges.extend((38..=53).map(|v| (37u32, v)));
        GraphSample::from_edges(60, 4.0, 1, &edges).unwrap()
    }

    #[test]
    fn rigidity_on_two_star_graph() {
        let g = two_star_graph();
        let m = crate::graph::build_scaled_matrix(&g, crate::graph::MatrixKind::AdjacencyOverSqrtD, None);
        let eigs = eig_sym_dense(&m.to_dense(), g.n, false).unwrap();
        // spectrum: +-3 (big star), +-2 (small star), zeros
        assert_close(eigs.values[0], 3.0, 1e-9, "lambda_1");
        assert_close(eigs.values[1], 2.0, 1e-9, "lambda_2");
        assert_close(eigs.values[g.n - 1], -3.0, 1e-9, "lambda_N");

        let profile = crate::graph::normalized_degrees(&g);

        // threshold 2.5: only the big-star center (alpha 9, Lambda 9/sqrt(8))
        let rep = rigidity_pairing(&eigs, &profile, 0.25).unwrap();
        assert_eq!(rep.u_size, 1);
        assert_eq!(rep.pairs.len(), 2);
        assert_close(rep.pairs[0].eigenvalue, 2.0, 1e-9, "positive side pairs lambda_2");
        assert_close(rep.pairs[0].predicted, 9.0 / 8f64.sqrt(), 1e-12, "Lambda(9)");
        assert_close(rep.pairs[1].eigenvalue, -3.0, 1e-9, "negative side pairs lambda_N");
        assert_close(rep.pairs[1].predicted, -9.0 / 8f64.sqrt(), 1e-12, "-Lambda(9)");
        assert_close(
            rep.pairs[1].abs_gap,
            (3.0 - 9.0 / 8f64.sqrt()).abs(),
            1e-9,
            "negative gap",
        );
        // bulk range 3..=59 excludes +-3 and lambda_2 = 2 but keeps -2
        assert_close(rep.bulk_max, 2.0, 1e-9, "bulk max");

        // threshold 2.2: both centers (Lambda(4) = 4/sqrt(3) = 2.309)
        let rep = rigidity_pairing(&eigs, &profile, 0.04).unwrap();
        assert_eq!(rep.u_size, 2);
        assert_eq!(rep.pairs.len(), 4);
        assert_close(rep.pairs[2].eigenvalue, 0.0, 1e-9, "rank 2 positive side");
        assert_close(rep.pairs[2].predicted, 4.0 / 3f64.sqrt(), 1e-12, "Lambda(4)");
        assert_close(rep.bulk_max, 0.0, 1e-9, "bulk shrinks");

        // huge threshold: empty pairing, bulk max over 2 <= i <= N
        let rep = rigidity_pairing(&eigs, &profile, 9.0).unwrap();
        assert_eq!(rep.u_size, 0);
        assert!(rep.pairs.is_empty());
        assert_close(rep.bulk_max, 3.0, 1e-9, "bulk max with empty U keeps lambda_N");

        assert!(rigidity_pairing(&eigs, &profile, 0.0).is_err());
    }

    #[test]
    fn scatter_rows_shapes() {
        // flat top eigenvector of the all-ones matrix
        let n = 16;
        let a = vec![1.0; n * n];
        let eigs = eig_sym_dense(&a, n, true).unwrap();
        let rows = scatter_rows(&eigs).unwrap();
        assert_eq!(rows.len(), n);
        assert_close(rows[0].eigenvalue, n as f64, 1e-9, "top of J");
        assert_close(rows[0].inf_norm, 0.25, 1e-9, "flat vector inf norm");

        // coordinate eigenvectors of a diagonal matrix
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = i as f64;
        }
        let eigs = eig_sym_dense(&d, n, true).unwrap();
        let rows = scatter_rows(&eigs).unwrap();
        for r in &rows {
            assert_close(r.inf_norm, 1.0, 1e-9, "coordinate vectors");
        }

        let novec = eig_sym_dense(&d, n, false).unwrap();
        assert!(scatter_rows(&novec).is_err());
    }

    #[test]
    fn report_serialization_keys() {
        let pair = RigidityPair { rank: 1, eigenvalue: 2.0, predicted: 2.1, abs_gap: 0.1 };
        let v = serde_json::to_value(&pair).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, vec!["abs_gap", "eigenvalue", "predicted", "rank"]);

        let row = ScatterRow { eigenvalue: 1.0, inf_norm: 0.5 };
        let v = serde_json::to_value(&row).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, vec!["eigenvalue", "inf_norm"]);
    }
}
