//! Star tuning forks: two equal stars hanging off a common base vertex.
//! Each fork contributes an exact pair of eigenvalues +-sqrt(D/d) to the
//! scaled adjacency matrix, with eigenvectors supported on the two stars.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::graph::{Adjacency, ComponentCensus, GraphSample};
use crate::{par_err, Error, Result};

/// Two degree-D stars whose hubs attach to the same base vertex.
/// Spokes are leaves of the host graph; each hub has host degree D + 1.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TuningFork {
    pub base: u32,
    pub hubs: (u32, u32),
    pub spokes: (Vec<u32>, Vec<u32>),
    pub degree: usize,
}

fn comp_ids(census: &ComponentCensus, n: usize) -> Result<Vec<usize>> {
    let mut id = vec![usize::MAX; n];
    let mut seen = 0usize;
    for (ci, comp) in census.components.iter().enumerate() {
        for &v in comp {
            if (v as usize) >= n || id[v as usize] != usize::MAX {
                return Err(Error::Contract(
                    "component census does not match the graph".to_string(),
                ));
            }
            id[v as usize] = ci;
            seen += 1;
        }
    }
    if seen != n {
        return Err(Error::Contract(
            "component census does not cover the graph".to_string(),
        ));
    }
    Ok(id)
}

/// All forks whose base lies in the giant component, ordered by
/// (base, degree, hub pair). Hubs sharing a base and a degree are paired
/// in all unordered combinations.
pub fn find_forks(g: &GraphSample, census: &ComponentCensus) -> Result<Vec<TuningFork>> {
    let n = g.n;
    let id = comp_ids(census, n)?;
    let giant = census.giant_index;

    // hub candidates: exactly one non-leaf neighbor (the base), rest leaves
    let mut groups: BTreeMap<(u32, usize), Vec<(u32, Vec<u32>)>> = BTreeMap::new();
    for h in 0..n as u32 {
        let nb = g.neighbors(h);
        if nb.is_empty() {
            continue;
        }
        let mut base = None;
        let mut spokes = Vec::new();
        let mut ok = true;
        for &y in nb {
            if g.degree(y) == 1 {
                spokes.push(y);
            } else if base.is_none() {
                base = Some(y);
            } else {
                ok = false;
                break;
            }
        }
        let Some(b) = base else { continue };
        if !ok || id[b as usize] != giant {
            continue;
        }
        groups.entry((b, spokes.len())).or_default().push((h, spokes));
    }

    let mut forks = Vec::new();
    for ((base, degree), hubs) in groups {
        for i in 0..hubs.len() {
            for j in i + 1..hubs.len() {
                forks.push(TuningFork {
                    base,
                    hubs: (hubs[i].0, hubs[j].0),
                    spokes: (hubs[i].1.clone(), hubs[j].1.clone()),
                    degree,
                });
            }
        }
    }
    Ok(forks)
}

/// Check every structural invariant of `f` against the host graph.
pub fn validate_fork(f: &TuningFork, g: &GraphSample) -> Result<()> {
    let fail = |msg: &str| Err(Error::Contract(format!("invalid fork: {msg}")));
    let (h1, h2) = f.hubs;
    if h1 == h2 {
        return fail("hubs coincide");
    }
    let mut all: HashSet<u32> = HashSet::new();
    all.insert(f.base);
    for &h in &[h1, h2] {
        if !all.insert(h) {
            return fail("vertices not distinct");
        }
    }
    for (h, spokes) in [(h1, &f.spokes.0), (h2, &f.spokes.1)] {
        if spokes.len() != f.degree {
            return fail("spoke count differs from degree");
        }
        let nb = g.neighbors(h);
        if nb.len() != f.degree + 1 {
            return fail("hub degree is not D + 1");
        }
        if !nb.contains(&f.base) {
            return fail("hub not adjacent to base");
        }
        for &s in spokes {
            if !all.insert(s) {
                return fail("vertices not distinct");
            }
            if !nb.contains(&s) {
                return fail("spoke not adjacent to its hub");
            }
            if g.degree(s) != 1 {
                return fail("spoke is not a leaf");
            }
        }
    }
    Ok(())
}

/// One exact eigenpair of A/sqrt(d), stored on its support.
#[derive(Clone, Debug)]
pub struct ForkEigenpair {
    pub eigenvalue: f64,
    pub support: Vec<u32>,
    pub weights: Vec<f64>,
}

/// The two exact eigenpairs +-sqrt(D/d): +-sqrt(D) on hub 1, 1 on its
/// spokes, mirrored with opposite sign on the second star, normalized.
/// For D = 0 both eigenvalues are 0 and the vector lives on the hubs.
pub fn fork_eigenpairs(f: &TuningFork, g: &GraphSample) -> Result<[ForkEigenpair; 2]> {
    validate_fork(f, g)?;
    let d = f.degree;
    let lam = (d as f64 / g.d).sqrt();

    let mut support = Vec::with_capacity(2 * d + 2);
    support.push(f.hubs.0);
    support.extend_from_slice(&f.spokes.0);
    support.push(f.hubs.1);
    support.extend_from_slice(&f.spokes.1);

    let build = |sign: f64| -> ForkEigenpair {
        let mut w = Vec::with_capacity(2 * d + 2);
        if d == 0 {
            let s = 0.5f64.sqrt();
            w.push(s);
            w.push(-s);
        } else {
            let scale = 1.0 / (2.0 * (d as f64).sqrt());
            let hub = sign * (d as f64).sqrt() * scale;
            w.push(hub);
            w.extend(std::iter::repeat(scale).take(d));
            w.push(-hub);
            w.extend(std::iter::repeat(-scale).take(d));
        }
        ForkEigenpair { eigenvalue: sign * lam, support: support.clone(), weights: w }
    };
    Ok([build(1.0), build(-1.0)])
}

/// ||(A/sqrt(d)) w - lambda w|| over the rows where either term can be
/// nonzero (the support and all its neighbors).
pub fn eigenpair_residual(pair: &ForkEigenpair, g: &GraphSample) -> f64 {
    let weight: HashMap<u32, f64> =
        pair.support.iter().copied().zip(pair.weights.iter().copied()).collect();
    let mut rows: Vec<u32> = pair.support.clone();
    for &v in &pair.support {
        rows.extend_from_slice(g.neighbors(v));
    }
    rows.sort_unstable();
    rows.dedup();
    let inv_sqrt_d = 1.0 / g.d.sqrt();
    let mut sq = 0.0;
    for &v in &rows {
        let aw: f64 = g.neighbors(v).iter().map(|y| weight.get(y).copied().unwrap_or(0.0)).sum();
        let r = aw * inv_sqrt_d - pair.eigenvalue * weight.get(&v).copied().unwrap_or(0.0);
        sq += r * r;
    }
    sq.sqrt()
}

/// Fork counts keyed by degree D.
pub fn census_by_degree(forks: &[TuningFork]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for f in forks {
        *out.entry(f.degree).or_insert(0usize) += 1;
    }
    out
}

/// Expected number of degree-D forks: (N d^2 e^{-2d} / (2 D!^2)) (d e^{-d+1})^{2D},
/// evaluated in log space so large d or D cannot overflow.
pub fn expected_fork_count(n: usize, d: f64, big_d: usize) -> Result<f64> {
    if n == 0 || !(d > 0.0) {
        return Err(par_err(format!("expected fork count needs n >= 1, d > 0, got {n}, {d}")));
    }
    let ln_fact: f64 = (2..=big_d).map(|k| (k as f64).ln()).sum();
    let ln = (n as f64).ln() + 2.0 * d.ln() - 2.0 * d - std::f64::consts::LN_2 - 2.0 * ln_fact
        + 2.0 * big_d as f64 * (d.ln() - d + 1.0);
    Ok(ln.exp())
}

/// Threshold degree log N / (2d) - 1; below 0 no forks are expected at all.
pub fn fork_degree_threshold(n: usize, d: f64) -> f64 {
    (n as f64).ln() / (2.0 * d) - 1.0
}

/// Quadratic scan used only to cross-check `find_forks`: try every pair of
/// neighbors of every base directly.
pub fn brute_force_forks(g: &GraphSample, census: &ComponentCensus) -> Result<Vec<(u32, u32, u32, usize)>> {
    let id = comp_ids(census, g.n)?;
    let is_hub = |h: u32| -> Option<usize> {
        let nb = g.neighbors(h);
        let mut non_leaf = 0;
        let mut leaves = 0;
        for &y in nb {
            if g.degree(y) == 1 {
                leaves += 1;
            } else {
                non_leaf += 1;
            }
        }
        (non_leaf == 1).then_some(leaves)
    };
    let mut out = Vec::new();
    for b in 0..g.n as u32 {
        if id[b as usize] != census.giant_index {
            continue;
        }
        let nb = g.neighbors(b);
        for i in 0..nb.len() {
            let Some(d1) = is_hub(nb[i]) else { continue };
            for j in i + 1..nb.len() {
                let Some(d2) = is_hub(nb[j]) else { continue };
                if d1 == d2 {
                    out.push((b, nb[i].min(nb[j]), nb[i].max(nb[j]), d1));
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}
