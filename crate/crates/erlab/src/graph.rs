//! Erdos-Renyi samples G(n, d/n), the sparse-Wigner variant, degree data,
//! BFS geometry, and connected-component structure.

use crate::rng::Stream;
use crate::{par_err, Result};
use std::io::{BufRead, Write};

/// One Erdos-Renyi draw. Adjacency is a symmetric 0/1 matrix with zero
/// diagonal, stored in compressed row form with sorted neighbor lists.
#[derive(Clone, Debug)]
pub struct GraphSample {
    pub n: usize,
    pub d: f64,
    pub seed: u64,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    pub edge_count: usize,
}

/// Normalized degrees alpha_x = D_x / d alongside the raw integer degrees.
#[derive(Clone, Debug)]
pub struct DegreeProfile {
    pub alpha: Vec<f64>,
    pub degree: Vec<u32>,
    pub d: f64,
}

/// Which scaling of the sample a `ScaledMatrix` holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    /// A / sqrt(d): entries in {0, 1/sqrt(d)}.
    AdjacencyOverSqrtD,
    /// H = (A - E A)/sqrt(d) with E A = (d/n)(J - I) applied implicitly.
    CenteredH,
    /// Hadamard product of A with Rademacher +-1 signs, over sqrt(d).
    SparseWigner,
}

/// Symmetric scaled matrix in sparse form. `CenteredH` keeps the dense
/// rank-one part implicit: A/sqrt(d) = H + f ee* - (f/n) I with f = sqrt(d)
/// and e the unit vector (1,..,1)/sqrt(n).
#[derive(Clone, Debug)]
pub struct ScaledMatrix {
    pub kind: MatrixKind,
    pub n: usize,
    pub d: f64,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    /// Rank-one coefficient of the ee* part complementing `CenteredH`; 0 otherwise.
    pub f: f64,
}

/// Connected components sorted by size descending (ties by smallest vertex id),
/// with a per-component tree flag. Index 0 is the giant (largest) component.
#[derive(Clone, Debug)]
pub struct ComponentCensus {
    pub components: Vec<Vec<u32>>,
    pub giant_index: usize,
    pub is_tree: Vec<bool>,
}

/// Anything that exposes sorted neighbor lists; graphs and pruned graphs both do.
pub trait Adjacency {
    fn vertex_count(&self) -> usize;
    fn neighbors(&self, x: u32) -> &[u32];
    fn degree(&self, x: u32) -> usize {
        self.neighbors(x).len()
    }
}

impl Adjacency for GraphSample {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn neighbors(&self, x: u32) -> &[u32] {
        &self.cols[self.offsets[x as usize]..self.offsets[x as usize + 1]]
    }
}

impl GraphSample {
    /// Build from an explicit undirected edge list (u < v, no duplicates).
    pub fn from_edges(n: usize, d: f64, seed: u64, edges: &[(u32, u32)]) -> Result<GraphSample> {
        let mut es: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v || (u as usize) >= n || (v as usize) >= n {
                return Err(par_err(format!("bad edge ({u},{v}) for n={n}")));
            }
            es.push((u.min(v), u.max(v)));
        }
        es.sort_unstable();
        es.dedup();
        Ok(Self::from_sorted_edges(n, d, seed, &es))
    }

    fn from_sorted_edges(n: usize, d: f64, seed: u64, es: &[(u32, u32)]) -> GraphSample {
        let mut deg = vec![0usize; n];
        for &(u, v) in es {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for x in 0..n {
            offsets[x + 1] = offsets[x] + deg[x];
        }
        let mut cursor = offsets.clone();
        let mut cols = vec![0u32; 2 * es.len()];
        // scanning u-ascending fills every row ascending: smaller ids arrive
        // as column hits before the row's own (larger) neighbors
        for &(u, v) in es {
            cols[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            cols[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        GraphSample {
            n,
            d,
            seed,
            offsets,
            cols,
            edge_count: es.len(),
        }
    }

    /// Iterate undirected edges (u, v) with u < v in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n as u32).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    /// Adjacency test via binary search in the sorted neighbor list.
    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Serialize as edge-list text: header "# n=<N> d=<d> seed=<seed>", then
    /// one "u v" line per edge.
    pub fn write_edgelist<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# n={} d={} seed={}", self.n, self.d, self.seed)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    /// Parse the edge-list text format written by `write_edgelist`.
    pub fn read_edgelist<R: BufRead>(r: R) -> Result<GraphSample> {
        let mut header: Option<(usize, f64, u64)> = None;
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                let mut n = None;
                let mut d = None;
                let mut seed = None;
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("n=") {
                        n = v.parse::<usize>().ok();
                    } else if let Some(v) = tok.strip_prefix("d=") {
                        d = v.parse::<f64>().ok();
                    } else if let Some(v) = tok.strip_prefix("seed=") {
                        seed = v.parse::<u64>().ok();
                    }
                }
                match (n, d, seed) {
                    (Some(n), Some(d), Some(s)) => header = Some((n, d, s)),
                    _ => return Err(par_err(format!("bad edge-list header: {t}"))),
                }
            } else {
                let mut it = t.split_whitespace();
                let u = it.next().and_then(|s| s.parse::<u32>().ok());
                let v = it.next().and_then(|s| s.parse::<u32>().ok());
                match (u, v) {
                    (Some(u), Some(v)) => edges.push((u, v)),
                    _ => return Err(par_err(format!("bad edge line: {t}"))),
                }
            }
        }
        let (n, d, seed) = header.ok_or_else(|| par_err("edge-list missing header"))?;
        GraphSample::from_edges(n, d, seed, &edges)
    }
}

/// Draw G(n, p) with p = d/n. Each unordered pair is present independently
/// with probability p; the draw is a deterministic function of (n, d, seed).
///
/// Rows are sampled with exact geometric gap skipping, so the cost is
/// O(n + edges) rather than O(n^2).
pub fn generate_er(n: usize, d: f64, seed: u64) -> Result<GraphSample> {
    if !(0.0..=n as f64).contains(&d) || !d.is_finite() {
        return Err(par_err(format!("expected degree d={d} outside [0, n={n}]")));
    }
    let p = if n == 0 { 0.0 } else { d / n as f64 };
    let mut es: Vec<(u32, u32)> = Vec::new();
    if p >= 1.0 {
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                es.push((u, v));
            }
        }
    } else if p > 0.0 {
        let log1p = (1.0 - p).ln();
        for u in 0..n as u32 {
            let mut stream = Stream::new(seed, u as u64);
            let mut v = u as i64;
            loop {
                let gap = 1 + ((stream.next_unit().ln() / log1p).floor() as i64);
                v += gap.max(1);
                if v >= n as i64 {
                    break;
                }
                es.push((u, v as u32));
            }
        }
    }
    Ok(GraphSample::from_sorted_edges(n, d, seed, &es))
}

/// Exact normalized degrees alpha_x = D_x / d.
pub fn normalized_degrees(g: &GraphSample) -> DegreeProfile {
    let degree: Vec<u32> = (0..g.n as u32).map(|x| g.degree(x) as u32).collect();
    let alpha = degree.iter().map(|&dx| dx as f64 / g.d).collect();
    DegreeProfile {
        alpha,
        degree,
        d: g.d,
    }
}

/// Scale the sample into one of the three matrix kinds. `wigner_seed` selects
/// the Rademacher signs for `SparseWigner` (defaults to the graph seed).
pub fn build_scaled_matrix(
    g: &GraphSample,
    kind: MatrixKind,
    wigner_seed: Option<u64>,
) -> ScaledMatrix {
    let s = 1.0 / g.d.sqrt();
    let mut vals = vec![s; g.cols.len()];
    let mut f = 0.0;
    match kind {
        MatrixKind::AdjacencyOverSqrtD => {}
        MatrixKind::CenteredH => f = g.d.sqrt(),
        MatrixKind::SparseWigner => {
            // one sign per undirected edge, drawn in edge order
            let mut stream = Stream::new(wigner_seed.unwrap_or(g.seed), 0x5157);
            let mut sign = std::collections::HashMap::new();
            for (u, v) in g.edges() {
                sign.insert((u, v), stream.next_sign());
            }
            for x in 0..g.n as u32 {
                for (k, &y) in g.neighbors(x).iter().enumerate() {
                    let key = (x.min(y), x.max(y));
                    vals[g.offsets[x as usize] + k] = s * sign[&key];
                }
            }
        }
    }
    ScaledMatrix {
        kind,
        n: g.n,
        d: g.d,
        offsets: g.offsets.clone(),
        cols: g.cols.clone(),
        vals,
        f,
    }
}

impl ScaledMatrix {
    /// Sparse representation of row x: sorted column ids and matching values.
    pub fn row(&self, x: u32) -> (&[u32], &[f64]) {
        let r = self.offsets[x as usize]..self.offsets[x as usize + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// y = M x, honoring the implicit centering for `CenteredH`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i as u32);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[i] = acc;
        }
        if self.kind == MatrixKind::CenteredH {
            // subtract (p/sqrt(d)) (J - I) x
            let p_over = self.d / self.n as f64 / self.d.sqrt();
            let s: f64 = x.iter().sum();
            for i in 0..self.n {
                y[i] -= p_over * (s - x[i]);
            }
        }
    }

    /// Dense row-major materialization (mind the memory at large n).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        if self.kind == MatrixKind::CenteredH {
            let p_over = self.d / n as f64 / self.d.sqrt();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        m[i * n + j] = -p_over;
                    }
                }
            }
        }
        for i in 0..n {
            let (cols, vals) = self.row(i as u32);
            for (c, v) in cols.iter().zip(vals) {
                m[i * n + *c as usize] += *v;
            }
        }
        m
    }

    /// Entry (i, j) including the implicit centering part.
    pub fn entry(&self, i: u32, j: u32) -> f64 {
        let (cols, vals) = self.row(i);
        let sparse = match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        };
        if self.kind == MatrixKind::CenteredH && i != j {
            sparse - self.d / self.n as f64 / self.d.sqrt()
        } else {
            sparse
        }
    }
}

/// BFS spheres S_0(x), .., S_r(x) around x: disjoint, each sorted ascending,
/// union is the closed ball B_r(x).
pub fn ball_and_spheres<G: Adjacency>(g: &G, x: u32, r: usize) -> Vec<Vec<u32>> {
    let n = g.vertex_count();
    assert!((x as usize) < n, "vertex {x} out of range");
    let mut seen = vec![false; n];
    seen[x as usize] = true;
    let mut spheres = Vec::with_capacity(r + 1);
    spheres.push(vec![x]);
    for i in 0..r {
        let mut next = Vec::new();
        for &u in &spheres[i] {
            for &v in g.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        spheres.push(next);
    }
    spheres
}

/// Connected components by BFS, sorted by size descending then smallest id.
pub fn components_census(g: &GraphSample) -> ComponentCensus {
    let n = g.n;
    let mut label = vec![usize::MAX; n];
    let mut comps: Vec<Vec<u32>> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s as u32];
        label[s] = id;
        queue.push_back(s as u32);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if label[v as usize] == usize::MAX {
                    label[v as usize] = id;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let is_tree = comps
        .iter()
        .map(|c| {
            let internal: usize = c.iter().map(|&v| g.degree(v)).sum();
            internal / 2 == c.len() - 1
        })
        .collect();
    ComponentCensus {
        components: comps,
        giant_index: 0,
        is_tree,
    }
}

/// Max over non-giant components of ||A restricted to the component|| / sqrt(d).
/// Returns 0 when the giant is the only component.
pub fn small_component_norm(g: &GraphSample, census: &ComponentCensus) -> f64 {
    let mut best = 0.0f64;
    for (ci, comp) in census.components.iter().enumerate() {
        if ci == census.giant_index || comp.len() < 2 {
            continue;
        }
        let k = comp.len();
        let mut local = vec![0.0; k * k];
        for (a, &u) in comp.iter().enumerate() {
            for &v in g.neighbors(u) {
                if let Ok(b) = comp.binary_search(&v) {
                    local[a * k + b] = 1.0;
                }
            }
        }
        let norm = crate::spectra::dense_sym_norm(&local, k);
        best = best.max(norm / g.d.sqrt());
    }
    best
}
