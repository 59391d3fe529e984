//! Pruning: cut hub-incident edges until every ball around a high-degree
//! vertex induces a tree sitting at its original BFS levels, and distinct
//! hubs are mutually unreachable within 4 r_star steps.

use crate::graph::{Adjacency, DegreeProfile, GraphSample};
use crate::{par_err, Result};
use std::collections::HashSet;
use std::io::Write;

/// A subgraph of `base` obtained by edge removal only. Kept adjacency in
/// compressed row form; `removed_edges` sorted with u < v.
pub struct PrunedGraph<'a> {
    pub base: &'a GraphSample,
    pub tau: f64,
    pub r_star: usize,
    /// hubs {x : alpha_x >= tau}, ascending
    pub v_tau: Vec<u32>,
    pub removed_edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl Adjacency for PrunedGraph<'_> {
    fn vertex_count(&self) -> usize {
        self.base.n
    }
    fn neighbors(&self, x: u32) -> &[u32] {
        &self.cols[self.offsets[x as usize]..self.offsets[x as usize + 1]]
    }
}

impl PrunedGraph<'_> {
    pub fn edge_kept(&self, u: u32, v: u32) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Kept undirected edges (u < v), ascending.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for u in 0..self.base.n as u32 {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Removed-edge list in the shared edge-list text format.
    pub fn write_removed(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# pruned tau={} r_star={}", self.tau, self.r_star)?;
        for (u, v) in &self.removed_edges {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Hubs {x : alpha_x >= tau}, ascending.
pub fn select_v_tau(profile: &DegreeProfile, tau: f64) -> Vec<u32> {
    profile
        .alpha
        .iter()
        .enumerate()
        .filter(|(_, a)| **a >= tau)
        .map(|(i, _)| i as u32)
        .collect()
}

const FAR: u16 = u16::MAX;

/// Mutable working copy of the graph plus BFS scratch space.
struct Workspace {
    adj: Vec<Vec<u32>>,
    removed: Vec<(u32, u32)>,
    dist: Vec<u16>,
    touched: Vec<u32>,
    dist2: Vec<u16>,
    touched2: Vec<u32>,
}

impl Workspace {
    fn new(g: &GraphSample) -> Workspace {
        let adj = (0..g.n as u32).map(|x| g.neighbors(x).to_vec()).collect();
        Workspace {
            adj,
            removed: Vec::new(),
            dist: vec![FAR; g.n],
            touched: Vec::new(),
            dist2: vec![FAR; g.n],
            touched2: Vec::new(),
        }
    }

    fn cut(&mut self, u: u32, v: u32) -> bool {
        let pos = match self.adj[u as usize].binary_search(&v) {
            Ok(p) => p,
            Err(_) => return false,
        };
        self.adj[u as usize].remove(pos);
        let pos = self.adj[v as usize].binary_search(&u).unwrap();
        self.adj[v as usize].remove(pos);
        self.removed.push((u.min(v), u.max(v)));
        true
    }

    /// BFS to depth `maxd` in the working graph; distances in `dist`,
    /// visited vertices (in BFS order) returned. Scratch slot 1 or 2.
    fn bfs(&mut self, src: u32, maxd: u16, second: bool) -> Vec<u32> {
        let Workspace {
            adj,
            dist,
            touched,
            dist2,
            touched2,
            ..
        } = self;
        let (dist, touched) = if second { (dist2, touched2) } else { (dist, touched) };
        for &t in touched.iter() {
            dist[t as usize] = FAR;
        }
        touched.clear();
        let mut order = vec![src];
        dist[src as usize] = 0;
        touched.push(src);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let du = dist[u as usize];
            if du == maxd {
                continue;
            }
            for &v in &adj[u as usize] {
                if dist[v as usize] == FAR {
                    dist[v as usize] = du + 1;
                    touched.push(v);
                    order.push(v);
                }
            }
        }
        order
    }
}

/// Base-graph BFS distances around each hub, frozen before any cutting.
fn base_distances(g: &GraphSample, hubs: &[u32], maxd: u16) -> Vec<Vec<(u32, u16)>> {
    let mut dist = vec![FAR; g.n];
    let mut out = Vec::with_capacity(hubs.len());
    for &x in hubs {
        let mut order = vec![x];
        dist[x as usize] = 0;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let du = dist[u as usize];
            if du == maxd {
                continue;
            }
            for &v in g.neighbors(u) {
                if dist[v as usize] == FAR {
                    dist[v as usize] = du + 1;
                    order.push(v);
                }
            }
        }
        let mut pairs: Vec<(u32, u16)> = order.iter().map(|&v| (v, dist[v as usize])).collect();
        for &v in &order {
            dist[v as usize] = FAR;
        }
        pairs.sort_unstable();
        out.push(pairs);
    }
    out
}

/// Make the ball around hub `x` a tree sitting at its base levels. Offenses
/// are repaired by cutting the x-incident edge of the offending branch;
/// one cut per scan, iterated to a fixed point.
fn phase1_fix(ws: &mut Workspace, x: u32, two_r: u16, base_ball: &[(u32, u16)]) -> usize {
    let mut cuts = 0;
    'outer: loop {
        let order = ws.bfs(x, two_r, false);
        // parents and first-sphere branch roots along the BFS tree
        let n = ws.dist.len();
        let mut parent = vec![u32::MAX; n];
        let mut branch = vec![u32::MAX; n];
        for &u in &order {
            let du = ws.dist[u as usize];
            for &v in &ws.adj[u as usize] {
                if ws.dist[v as usize] == du + 1 && parent[v as usize] == u32::MAX {
                    parent[v as usize] = u;
                    branch[v as usize] = if u == x { v } else { branch[u as usize] };
                }
            }
        }
        let mut ball = order.clone();
        ball.sort_unstable();
        // offense 1: a ball vertex sitting deeper than its base level
        for &z in &ball {
            if z == x {
                continue;
            }
            let base = match base_ball.binary_search_by_key(&z, |p| p.0) {
                Ok(k) => base_ball[k].1,
                Err(_) => FAR,
            };
            if base < ws.dist[z as usize] {
                let b = branch[z as usize];
                ws.cut(x, b);
                cuts += 1;
                continue 'outer;
            }
        }
        // offense 2: a non-tree edge inside the ball
        let mut target: Option<u32> = None;
        'find: for &u in &ball {
            if u == x {
                continue;
            }
            for &v in &ws.adj[u as usize] {
                if v <= u || v == x || ws.dist[v as usize] == FAR {
                    continue;
                }
                if parent[v as usize] == u || parent[u as usize] == v {
                    continue;
                }
                let (bu, bv) = (branch[u as usize], branch[v as usize]);
                // cut the higher-id branch; same branch: cut it outright
                target = Some(if bu == bv { bu } else { bu.max(bv) });
                break 'find;
            }
        }
        if let Some(t) = target {
            ws.cut(x, t);
            cuts += 1;
            continue 'outer;
        }
        return cuts;
    }
}

/// Separate hubs: while some other hub sits within 4 r_star of `x`, cut all
/// geodesic edges incident to either endpoint. Distances only grow under
/// cutting, so separation, once reached, is permanent.
fn phase2_fix(ws: &mut Workspace, x: u32, hubs: &HashSet<u32>, four_r: u16) -> usize {
    let mut cuts = 0;
    loop {
        let order = ws.bfs(x, four_r, false);
        let mut nearest: Option<u32> = None;
        for &v in order.iter() {
            if v != x && hubs.contains(&v) && nearest.map_or(true, |b| v < b) {
                nearest = Some(v);
            }
        }
        let Some(y) = nearest else {
            return cuts;
        };
        let ell = ws.dist[y as usize];
        ws.bfs(y, ell, true);
        let first: Vec<u32> = ws.adj[x as usize]
            .iter()
            .copied()
            .filter(|&a| ws.dist2[a as usize] == ell - 1)
            .collect();
        for a in first {
            if ws.cut(x, a) {
                cuts += 1;
            }
        }
        let last: Vec<u32> = ws.adj[y as usize]
            .iter()
            .copied()
            .filter(|&b| ws.dist[b as usize] == ell - 1)
            .collect();
        for b in last {
            if ws.cut(y, b) {
                cuts += 1;
            }
        }
    }
}

/// Two-phase deterministic pruning; hubs in ascending order, iterated to a
/// joint fixed point.
pub fn prune<'a>(g: &'a GraphSample, tau: f64, r_star: usize) -> Result<PrunedGraph<'a>> {
    if tau <= 1.0 {
        return Err(par_err(format!("tau must exceed 1, got {tau}")));
    }
    if r_star < 1 {
        return Err(par_err("r_star must be at least 1".to_string()));
    }
    let profile = crate::graph::normalized_degrees(g);
    let v_tau = select_v_tau(&profile, tau);
    let hub_set: HashSet<u32> = v_tau.iter().copied().collect();
    let two_r = (2 * r_star).min(usize::from(FAR - 1)) as u16;
    let four_r = (4 * r_star).min(usize::from(FAR - 1)) as u16;
    let base_balls = base_distances(g, &v_tau, two_r);
    let mut ws = Workspace::new(g);
    loop {
        let mut cuts = 0;
        for (k, &x) in v_tau.iter().enumerate() {
            cuts += phase1_fix(&mut ws, x, two_r, &base_balls[k]);
        }
        for &x in &v_tau {
            cuts += phase2_fix(&mut ws, x, &hub_set, four_r);
        }
        if cuts == 0 {
            break;
        }
    }
    ws.removed.sort_unstable();
    ws.removed.dedup();
    from_removed(g, tau, r_star, &ws.removed)
}

/// Assemble a pruned graph from an explicit removed-edge list (also the
/// entry point for verifying externally supplied prunings).
pub fn from_removed<'a>(
    g: &'a GraphSample,
    tau: f64,
    r_star: usize,
    removed: &[(u32, u32)],
) -> Result<PrunedGraph<'a>> {
    let mut rem: Vec<(u32, u32)> = removed
        .iter()
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .collect();
    rem.sort_unstable();
    rem.dedup();
    let rem_set: HashSet<(u32, u32)> = rem.iter().copied().collect();
    for &(u, v) in &rem {
        if !g.has_edge(u, v) {
            return Err(par_err(format!("removed edge ({u}, {v}) not in base graph")));
        }
    }
    let mut offsets = Vec::with_capacity(g.n + 1);
    let mut cols = Vec::new();
    offsets.push(0);
    for u in 0..g.n as u32 {
        for &v in g.neighbors(u) {
            if !rem_set.contains(&(u.min(v), u.max(v))) {
                cols.push(v);
            }
        }
        offsets.push(cols.len());
    }
    let profile = crate::graph::normalized_degrees(g);
    Ok(PrunedGraph {
        base: g,
        tau,
        r_star,
        v_tau: select_v_tau(&profile, tau),
        removed_edges: rem,
        offsets,
        cols,
    })
}

/// Exact checks of the four deterministic pruning properties plus the two
/// statistics tracked for reporting.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PropertyReport {
    /// (i) every pruned path between distinct hubs has length > 4 r_star
    pub path_separation: bool,
    /// (ii) each pruned ball of radius 2 r_star induces a tree
    pub balls_are_trees: bool,
    /// (iii) every removed edge touches a hub
    pub cuts_touch_v_tau: bool,
    /// (iv) pruned spheres sit inside base spheres: S^tau_i subset of S_i
    pub sphere_inclusion: bool,
    /// (v) max degree induced by the removed edge set
    pub max_removed_degree: usize,
    /// (vi) max over hubs and 2 <= i <= 2 r_star of |S_i \ S^tau_i| d^{2-i}
    pub sphere_defect_stat: f64,
}

impl PropertyReport {
    pub fn all_deterministic_hold(&self) -> bool {
        self.path_separation
            && self.balls_are_trees
            && self.cuts_touch_v_tau
            && self.sphere_inclusion
    }
}

pub fn verify_pruning(p: &PrunedGraph) -> PropertyReport {
    let g = p.base;
    let hubs: HashSet<u32> = p.v_tau.iter().copied().collect();
    let two_r = 2 * p.r_star;
    let four_r = 4 * p.r_star;

    let mut cuts_touch_v_tau = true;
    let mut removed_deg = vec![0usize; g.n];
    for &(u, v) in &p.removed_edges {
        if !hubs.contains(&u) && !hubs.contains(&v) {
            cuts_touch_v_tau = false;
        }
        removed_deg[u as usize] += 1;
        removed_deg[v as usize] += 1;
    }
    let max_removed_degree = removed_deg.into_iter().max().unwrap_or(0);

    let mut path_separation = true;
    let mut balls_are_trees = true;
    let mut sphere_inclusion = true;
    let mut sphere_defect_stat = 0.0f64;

    let pruned_spheres: Vec<Vec<Vec<u32>>> = p
        .v_tau
        .iter()
        .map(|&x| crate::graph::ball_and_spheres(p, x, four_r))
        .collect();
    for (k, &x) in p.v_tau.iter().enumerate() {
        let spheres_tau = &pruned_spheres[k];
        let spheres_base = crate::graph::ball_and_spheres(g, x, two_r);
        // (i): no other hub within 4 r_star
        for sphere in spheres_tau.iter().skip(1) {
            if sphere.iter().any(|v| hubs.contains(v)) {
                path_separation = false;
            }
        }
        // (iv) and (vi) on levels 1..=2 r_star
        let base_level: std::collections::HashMap<u32, usize> = spheres_base
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&v| (v, i)))
            .collect();
        for (i, sphere) in spheres_tau.iter().enumerate().take(two_r + 1).skip(1) {
            for v in sphere {
                if base_level.get(v) != Some(&i) {
                    sphere_inclusion = false;
                }
            }
            if i >= 2 {
                let tau_set: HashSet<u32> = sphere.iter().copied().collect();
                let defect = spheres_base
                    .get(i)
                    .map_or(0, |s| s.iter().filter(|v| !tau_set.contains(v)).count());
                sphere_defect_stat =
                    sphere_defect_stat.max(defect as f64 * g.d.powi(2 - i as i32));
            }
        }
        // (ii): edge count of the induced ball
        let ball: HashSet<u32> = spheres_tau
            .iter()
            .take(two_r + 1)
            .flatten()
            .copied()
            .collect();
        let mut edges = 0usize;
        for &u in &ball {
            edges += p.neighbors(u).iter().filter(|v| **v > u && ball.contains(v)).count();
        }
        if edges + 1 != ball.len() {
            balls_are_trees = false;
        }
    }
    PropertyReport {
        path_separation,
        balls_are_trees,
        cuts_touch_v_tau,
        sphere_inclusion,
        max_removed_degree,
        sphere_defect_stat,
    }
}
