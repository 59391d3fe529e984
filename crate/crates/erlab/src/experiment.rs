//! Experiment orchestration: JSON configs, seed fan-out, kind-specific
//! pipelines over the library modules, and deterministic CSV/JSONL artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::graph::{
    build_scaled_matrix, components_census, generate_er, normalized_degrees, small_component_norm,
    MatrixKind,
};
use crate::phase::PhaseParams;
use crate::{forks, greens, localize, measures, phase, profile, prune, spectra};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Scatter,
    Rigidity,
    Localize,
    PruneVerify,
    LocalLaw,
    Forks,
    Measures,
    Phase,
    Instability,
    #[serde(rename = "blocknorms")]
    BlockNorms,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Scatter => "scatter",
            ExperimentKind::Rigidity => "rigidity",
            ExperimentKind::Localize => "localize",
            ExperimentKind::PruneVerify => "prune-verify",
            ExperimentKind::LocalLaw => "local-law",
            ExperimentKind::Forks => "forks",
            ExperimentKind::Measures => "measures",
            ExperimentKind::Phase => "phase",
            ExperimentKind::Instability => "instability",
            ExperimentKind::BlockNorms => "blocknorms",
        }
    }
}

/// One experiment description. Exactly one of `b` and `d` must be given;
/// everything else has defaults filled by validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    pub seeds: Vec<u64>,
    /// Pruning threshold on alpha.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Resonance window half-width; per-eigenvalue default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Constant c in the profile radius floor(c sqrt(log n)).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_star_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Extra spectral parameters 1 + i eta appended to the local-law sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_grid: Option<Vec<f64>>,
    /// Spectral parameters as (re, im) pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_grid: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

fn cfg_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), msg: msg.into() }
}

impl ExperimentConfig {
    /// The expected degree, from `d` directly or from `b` as b log n.
    pub fn degree(&self) -> f64 {
        self.d.unwrap_or_else(|| self.b.unwrap_or(0.0) * (self.n as f64).ln())
    }

    /// Check invariants and fill defaults, returning the resolved config.
    pub fn validated(&self) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        match (c.b, c.d) {
            (Some(_), Some(_)) => {
                return Err(cfg_err("b,d", "exactly one of b and d may be set, got both"))
            }
            (None, None) => return Err(cfg_err("b,d", "exactly one of b and d must be set")),
            _ => {}
        }
        if let Some(b) = c.b {
            if !(b > 0.0) || !b.is_finite() {
                return Err(cfg_err("b", format!("need b > 0, got {b}")));
            }
        }
        if let Some(d) = c.d {
            if !(d > 0.0) || !d.is_finite() {
                return Err(cfg_err("d", format!("need d > 0, got {d}")));
            }
        }
        if c.n < 3 {
            return Err(cfg_err("n", format!("need n >= 3, got {}", c.n)));
        }
        if c.seeds.is_empty() {
            return Err(cfg_err("seeds", "seed list must be nonempty"));
        }
        if let Some(t) = c.tau {
            if !(t > 0.0) || !t.is_finite() {
                return Err(cfg_err("tau", format!("need tau > 0, got {t}")));
            }
        }
        if let Some(dl) = c.delta {
            if !(dl > 0.0) || !dl.is_finite() {
                return Err(cfg_err("delta", format!("need delta > 0, got {dl}")));
            }
        }
        if let Some(cc) = c.r_star_c {
            if !(cc > 0.0) || !cc.is_finite() {
                return Err(cfg_err("r_star_c", format!("need r_star_c > 0, got {cc}")));
            }
        }
        if let Some(k) = c.kappa {
            if !(k > 0.0 && k <= 0.5) {
                return Err(cfg_err("kappa", format!("need kappa in (0, 1/2], got {k}")));
            }
        }
        if let Some(es) = &c.eta_grid {
            if es.is_empty() {
                return Err(cfg_err("eta_grid", "eta grid must be nonempty when given"));
            }
            if let Some(bad) = es.iter().find(|e| !(**e > 0.0)) {
                return Err(cfg_err("eta_grid", format!("eta values must be positive, got {bad}")));
            }
        }
        if let Some(zs) = &c.z_grid {
            if zs.is_empty() {
                return Err(cfg_err("z_grid", "z grid must be nonempty when given"));
            }
            if let Some(bad) = zs.iter().find(|(_, im)| !(*im > 0.0)) {
                return Err(cfg_err("z_grid", format!("need Im z > 0, got {bad:?}")));
            }
        }
        c.tau.get_or_insert(2.0);
        c.kappa.get_or_insert(greens::KAPPA_DEFAULT);
        c.r_star_c.get_or_insert(phase::R_STAR_C_DEFAULT);
        c.out_dir.get_or_insert_with(|| "runs".to_string());
        if c.kind == ExperimentKind::LocalLaw && c.z_grid.is_none() {
            c.z_grid = Some(vec![(1.0, 0.05)]);
        }
        Ok(c)
    }
}

/// Parse from inline JSON (leading `{`) or a file path, then validate.
pub fn parse_config(spec: &str) -> Result<ExperimentConfig> {
    let trimmed = spec.trim();
    let (text, origin) = if trimmed.starts_with('{') {
        (trimmed.to_string(), "<inline>".to_string())
    } else {
        let body = std::fs::read_to_string(trimmed)
            .map_err(|e| cfg_err(trimmed, format!("cannot read config: {e}")))?;
        (body, trimmed.to_string())
    };
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| cfg_err(&origin, e.to_string()))?;
    cfg.validated()
}

/// One CSV payload.
#[derive(Clone, Debug)]
pub struct Table {
    /// Empty name means the record's main table.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Outcome of one (config, seed) pipeline run. The JSONL line carries the
/// scalar summaries; the tables are emitted as CSV only.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub run_id: String,
    pub kind: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
    pub wall_ms: u64,
    pub version: String,
    #[serde(skip_serializing)]
    pub tables: Vec<Table>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable id: FNV-1a over the canonical (sorted-key) config JSON plus seed.
/// The output directory is excluded so identity does not depend on where the
/// artifacts land.
pub fn run_id(cfg: &ExperimentConfig, seed: u64) -> Result<String> {
    let mut c = cfg.clone();
    c.out_dir = None;
    let value = serde_json::to_value(&c)
        .map_err(|e| cfg_err("config", format!("cannot canonicalize: {e}")))?;
    Ok(format!("{:016x}", fnv1a(format!("{value}:{seed}").as_bytes())))
}

fn f(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x}")
    }
}

fn with_run_context(e: Error, kind: &str, seed: u64) -> Error {
    let tag = format!("[{kind} seed {seed}] ");
    match e {
        Error::Parameter(m) => Error::Parameter(tag + &m),
        Error::Domain(m) => Error::Domain(tag + &m),
        Error::Contract(m) => Error::Contract(tag + &m),
        Error::Numeric(m) => Error::Numeric(tag + &m),
        Error::Config { path, msg } => Error::Config { path, msg: tag + &msg },
        Error::Io(e) => Error::Io(e),
    }
}

/// Run every seed sequentially.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_experiment_threaded(cfg, 1)
}

/// Fan seeds out across up to `threads` workers; records merge in seed order.
pub fn run_experiment_threaded(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<RunRecord>> {
    let cfg = cfg.validated()?;
    let seeds = cfg.seeds.clone();
    let workers = threads.max(1).min(seeds.len());
    if workers <= 1 {
        return seeds.iter().map(|&s| run_one(&cfg, s)).collect();
    }
    let mut indexed: Vec<(usize, Result<RunRecord>)> = std::thread::scope(|scope| {
        let cfg_ref = &cfg;
        let seeds_ref = &seeds;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = w;
                    while i < seeds_ref.len() {
                        out.push((i, run_one(cfg_ref, seeds_ref[i])));
                        i += workers;
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

fn run_one(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let started = Instant::now();
    let kind = cfg.kind.as_str();
    let (tables, summary) = match cfg.kind {
        ExperimentKind::Scatter => pipe_scatter(cfg, seed),
        ExperimentKind::Rigidity => pipe_rigidity(cfg, seed),
        ExperimentKind::Localize => pipe_localize(cfg, seed),
        ExperimentKind::PruneVerify => pipe_prune_verify(cfg, seed),
        ExperimentKind::LocalLaw => pipe_local_law(cfg, seed),
        ExperimentKind::Forks => pipe_forks(cfg, seed),
        ExperimentKind::Measures => pipe_measures(cfg),
        ExperimentKind::Phase => pipe_phase(cfg),
        ExperimentKind::Instability => pipe_instability(cfg),
        ExperimentKind::BlockNorms => pipe_blocknorms(cfg, seed),
    }
    .map_err(|e| with_run_context(e, kind, seed))?;
    Ok(RunRecord {
        run_id: run_id(cfg, seed)?,
        kind: kind.to_string(),
        seed,
        config: serde_json::to_value(cfg)
            .map_err(|e| cfg_err("config", format!("cannot echo: {e}")))?,
        summary,
        wall_ms: started.elapsed().as_millis() as u64,
        version: env!("CARGO_PKG_VERSION").to_string(),
        tables,
    })
}

type PipeOut = Result<(Vec<Table>, serde_json::Value)>;

fn pipe_scatter(cfg: &ExperimentConfig, seed: u64) -> PipeOut {
    let d = cfg.degree();
    let g = generate_er(cfg.n, d, seed)?;
    let m = build_scaled_matrix(&g, MatrixKind::AdjacencyOverSqrtD, None);
    let mut t = Table::new("", &["eigenvalue", "inf_norm"]);
    let mut top = f64::NEG_INFINITY;
    let mut max_inf = 0.0f64;
    spectra::visit_eigenpairs_scaled(&m, |_, lam, v| {
        let inf = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        top = top.max(lam);
        max_inf = max_inf.max(inf);
        t.push(vec![f(lam), f(inf)]);
    })?;
    let summary = serde_json::json!({
        "rows": t.rows.len(),
        "top_eigenvalue": top,
        "max_inf_norm": max_inf,
    });
    Ok((vec![t], summary))
}

fn pipe_rigidity(cfg: &ExperimentConfig, seed: u64) -> PipeOut {
    let d = cfg.degree();
    let params = PhaseParams::from_degree(cfg.n, d)?;
    let g = generate_er(cfg.n, d, seed)?;
    let profile = normalized_degrees(&g);
    let m = build_scaled_matrix(&g, MatrixKind::AdjacencyOverSqrtD, None);
    let values = spectra::eig_sym_scaled_values(&m)?;
    let eigs = spectra::EigenDecomposition {
        n: cfg.n,
        values,
        vectors: None,
        method: spectra::EigMethod::Dense,
    };
    let rep = localize::rigidity_pairing(&eigs, &profile, params.xi)?;
    let mut t = Table::new("", &["rank", "eigenvalue", "predicted", "abs_gap"]);
    for p in &rep.pairs {
        t.push(vec![format!("{}", p.rank), f(p.eigenvalue), f(p.predicted), f(p.abs_gap)]);
    }
    let max_gap = rep.pairs.iter().fold(0.0f64, |a, p| a.max(p.abs_gap));
    let summary = serde_json::json!({
        "u_size": rep.u_size,
        "bulk_max": rep.bulk_max,
        "max_abs_gap": max_gap,
        "xi": params.xi,
    });
    Ok((vec![t], summary))
}

fn pipe_localize(cfg: &ExperimentConfig, seed: u64) -> PipeOut {
    let d = cfg.degree();
    let params =
        PhaseParams::from_degree(cfg.n, d)?.with_c(cfg.r_star_c.unwrap_or(phase::R_STAR_C_DEFAULT));
    let g = generate_er(cfg.n, d, seed)?;
    let profile = normalized_degrees(&g);
    let pruned = prune::prune(&g, cfg.tau.unwrap_or(2.0), params.r_star)?;
    let m = build_scaled_matrix(&g, MatrixKind::AdjacencyOverSqrtD, None);
    let threshold = 2.0 + params.xi.sqrt();

    let mut t = Table::new(
        "",
        &["eigenvalue", "gamma", "overlap", "center_mass", "predicted_center_mass"],
    );
    let mut errors: Option<Error> = None;
    spectra::visit_eigenpairs_scaled(&m, |rank, lam, v| {
        if errors.is_some() || rank == 0 || lam.abs() < threshold {
            return;
        }
        let width = cfg.delta.unwrap_or_else(|| localize::default_delta(lam.abs()));
        let resonant = match localize::resonant_set(&profile, lam.abs(), width) {
            Ok(r) => r,
            Err(e) => {
                errors = Some(e);
                return;
            }
        };
        let sigma = if lam >= 0.0 { 1 } else { -1 };
        // profiles exist only for vertices whose spheres are all nonempty
        let profiles: Vec<_> = resonant
            .vertices
            .iter()
            .filter_map(|&x| profile::build_profile(&pruned, x, sigma).ok())
            .collect();
        let rep = localize::overlap_report(v, lam, &resonant, &profiles);
        t.push(vec![
            f(rep.eigenvalue),
            f(rep.gamma),
            f(rep.overlap),
            f(rep.center_mass),
            f(rep.predicted_center_mass),
        ]);
    })?;
    if let Some(e) = errors {
        return Err(e);
    }
    let summary = serde_json::json!({
        "rows": t.rows.len(),
        "lambda_threshold": threshold,
        "r_star": params.r_star,
        "hubs": pruned.v_tau.len(),
    });
    Ok((vec![t], summary))
}

fn pipe_prune_verify(cfg: &ExperimentConfig, seed: u64) -> PipeOut {
    let d = cfg.degree();
    let params =
        PhaseParams::from_degree(cfg.n, d)?.with_c(cfg.r_star_c.unwrap_or(phase::R_STAR_C_DEFAULT));
    let g = generate_er(cfg.n, d, seed)?;
    let tau = cfg.tau.unwrap_or(2.0);
    let pruned = prune::prune(&g, tau, params.r_star)?;
    let rep = prune::verify_pruning(&pruned);
    let mut t = Table::new(
        "",
        &[
            "seed",
            "n",
            "d",
            "tau",
            "r_star",
            "hubs",
            "removed_edges",
            "path_separation",
            "balls_are_trees",
            "cuts_touch_v_tau",
            "sphere_inclusion",
            "max_removed_degree",
            "sphere_defect_stat",
        ],
    );
    t.push(vec![
        format!("{seed}"),
        format!("{}", cfg.n),
        f(d),
        f(tau),
        format!("{}", params.r_star),
        format!("{}", pruned.v_tau.len()),
        format!("{}", pruned.removed_edges.len()),
        format!("{}", rep.path_separation),
        format!("{}", rep.balls_are_trees),
        format!("{}", rep.cuts_touch_v_tau),
        format!("{}", rep.sphere_inclusion),
        format!("{}", rep.max_removed_degree),
        f(rep.sphere_defect_stat),
    ]);
    let summary = serde_json::json!({
        "all_deterministic_hold": rep.all_deterministic_hold(),
        "hubs": pruned.v_tau.len(),
        "removed_edges": pruned.removed_edges.len(),
    });
    Ok((vec![t], summary))
}

fn pipe_local_law(cfg: &ExperimentConfig, seed: u64) -> PipeOut {
    let d = cfg.degree();
    let g = generate_er(cfg.n, d, seed)?;
    let m = build_scaled_matrix(&g, MatrixKind::CenteredH, None);
    let beta = greens::beta_profile(&m);
    let mut zs: Vec<(f64, f64)> = cfg.z_grid.clone().unwrap_or_else(|| vec![(1.0, 0.05)]);
    if let Some(etas) = &cfg.eta_grid {
        zs.extend(etas.iter().map(|&e| (1.0, e)));
    }
    let mut t = Table::new(
        "",
        &["re_z", "im_z", "max_diag_err", "avg_err", "rate_ref", "d", "N", "seed"],
    );
    let mut worst = 0.0f64;
    for (re, im) in zs {
        let gf = greens::green_function(&m, Complex64::new(re, im), false, &[])?;
        let rep = greens::local_law_report(&gf, &beta, d)?;
        worst = worst.max(rep.max_diag_err);
        t.push(vec![
            f(re),
            f(im),
            f(rep.max_diag_err),
            f(rep.avg_err),
            f(rep.rate_ref),
            f(d),
            format!("{}", cfg.n),
            format!("{seed}"),
        ]);
    }
    let summary = serde_json::json!({
        "rows": t.rows.len(),
        "worst_max_diag_err": worst,
    });
    Ok((vec![t], summary))
}

fn pipe_forks(cfg: &ExperimentConfig, seed: u64) -> PipeOut {
    let d = cfg.degree();
    let g = generate_er(cfg.n, d, seed)?;
    let census = components_census(&g);
    let found = forks::find_forks(&g, &census)?;
    let by_degree = forks::census_by_degree(&found);
    let max_d = by_degree.keys().max().copied().unwrap_or(0).max(2);
    let mut t = Table::new("", &["seed", "N", "d", "D", "count", "expected"]);
    for big_d in 0..=max_d {
        let count = by_degree.get(&big_d).copied().unwrap_or(0);
        let expected = forks::expected_fork_count(cfg.n, d, big_d)?;
        t.push(vec![
            format!("{seed}"),
            format!("{}", cfg.n),
            f(d),
            format!("{big_d}"),
            format!("{count}"),
            f(expected),
        ]);
    }
    let mut max_residual = 0.0f64;
    for fork in found.iter().take(8) {
        for pair in forks::fork_eigenpairs(fork, &g)? {
            max_residual = max_residual.max(forks::eigenpair_residual(&pair, &g));
        }
    }
    let summary = serde_json::json!({
        "total_forks": found.len(),
        "max_eigenpair_residual": max_residual,
        "degree_threshold": forks::fork_degree_threshold(cfg.n, d),
    });
    Ok((vec![t], summary))
}

fn pipe_measures(cfg: &ExperimentConfig) -> PipeOut {
    let alphas = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let mut density = Table::new("", &["alpha", "x", "density"]);
    let mut norms = Table::new(
        "norms",
        &["alpha", "total_mass", "atom_mass", "atom_location", "stieltjes_gap"],
    );
    let z0 = Complex64::new(0.3, 0.7);
    let mut max_mass_gap = 0.0f64;
    let mut max_stieltjes_gap = 0.0f64;
    for &a in &alphas {
        let mu = measures::mu_alpha(a)?;
        for i in 0..=320 {
            let x = -4.0 + i as f64 * 8.0 / 320.0;
            density.push(vec![f(a), f(x), f(mu.density(x))]);
        }
        let mass = mu.total_mass()?;
        let direct = measures::m_alpha(a, z0)?;
        let quad = measures::stieltjes_quadrature(&mu, z0)?;
        let gap = (direct - quad).norm();
        max_mass_gap = max_mass_gap.max((mass - 1.0).abs());
        max_stieltjes_gap = max_stieltjes_gap.max(gap);
        norms.push(vec![f(a), f(mass), f(mu.atom_mass), f(mu.atom_location), f(gap)]);
    }
    let summary = serde_json::json!({
        "alphas": alphas.len(),
        "kappa": cfg.kappa,
        "max_mass_gap": max_mass_gap,
        "max_stieltjes_gap": max_stieltjes_gap,
    });
    Ok((vec![density, norms], summary))
}

fn pipe_phase(_cfg: &ExperimentConfig) -> PipeOut {
    let bstar = phase::b_star();
    let mut surface = Table::new("", &["b", "lambda", "rho"]);
    let mut exponents = Table::new("exponents", &["b", "b_star", "alpha_max", "lambda_max"]);
    for bi in 3..=30 {
        let b = bi as f64 / 10.0;
        for li in 0..=40 {
            let lam = 2.0 + 0.05 * li as f64;
            surface.push(vec![f(b), f(lam), f(phase::rho(b, lam))]);
        }
        let am = phase::alpha_max(b)?.unwrap_or(f64::NAN);
        let lm = phase::lambda_max(b)?.unwrap_or(f64::NAN);
        exponents.push(vec![f(b), f(bstar), f(am), f(lm)]);
    }
    let summary = serde_json::json!({ "b_star": bstar, "rows": surface.rows.len() });
    Ok((vec![surface, exponents], summary))
}

fn pipe_instability(cfg: &ExperimentConfig) -> PipeOut {
    let d = cfg.degree().round() as usize;
    let phase_point = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
    let mut t = Table::new(
        "",
        &["d", "r", "c1", "mu", "u_norm", "residual_norm", "lower_bound"],
    );
    let mut c_fit = f64::INFINITY;
    let mut prev = 0.0f64;
    let mut growing = true;
    for r in [6usize, 12, 24] {
        let p = greens::instability_probe(d, r, phase_point)?;
        c_fit = c_fit.min(p.lower_bound / (r as f64 / (r as f64).ln()));
        growing &= p.lower_bound > prev;
        prev = p.lower_bound;
        t.push(vec![
            format!("{d}"),
            format!("{r}"),
            f(p.c1),
            f(p.mu),
            f(p.u_norm),
            f(p.residual_norm),
            f(p.lower_bound),
        ]);
    }
    let summary = serde_json::json!({ "c_fit": c_fit, "growing": growing });
    Ok((vec![t], summary))
}

fn pipe_blocknorms(cfg: &ExperimentConfig, seed: u64) -> PipeOut {
    let mut trees = Table::new(
        "",
        &["p", "q", "depth", "norm", "bound", "forest_bound", "within_bound"],
    );
    let mut all_within = true;
    for q in 1..=3usize {
        for ratio in 1..=4usize {
            let rec = spectra::tree_norm_check(ratio * q, q, 40)?;
            all_within &= rec.within_bound;
            trees.push(vec![
                format!("{}", rec.p),
                format!("{}", rec.q),
                format!("{}", rec.depth),
                f(rec.norm),
                f(rec.bound),
                f(rec.forest_bound),
                format!("{}", rec.within_bound),
            ]);
        }
    }

    let d = cfg.degree();
    let params =
        PhaseParams::from_degree(cfg.n, d)?.with_c(cfg.r_star_c.unwrap_or(phase::R_STAR_C_DEFAULT));
    let g = generate_er(cfg.n, d, seed)?;
    let census = components_census(&g);
    let small_norm = small_component_norm(&g, &census);
    let pruned = prune::prune(&g, cfg.tau.unwrap_or(2.0), params.r_star)?;
    let ops = profile::build_pruned_operators(&g, &pruned, params.xi)?;
    let rep = profile::approximation_report(&ops)?;
    let mut sample = Table::new(
        "sample",
        &[
            "seed",
            "n",
            "d",
            "tau",
            "r_star",
            "small_component_norm",
            "norm_h_htau",
            "norm_htau_hhat",
            "norm_complement_block",
        ],
    );
    sample.push(vec![
        format!("{seed}"),
        format!("{}", cfg.n),
        f(d),
        f(rep.tau),
        format!("{}", rep.r_star),
        f(small_norm),
        f(rep.norm_h_htau),
        f(rep.norm_htau_hhat),
        f(rep.norm_complement_block),
    ]);
    let summary = serde_json::json!({
        "tree_rows_within_bound": all_within,
        "small_component_norm": small_norm,
        "norm_h_htau": rep.norm_h_htau,
    });
    Ok((vec![trees, sample], summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Jsonl,
}

/// Write records under `out_dir` as `<kind>_<runid>.<ext>`; secondary tables
/// get `_<name>` appended before the extension. Returns the created paths.
pub fn emit(records: &[RunRecord], format: EmitFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| cfg_err(&out_dir.display().to_string(), format!("cannot create: {e}")))?;
    let mut paths = Vec::new();
    match format {
        EmitFormat::Csv => {
            for rec in records {
                for table in &rec.tables {
                    let file = if table.name.is_empty() {
                        format!("{}_{}.csv", rec.kind, rec.run_id)
                    } else {
                        format!("{}_{}_{}.csv", rec.kind, rec.run_id, table.name)
                    };
                    let path = out_dir.join(file);
                    let mut out = String::new();
                    out.push_str(&table.header.join(","));
                    out.push('\n');
                    for row in &table.rows {
                        out.push_str(&row.join(","));
                        out.push('\n');
                    }
                    std::fs::write(&path, out)?;
                    paths.push(path);
                }
            }
        }
        EmitFormat::Jsonl => {
            let combined = fnv1a(
                records.iter().map(|r| r.run_id.as_str()).collect::<Vec<_>>().join(",").as_bytes(),
            );
            let path = out_dir.join(format!("{}_{combined:016x}.jsonl", records[0].kind));
            let file = std::fs::File::create(&path)?;
            let mut w = std::io::BufWriter::new(file);
            for rec in records {
                let line = serde_json::to_string(rec)
                    .map_err(|e| cfg_err("record", format!("cannot serialize: {e}")))?;
                writeln!(w, "{line}")?;
            }
            w.flush()?;
            paths.push(path);
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(tag: &str) -> PathBuf {
        let p = std::env::temp_dir().join(format!("erlab_exp_{}_{tag}", std::process::id()));
        let _ = std::fs::remove_dir_all(&p);
        p
    }

    fn base(kind: &str, n: usize, d: f64, seeds: &[u64]) -> ExperimentConfig {
        parse_config(&format!(
            "{{\"kind\":\"{kind}\",\"n\":{n},\"d\":{d},\"seeds\":{seeds:?}}}"
        ))
        .unwrap()
    }

    #[test]
    fn parse_minimal_fills_defaults() {
        let cfg = parse_config(r#"{"kind":"scatter","n":10000,"b":0.6,"seeds":[1]}"#).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Scatter);
        assert_eq!(cfg.b, Some(0.6));
        assert_eq!(cfg.d, None);
        assert!((cfg.degree() - 0.6 * 10000f64.ln()).abs() < 1e-12);
        assert_eq!(cfg.tau, Some(2.0));
        assert_eq!(cfg.kappa, Some(greens::KAPPA_DEFAULT));
        assert_eq!(cfg.r_star_c, Some(phase::R_STAR_C_DEFAULT));
        assert_eq!(cfg.out_dir.as_deref(), Some("runs"));
        assert_eq!(cfg.z_grid, None, "z grid default is local-law only");

        let ll = parse_config(r#"{"kind":"local-law","n":500,"d":10,"seeds":[1]}"#).unwrap();
        assert_eq!(ll.z_grid, Some(vec![(1.0, 0.05)]));
    }

    #[test]
    fn parse_rejections() {
        let both = parse_config(r#"{"kind":"scatter","n":100,"b":0.6,"d":5,"seeds":[1]}"#);
        assert!(matches!(both, Err(Error::Config { ref path, .. }) if path == "b,d"), "{both:?}");
        let neither = parse_config(r#"{"kind":"scatter","n":100,"seeds":[1]}"#);
        assert!(neither.is_err());
        let unknown = parse_config(r#"{"kind":"zeta","n":100,"b":0.6,"seeds":[1]}"#);
        let msg = format!("{}", unknown.unwrap_err());
        assert!(msg.contains("scatter") && msg.contains("measures"), "lists kinds: {msg}");
        assert!(parse_config(r#"{"kind":"scatter","n":100,"b":0.6,"seeds":[]}"#).is_err());
        assert!(parse_config(r#"{"kind":"scatter","n":100,"b":0.6,"seeds":[1],"zz":3}"#).is_err());
        assert!(
            parse_config(r#"{"kind":"scatter","n":100,"b":0.6,"seeds":[1],"kappa":0.9}"#).is_err()
        );
        assert!(
            parse_config(r#"{"kind":"scatter","n":100,"b":0.6,"seeds":[1],"eta_grid":[]}"#)
                .is_err()
        );
    }

    #[test]
    fn parse_from_file() {
        let dir = tmp_dir("cfgfile");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.json");
        std::fs::write(&path, r#"{"kind":"phase","n":100,"b":1.0,"seeds":[7]}"#).unwrap();
        let cfg = parse_config(path.to_str().unwrap()).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Phase);
        assert!(parse_config("/nonexistent/cfg.json").is_err());
    }

    #[test]
    fn scatter_is_deterministic_and_emits() {
        let cfg = base("scatter", 200, 6.0, &[1, 2]);
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].tables[0].header, vec!["eigenvalue", "inf_norm"]);
        assert_eq!(recs[0].tables[0].rows.len(), 200);

        let recs2 = run_experiment_threaded(&cfg, 2).unwrap();
        assert_eq!(recs[0].run_id, recs2[0].run_id);
        assert_eq!(recs[1].run_id, recs2[1].run_id);
        for (a, b) in recs.iter().zip(&recs2) {
            assert_eq!(a.tables[0].rows, b.tables[0].rows, "payload determinism");
        }

        let d1 = tmp_dir("scatter1");
        let d2 = tmp_dir("scatter2");
        let p1 = emit(&recs, EmitFormat::Csv, &d1).unwrap();
        let p2 = emit(&recs2, EmitFormat::Csv, &d2).unwrap();
        assert_eq!(p1.len(), 2);
        for (a, b) in p1.iter().zip(&p2) {
            assert_eq!(
                a.file_name(),
                b.file_name(),
                "same config+seed, same file names"
            );
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "identical bytes");
        }
        let head = std::fs::read_to_string(&p1[0]).unwrap();
        assert!(head.starts_with("eigenvalue,inf_norm\n"));

        let jl = emit(&recs, EmitFormat::Jsonl, &d1).unwrap();
        let body = std::fs::read_to_string(&jl[0]).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(v["kind"], "scatter");
        assert!(v.get("tables").is_none(), "tables stay out of JSONL");
        assert!(v["summary"]["top_eigenvalue"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn emit_edge_cases() {
        assert!(emit(&[], EmitFormat::Csv, Path::new("/nonexistent")).unwrap().is_empty());
        let cfg = base("rigidity", 120, 4.0, &[1]);
        let recs = run_experiment(&cfg).unwrap();
        // desk-scale U is usually empty: header-only CSV is the honest output
        let dir = tmp_dir("rigidity");
        let paths = emit(&recs, EmitFormat::Csv, &dir).unwrap();
        let body = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(body.starts_with("rank,eigenvalue,predicted,abs_gap\n"));
        if recs[0].tables[0].rows.is_empty() {
            assert_eq!(body, "rank,eigenvalue,predicted,abs_gap\n");
        }
        assert!(recs[0].summary["bulk_max"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn prune_verify_holds_deterministically() {
        let cfg = base("prune-verify", 300, 5.0, &[1]);
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs[0].summary["all_deterministic_hold"], true);
        let row = &recs[0].tables[0].rows[0];
        assert_eq!(row[7], "true");
        assert_eq!(row[8], "true");
        assert_eq!(row[9], "true");
        assert_eq!(row[10], "true");
    }

    #[test]
    fn local_law_rows_and_schema() {
        let mut cfg = base("local-law", 300, 8.0, &[1]);
        cfg.z_grid = Some(vec![(1.0, 0.3), (0.5, 0.5)]);
        cfg.eta_grid = Some(vec![0.4]);
        let cfg = cfg.validated().unwrap();
        let recs = run_experiment(&cfg).unwrap();
        let t = &recs[0].tables[0];
        assert_eq!(
            t.header,
            vec!["re_z", "im_z", "max_diag_err", "avg_err", "rate_ref", "d", "N", "seed"]
        );
        assert_eq!(t.rows.len(), 3, "two z points plus one eta point");
        for row in &t.rows {
            assert!(row[2].parse::<f64>().unwrap() < 1.0);
        }
    }

    #[test]
    fn forks_rows_match_recount() {
        let cfg = base("forks", 600, 2.6, &[3]);
        let recs = run_experiment(&cfg).unwrap();
        let g = generate_er(600, 2.6, 3).unwrap();
        let census = components_census(&g);
        let by_degree = forks::census_by_degree(&forks::find_forks(&g, &census).unwrap());
        for row in &recs[0].tables[0].rows {
            let big_d: usize = row[3].parse().unwrap();
            let count: usize = row[4].parse().unwrap();
            assert_eq!(count, by_degree.get(&big_d).copied().unwrap_or(0));
            assert!(row[5].parse::<f64>().unwrap().is_finite());
        }
    }

    #[test]
    fn measures_tables() {
        let cfg = base("measures", 100, 5.0, &[1]);
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs[0].tables.len(), 2);
        assert_eq!(recs[0].tables[0].header, vec!["alpha", "x", "density"]);
        assert_eq!(recs[0].tables[0].rows.len(), 7 * 321);
        assert_eq!(recs[0].tables[1].name, "norms");
        assert!(recs[0].summary["max_mass_gap"].as_f64().unwrap() <= 1e-9);
        assert!(recs[0].summary["max_stieltjes_gap"].as_f64().unwrap() <= 1e-8);
    }

    #[test]
    fn phase_surface_zero_above_bstar() {
        let cfg = base("phase", 100, 5.0, &[1]);
        let recs = run_experiment(&cfg).unwrap();
        let t = &recs[0].tables[0];
        let mut saw_supercritical_zero = false;
        for row in &t.rows {
            let b: f64 = row[0].parse().unwrap();
            let lam: f64 = row[1].parse().unwrap();
            let rho: f64 = row[2].parse().unwrap();
            if b > phase::b_star() && lam > 2.0 {
                assert_eq!(rho, 0.0, "rho must vanish above b_* (b={b}, lambda={lam})");
                saw_supercritical_zero = true;
            }
            if lam == 2.0 {
                // at the edge rho jumps to (1 - b/b_*)_+, not to the bulk value 1
                let edge = (1.0 - b / phase::b_star()).max(0.0);
                assert!((rho - edge).abs() <= 1e-12, "edge value at b={b}: {rho} vs {edge}");
            }
        }
        assert!(saw_supercritical_zero);
        let ex = &recs[0].tables[1];
        let last = ex.rows.last().unwrap();
        assert_eq!(last[2], "NaN", "alpha_max empty above b_*");
    }

    #[test]
    fn instability_rows_grow() {
        let cfg = base("instability", 100, 32.0, &[1]);
        let recs = run_experiment(&cfg).unwrap();
        let t = &recs[0].tables[0];
        assert_eq!(t.rows.len(), 3);
        let lbs: Vec<f64> = t.rows.iter().map(|r| r[6].parse().unwrap()).collect();
        assert!(lbs[0] < lbs[1] && lbs[1] < lbs[2]);
        assert_eq!(recs[0].summary["growing"], true);
    }

    #[test]
    fn blocknorms_tables() {
        let cfg = base("blocknorms", 200, 5.0, &[1]);
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs[0].summary["tree_rows_within_bound"], true);
        let trees = &recs[0].tables[0];
        assert_eq!(trees.rows.len(), 12);
        for row in &trees.rows {
            assert_eq!(row[6], "true");
        }
        assert_eq!(recs[0].tables[1].name, "sample");
        assert_eq!(recs[0].tables[1].rows.len(), 1);
    }

    #[test]
    fn localize_runs_and_keeps_schema() {
        let cfg = base("localize", 300, 5.0, &[1]);
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(
            recs[0].tables[0].header,
            vec!["eigenvalue", "gamma", "overlap", "center_mass", "predicted_center_mass"]
        );
        assert!(recs[0].summary["lambda_threshold"].as_f64().unwrap() > 2.0);
    }

    #[test]
    fn run_errors_carry_context() {
        // degree 1 rounds below the instability probe's branching minimum
        let cfg = base("instability", 100, 1.0, &[9]);
        let err = run_experiment(&cfg).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("[instability seed 9]"), "{msg}");
    }
}
