//! Command-line front end: one subcommand per experiment kind, JSON configs
//! or direct flags, CSV/JSONL emission, and exit codes 0 / 2 (validation) /
//! 3 (numeric failure).

use clap::{Args, Parser, Subcommand};
use erlab::experiment::{
    emit, parse_config, run_experiment_threaded, EmitFormat, ExperimentConfig, ExperimentKind,
};
use erlab::Error;

#[derive(Parser)]
#[command(
    name = "erlab",
    version,
    about = "Numerical laboratory for the spectral phase structure of critical Erdos-Renyi graphs",
    long_about = "Experiments on the scaled adjacency matrix A/sqrt(d) of G(N, d/N) with \
d = b log N: eigenvalue/eigenvector scatter, eigenvalue rigidity against \
Lambda(alpha) = alpha/sqrt(alpha - 1), localization profiles, pruning checks, \
Green-function local laws, tuning-fork censuses, limiting spectral measures, \
the rho_b phase diagram with critical b_* = 1/(2 log 2 - 1), sup-norm \
instability bounds, and pruned block-operator norms. Outputs are CSV plus a \
JSONL run log; reruns of the same config and seed are byte-identical."
)]
struct Cli {
    /// Experiment config: a JSON file path or an inline JSON object.
    #[arg(long, global = true, value_name = "PATH|JSON")]
    config: Option<String>,
    /// Output directory override.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// Worker threads for the seed fan-out.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Replace the config's seed list.
    #[arg(long, global = true, value_name = "S1,S2,...", value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
    #[command(subcommand)]
    cmd: KindCmd,
}

/// Flags shared by every kind; each overrides the config-file field.
#[derive(Args)]
struct KindArgs {
    /// Number of vertices N.
    #[arg(long)]
    n: Option<usize>,
    /// Degree parameter b in d = b log N (clears d).
    #[arg(long)]
    b: Option<f64>,
    /// Expected degree d directly (clears b).
    #[arg(long)]
    d: Option<f64>,
    /// Seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Pruning threshold on alpha = D/d.
    #[arg(long)]
    tau: Option<f64>,
    /// Resonance window half-width.
    #[arg(long)]
    delta: Option<f64>,
    /// Spectral-domain parameter kappa.
    #[arg(long)]
    kappa: Option<f64>,
    /// Constant c in the profile radius floor(c sqrt(log N)).
    #[arg(long = "r-star-c")]
    r_star_c: Option<f64>,
}

#[derive(Subcommand)]
enum KindCmd {
    /// Eigenvalue vs eigenvector sup-norm scatter for A/sqrt(d).
    #[command(long_about = "Full spectrum of A/sqrt(d) with per-eigenvector sup-norms, the \
delocalization/semilocalization picture in one table: bulk eigenvalues in [-2, 2] carry \
spread-out vectors, while each eigenvalue beyond 2 sits near Lambda(alpha_x) = \
alpha_x/sqrt(alpha_x - 1) for a high-degree vertex x and its vector concentrates there. \
CSV columns: eigenvalue, inf_norm.")]
    Scatter(KindArgs),
    /// Pair extreme eigenvalues with +-Lambda(alpha) in rank order.
    #[command(long_about = "Eigenvalue rigidity: sorting vertices by normalized degree \
alpha_x = D_x/d, the k-th positive eigenvalue below the trivial top one should sit at \
Lambda(alpha) of the k-th largest degree (and the k-th most negative at -Lambda(alpha)) \
whenever Lambda(alpha) >= 2 + sqrt(xi), xi = sqrt(log N) log d / d; everything else \
stays in the bulk [-2 - eps, 2 + eps]. CSV columns: rank, eigenvalue, predicted, abs_gap.")]
    Rigidity(KindArgs),
    /// Overlap of outlier eigenvectors with radial sphere profiles.
    #[command(long_about = "For each eigenvalue lambda beyond the bulk edge, vertices with \
|Lambda(alpha_x) - lambda| <= delta are resonant; the eigenvector should live on radial \
profile vectors over the spheres around them, with squared mass sqrt(lambda^2 - 4) / \
(lambda + sqrt(lambda^2 - 4)) at the center and localization exponent gamma = \
-log ||w||_inf^2 / log N well below 1. CSV: eigenvalue, gamma, overlap, center_mass, \
predicted_center_mass.")]
    Localize(KindArgs),
    /// Verify the deterministic pruning guarantees.
    #[command(name = "prune-verify", long_about = "Pruning cuts edges so that around every \
hub (alpha_x >= tau) the ball of radius 2 r_star becomes a tree, distinct hubs end up at \
pruned distance > 4 r_star, every removed edge touches a hub, and pruned spheres nest \
inside the base spheres. This run checks all four properties exactly and reports the \
removal statistics.")]
    PruneVerify(KindArgs),
    /// Green-function local law for H = (A - E A)/sqrt(d).
    #[command(name = "local-law", long_about = "Resolvent diagnostics at spectral parameters \
z: the Ward identity, and the entrywise local law G_xx ~ m_{beta_x}(z) with beta_x = \
sum_y |H_xy|^2, at the error scale (log N / d^2)^{1/3}; the average N^{-1} tr G tracks \
the semicircle transform m(z) = (-z + sqrt(z^2 - 4))/2. CSV: re_z, im_z, max_diag_err, \
avg_err, rate_ref, d, N, seed.")]
    LocalLaw(KindArgs),
    /// Census of tuning forks and their exact eigenpairs.
    #[command(long_about = "A tuning fork is a pair of degree-(D+1) hubs hanging off one base \
vertex with D leaves each; it contributes the exact eigenvalues +-sqrt(D/d) with vectors \
supported on the fork. The expected count is N d^2 e^{-2d} (d e^{-d+1})^{2D} / (2 D!^2), \
which explains the spectrum accumulating near zero at small b. CSV: seed, N, d, D, count, \
expected.")]
    Forks(KindArgs),
    /// Limiting spectral measures mu_alpha and their transforms.
    #[command(long_about = "The local spectral measure at a vertex of normalized degree alpha \
has density (alpha/2 pi) sqrt(4 - u^2) / ((1 - alpha) u^2 + alpha^2) on (-2, 2) plus, for \
alpha > 2, symmetric atoms at +-Lambda(alpha) of mass (alpha - 2)/(2 alpha - 2) each. \
Emits densities, atom data, total mass (a probability measure), and the Stieltjes \
transform computed two independent ways.")]
    Measures(KindArgs),
    /// The rho_b(lambda) phase surface and the critical b_*.
    #[command(long_about = "Eigenvalue-density exponent surface rho_b(lambda) = \
theta_b(Lambda^{-1}(lambda)) for lambda > 2, where theta_b(alpha) = \
(1 - b(alpha log alpha - alpha + 1))_+; it vanishes identically above the critical \
b_* = 1/(2 log 2 - 1) ~ 2.5887, where no eigenvalues escape [-2, 2]. CSV: b, lambda, rho \
plus an exponents table with alpha_max and lambda_max per b.")]
    Phase(KindArgs),
    /// Sup-norm instability of the naive self-consistent operator.
    #[command(long_about = "On the d-regular tree, radial test vectors give the lower bound \
||(alpha - S)^{-1}||_{inf->inf} >= c (r / log r) at |alpha| = 1 for depth-r balls (S the \
adjacency over d), growing without bound in r: the vector self-consistent equation cannot \
be solved stably in sup norm, which is why typicality-averaged scalar equations are used \
instead. CSV: d, r, c1, mu, u_norm, residual_norm, lower_bound.")]
    Instability(KindArgs),
    /// Operator norms of the pruned block decomposition.
    #[command(name = "blocknorms", long_about = "Norm checks behind the block picture: the \
depth-truncated (p,q)-tree adjacency norm against sqrt(q) Lambda(max(p/q, 2)) and the \
forest bound 2 sqrt(q); per sample, the small-component norm and the pruned-operator \
gaps ||H - H_tau||, ||H_tau - H_hat||, and the complement block, which must all be \
small for the spectrum to split into hub blocks plus bulk.")]
    BlockNorms(KindArgs),
}

impl KindCmd {
    fn kind(&self) -> ExperimentKind {
        match self {
            KindCmd::Scatter(_) => ExperimentKind::Scatter,
            KindCmd::Rigidity(_) => ExperimentKind::Rigidity,
            KindCmd::Localize(_) => ExperimentKind::Localize,
            KindCmd::PruneVerify(_) => ExperimentKind::PruneVerify,
            KindCmd::LocalLaw(_) => ExperimentKind::LocalLaw,
            KindCmd::Forks(_) => ExperimentKind::Forks,
            KindCmd::Measures(_) => ExperimentKind::Measures,
            KindCmd::Phase(_) => ExperimentKind::Phase,
            KindCmd::Instability(_) => ExperimentKind::Instability,
            KindCmd::BlockNorms(_) => ExperimentKind::BlockNorms,
        }
    }

    fn args(&self) -> &KindArgs {
        match self {
            KindCmd::Scatter(a)
            | KindCmd::Rigidity(a)
            | KindCmd::Localize(a)
            | KindCmd::PruneVerify(a)
            | KindCmd::LocalLaw(a)
            | KindCmd::Forks(a)
            | KindCmd::Measures(a)
            | KindCmd::Phase(a)
            | KindCmd::Instability(a)
            | KindCmd::BlockNorms(a) => a,
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) | Error::Domain(_) | Error::Contract(_) | Error::Config { .. } => 2,
        Error::Numeric(_) | Error::Io(_) => 3,
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let kind = cli.cmd.kind();
    let mut cfg = match &cli.config {
        Some(spec) => {
            let cfg = parse_config(spec)?;
            if cfg.kind != kind {
                return Err(Error::Config {
                    path: "kind".to_string(),
                    msg: format!(
                        "config says `{}` but the `{}` subcommand was invoked",
                        cfg.kind.as_str(),
                        kind.as_str()
                    ),
                });
            }
            cfg
        }
        None => ExperimentConfig {
            kind,
            n: 0,
            b: None,
            d: None,
            seeds: Vec::new(),
            tau: None,
            delta: None,
            r_star_c: None,
            kappa: None,
            eta_grid: None,
            z_grid: None,
            out_dir: None,
        },
    };
    let a = cli.cmd.args();
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(b) = a.b {
        cfg.b = Some(b);
        cfg.d = None;
    }
    if let Some(d) = a.d {
        cfg.d = Some(d);
        cfg.b = None;
    }
    if a.b.is_some() && a.d.is_some() {
        return Err(Error::Config {
            path: "b,d".to_string(),
            msg: "give either --b or --d, not both".to_string(),
        });
    }
    if let Some(seeds) = &a.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(t) = a.tau {
        cfg.tau = Some(t);
    }
    if let Some(dl) = a.delta {
        cfg.delta = Some(dl);
    }
    if let Some(k) = a.kappa {
        cfg.kappa = Some(k);
    }
    if let Some(c) = a.r_star_c {
        cfg.r_star_c = Some(c);
    }
    if let Some(seeds) = &cli.seed_override {
        cfg.seeds = seeds.clone();
    }
    if cfg.n == 0 {
        return Err(Error::Config {
            path: "n".to_string(),
            msg: "set --n or provide a config".to_string(),
        });
    }
    if cfg.seeds.is_empty() && cli.config.is_none() {
        return Err(Error::Config {
            path: "seeds".to_string(),
            msg: "set --seeds or provide a config".to_string(),
        });
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    cfg.validated()
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = build_config(cli)?;
    let records = run_experiment_threaded(&cfg, cli.threads)?;
    let out_dir = std::path::PathBuf::from(cfg.out_dir.as_deref().unwrap_or("runs"));
    let mut paths = emit(&records, EmitFormat::Csv, &out_dir)?;
    paths.extend(emit(&records, EmitFormat::Jsonl, &out_dir)?);
    for rec in &records {
        println!(
            "{} seed={} run_id={} wall_ms={} summary={}",
            rec.kind, rec.seed, rec.run_id, rec.wall_ms, rec.summary
        );
    }
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
