use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lptsp_core::analysis::{emit_report, ReportFormat};
use lptsp_core::{analysis, certify, cover, exact, instances, lp, metric, segmented};
use lptsp_core::{Error, Limits, MetricInstance, Norm, TreeProvider};

#[derive(Parser)]
#[command(name = "lptsp", version, about = "L_p TSP solvers, lower bounds and certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with one algorithm.
    Solve(SolveArgs),
    /// Lower-bound constructions.
    #[command(subcommand)]
    Verify(Verify),
    /// Write a seeded random instance.
    Generate(GenerateArgs),
    /// Re-run the acceptance criteria.
    Certify(CertifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Exact,
    Cover,
    AllNorm,
    LpRound,
    Reduction,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Instance file, or a built-in name (fig1, appendixA, pow2).
    #[arg(long)]
    instance: String,
    /// Norm exponent: a real >= 1 or "inf".
    #[arg(long, default_value = "2")]
    p: Norm,
    /// Number of vehicles (defaults to the instance's start count).
    #[arg(long = "K", alias = "vehicles")]
    k: Option<usize>,
    /// Geometric ratio for cover and lp-round.
    #[arg(long)]
    c: Option<f64>,
    /// Derandomisation grid size for cover; without it a single seeded run is made.
    #[arg(long)]
    grid: Option<usize>,
    /// Amplification parameter for lp-round.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Explicit number of rounding runs (overrides tau).
    #[arg(long)]
    samples: Option<usize>,
    /// Blocks per sub-tour for the reduction.
    #[arg(long, default_value_t = 2)]
    segments: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// k-tree provider: exact or heuristic (default depends on n).
    #[arg(long)]
    provider: Option<TreeProvider>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verify {
    /// Turnpoint-route ratios on a line instance with one vertex left of the start.
    Allnorm(AllnormArgs),
    /// Closed-form two-route bound.
    Simple(SimpleArgs),
}

#[derive(Args)]
struct AllnormArgs {
    #[arg(long)]
    instance: String,
    /// Comma-separated norms, e.g. "1,1.5,2,inf".
    #[arg(long)]
    pgrid: Option<String>,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimpleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    eps: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "random_metric")]
    kind: metric::InstanceKind,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Comma-separated criterion ids (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

enum Failure {
    Core(Error),
    Usage(String),
    Certify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = if let Some(spec) = std::env::var("LPTSP_WORK_CAP").ok().filter(|s| !s.is_empty()) {
        Limits::default().apply(&spec).map_err(Failure::from).and_then(|_| run(cli))
    } else {
        run(cli)
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Capacity { .. } => ExitCode::from(3),
                e if e.is_validation() => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Certify) => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Verify(Verify::Allnorm(a)) => verify_allnorm(a),
        Command::Verify(Verify::Simple(a)) => {
            let b = analysis::simple_lower_bound(a.n, a.eps)?;
            emit(&serde_json::to_value(b).expect("serialisable"), None)
        }
        Command::Generate(a) => {
            let inst = metric::generate_instance(a.seed, a.n, a.kind)?;
            match a.output {
                Some(path) => Ok(metric::save(&inst, path)?),
                None => {
                    println!("{}", inst.to_json_string());
                    Ok(())
                }
            }
        }
        Command::Certify(a) => {
            let ids: Vec<usize> = if a.only.is_empty() {
                certify::CRITERIA.iter().map(|c| c.0).collect()
            } else {
                a.only
            };
            let mut outcomes = Vec::new();
            for id in ids {
                let o = certify::run(id).ok_or_else(|| Failure::Usage(format!("unknown criterion {id}")))?;
                eprintln!("{}", o.line());
                outcomes.push(o);
            }
            println!("{}", serde_json::to_string_pretty(&outcomes).expect("serialisable"));
            if outcomes.iter().all(|o| o.passed) {
                Ok(())
            } else {
                Err(Failure::Certify)
            }
        }
    }
}

/// A path on disk, or a built-in name with an optional `.json` suffix.
fn load_instance(spec: &str) -> Result<MetricInstance, Failure> {
    let path = PathBuf::from(spec);
    if path.exists() {
        return Ok(metric::load(&path)?);
    }
    let stem = spec.strip_suffix(".json").unwrap_or(spec);
    let stem = stem.rsplit('/').next().unwrap_or(stem);
    instances::builtin(stem).ok_or_else(|| Failure::Usage(format!("no such instance file or built-in: {spec}")))
}

fn emit(value: &Value, output: Option<&PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serialisable") + "\n";
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn need_seed(a: &SolveArgs) -> Result<u64, Failure> {
    a.seed
        .ok_or_else(|| Failure::Usage("--seed is required for randomised algorithms".into()))
}

/// Uniform offset in [0, 1) from a seed.
fn offset_from_seed(seed: u64) -> f64 {
    (lptsp_core::derive_seed(seed, 0) >> 11) as f64 / (1u64 << 53) as f64
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let inst = load_instance(&a.instance)?;
    let norm = a.p;
    let provider = a.provider.unwrap_or_else(|| TreeProvider::auto(inst.n));
    let k = a.k.unwrap_or(inst.vehicles());
    let single = |name: &str| -> Result<(), Failure> {
        if k != 1 || inst.vehicles() != 1 {
            return Err(Failure::Usage(format!("{name} supports a single vehicle only")));
        }
        Ok(())
    };
    let mut out = json!({
        "algorithm": match a.algo {
            Algo::Exact => "exact",
            Algo::Cover => "cover",
            Algo::AllNorm => "all-norm",
            Algo::LpRound => "lp-round",
            Algo::Reduction => "reduction",
        },
        "instance": inst.name,
        "checksum": inst.checksum(),
        "norm": norm,
    });
    let objective = match a.algo {
        Algo::Exact => {
            if k > 1 || inst.vehicles() > 1 {
                let s = exact::exact_multi_lp_tsp(&inst, norm)?;
                out["routes"] = json!(s.routes.routes);
                out["delays"] = json!(s.delays);
                s.objective
            } else {
                let s = if inst.is_line() {
                    exact::exact_line_lp_tsp(&inst, norm)?
                } else {
                    exact::exact_lp_tsp(&inst, norm)?
                };
                out["route"] = json!(s.route.order);
                out["delays"] = json!(s.delays);
                s.objective
            }
        }
        Algo::AllNorm => {
            single("all-norm")?;
            let s = cover::all_norm_route(&inst, provider)?;
            let d = s.delays(&inst);
            let objective = d.norm(norm);
            out["route"] = json!(s.final_route.order);
            out["delays"] = json!(d);
            out["schedule"] = serde_json::to_value(&s).expect("serialisable");
            objective
        }
        Algo::Cover => {
            single("cover")?;
            let seed = need_seed(&a)?;
            let p = norm
                .exponent()
                .ok_or_else(|| Failure::Usage("cover needs a finite p".into()))?;
            let c = a.c.unwrap_or_else(|| cover::tune_c(p).0);
            out["c"] = json!(c);
            out["seed"] = json!(seed);
            let sched = match a.grid {
                Some(m) => {
                    let d = cover::derandomized_best(&inst, norm, c, m, provider)?;
                    out["grid"] = json!(m);
                    out["u"] = json!(d.u);
                    d.schedule
                }
                None => {
                    let u = offset_from_seed(seed);
                    out["u"] = json!(u);
                    cover::lp_cover_route(&inst, c, u, seed, provider)?
                }
            };
            let d = sched.delays(&inst);
            out["route"] = json!(sched.final_route.order);
            out["delays"] = json!(d);
            out["schedule"] = serde_json::to_value(&sched).expect("serialisable");
            d.norm(norm)
        }
        Algo::LpRound => {
            let seed = need_seed(&a)?;
            let p = norm
                .exponent()
                .ok_or_else(|| Failure::Usage("lp-round needs a finite p".into()))?;
            let sub = inst.clone().with_starts(inst.starts[..k.min(inst.vehicles())].to_vec())?;
            let c = match a.c {
                Some(c) => c,
                None if k == 1 => cover::tune_c(p).0,
                None => lp::multi_constant(p)?.c_star,
            };
            let sol = lp::solve_tree_lp(&sub, p, k)?;
            let amp = match a.samples {
                Some(runs) => lp::amplify_runs(&sol, &sub, c, runs, seed, norm)?,
                None => lp::amplify(&sol, &sub, c, a.tau, seed, norm)?,
            };
            out["c"] = json!(c);
            out["seed"] = json!(seed);
            out["runs"] = json!(amp.runs);
            out["lp_objective_units"] = json!(sol.objective);
            out["lp_norm"] = json!(sub.scale.to_original(sol.objective.max(0.0).powf(1.0 / p)));
            out["mean_pow"] = json!(amp.mean_pow);
            out["routes"] = json!(amp.best.routes.routes);
            out["delays"] = json!(amp.best.delays);
            out["fractional"] = sol.to_sparse_json();
            amp.best_objective
        }
        Algo::Reduction => {
            single("reduction")?;
            let r = segmented::reduce_lp_tsp(&inst, norm, a.segments)?;
            out["route"] = json!(r.route.order);
            out["delays"] = json!(visit_times_json(&inst, &r.route));
            out["bound"] = json!(r.bound);
            out["segments"] = json!(r.k);
            out["eps"] = json!(r.eps);
            out["residue"] = json!(r.best_j);
            r.objective
        }
    };
    out["objective"] = json!(objective);
    if !matches!(a.algo, Algo::Exact) {
        if let Some(opt) = oracle(&inst, norm, k) {
            out["oracle_objective"] = json!(opt);
            out["ratio"] = json!(if opt > 0.0 { objective / opt } else { 1.0 });
            eprintln!("objective {objective:.6}, exact {opt:.6}, ratio {:.6}", objective / opt.max(f64::MIN_POSITIVE));
        }
    }
    emit(&out, a.output.as_ref())
}

fn visit_times_json(inst: &MetricInstance, route: &lptsp_core::Route) -> Value {
    json!(lptsp_core::visit_times(route, inst))
}

/// Exact optimum when the instance is small enough to solve.
fn oracle(inst: &MetricInstance, norm: Norm, k: usize) -> Option<f64> {
    let limits = Limits::current();
    if inst.vehicles() == 1 && k == 1 {
        if inst.is_line() {
            exact::exact_line_lp_tsp(inst, norm).ok().map(|s| s.objective)
        } else if inst.n <= limits.exact {
            exact::exact_lp_tsp(inst, norm).ok().map(|s| s.objective)
        } else {
            None
        }
    } else if inst.n <= limits.multi && k == inst.vehicles() {
        exact::exact_multi_lp_tsp(inst, norm).ok().map(|s| s.objective)
    } else {
        None
    }
}

fn verify_allnorm(a: AllnormArgs) -> Result<(), Failure> {
    let inst = load_instance(&a.instance)?;
    let grid = match &a.pgrid {
        Some(s) => s.parse()?,
        None => analysis::NormGrid::default(),
    };
    let format: ReportFormat = a.format.parse()?;
    let report = analysis::allnorm_lower_bound(&inst, &grid)?;
    eprintln!("minMax {:.6} over {} candidates", report.min_max, report.candidates.len());
    let text = emit_report(&report, format);
    match a.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
