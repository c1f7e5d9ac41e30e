//! Command-line front end: solve quantizers, inspect Hessians, compute
//! Wasserstein distances, evaluate bounds, and run CSV experiments.
//!
//! Exit codes: 0 success, 1 configuration or runtime error, 2 experiment
//! finished but some cells exceeded their wall-time budget.

use clap::{Parser, Subcommand};
use quantlab::bounds::{self, Applicability, BoundReport, ClusteringBound, RadiusBound};
use quantlab::harness::{self, fmt_float, ExperimentConfig};
use quantlab::hessian;
use quantlab::measures::{parse_spec, Measure, Tail};
use quantlab::quantizer::{EvalMethod, Quantizer};
use quantlab::solvers::{self, InitStrategy, SolveMethod, SolverConfig};
use quantlab::stream::Stream;
use quantlab::wasserstein::{w_p_1d, w2_gaussian, TransportMethod};
use quantlab::{Error, Result};
use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "quantlab", about = "Optimal-quantization laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a K-point quantizer of a distribution.
    Solve {
        /// Distribution spec, e.g. gauss:0,1 or box:0,0;1,1.
        #[arg(long)]
        dist: String,
        #[arg(long = "K")]
        k: usize,
        /// lloyd | newton | clvq
        #[arg(long, default_value = "lloyd")]
        method: String,
        /// quantile | sample-pp | file:<grid.csv>
        #[arg(long, default_value = "quantile")]
        init: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the solved grid as CSV (K rows x d columns) to this path.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Evaluate the distortion Hessian at a grid.
    Hessian {
        #[arg(long)]
        dist: String,
        /// Grid CSV path (K rows x d columns, no header).
        #[arg(long)]
        grid: PathBuf,
        /// Cross-check against central finite differences.
        #[arg(long, default_value_t = false)]
        fd_check: bool,
    },
    /// Wasserstein distance between two distributions.
    W2 {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
    /// Evaluate a closed-form bound from named parameters.
    Bounds {
        /// thm21 | thm22 | prop41 | thm42a | thm42b | thm42c | zador | radius
        #[arg(long)]
        name: String,
        /// Comma-separated key=value parameters.
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Run a configured experiment and write its CSV table.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_grid(path: &Path) -> Result<Quantizer> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), ln + 1)))?);
    }
    Quantizer::new(rows)
}

fn write_grid(path: &Path, x: &Quantizer) -> Result<()> {
    let mut out = String::new();
    for row in x.points() {
        let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn grid_lines(x: &Quantizer) -> String {
    x.points()
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| fmt_float(*v))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn parse_init(init: &str, m: &Measure) -> Result<InitStrategy> {
    match init {
        "quantile" => Ok(InitStrategy::Quantile),
        "sample-pp" => Ok(InitStrategy::SamplePp),
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                Ok(InitStrategy::Given(read_grid(Path::new(path))?))
            } else {
                Err(Error::Config(format!(
                    "init must be quantile, sample-pp, or file:<grid.csv> (got '{other}', dist dim {})",
                    m.dim()
                )))
            }
        }
    }
}

fn cmd_solve(
    dist: &str,
    k: usize,
    method: &str,
    init: &str,
    tol: f64,
    max_iter: usize,
    restarts: usize,
    seed: u64,
    grid_out: Option<&Path>,
) -> Result<()> {
    let m = parse_spec(dist)?;
    let cfg = SolverConfig {
        method: match method {
            "lloyd" => SolveMethod::Lloyd,
            "newton" => SolveMethod::Newton,
            "clvq" => SolveMethod::Clvq { steps: max_iter, a: 1.0, b: 10.0 },
            other => return Err(Error::Config(format!("unknown method '{other}'"))),
        },
        init: parse_init(init, &m)?,
        tol,
        max_iter,
    };
    let best = solvers::best_of(&m, k, restarts.max(1), &cfg, Stream::new(seed))?;
    let r = &best.result;
    println!("distortion = {}", fmt_float(r.distortion));
    println!("quantization_error = {}", fmt_float(r.distortion.max(0.0).sqrt()));
    println!("iterations = {}", r.iterations);
    println!("converged = {}", r.converged);
    println!("gradient_norm = {}", fmt_float(r.gradient_norm));
    println!("max_norm = {}", fmt_float(r.quantizer.max_norm()));
    println!("grid:");
    println!("{}", grid_lines(&r.quantizer));
    if let Some(path) = grid_out {
        write_grid(path, &r.quantizer)?;
    }
    Ok(())
}

fn cmd_hessian(dist: &str, grid: &Path, fd_check: bool) -> Result<()> {
    let m = parse_spec(dist)?;
    let x = read_grid(grid)?;
    let dense: Vec<Vec<f64>>;
    match m.dim() {
        1 => {
            let t = hessian::hessian_1d(&x, &m)?;
            let cert = hessian::pd_certificate(&t);
            dense = t.to_dense();
            println!("dim = 1");
            println!("lambda_star = {}", fmt_float(cert.lambda_star));
            println!("positive_definite = {}", cert.positive_definite);
            print_vec("leading_minors", &cert.leading_minors);
            print_vec("row_sums", &t.row_sums());
        }
        2 => {
            let h = hessian::hessian_2d_boundary(&x, &m, None)?;
            dense = h.matrix.clone();
            println!("dim = 2");
            println!("boundary_flagged = {}", h.boundary_flagged);
        }
        d => return Err(Error::Unsupported(format!("hessian CLI supports d <= 2, got {d}"))),
    }
    println!("matrix:");
    for row in &dense {
        let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        println!("{}", cells.join(","));
    }
    if fd_check {
        let method = if m.dim() == 1 { EvalMethod::Exact1d } else { EvalMethod::Quadrature2d };
        let step = if m.dim() == 1 { 5e-4 } else { 1e-3 };
        let fd = hessian::fd_hessian(&x, &m, &method, step)?;
        let mut max_abs: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..dense.len() {
            for j in 0..dense.len() {
                max_abs = max_abs.max((dense[i][j] - fd[i][j]).abs());
                scale = scale.max(dense[i][j].abs());
            }
        }
        println!("fd_max_abs_error = {}", fmt_float(max_abs));
        println!("fd_max_rel_error = {}", fmt_float(max_abs / scale.max(1e-300)));
    }
    Ok(())
}

fn print_vec(name: &str, v: &[f64]) {
    let cells: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
    println!("{name} = {}", cells.join(","));
}

fn cmd_w2(a: &str, b: &str, p: u32) -> Result<()> {
    let ma = parse_spec(a)?;
    let mb = parse_spec(b)?;
    let t = if ma.dim() == 1 && mb.dim() == 1 {
        w_p_1d(&ma, &mb, p)?
    } else if p == 2 {
        w2_gaussian(&ma, &mb)?
    } else {
        return Err(Error::Unsupported("d >= 2 supports p = 2 Gaussians only".into()));
    };
    // Closed-form paths are exact to rounding; the analytic-analytic 1D path
    // integrates the quantile coupling to tolerance 1e-11 in the p-th power.
    let quadrature = t.method == TransportMethod::Quantile1d
        && ma.is_analytic()
        && mb.is_analytic();
    let err = if quadrature { 1e-9 } else { 1e-12 };
    println!("distance = {}", fmt_float(t.distance));
    println!("p = {}", t.p);
    println!("method = {:?}", t.method);
    println!("error_bound = {}", fmt_float(err));
    Ok(())
}

fn parse_params(s: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for part in s.split(',').filter(|t| !t.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{part}'")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn need_f64(p: &HashMap<String, String>, key: &str) -> Result<f64> {
    p.get(key)
        .ok_or_else(|| Error::Config(format!("missing parameter '{key}'")))?
        .parse()
        .map_err(|e| Error::Config(format!("parameter '{key}': {e}")))
}

fn need_usize(p: &HashMap<String, String>, key: &str) -> Result<usize> {
    p.get(key)
        .ok_or_else(|| Error::Config(format!("missing parameter '{key}'")))?
        .parse()
        .map_err(|e| Error::Config(format!("parameter '{key}': {e}")))
}

fn opt_f64(p: &HashMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|e| Error::Config(format!("parameter '{key}': {e}"))),
    }
}

fn cmd_bounds(name: &str, params: &str) -> Result<()> {
    let p = parse_params(params)?;
    let report = match name {
        "thm21" => {
            let e = need_f64(&p, "e_star")?;
            let w = need_f64(&p, "w2")?;
            BoundReport::new("thm21", bounds::perf_bound_thm21(e, w)?, Applicability::Yes)
                .with_inputs(&[("e_star", e), ("w2", w)])
        }
        "thm22" => {
            let lam = need_f64(&p, "lambda_star")?;
            let e = need_f64(&p, "e_star")?;
            let w = need_f64(&p, "w2")?;
            BoundReport::new(
                "thm22",
                bounds::quantizer_bound_thm22(lam, e, w)?,
                Applicability::Asymptotic,
            )
            .with_inputs(&[("lambda_star", lam), ("e_star", e), ("w2", w)])
        }
        "prop41" => {
            let d = need_usize(&p, "d")?;
            let q = need_f64(&p, "q")?;
            let n = need_usize(&p, "n")?;
            BoundReport::new(
                "prop41",
                bounds::empirical_rate_prop41(d, q, n)?,
                Applicability::Yes,
            )
            .with_inputs(&[("d", d as f64), ("q", q), ("n", n as f64)])
        }
        "thm42a" => {
            let k = need_usize(&p, "k")?;
            let n = need_usize(&p, "n")?;
            let r1 = need_f64(&p, "r1")?;
            let r2n = need_f64(&p, "r2n")?;
            let rho = need_f64(&p, "rho")?;
            BoundReport::new(
                "thm42a",
                bounds::clustering_bound_thm42(&ClusteringBound::General { k, n, r1, r2n, rho })?,
                Applicability::Yes,
            )
            .with_inputs(&[
                ("k", k as f64),
                ("n", n as f64),
                ("r1", r1),
                ("r2n", r2n),
                ("rho", rho),
            ])
        }
        "thm42b" => {
            let k = need_usize(&p, "k")?;
            let n = need_usize(&p, "n")?;
            let c_mu_p = need_f64(&p, "c_mu_p")?;
            let pp = need_f64(&p, "p")?;
            let c = need_f64(&p, "c")?;
            let d = need_usize(&p, "d")?;
            let gamma_k = opt_f64(&p, "gamma", 1.0)?;
            BoundReport::new(
                "thm42b",
                bounds::clustering_bound_thm42(&ClusteringBound::PolynomialTail {
                    k,
                    n,
                    c_mu_p,
                    p: pp,
                    c,
                    d,
                    gamma_k,
                })?,
                Applicability::Asymptotic,
            )
            .with_inputs(&[
                ("k", k as f64),
                ("n", n as f64),
                ("c_mu_p", c_mu_p),
                ("p", pp),
                ("c", c),
                ("d", d as f64),
                ("gamma", gamma_k),
            ])
        }
        "thm42c" => {
            let k = need_usize(&p, "k")?;
            let n = need_usize(&p, "n")?;
            let d = need_usize(&p, "d")?;
            let gamma_k = opt_f64(&p, "gamma", 1.0)?;
            let bound = if p.contains_key("c") || p.contains_key("kappa") {
                bounds::clustering_bound_thm42(&ClusteringBound::HyperExpTail {
                    k,
                    n,
                    c_const: need_f64(&p, "c")?,
                    kappa: need_f64(&p, "kappa")?,
                    d,
                    gamma_k,
                })?
            } else {
                // Standard Gaussian special case when no constant is supplied.
                bounds::clustering_bound_thm42(&ClusteringBound::StandardGaussian {
                    k,
                    n,
                    d,
                    gamma_k,
                })?
            };
            BoundReport::new("thm42c", bound, Applicability::Asymptotic).with_inputs(&[
                ("k", k as f64),
                ("n", n as f64),
                ("d", d as f64),
                ("gamma", gamma_k),
            ])
        }
        "zador" => {
            let c = need_f64(&p, "c")?;
            let sigma = need_f64(&p, "sigma")?;
            let d = need_usize(&p, "d")?;
            let k = need_usize(&p, "k")?;
            BoundReport::new(
                "zador",
                bounds::zador_upper(c, sigma, d, k)?,
                Applicability::Yes,
            )
            .with_inputs(&[("c", c), ("sigma", sigma), ("d", d as f64), ("k", k as f64)])
        }
        "radius" => {
            let d = need_usize(&p, "d")?;
            let k = need_usize(&p, "k")?;
            let pw = opt_f64(&p, "p", 2.0)?;
            let tail = match p.get("tail").map(|s| s.as_str()) {
                Some("hyper") => Tail::HyperExponential {
                    theta: need_f64(&p, "theta")?,
                    kappa: need_f64(&p, "kappa")?,
                    c: 0.0,
                    tau: 1.0,
                    a: 1.0,
                },
                Some("poly") => Tail::Polynomial {
                    c: need_f64(&p, "c")?,
                    tau: 1.0,
                    beta: 0.0,
                    a: 1.0,
                },
                other => {
                    return Err(Error::Config(format!(
                        "radius needs tail=hyper or tail=poly (got {other:?})"
                    )))
                }
            };
            match bounds::radius_bounds(&tail, d, k, pw)? {
                RadiusBound::HyperExponential { asymptotic_bound, exact_1d_factor } => {
                    let mut r = BoundReport::new("radius", asymptotic_bound, Applicability::Asymptotic)
                        .with_inputs(&[("d", d as f64), ("k", k as f64)]);
                    if let Some(f) = exact_1d_factor {
                        r.inputs.push(("exact_1d_factor".into(), f));
                    }
                    r
                }
                RadiusBound::Polynomial { exponent } => {
                    BoundReport::new("radius-exponent", exponent, Applicability::Asymptotic)
                        .with_inputs(&[("d", d as f64), ("k", k as f64), ("p", pw)])
                }
            }
        }
        other => return Err(Error::Config(format!("unknown bound '{other}'"))),
    };
    println!("name = {}", report.name);
    println!("bound = {}", fmt_float(report.bound));
    println!("applicable = {:?}", report.applicable);
    if let Some(m) = report.measured {
        println!("measured = {}", fmt_float(m));
    }
    if let Some(s) = report.slack {
        println!("slack = {}", fmt_float(s));
    }
    for (k, v) in &report.inputs {
        println!("input.{k} = {}", fmt_float(*v));
    }
    Ok(())
}

fn cmd_experiment(config: &Path, out: Option<&Path>) -> Result<bool> {
    let text = fs::read_to_string(config)?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config: {e}")))?;
    let outcome = harness::run_experiment(&cfg)?;
    let csv = harness::csv_string(&outcome.rows);
    let path = out
        .map(|p| p.to_path_buf())
        .or_else(|| cfg.output.as_ref().map(PathBuf::from));
    match path {
        Some(p) => fs::write(&p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(outcome.any_timeout)
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Solve { dist, k, method, init, tol, max_iter, restarts, seed, grid } => {
            cmd_solve(
                dist,
                *k,
                method,
                init,
                *tol,
                *max_iter,
                *restarts,
                *seed,
                grid.as_deref(),
            )?;
            Ok(false)
        }
        Command::Hessian { dist, grid, fd_check } => {
            cmd_hessian(dist, grid, *fd_check)?;
            Ok(false)
        }
        Command::W2 { a, b, p } => {
            cmd_w2(a, b, *p)?;
            Ok(false)
        }
        Command::Bounds { name, params } => {
            cmd_bounds(name, params)?;
            Ok(false)
        }
        Command::Experiment { config, out } => cmd_experiment(config, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::from(0),
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
