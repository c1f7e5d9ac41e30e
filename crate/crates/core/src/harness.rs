//! Configuration-driven experiment runner: samples empirical measures,
//! solves them, scores performance and bound slack per cell, and emits
//! deterministic CSV tables.
//!
//! Determinism contract: every (K, n, seed) cell derives its own random
//! stream from the base seed, cells are computed independently in a work
//! pool, and rows are sorted by (K, n, seed) before writing, so the output
//! bytes do not depend on the thread count. Wall time is recorded on each
//! row but excluded from the CSV for the same reason.

use crate::bounds;
use crate::error::{Error, Result};
use crate::hessian;
use crate::measures::{parse_spec, Measure};
use crate::quantizer::{distortion, EvalMethod, Quantizer};
use crate::solvers::{self, best_of, InitStrategy, SolveMethod, SolverConfig};
use crate::stream::Stream;
use crate::wasserstein::{w2_assignment, w_p_1d};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

/// Version tag written into every CSV row (first column).
pub const CSV_SCHEMA: &str = "v1";

/// Per-cell wall-time budget in seconds; exceeded cells are flagged, not fatal.
pub const CELL_BUDGET_SECS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    /// Distance of the empirical optimum to the reference optimum vs n.
    Consistency,
    /// Clustering performance D(x^(n)) - D* vs n, for rate fitting.
    PerfVsN,
    /// Performance against the 4 e* W2 + 4 W2^2 bound; slack must be >= 0.
    Thm21Slack,
    /// Squared quantizer distance against the (8/lambda*)(e* W2 + W2^2) bound.
    Thm22Distance,
    /// Gaussian performance against the general clustering bound with
    /// Monte Carlo r-norm estimates.
    Thm42Gaussian,
    /// Distance of the solved grid to the closed-form uniform optimum.
    UniformClosedForm,
}

impl ExperimentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Consistency => "consistency",
            ExperimentId::PerfVsN => "perf-vs-n",
            ExperimentId::Thm21Slack => "thm21-slack",
            ExperimentId::Thm22Distance => "thm22-distance",
            ExperimentId::Thm42Gaussian => "thm42-gaussian",
            ExperimentId::UniformClosedForm => "uniform-closed-form",
        }
    }
}

/// Solver settings as they appear in the JSON config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSpec {
    /// "exact" (1D dynamic program), "lloyd", "newton", or "clvq".
    pub method: String,
    pub tol: f64,
    pub max_iter: usize,
    /// Multistart count for lloyd/newton on the per-cell solves.
    pub restarts: usize,
    /// CLVQ step-size schedule a/(b+t).
    pub clvq_a: f64,
    pub clvq_b: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            method: "exact".into(),
            tol: 1e-10,
            max_iter: 10_000,
            restarts: 3,
            clvq_a: 1.0,
            clvq_b: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    /// Distribution spec in the CLI grammar, e.g. "gauss:0,1".
    pub dist: String,
    /// Quantization levels.
    pub k: Vec<usize>,
    /// Sample sizes, strictly increasing.
    pub n: Vec<usize>,
    /// Number of replications per (K, n).
    pub seeds: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Measure> {
        if self.k.is_empty() || self.n.is_empty() || self.seeds == 0 {
            return Err(Error::Config("k, n, seeds must all be nonempty/positive".into()));
        }
        if !self.n.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("n list must be strictly increasing".into()));
        }
        if self.k.iter().any(|&k| k == 0) {
            return Err(Error::Config("K values must be >= 1".into()));
        }
        let m = parse_spec(&self.dist).map_err(|e| Error::Config(format!("dist: {e}")))?;
        match self.solver.method.as_str() {
            "exact" | "lloyd" | "newton" | "clvq" => {}
            other => return Err(Error::Config(format!("unknown solver method '{other}'"))),
        }
        if self.solver.method == "newton" && !(m.dim() == 1 && m.is_analytic()) {
            return Err(Error::Config("newton solver needs a 1D analytic distribution".into()));
        }
        let needs_w2 = !matches!(self.experiment, ExperimentId::Thm42Gaussian);
        if needs_w2 && m.dim() != 1 {
            return Err(Error::Config(format!(
                "experiment '{}' needs a 1D distribution (exact W2)",
                self.experiment.as_str()
            )));
        }
        if self.experiment == ExperimentId::UniformClosedForm
            && !matches!(m.kind(), crate::measures::Kind::Uniform1d { .. })
        {
            return Err(Error::Config("uniform-closed-form needs a uniform:a,b distribution".into()));
        }
        if self.experiment == ExperimentId::Thm42Gaussian
            && !matches!(
                m.kind(),
                crate::measures::Kind::Gaussian1d { .. } | crate::measures::Kind::GaussianNd { .. }
            )
        {
            return Err(Error::Config("thm42-gaussian needs a Gaussian distribution".into()));
        }
        Ok(m)
    }
}

/// One experiment cell. Wall time is informational only (not serialized).
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub experiment: ExperimentId,
    pub dist: String,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    /// D_{K,mu}(x^(n)) - D_{K,mu}(x*): excess distortion under the target.
    pub performance: f64,
    /// W2(mu_n, mu); 0 when not computed (d >= 2 thm42 cells).
    pub w2: f64,
    pub bound: f64,
    pub slack: f64,
    /// Squared distance of x^(n) to the reference optimum (uniform-closed-form
    /// reports the sup-norm coordinate error instead).
    pub quantizer_distance: f64,
    pub wall_time_ms: f64,
    pub timed_out: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub any_timeout: bool,
}

/// Reference optimum of the target measure at one level K.
struct RefOpt {
    quantizer: Quantizer,
    distortion: f64,
    e_star: f64,
    rho: f64,
    lambda_star: Option<f64>,
}

fn target_eval(m: &Measure, stream: Stream) -> EvalMethod {
    if m.is_empirical() {
        EvalMethod::Empirical
    } else if m.dim() == 1 {
        EvalMethod::Exact1d
    } else if m.dim() == 2 {
        EvalMethod::Quadrature2d
    } else {
        EvalMethod::MonteCarlo { n: 200_000, stream }
    }
}

/// Solve for the reference optimum: 10-restart multistart, Newton-polished
/// in 1D.
fn reference_optimum(m: &Measure, k: usize, stream: Stream) -> Result<RefOpt> {
    let cfg = SolverConfig::default_for(m);
    let mut best = best_of(m, k, 10, &cfg, stream.child(0))?;
    if m.dim() == 1 && m.is_analytic() {
        let polish = SolverConfig {
            method: SolveMethod::Newton,
            init: InitStrategy::Given(best.result.quantizer.clone()),
            tol: 1e-12,
            max_iter: 200,
        };
        if let Ok(r) = solvers::solve(m, k, &polish, stream.child(1)) {
            if r.distortion <= best.result.distortion + 1e-12 {
                best.result = r;
            }
        }
    }
    let lambda_star = if m.dim() == 1 && m.is_analytic() {
        hessian::hessian_1d(&best.result.quantizer, m)
            .map(|h| hessian::pd_certificate(&h).lambda_star)
            .ok()
    } else {
        None
    };
    Ok(RefOpt {
        e_star: best.result.distortion.max(0.0).sqrt(),
        rho: best.result.quantizer.max_norm(),
        distortion: best.result.distortion,
        quantizer: best.result.quantizer,
        lambda_star,
    })
}

/// Solve the empirical measure for one cell per the configured method.
fn solve_cell(mu_n: &Measure, k: usize, spec: &SolverSpec, stream: Stream) -> Result<Quantizer> {
    match spec.method.as_str() {
        "exact" if mu_n.dim() == 1 => Ok(solvers::kmeans_1d_optimal(mu_n, k)?.0),
        "exact" | "lloyd" => {
            let cfg = SolverConfig {
                method: SolveMethod::Lloyd,
                init: if mu_n.dim() == 1 { InitStrategy::Quantile } else { InitStrategy::SamplePp },
                tol: spec.tol,
                max_iter: spec.max_iter,
            };
            Ok(best_of(mu_n, k, spec.restarts.max(1), &cfg, stream)?.result.quantizer)
        }
        "newton" => {
            let cfg = SolverConfig {
                method: SolveMethod::Newton,
                init: InitStrategy::Quantile,
                tol: spec.tol,
                max_iter: spec.max_iter,
            };
            Ok(solvers::solve(mu_n, k, &cfg, stream)?.quantizer)
        }
        "clvq" => {
            let cfg = SolverConfig {
                method: SolveMethod::Clvq {
                    steps: spec.max_iter,
                    a: spec.clvq_a,
                    b: spec.clvq_b,
                },
                init: if mu_n.dim() == 1 { InitStrategy::Quantile } else { InitStrategy::SamplePp },
                tol: spec.tol,
                max_iter: spec.max_iter,
            };
            Ok(solvers::solve(mu_n, k, &cfg, stream)?.quantizer)
        }
        other => Err(Error::Config(format!("unknown solver method '{other}'"))),
    }
}

/// Squared minimal-matching distance between two same-size grids.
fn grid_sq_distance(a: &Quantizer, b: &Quantizer) -> f64 {
    if a.dim() == 1 {
        // Both grids are sorted; the identity matching is optimal in 1D.
        a.coords_1d()
            .iter()
            .zip(b.coords_1d())
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    } else {
        let ea = Measure::empirical(a.points().to_vec()).expect("finite grid");
        let eb = Measure::empirical(b.points().to_vec()).expect("finite grid");
        match w2_assignment(&ea, &eb) {
            Ok(t) => t.distance * t.distance * a.k() as f64,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Monte Carlo estimate of (r_1, r_{2n}) = (|| |X| ||_2, || max_{i<=2n} |X_i| ||_2).
fn r_norms(m: &Measure, n: usize, reps: usize, stream: Stream) -> (f64, f64) {
    let sq = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>();
    // Per-replication terms collected in index order, then summed
    // sequentially, so the result is independent of the thread count.
    let terms: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let draws = m.sample(2 * n, stream.child(r as u64));
            let first = sq(&draws[0]);
            let max2n = draws.iter().map(|p| sq(p)).fold(0.0, f64::max);
            (first, max2n)
        })
        .collect();
    let s1: f64 = terms.iter().map(|t| t.0).sum();
    let s2n: f64 = terms.iter().map(|t| t.1).sum();
    ((s1 / reps as f64).sqrt(), (s2n / reps as f64).sqrt())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let m = cfg.validate()?;
    let base = Stream::new(cfg.base_seed);

    // Reference optimum per K, computed once (streams keyed on K only).
    let mut refs: HashMap<usize, RefOpt> = HashMap::new();
    for &k in &cfg.k {
        if !refs.contains_key(&k) {
            refs.insert(k, reference_optimum(&m, k, base.descend(&[u64::MAX, k as u64]))?);
        }
    }

    // r-norm estimates per n for the clustering bound (streams keyed on n).
    let mut rnorms: HashMap<usize, (f64, f64)> = HashMap::new();
    if cfg.experiment == ExperimentId::Thm42Gaussian {
        for &n in &cfg.n {
            rnorms.insert(
                n,
                r_norms(&m, n, 200, base.descend(&[u64::MAX - 1, n as u64])),
            );
        }
    }

    let mut cells: Vec<(usize, usize, u64)> = Vec::new();
    for &k in &cfg.k {
        for &n in &cfg.n {
            for s in 0..cfg.seeds {
                cells.push((k, n, s as u64));
            }
        }
    }

    let rows: Vec<Result<ResultRow>> = cells
        .par_iter()
        .map(|&(k, n, seed)| {
            let t0 = Instant::now();
            let cell = base.descend(&[k as u64, n as u64, seed]);
            let r = refs.get(&k).expect("cached");
            let draws = m.sample(n, cell.child(0));
            let mu_n = Measure::empirical(draws)?;
            let x_n = solve_cell(&mu_n, k, &cfg.solver, cell.child(1))?;

            let perf = distortion(&x_n, &m, &target_eval(&m, cell.child(2)))? - r.distortion;
            let w2 = if m.dim() == 1 {
                w_p_1d(&mu_n, &m, 2)?.distance
            } else {
                0.0
            };
            let qdist = if cfg.experiment == ExperimentId::UniformClosedForm {
                let (a, b) = m.support_1d()?;
                x_n.coords_1d()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let opt = a + (b - a) * (2.0 * i as f64 + 1.0) / (2.0 * k as f64);
                        (x - opt).abs()
                    })
                    .fold(0.0, f64::max)
            } else {
                grid_sq_distance(&x_n, &r.quantizer)
            };

            let (measured, bound) = match cfg.experiment {
                ExperimentId::Thm22Distance => {
                    let lam = r.lambda_star.ok_or_else(|| {
                        Error::NotApplicable("thm22 needs a 1D analytic Hessian".into())
                    })?;
                    (qdist, bounds::quantizer_bound_thm22(lam, r.e_star, w2)?)
                }
                ExperimentId::Thm42Gaussian => {
                    let (r1, r2n) = rnorms[&n];
                    (
                        perf,
                        bounds::clustering_bound_thm42(&bounds::ClusteringBound::General {
                            k,
                            n,
                            r1,
                            r2n,
                            rho: r.rho,
                        })?,
                    )
                }
                // Everything else reports the universal performance bound.
                _ => (perf, bounds::perf_bound_thm21(r.e_star, w2)?),
            };

            let elapsed = t0.elapsed().as_secs_f64();
            Ok(ResultRow {
                experiment: cfg.experiment,
                dist: cfg.dist.clone(),
                k,
                n,
                seed,
                performance: perf,
                w2,
                bound,
                slack: bound - measured,
                quantizer_distance: qdist,
                wall_time_ms: elapsed * 1e3,
                timed_out: elapsed > CELL_BUDGET_SECS,
            })
        })
        .collect();

    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        out.push(r?);
    }
    out.sort_by(|a, b| (a.k, a.n, a.seed).cmp(&(b.k, b.n, b.seed)));
    let any_timeout = out.iter().any(|r| r.timed_out);
    Ok(RunOutcome { rows: out, any_timeout })
}

/// RFC-4180 escaping: quote fields containing commas, quotes, or newlines.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// 17 significant digits, '.' decimal separator.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write rows as CSV (schema v1). Wall time is excluded so reruns are
/// byte-identical regardless of machine load or thread count.
pub fn write_csv<W: Write>(rows: &[ResultRow], w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "schema,experiment,dist,k,n,seed,performance,w2,bound,slack,quantizer_distance,status"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            CSV_SCHEMA,
            r.experiment.as_str(),
            csv_field(&r.dist),
            r.k,
            r.n,
            r.seed,
            fmt_float(r.performance),
            fmt_float(r.w2),
            fmt_float(r.bound),
            fmt_float(r.slack),
            fmt_float(r.quantizer_distance),
            if r.timed_out { "timeout" } else { "ok" },
        )?;
    }
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("ASCII output")
}

/// Row fields usable as fit axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowField {
    N,
    K,
    Performance,
    W2,
    Bound,
    QuantizerDistance,
}

fn field_value(r: &ResultRow, f: RowField) -> f64 {
    match f {
        RowField::N => r.n as f64,
        RowField::K => r.k as f64,
        RowField::Performance => r.performance,
        RowField::W2 => r.w2,
        RowField::Bound => r.bound,
        RowField::QuantizerDistance => r.quantizer_distance,
    }
}

/// Least-squares power-law fit: regress log(mean y per x) on log x.
/// Returns (slope, intercept, r^2).
pub fn fit_rate(rows: &[ResultRow], x: RowField, y: RowField) -> Result<(f64, f64, f64)> {
    let mut groups: HashMap<u64, (f64, f64, usize)> = HashMap::new();
    for r in rows {
        let xv = field_value(r, x);
        let yv = field_value(r, y);
        let e = groups.entry(xv.to_bits()).or_insert((xv, 0.0, 0));
        e.1 += yv;
        e.2 += 1;
    }
    let mut pts: Vec<(f64, f64)> = groups
        .values()
        .map(|&(xv, ysum, cnt)| (xv, ysum / cnt as f64))
        .collect();
    pts.retain(|&(xv, yv)| xv > 0.0 && yv > 0.0);
    if pts.len() < 3 {
        return Err(Error::Domain(format!(
            "fit_rate needs >= 3 distinct positive x groups, got {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let nf = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / nf;
    let my = ly.iter().sum::<f64>() / nf;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("degenerate x values in fit_rate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok((slope, intercept, r2))
}
