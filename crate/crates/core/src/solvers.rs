//! Quantizer solvers: Lloyd fixed point, damped Newton in 1D, CLVQ
//! stochastic gradient, seeding strategies, multistart, and an exact
//! dynamic-programming solver for 1D empirical measures.

use crate::error::{Error, Result};
use crate::hessian::{hessian_1d, TridiagonalMatrix};
use crate::measures::Measure;
use crate::quantizer::{
    distortion, gradient, sq_dist, EvalMethod, Quantizer, MC_DEFAULT_N,
};
use crate::stream::Stream;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub quantizer: Quantizer,
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// 1D: quantiles at (2i-1)/(2K).
    Quantile,
    /// Distance-weighted greedy seeding on a sample pool (k-means++ style).
    SamplePp,
    /// User-provided grid.
    Given(Quantizer),
}

/// Default evaluation method for solving against a measure.
pub fn natural_method(m: &Measure, stream: Stream) -> EvalMethod {
    if m.is_empirical() {
        EvalMethod::Empirical
    } else if m.dim() == 1 {
        EvalMethod::Exact1d
    } else {
        EvalMethod::MonteCarlo { n: MC_DEFAULT_N, stream }
    }
}

pub fn init_quantizer(
    m: &Measure,
    k: usize,
    strategy: &InitStrategy,
    stream: Stream,
) -> Result<Quantizer> {
    if k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    match strategy {
        InitStrategy::Quantile => {
            if m.dim() != 1 {
                return Err(Error::Unsupported("quantile init needs a 1D measure".into()));
            }
            let mut xs: Vec<f64> = (1..=k)
                .map(|i| m.quantile((2 * i - 1) as f64 / (2 * k) as f64))
                .collect::<Result<_>>()?;
            xs.dedup();
            if xs.len() < k {
                // Atoms repeat across quantile levels (small empirical
                // support): fall back to distinct atoms.
                let s = m
                    .atoms_sorted_1d()
                    .ok_or_else(|| Error::Domain("support smaller than K".into()))?;
                let mut distinct: Vec<f64> = s.to_vec();
                distinct.dedup();
                if distinct.len() < k {
                    return Err(Error::Domain(format!(
                        "support has {} distinct points < K = {k}",
                        distinct.len()
                    )));
                }
                xs = (0..k)
                    .map(|i| distinct[i * (distinct.len() - 1) / k.max(1)])
                    .collect();
                xs.dedup();
                // Even spacing can still collide; take the first K distinct.
                if xs.len() < k {
                    xs = distinct.into_iter().take(k).collect();
                }
            }
            Quantizer::from_1d(xs)
        }
        InitStrategy::SamplePp => {
            let pool: Vec<Vec<f64>> = if let Some(atoms) = m.atoms() {
                atoms.to_vec()
            } else {
                m.sample(10_000, stream.child(0))
            };
            sample_pp(&pool, k, stream.child(1))
        }
        InitStrategy::Given(q) => {
            if q.k() != k || q.dim() != m.dim() {
                return Err(Error::InvalidQuantizer(format!(
                    "given grid is {}x{}, wanted {}x{}",
                    q.k(),
                    q.dim(),
                    k,
                    m.dim()
                )));
            }
            Ok(q.clone())
        }
    }
}

/// k-means++ style seeding: first center uniform, next centers drawn with
/// probability proportional to squared distance from the chosen set.
fn sample_pp(pool: &[Vec<f64>], k: usize, stream: Stream) -> Result<Quantizer> {
    use rand::Rng;
    let mut rng = stream.rng();
    let mut centers: Vec<Vec<f64>> = vec![pool[rng.gen_range(0..pool.len())].clone()];
    let mut d2: Vec<f64> = pool.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut idx = pool.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if t < w {
                    idx = i;
                    break;
                }
                t -= w;
            }
            pool[idx].clone()
        } else {
            // All pool points coincide with chosen centers: support too small.
            return Err(Error::Domain(format!(
                "sample pool has fewer than {k} distinct points"
            )));
        };
        for (i, p) in pool.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &next));
        }
        centers.push(next);
    }
    Quantizer::new(centers)
}

/// One Lloyd update: move every center to the conditional mean of its cell.
/// Returns the new grid and the maximum center displacement.
fn lloyd_step(
    m: &Measure,
    x: &Quantizer,
    method: &EvalMethod,
) -> Result<(Quantizer, f64)> {
    let k = x.k();
    let d = x.dim();
    let mut new_pts = x.points().to_vec();
    match method {
        EvalMethod::Exact1d => {
            let xs = x.coords_1d();
            let cuts = x.cuts_1d();
            for i in 0..k {
                let a = if i == 0 { f64::NEG_INFINITY } else { cuts[i - 1] };
                let b = if i == k - 1 { f64::INFINITY } else { cuts[i] };
                let cm = m.cell_moments(a, b)?;
                if cm.mass > 0.0 {
                    new_pts[i][0] = cm.first / cm.mass;
                } else {
                    new_pts[i][0] = xs[i];
                }
            }
        }
        EvalMethod::Empirical | EvalMethod::MonteCarlo { .. } => {
            let owned;
            let pts: &[Vec<f64>] = match method {
                EvalMethod::Empirical => m.atoms().unwrap(),
                EvalMethod::MonteCarlo { n, stream } => {
                    owned = m.sample(*n, *stream);
                    &owned
                }
                _ => unreachable!(),
            };
            let mut count = vec![0usize; k];
            let mut sum = vec![vec![0.0; d]; k];
            for p in pts {
                let (i, _) = x.nearest(p);
                count[i] += 1;
                for c in 0..d {
                    sum[i][c] += p[c];
                }
            }
            for i in 0..k {
                if count[i] > 0 {
                    for c in 0..d {
                        new_pts[i][c] = sum[i][c] / count[i] as f64;
                    }
                }
            }
            // Empty-cell rule: re-seed dead centers at the point farthest
            // from its nearest current center.
            for i in 0..k {
                if count[i] == 0 {
                    let far = pts
                        .iter()
                        .max_by(|a, b| {
                            x.nearest(a).1.partial_cmp(&x.nearest(b).1).unwrap()
                        })
                        .unwrap();
                    new_pts[i] = far.clone();
                }
            }
        }
        EvalMethod::Quadrature2d => {
            let cells = crate::plane::cell_integrals_2d(m, x)?;
            for i in 0..k {
                if cells[i].mass > 0.0 {
                    for c in 0..d {
                        new_pts[i][c] = cells[i].first[c] / cells[i].mass;
                    }
                }
            }
        }
    }
    let mut disp = 0.0_f64;
    for i in 0..k {
        disp = disp.max(sq_dist(&new_pts[i], x.point(i)).sqrt());
    }
    Ok((Quantizer::new(new_pts)?, disp))
}

/// Lloyd-I fixed-point iteration. For Monte Carlo evaluation each iteration
/// draws from its own child stream, keeping the run reproducible.
pub fn lloyd(
    m: &Measure,
    init: &Quantizer,
    tol: f64,
    max_iter: usize,
    stream: Stream,
) -> Result<SolveResult> {
    let base = natural_method(m, stream);
    let mut x = init.clone();
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..max_iter {
        let method = match base {
            EvalMethod::MonteCarlo { n, .. } => EvalMethod::MonteCarlo {
                n,
                stream: stream.child(it as u64),
            },
            other => other,
        };
        let (next, disp) = lloyd_step(m, &x, &method)?;
        x = next;
        iterations = it + 1;
        if disp <= tol {
            converged = true;
            break;
        }
    }
    finish(m, x, iterations, converged, stream)
}

fn finish(
    m: &Measure,
    x: Quantizer,
    iterations: usize,
    converged: bool,
    stream: Stream,
) -> Result<SolveResult> {
    let method = natural_method(m, stream.child(u64::MAX));
    let d = distortion(&x, m, &method)?;
    let g = gradient(&x, m, &method)?;
    let gnorm = g
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(SolveResult {
        quantizer: x,
        distortion: d,
        iterations,
        converged,
        gradient_norm: gnorm,
    })
}

/// Solve the symmetric tridiagonal system T s = g (Thomas elimination).
/// Returns None when a pivot vanishes.
fn thomas_solve(t: &TridiagonalMatrix, g: &[f64]) -> Option<Vec<f64>> {
    let k = t.k();
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    let mut denom = t.diag[0];
    if denom.abs() < 1e-300 {
        return None;
    }
    if k > 1 {
        c[0] = t.off[0] / denom;
    }
    d[0] = g[0] / denom;
    for i in 1..k {
        denom = t.diag[i] - t.off[i - 1] * c[i - 1];
        if denom.abs() < 1e-300 {
            return None;
        }
        if i + 1 < k {
            c[i] = t.off[i] / denom;
        }
        d[i] = (g[i] - t.off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..k.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Damped Newton iteration on the exact 1D gradient/Hessian. Steps are
/// halved until the grid stays sorted and the distortion does not increase;
/// a failed or singular step falls back to one Lloyd iteration.
pub fn newton_1d(
    m: &Measure,
    init: &Quantizer,
    tol: f64,
    max_iter: usize,
) -> Result<SolveResult> {
    if m.dim() != 1 || !m.is_analytic() {
        return Err(Error::Unsupported("newton_1d needs a 1D analytic measure".into()));
    }
    let method = EvalMethod::Exact1d;
    let mut x = init.clone();
    let mut d0 = distortion(&x, m, &method)?;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..max_iter {
        let g: Vec<f64> = gradient(&x, m, &method)?.into_iter().map(|r| r[0]).collect();
        let gnorm = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gnorm <= tol {
            converged = true;
            break;
        }
        iterations = it + 1;
        let step = hessian_1d(&x, m).ok().and_then(|t| thomas_solve(&t, &g));
        let mut moved = false;
        if let Some(s) = step {
            let xs = x.coords_1d();
            let mut alpha = 1.0;
            for _ in 0..40 {
                let cand: Vec<f64> =
                    xs.iter().zip(&s).map(|(v, si)| v - alpha * si).collect();
                let sorted_strict = cand.windows(2).all(|w| w[0] < w[1]);
                if sorted_strict {
                    if let Ok(q) = Quantizer::from_1d(cand) {
                        let d1 = distortion(&q, m, &method)?;
                        if d1 <= d0 {
                            x = q;
                            d0 = d1;
                            moved = true;
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
        }
        if !moved {
            // Singular or non-descending Newton step: one Lloyd iteration.
            let (next, _) = lloyd_step(m, &x, &method)?;
            d0 = distortion(&next, m, &method)?;
            x = next;
        }
    }
    let g: Vec<f64> = gradient(&x, m, &method)?.into_iter().map(|r| r[0]).collect();
    let gnorm = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Ok(SolveResult {
        quantizer: x,
        distortion: d0,
        iterations,
        converged: converged || gnorm <= tol,
        gradient_norm: gnorm,
    })
}

/// Competitive learning vector quantization: at step t a sample moves its
/// nearest center by the step factor gamma_t = a / (b + t).
pub fn clvq(
    m: &Measure,
    init: &Quantizer,
    steps: usize,
    schedule: (f64, f64),
    stream: Stream,
) -> Result<SolveResult> {
    let (a, b) = schedule;
    if !(a > 0.0 && b >= 0.0) {
        return Err(Error::Domain("clvq schedule needs a > 0, b >= 0".into()));
    }
    let d = init.dim();
    let mut pts = init.points().to_vec();
    let draws = m.sample(steps, stream.child(0));
    let probe = Quantizer::new(pts.clone())?;
    let mut scratch = probe;
    for (t, xi) in draws.iter().enumerate() {
        let (w, _) = scratch.nearest(xi);
        let gamma = a / (b + (t + 1) as f64);
        for c in 0..d {
            pts[w][c] -= gamma * (pts[w][c] - xi[c]);
        }
        scratch = Quantizer::from_rows_unsorted(pts.clone())?;
    }
    let x = Quantizer::new(pts)?;
    let method = natural_method(m, stream.child(1));
    let dist = distortion(&x, m, &method)?;
    let g = gradient(&x, m, &method)?;
    let gnorm = g.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(SolveResult {
        quantizer: x,
        distortion: dist,
        iterations: steps,
        converged: false,
        gradient_norm: gnorm,
    })
}

#[derive(Debug, Clone)]
pub enum SolveMethod {
    Lloyd,
    Newton,
    Clvq { steps: usize, a: f64, b: f64 },
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: SolveMethod,
    pub init: InitStrategy,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolverConfig {
    /// Defaults: Lloyd from quantile (1D) / sample-pp seeding, tol 1e-10 for
    /// exact evaluation and 1e-8 for empirical, 10^4 iterations.
    pub fn default_for(m: &Measure) -> Self {
        let init = if m.dim() == 1 { InitStrategy::Quantile } else { InitStrategy::SamplePp };
        let tol = if m.is_empirical() { 1e-8 } else { 1e-10 };
        SolverConfig { method: SolveMethod::Lloyd, init, tol, max_iter: 10_000 }
    }
}

/// Run one configured solve.
pub fn solve(m: &Measure, k: usize, cfg: &SolverConfig, stream: Stream) -> Result<SolveResult> {
    let init = init_quantizer(m, k, &cfg.init, stream.child(0))?;
    match &cfg.method {
        SolveMethod::Lloyd => lloyd(m, &init, cfg.tol, cfg.max_iter, stream.child(1)),
        SolveMethod::Newton => newton_1d(m, &init, cfg.tol, cfg.max_iter),
        SolveMethod::Clvq { steps, a, b } => clvq(m, &init, *steps, (*a, *b), stream.child(1)),
    }
}

#[derive(Debug, Clone)]
pub struct BestOf {
    pub result: SolveResult,
    /// Estimated optimal quantization error sqrt(min distortion).
    pub e_star_hat: f64,
    /// Largest center norm of the best grid (lower estimate of the maximal
    /// radius of optimal quantizers).
    pub rho_hat: f64,
}

/// Multistart: run `restarts` independent solves in parallel and keep the
/// lowest distortion (ties broken by the lowest restart index).
pub fn best_of(
    m: &Measure,
    k: usize,
    restarts: usize,
    cfg: &SolverConfig,
    stream: Stream,
) -> Result<BestOf> {
    if restarts == 0 {
        return Err(Error::Domain("best_of needs at least one restart".into()));
    }
    let runs: Vec<(usize, Result<SolveResult>)> = (0..restarts)
        .into_par_iter()
        .map(|r| (r, solve(m, k, cfg, stream.child(r as u64))))
        .collect();
    let mut best: Option<(usize, SolveResult)> = None;
    for (r, res) in runs {
        let res = res?;
        let better = match &best {
            None => true,
            Some((_, b)) => res.distortion < b.distortion,
        };
        if better {
            best = Some((r, res));
        }
    }
    let (_, result) = best.unwrap();
    Ok(BestOf {
        e_star_hat: result.distortion.max(0.0).sqrt(),
        rho_hat: result.quantizer.max_norm(),
        result,
    })
}

/// Exact optimal 1D k-means of an empirical measure by dynamic programming
/// with divide-and-conquer split monotonicity. Returns the sorted optimal
/// centers and the (global-minimum) distortion.
pub fn kmeans_1d_optimal(m: &Measure, k: usize) -> Result<(Quantizer, f64)> {
    let atoms = m
        .atoms_sorted_1d()
        .ok_or_else(|| Error::Unsupported("kmeans_1d_optimal needs a 1D empirical measure".into()))?;
    let n = atoms.len();
    let mut distinct = atoms.to_vec();
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::Domain(format!(
            "only {} distinct atoms for K = {k}",
            distinct.len()
        )));
    }
    // Prefix sums for O(1) within-cluster cost.
    let mut ps = vec![0.0; n + 1];
    let mut ps2 = vec![0.0; n + 1];
    for (i, &x) in atoms.iter().enumerate() {
        ps[i + 1] = ps[i] + x;
        ps2[i + 1] = ps2[i] + x * x;
    }
    // cost of atoms[i..j] clustered to their mean.
    let cost = |i: usize, j: usize| -> f64 {
        if j <= i {
            return 0.0;
        }
        let cnt = (j - i) as f64;
        let s = ps[j] - ps[i];
        (ps2[j] - ps2[i] - s * s / cnt).max(0.0)
    };
    let inf = f64::INFINITY;
    let mut prev: Vec<f64> = (0..=n).map(|j| if j == 0 { inf } else { cost(0, j) }).collect();
    prev[0] = 0.0;
    let mut splits: Vec<Vec<usize>> = vec![vec![0; n + 1]];
    for _layer in 2..=k {
        let mut cur = vec![inf; n + 1];
        let mut opt = vec![0usize; n + 1];
        // Divide and conquer over j with monotone optimal split index.
        fn rec(
            jlo: usize,
            jhi: usize,
            ilo: usize,
            ihi: usize,
            prev: &[f64],
            cur: &mut [f64],
            opt: &mut [usize],
            cost: &dyn Fn(usize, usize) -> f64,
        ) {
            if jlo > jhi {
                return;
            }
            let j = (jlo + jhi) / 2;
            let mut best = (f64::INFINITY, ilo);
            for i in ilo..=ihi.min(j.saturating_sub(1)) {
                if prev[i] == f64::INFINITY {
                    continue;
                }
                let v = prev[i] + cost(i, j);
                if v < best.0 {
                    best = (v, i);
                }
            }
            cur[j] = best.0;
            opt[j] = best.1;
            if j > jlo {
                rec(jlo, j - 1, ilo, best.1, prev, cur, opt, cost);
            }
            if j < jhi {
                rec(j + 1, jhi, best.1, ihi, prev, cur, opt, cost);
            }
        }
        rec(1, n, 1, n - 1, &prev, &mut cur, &mut opt, &cost);
        splits.push(opt);
        prev = cur;
    }
    // Recover cluster boundaries.
    let mut ends = vec![n];
    let mut j = n;
    for layer in (1..k).rev() {
        j = splits[layer][j];
        ends.push(j);
    }
    ends.reverse();
    let mut centers = Vec::with_capacity(k);
    let mut start = 0;
    for &e in &ends {
        let cnt = (e - start) as f64;
        centers.push((ps[e] - ps[start]) / cnt);
        start = e;
    }
    // Duplicate atoms can make adjacent clusters share a mean only when the
    // cluster is a single repeated value; distinctness was checked above.
    let q = Quantizer::from_1d(centers)?;
    Ok((q, prev[n] / n as f64))
}
