//! Wasserstein distances, exact where tractable.
//!
//! 1D distances use the quantile coupling. Between an empirical and an
//! analytic measure the integral is evaluated in closed form through partial
//! moments (no quadrature error); between two analytic measures an adaptive
//! quadrature over the unit interval is used. In higher dimension,
//! empirical-empirical W2 is solved exactly as an assignment problem, and a
//! Gaussian-Gaussian closed form serves as a test oracle.

use crate::error::{Error, Result};
use crate::measures::{Kind, Measure};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportMethod {
    Quantile1d,
    Sorted,
    Assignment,
    GaussianClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportResult {
    pub distance: f64,
    pub p: u32,
    pub method: TransportMethod,
}

/// Largest assignment problem solved exactly (O(n^3)).
pub const ASSIGNMENT_MAX_N: usize = 512;

/// W_p between two 1D measures via the quantile coupling, p in {1, 2}.
pub fn w_p_1d(mu: &Measure, nu: &Measure, p: u32) -> Result<TransportResult> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(Error::Unsupported("w_p_1d needs two 1D measures".into()));
    }
    if p != 1 && p != 2 {
        return Err(Error::Domain(format!("w_p_1d supports p in {{1, 2}}, got {p}")));
    }
    let integral = match (mu.is_empirical(), nu.is_empirical()) {
        (true, true) => empirical_pair(mu, nu, p),
        (true, false) => empirical_analytic(mu, nu, p)?,
        (false, true) => empirical_analytic(nu, mu, p)?,
        (false, false) => analytic_pair(mu, nu, p)?,
    };
    Ok(TransportResult {
        distance: integral.max(0.0).powf(1.0 / p as f64),
        p,
        method: TransportMethod::Quantile1d,
    })
}

/// Exact integral for two empirical measures: quantiles are step functions
/// constant between the merged jump points i/na, j/nb.
fn empirical_pair(mu: &Measure, nu: &Measure, p: u32) -> f64 {
    let a = mu.atoms_sorted_1d().unwrap();
    let b = nu.atoms_sorted_1d().unwrap();
    let (na, nb) = (a.len(), b.len());
    let mut total = 0.0;
    let mut u = 0.0;
    let (mut ia, mut ib) = (0usize, 0usize);
    while u < 1.0 {
        let next_a = (ia + 1) as f64 / na as f64;
        let next_b = (ib + 1) as f64 / nb as f64;
        let next = next_a.min(next_b).min(1.0);
        let diff = (a[ia.min(na - 1)] - b[ib.min(nb - 1)]).abs();
        total += diff.powi(p as i32) * (next - u);
        if next_a <= next_b {
            ia += 1;
        }
        if next_b <= next_a {
            ib += 1;
        }
        u = next;
    }
    total
}

/// Exact integral between an empirical measure (atoms) and an analytic one:
/// on each quantile piece [i/n, (i+1)/n] the empirical quantile is the
/// constant atom and the analytic part integrates in closed form through
/// cell moments.
fn empirical_analytic(emp: &Measure, ana: &Measure, p: u32) -> Result<f64> {
    let atoms = emp.atoms_sorted_1d().unwrap();
    let n = atoms.len();
    let q = |u: f64| -> Result<f64> {
        if u <= 0.0 {
            Ok(f64::NEG_INFINITY)
        } else if u >= 1.0 {
            Ok(f64::INFINITY)
        } else {
            ana.quantile(u)
        }
    };
    let mut total = 0.0;
    for (i, &x) in atoms.iter().enumerate() {
        let ua = i as f64 / n as f64;
        let ub = (i + 1) as f64 / n as f64;
        let (qa, qb) = (q(ua)?, q(ub)?);
        if p == 2 {
            let cm = ana.cell_moments(qa, qb)?;
            total += cm.second - 2.0 * x * cm.first + x * x * cm.mass;
        } else {
            // Split at the crossing u* = F(x); below it q(u) <= x.
            let uc = ana.cdf(x)?.clamp(ua, ub);
            let qc = q(uc)?;
            let left = ana.cell_moments(qa, qc)?;
            let right = ana.cell_moments(qc, qb)?;
            total += (x * left.mass - left.first) + (right.first - x * right.mass);
        }
    }
    Ok(total)
}

/// Quadrature between two analytic 1D measures. Unbounded quantiles force a
/// tiny endpoint truncation; the residual is far below the 1e-8 target.
fn analytic_pair(mu: &Measure, nu: &Measure, p: u32) -> Result<f64> {
    let bounded = |m: &Measure| matches!(m.kind(), Kind::Uniform1d { .. });
    let eps = if bounded(mu) && bounded(nu) { 0.0 } else { 1e-12 };
    let f = |u: f64| {
        let d = (mu.quantile(u).unwrap() - nu.quantile(u).unwrap()).abs();
        d.powi(p as i32)
    };
    Ok(quad::integrate(f, eps, 1.0 - eps, 1e-11))
}

/// Exact W_p between two equal-size 1D empirical samples by sorting.
pub fn w_p_sorted(a: &Measure, b: &Measure, p: u32) -> Result<TransportResult> {
    let (xa, xb) = match (a.atoms_sorted_1d(), b.atoms_sorted_1d()) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            return Err(Error::Unsupported(
                "w_p_sorted needs two 1D empirical measures".into(),
            ))
        }
    };
    if xa.len() != xb.len() {
        return Err(Error::Domain(format!(
            "w_p_sorted needs equal sizes, got {} and {}",
            xa.len(),
            xb.len()
        )));
    }
    if p != 1 && p != 2 {
        return Err(Error::Domain(format!("w_p_sorted supports p in {{1, 2}}, got {p}")));
    }
    let n = xa.len() as f64;
    let s: f64 = xa
        .iter()
        .zip(xb)
        .map(|(u, v)| (u - v).abs().powi(p as i32))
        .sum::<f64>()
        / n;
    Ok(TransportResult {
        distance: s.powf(1.0 / p as f64),
        p,
        method: TransportMethod::Sorted,
    })
}

/// Exact W2 between two equal-size empirical clouds in any dimension, by
/// optimal assignment on the squared-distance matrix.
pub fn w2_assignment(a: &Measure, b: &Measure) -> Result<TransportResult> {
    let (pa, pb) = match (a.atoms(), b.atoms()) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            return Err(Error::Unsupported(
                "w2_assignment needs two empirical measures".into(),
            ))
        }
    };
    if pa.len() != pb.len() {
        return Err(Error::Domain(format!(
            "w2_assignment needs equal sizes, got {} and {}",
            pa.len(),
            pb.len()
        )));
    }
    if pa[0].len() != pb[0].len() {
        return Err(Error::Domain("w2_assignment: dimension mismatch".into()));
    }
    let n = pa.len();
    if n > ASSIGNMENT_MAX_N {
        return Err(Error::SizeLimit(format!(
            "assignment limited to n <= {ASSIGNMENT_MAX_N}, got {n}"
        )));
    }
    let cost: Vec<Vec<f64>> = pa
        .iter()
        .map(|u| pb.iter().map(|v| crate::quantizer::sq_dist(u, v)).collect())
        .collect();
    let total = assignment_min_cost(&cost);
    Ok(TransportResult {
        distance: (total / n as f64).max(0.0).sqrt(),
        p: 2,
        method: TransportMethod::Assignment,
    })
}

/// Minimum-cost perfect assignment (Hungarian algorithm with potentials,
/// shortest-augmenting-path formulation, O(n^3)).
pub(crate) fn assignment_min_cost(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| cost[p[j] - 1][j - 1]).sum()
}

/// Closed-form W2 between Gaussian measures (1D or same-dimension Nd):
/// sqrt(|m1 - m2|^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})).
pub fn w2_gaussian(g1: &Measure, g2: &Measure) -> Result<TransportResult> {
    let as_nd = |m: &Measure| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        match m.kind() {
            Kind::Gaussian1d { mean, sd } => Ok((vec![*mean], vec![vec![sd * sd]])),
            Kind::GaussianNd { mean, cov } => Ok((mean.clone(), cov.clone())),
            _ => Err(Error::Unsupported("w2_gaussian needs Gaussian measures".into())),
        }
    };
    let (m1, s1) = as_nd(g1)?;
    let (m2, s2) = as_nd(g2)?;
    if m1.len() != m2.len() {
        return Err(Error::Domain("w2_gaussian: dimension mismatch".into()));
    }
    let d = m1.len();
    let mean2: f64 = m1.iter().zip(&m2).map(|(a, b)| (a - b) * (a - b)).sum();
    let bures = if d == 1 {
        let (a, b) = (s1[0][0].sqrt(), s2[0][0].sqrt());
        (a - b) * (a - b)
    } else {
        let r1 = mat_sqrt_psd(&s1);
        let inner = matmul(&matmul(&r1, &s2), &r1);
        let cross = mat_sqrt_psd(&inner);
        let tr = |m: &[Vec<f64>]| (0..d).map(|i| m[i][i]).sum::<f64>();
        tr(&s1) + tr(&s2) - 2.0 * tr(&cross)
    };
    Ok(TransportResult {
        distance: (mean2 + bures.max(0.0)).sqrt(),
        p: 2,
        method: TransportMethod::GaussianClosedForm,
    })
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvector columns).
pub(crate) fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        v[i][i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Symmetric positive semidefinite square root via the eigendecomposition.
fn mat_sqrt_psd(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let (vals, vecs) = jacobi_eigen(m.to_vec());
    let mut out = vec![vec![0.0; n]; n];
    for k in 0..n {
        let s = vals[k].max(0.0).sqrt();
        for i in 0..n {
            for j in 0..n {
                out[i][j] += s * vecs[i][k] * vecs[j][k];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn emp(xs: &[f64]) -> Measure {
        Measure::empirical(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let g = Measure::gaussian(0.3, 1.2).unwrap();
        assert!(w_p_1d(&g, &g, 2).unwrap().distance < 1e-9);
        let e = emp(&[0.0, 1.0, 3.0]);
        assert_eq!(w_p_1d(&e, &e, 2).unwrap().distance, 0.0);
    }

    #[test]
    fn translation_distance() {
        let a = Measure::gaussian(0.0, 1.0).unwrap();
        let b = Measure::gaussian(2.5, 1.0).unwrap();
        assert_relative_eq!(w_p_1d(&a, &b, 2).unwrap().distance, 2.5, max_relative = 1e-8);
        assert_relative_eq!(w_p_1d(&a, &b, 1).unwrap().distance, 2.5, max_relative = 1e-8);
    }

    #[test]
    fn empirical_vs_uniform_closed_form() {
        // {0, 1} vs U(0,1): integral of u^2 on (0,1/2) plus (u-1)^2 on (1/2,1)
        // equals 1/12.
        let e = emp(&[0.0, 1.0]);
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let r = w_p_1d(&e, &u, 2).unwrap();
        assert_relative_eq!(r.distance, (1.0 / 12.0_f64).sqrt(), max_relative = 1e-12);
        // p = 1: integral of |u| and |u-1| halves: 1/4.
        let r1 = w_p_1d(&e, &u, 1).unwrap();
        assert_relative_eq!(r1.distance, 0.25, max_relative = 1e-12);
    }

    #[test]
    fn sorted_coupling() {
        let a = emp(&[0.0, 1.0]);
        let b = emp(&[1.0, 2.0]);
        let r = w_p_sorted(&a, &b, 2).unwrap();
        assert_relative_eq!(r.distance, 1.0, max_relative = 1e-14);
        // Agrees with the quantile form.
        let q = w_p_1d(&a, &b, 2).unwrap();
        assert_relative_eq!(r.distance, q.distance, max_relative = 1e-12);
        assert!(w_p_sorted(&a, &emp(&[0.0]), 2).is_err());
    }

    #[test]
    fn assignment_small_cases() {
        let a = Measure::empirical(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = Measure::empirical(vec![vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_relative_eq!(w2_assignment(&a, &b).unwrap().distance, 1.0, max_relative = 1e-12);
        let x = Measure::empirical(vec![vec![0.0]]).unwrap();
        let y = Measure::empirical(vec![vec![3.0]]).unwrap();
        assert_relative_eq!(w2_assignment(&x, &y).unwrap().distance, 3.0, max_relative = 1e-14);
    }

    #[test]
    fn assignment_matches_brute_force() {
        use rand::Rng;
        let mut rng = crate::stream::Stream::new(17).rng();
        for _ in 0..20 {
            let n = 5;
            let pa: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let pb: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let cost: Vec<Vec<f64>> = pa
                .iter()
                .map(|u| pb.iter().map(|v| crate::quantizer::sq_dist(u, v)).collect())
                .collect();
            let fast = assignment_min_cost(&cost);
            // Brute force over permutations.
            let mut idx: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut idx, 0, &mut |perm| {
                let c: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                if c < best {
                    best = c;
                }
            });
            assert_relative_eq!(fast, best, max_relative = 1e-10);
        }
    }

    fn permute(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == idx.len() {
            f(idx);
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, f);
            idx.swap(k, i);
        }
    }

    #[test]
    fn assignment_size_limit() {
        let big: Vec<Vec<f64>> = (0..600).map(|i| vec![i as f64]).collect();
        let a = Measure::empirical(big.clone()).unwrap();
        let b = Measure::empirical(big).unwrap();
        assert!(matches!(w2_assignment(&a, &b), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn gaussian_closed_form() {
        let a = Measure::gaussian(0.0, 1.0).unwrap();
        let b = Measure::gaussian(0.0, 2.0).unwrap();
        assert_relative_eq!(w2_gaussian(&a, &b).unwrap().distance, 1.0, max_relative = 1e-12);
        // Pure translation in 2D.
        let i2 = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g1 = Measure::gaussian_nd(vec![0.0, 0.0], i2.clone()).unwrap();
        let g2 = Measure::gaussian_nd(vec![3.0, 4.0], i2).unwrap();
        assert_relative_eq!(w2_gaussian(&g1, &g2).unwrap().distance, 5.0, max_relative = 1e-12);
        assert_eq!(w2_gaussian(&a, &a).unwrap().distance, 0.0);
    }

    #[test]
    fn gaussian_matches_quantile_quadrature() {
        let a = Measure::gaussian(0.4, 1.3).unwrap();
        let b = Measure::gaussian(-0.7, 0.6).unwrap();
        let cf = w2_gaussian(&a, &b).unwrap().distance;
        let qq = w_p_1d(&a, &b, 2).unwrap().distance;
        assert_relative_eq!(cf, qq, max_relative = 1e-7);
    }

    #[test]
    fn anisotropic_bures_2d() {
        // Diagonal covariances: W2^2 = sum over axes of (sqrt(l1) - sqrt(l2))^2.
        let g1 = Measure::gaussian_nd(vec![0.0, 0.0], vec![vec![4.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        let g2 = Measure::gaussian_nd(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 9.0]])
            .unwrap();
        let expect = ((2.0_f64 - 1.0).powi(2) + (1.0_f64 - 3.0).powi(2)).sqrt();
        assert_relative_eq!(
            w2_gaussian(&g1, &g2).unwrap().distance,
            expect,
            max_relative = 1e-10
        );
    }

    #[test]
    fn monotone_in_p() {
        let a = emp(&[0.0, 0.3, 1.1, 2.0]);
        let b = Measure::gaussian(0.5, 0.8).unwrap();
        let w1 = w_p_1d(&a, &b, 1).unwrap().distance;
        let w2 = w_p_1d(&a, &b, 2).unwrap().distance;
        assert!(w1 <= w2 + 1e-9, "w1 {w1} > w2 {w2}");
    }

    #[test]
    fn empirical_quantile_convergence() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for &n in &[100usize, 1000, 10_000] {
            let mut meds: Vec<f64> = (0..9)
                .map(|s| {
                    let pts = u.sample(n, crate::stream::Stream::new(700 + s));
                    let e = Measure::empirical(pts).unwrap();
                    w_p_1d(&e, &u, 2).unwrap().distance
                })
                .collect();
            meds.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let med = meds[4];
            assert!(med < prev, "median W2 did not decrease at n = {n}");
            prev = med;
        }
    }
}
