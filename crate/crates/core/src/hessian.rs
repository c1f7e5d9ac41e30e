//! Distortion Hessians and positive-definiteness certificates.
//!
//! In 1D the Hessian is symmetric tridiagonal with closed-form entries
//! (cell masses and midpoint density values). In the plane it is assembled
//! from boundary integrals over shared Voronoi facets. A finite-difference
//! oracle cross-validates both. Certificates report leading minors, row
//! excesses L_i, and a minimum-eigenvalue bound computed by Sturm bisection.

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::plane;
use crate::quad;
use crate::quantizer::{distortion, EvalMethod, Quantizer};

/// Symmetric tridiagonal matrix: `diag` has length K, `off` length K-1.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn k(&self) -> usize {
        self.diag.len()
    }

    /// Row sums (the L_i row-excess values).
    pub fn row_sums(&self) -> Vec<f64> {
        let k = self.k();
        (0..k)
            .map(|i| {
                let mut s = self.diag[i];
                if i > 0 {
                    s += self.off[i - 1];
                }
                if i + 1 < k {
                    s += self.off[i];
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let k = self.k();
        let mut m = vec![vec![0.0; k]; k];
        for i in 0..k {
            m[i][i] = self.diag[i];
            if i + 1 < k {
                m[i][i + 1] = self.off[i];
                m[i + 1][i] = self.off[i];
            }
        }
        m
    }
}

fn reject_degenerate(x: &Quantizer) -> Result<()> {
    if x.k() >= 2 {
        let scale = x.max_norm().max(1.0);
        if x.min_separation() < 1e-8 * scale {
            return Err(Error::InvalidQuantizer(
                "centers too close for a stable Hessian (separation < 1e-8 * scale)".into(),
            ));
        }
    }
    Ok(())
}

/// Exact 1D Hessian of the distortion at a sorted grid:
/// A_i = 2 mu(C_i) from CDF differences, B_{i,j} = (x_j - x_i)/2 * f(midpoint),
/// diagonal A_i - B_{i-1,i} - B_{i,i+1}, off-diagonal -B_{i,i+1}.
pub fn hessian_1d(x: &Quantizer, m: &Measure) -> Result<TridiagonalMatrix> {
    if x.dim() != 1 || m.dim() != 1 || !m.is_analytic() {
        return Err(Error::Unsupported(
            "hessian_1d needs a 1D analytic measure and 1D quantizer".into(),
        ));
    }
    reject_degenerate(x)?;
    let xs = x.coords_1d();
    let cuts = x.cuts_1d();
    let k = x.k();
    let mut a = vec![0.0; k];
    for i in 0..k {
        let lo = if i == 0 { 0.0 } else { m.cdf(cuts[i - 1])? };
        let hi = if i == k - 1 { 1.0 } else { m.cdf(cuts[i])? };
        a[i] = 2.0 * (hi - lo);
    }
    let mut b = vec![0.0; k.saturating_sub(1)];
    for i in 0..k.saturating_sub(1) {
        b[i] = 0.5 * (xs[i + 1] - xs[i]) * m.pdf(&[cuts[i]])?;
    }
    let mut diag = a;
    for i in 0..k {
        if i > 0 {
            diag[i] -= b[i - 1];
        }
        if i + 1 < k {
            diag[i] -= b[i];
        }
    }
    Ok(TridiagonalMatrix {
        diag,
        off: b.iter().map(|v| -v).collect(),
    })
}

/// 2D Hessian with a validity flag.
#[derive(Debug, Clone)]
pub struct Hessian2d {
    /// Dense (2K) x (2K) symmetric matrix, blocks ordered by center index.
    pub matrix: Vec<Vec<f64>>,
    /// True when the measure is box-uniform and some Voronoi facet touches
    /// the box boundary: the density is discontinuous there and the formula's
    /// smoothness hypothesis fails, so the result is indicative only.
    pub boundary_flagged: bool,
}

/// Hessian of the distortion for a 2D analytic measure, assembled from
/// boundary integrals over shared Voronoi facets.
///
/// `truncation` overrides the half-width of the integration box around the
/// measure's mean; by default the measure's effective support box is used.
pub fn hessian_2d_boundary(
    x: &Quantizer,
    m: &Measure,
    truncation: Option<f64>,
) -> Result<Hessian2d> {
    if x.dim() != 2 || m.dim() != 2 || !m.is_analytic() {
        return Err(Error::Unsupported(
            "hessian_2d_boundary needs a 2D analytic measure and 2D quantizer".into(),
        ));
    }
    reject_degenerate(x)?;
    let (lo, hi) = match truncation {
        Some(r) => {
            if !(r > 0.0) {
                return Err(Error::Domain("truncation radius must be positive".into()));
            }
            let c = m.mean();
            (vec![c[0] - r, c[1] - r], vec![c[0] + r, c[1] + r])
        }
        None => m.support_box(),
    };
    let k = x.k();
    let n = 2 * k;
    let mut h = vec![vec![0.0; n]; n];
    let is_box = matches!(m.kind(), crate::measures::Kind::UniformBox { .. });
    let mut flagged = false;

    // Diagonal blocks start from 2 mu(V_i) I; facet integrals are subtracted.
    let cells = plane::cell_integrals_2d(m, x)?;
    for i in 0..k {
        h[2 * i][2 * i] = 2.0 * cells[i].mass;
        h[2 * i + 1][2 * i + 1] = 2.0 * cells[i].mass;
    }

    let scale = (1.0 + m.second_moment()).sqrt();
    for i in 0..k {
        for j in (i + 1)..k {
            let Some((p0, p1, box_active)) = plane::facet_segment(x, i, j, &lo, &hi) else {
                continue;
            };
            if is_box && box_active {
                flagged = true;
            }
            let (xi, xj) = (x.point(i).to_vec(), x.point(j).to_vec());
            let dist = crate::quantizer::sq_dist(&xi, &xj).sqrt();
            let seg_len = crate::quantizer::sq_dist(&p0.to_vec(), &p1.to_vec()).sqrt();
            if seg_len == 0.0 {
                continue;
            }
            // Parametrize the facet by arclength t in [0, seg_len].
            let dir = [(p1[0] - p0[0]) / seg_len, (p1[1] - p0[1]) / seg_len];
            let at = |t: f64| [p0[0] + t * dir[0], p0[1] + t * dir[1]];
            let tol = 1e-12 * scale;
            // Cross block (a, b): entry of (x_i - xi) (x_j - xi)^T / |x_j - x_i|.
            let mut cross = [[0.0; 2]; 2];
            // Self terms for both diagonal blocks: (x - xi)(x - xi)^T / dist.
            let mut self_i = [[0.0; 2]; 2];
            let mut self_j = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    cross[a][b] = quad::integrate(
                        |t| {
                            let p = at(t);
                            let f = m.pdf(&p).unwrap_or(0.0);
                            (xi[a] - p[a]) * (xj[b] - p[b]) / dist * f
                        },
                        0.0,
                        seg_len,
                        tol,
                    );
                    if b >= a {
                        self_i[a][b] = quad::integrate(
                            |t| {
                                let p = at(t);
                                let f = m.pdf(&p).unwrap_or(0.0);
                                (xi[a] - p[a]) * (xi[b] - p[b]) / dist * f
                            },
                            0.0,
                            seg_len,
                            tol,
                        );
                        self_j[a][b] = quad::integrate(
                            |t| {
                                let p = at(t);
                                let f = m.pdf(&p).unwrap_or(0.0);
                                (xj[a] - p[a]) * (xj[b] - p[b]) / dist * f
                            },
                            0.0,
                            seg_len,
                            tol,
                        );
                    }
                }
            }
            self_i[1][0] = self_i[0][1];
            self_j[1][0] = self_j[0][1];
            for a in 0..2 {
                for b in 0..2 {
                    h[2 * i + a][2 * j + b] = 2.0 * cross[a][b];
                    h[2 * j + b][2 * i + a] = 2.0 * cross[a][b];
                    h[2 * i + a][2 * i + b] -= 2.0 * self_i[a][b];
                    h[2 * j + a][2 * j + b] -= 2.0 * self_j[a][b];
                }
            }
        }
    }
    Ok(Hessian2d { matrix: h, boundary_flagged: flagged })
}

/// Finite-difference Hessian of the distortion: central second differences,
/// symmetrized. Works for any measure/method pairing the distortion accepts.
pub fn fd_hessian(
    x: &Quantizer,
    m: &Measure,
    method: &EvalMethod,
    step: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("fd step must be positive, got {step}")));
    }
    let (k, d) = (x.k(), x.dim());
    let n = k * d;
    let base = x.points().to_vec();
    // Evaluate distortion at a perturbed copy of the grid without re-sorting,
    // so coordinates keep their row identity.
    let eval = |deltas: &[(usize, f64)]| -> Result<f64> {
        let mut pts = base.clone();
        for &(idx, dv) in deltas {
            pts[idx / d][idx % d] += dv;
        }
        let q = Quantizer::from_rows_unsorted(pts)?;
        distortion(&q, m, method)
    };
    let f0 = eval(&[])?;
    let mut h = vec![vec![0.0; n]; n];
    for a in 0..n {
        let fp = eval(&[(a, step)])?;
        let fm = eval(&[(a, -step)])?;
        h[a][a] = (fp - 2.0 * f0 + fm) / (step * step);
        for b in (a + 1)..n {
            let fpp = eval(&[(a, step), (b, step)])?;
            let fpm = eval(&[(a, step), (b, -step)])?;
            let fmp = eval(&[(a, -step), (b, step)])?;
            let fmm = eval(&[(a, -step), (b, -step)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            h[a][b] = v;
            h[b][a] = v;
        }
    }
    Ok(h)
}

/// Positive-definiteness certificate for a symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PdCertificate {
    pub positive_definite: bool,
    pub leading_minors: Vec<f64>,
    /// Row sums L_i; all positive implies positive definiteness (Gershgorin
    /// with nonpositive off-diagonal entries).
    pub row_excess: Vec<f64>,
    /// Minimum eigenvalue, located by Sturm-sequence bisection to 1e-10.
    pub lambda_star: f64,
}

/// Number of eigenvalues of T strictly below `t` (Sturm sequence count).
fn count_below(t: &TridiagonalMatrix, lam: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..t.k() {
        let off2 = if i == 0 { 0.0 } else { t.off[i - 1] * t.off[i - 1] };
        q = t.diag[i] - lam - if q != 0.0 { off2 / q } else { off2 / 1e-300 };
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix.
pub fn min_eigenvalue(t: &TridiagonalMatrix) -> f64 {
    // Gershgorin bracket.
    let k = t.k();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let mut r = 0.0;
        if i > 0 {
            r += t.off[i - 1].abs();
        }
        if i + 1 < k {
            r += t.off[i].abs();
        }
        lo = lo.min(t.diag[i] - r);
        hi = hi.max(t.diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let mut a = lo - 1e-12 * scale;
    let mut b = hi;
    // Invariant: no eigenvalue below a; at least one below b + epsilon.
    for _ in 0..200 {
        if b - a <= 1e-10 * scale.min(1.0) + 1e-14 * scale {
            break;
        }
        let mid = 0.5 * (a + b);
        if count_below(t, mid) == 0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

pub fn pd_certificate(t: &TridiagonalMatrix) -> PdCertificate {
    let k = t.k();
    // Leading principal minors by the three-term recurrence.
    let mut minors = Vec::with_capacity(k);
    let mut fm2 = 1.0;
    let mut fm1 = 1.0;
    for i in 0..k {
        let off2 = if i == 0 { 0.0 } else { t.off[i - 1] * t.off[i - 1] };
        let f = t.diag[i] * fm1 - off2 * fm2;
        minors.push(f);
        fm2 = fm1;
        fm1 = f;
    }
    let lambda_star = min_eigenvalue(t);
    PdCertificate {
        positive_definite: minors.iter().all(|&f| f > 0.0),
        leading_minors: minors,
        row_excess: t.row_sums(),
        lambda_star,
    }
}
