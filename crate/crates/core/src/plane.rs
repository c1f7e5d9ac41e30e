//! Planar Voronoi geometry and semi-analytic cell integrals.
//!
//! Voronoi cells of a 2D quantizer are built by half-plane clipping of the
//! measure's effective support box. Over each (convex) cell polygon the
//! module integrates mass, first moment and the radial second moment:
//! exactly via polygon moment formulas for box-uniform measures, and by
//! y-slicing with closed-form conditional-Gaussian inner integrals for 2D
//! Gaussians (only a one-dimensional adaptive quadrature remains).

use crate::error::{Error, Result};
use crate::measures::{gaussian_cell, Kind, Measure};
use crate::quad;
use crate::quantizer::Quantizer;

pub type Pt = [f64; 2];

/// Clip a convex polygon against the half-plane { p : n . p <= c }.
/// Vertex order is preserved (Sutherland-Hodgman, single plane).
pub fn clip_halfplane(poly: &[Pt], n: Pt, c: f64) -> Vec<Pt> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let inside = |p: &Pt| n[0] * p[0] + n[1] * p[1] <= c;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ia, ib) = (inside(&a), inside(&b));
        if ia {
            out.push(a);
        }
        if ia != ib {
            let da = n[0] * a[0] + n[1] * a[1] - c;
            let db = n[0] * b[0] + n[1] * b[1] - c;
            let t = da / (da - db);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Rectangle as a counter-clockwise polygon.
pub fn rect_polygon(lo: &[f64], hi: &[f64]) -> Vec<Pt> {
    vec![
        [lo[0], lo[1]],
        [hi[0], lo[1]],
        [hi[0], hi[1]],
        [lo[0], hi[1]],
    ]
}

/// Half-plane of points at least as close to `xi` as to `xj`:
/// (xj - xi) . p <= (|xj|^2 - |xi|^2) / 2.
fn bisector_halfplane(xi: &[f64], xj: &[f64]) -> (Pt, f64) {
    let n = [xj[0] - xi[0], xj[1] - xi[1]];
    let c = 0.5 * (xj[0] * xj[0] + xj[1] * xj[1] - xi[0] * xi[0] - xi[1] * xi[1]);
    (n, c)
}

/// Voronoi cell of center `i`, clipped to the rectangle [lo, hi].
pub fn voronoi_polygon(x: &Quantizer, i: usize, lo: &[f64], hi: &[f64]) -> Vec<Pt> {
    let mut poly = rect_polygon(lo, hi);
    for j in 0..x.k() {
        if j == i {
            continue;
        }
        let (n, c) = bisector_halfplane(x.point(i), x.point(j));
        poly = clip_halfplane(&poly, n, c);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// True if any vertex of the polygon lies on the rectangle boundary
/// (within tolerance): the cell was truncated by the box.
pub fn touches_rect(poly: &[Pt], lo: &[f64], hi: &[f64], tol: f64) -> bool {
    poly.iter().any(|p| {
        (p[0] - lo[0]).abs() <= tol
            || (p[0] - hi[0]).abs() <= tol
            || (p[1] - lo[1]).abs() <= tol
            || (p[1] - hi[1]).abs() <= tol
    })
}

/// The shared Voronoi facet between centers i and j inside [lo, hi], as a
/// segment on the bisector line, or None if the cells are not neighbors.
/// The boolean is true when the segment was truncated by the rectangle.
pub fn facet_segment(
    x: &Quantizer,
    i: usize,
    j: usize,
    lo: &[f64],
    hi: &[f64],
) -> Option<(Pt, Pt, bool)> {
    let (xi, xj) = (x.point(i), x.point(j));
    let mid = [0.5 * (xi[0] + xj[0]), 0.5 * (xi[1] + xj[1])];
    let dir = [xj[0] - xi[0], xj[1] - xi[1]];
    let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    // Unit tangent of the bisector line.
    let u = [-dir[1] / len, dir[0] / len];
    // Parametrize p(t) = mid + t u and clip the t-interval.
    // Clip the t-interval by the linear constraint a * t <= b.
    fn clip(iv: &mut (f64, f64), a: f64, b: f64) {
        if a.abs() < 1e-300 {
            if b < 0.0 {
                *iv = (1.0, 0.0);
            }
        } else if a > 0.0 {
            iv.1 = iv.1.min(b / a);
        } else {
            iv.0 = iv.0.max(b / a);
        }
    }
    let mut iv = (f64::NEG_INFINITY, f64::INFINITY);
    for l in 0..x.k() {
        if l == i || l == j {
            continue;
        }
        let (n, c) = bisector_halfplane(xi, x.point(l));
        clip(&mut iv, n[0] * u[0] + n[1] * u[1], c - n[0] * mid[0] - n[1] * mid[1]);
    }
    let before = iv;
    clip(&mut iv, u[0], hi[0] - mid[0]);
    clip(&mut iv, -u[0], mid[0] - lo[0]);
    clip(&mut iv, u[1], hi[1] - mid[1]);
    clip(&mut iv, -u[1], mid[1] - lo[1]);
    let box_active = iv != before;
    let (t0, t1) = iv;
    if t1 - t0 <= 1e-14 {
        return None;
    }
    Some((
        [mid[0] + t0 * u[0], mid[1] + t0 * u[1]],
        [mid[0] + t1 * u[0], mid[1] + t1 * u[1]],
        box_active,
    ))
}

/// Mass, first moment and radial second moment of a measure restricted to a
/// Voronoi cell.
#[derive(Debug, Clone, Copy, Default)]
pub struct CellIntegrals {
    pub mass: f64,
    pub first: [f64; 2],
    /// integral of |xi|^2 over the cell.
    pub second_radial: f64,
}

/// Per-cell integrals for all K cells of a 2D analytic measure.
pub fn cell_integrals_2d(m: &Measure, x: &Quantizer) -> Result<Vec<CellIntegrals>> {
    if x.dim() != 2 {
        return Err(Error::Unsupported("cell_integrals_2d needs d = 2".into()));
    }
    let (lo, hi) = m.support_box();
    (0..x.k())
        .map(|i| {
            let poly = voronoi_polygon(x, i, &lo, &hi);
            polygon_integrals(m, &poly)
        })
        .collect()
}

/// Distortion of a 2D analytic measure against a quantizer, by exact /
/// semi-analytic integration over the Voronoi cells.
pub fn distortion_2d(m: &Measure, x: &Quantizer) -> Result<f64> {
    let cells = cell_integrals_2d(m, x)?;
    let mut d = 0.0;
    for (i, c) in cells.iter().enumerate() {
        let p = x.point(i);
        d += c.second_radial - 2.0 * (p[0] * c.first[0] + p[1] * c.first[1])
            + (p[0] * p[0] + p[1] * p[1]) * c.mass;
    }
    Ok(d.max(0.0))
}

/// Integrals of the measure over one convex polygon.
pub fn polygon_integrals(m: &Measure, poly: &[Pt]) -> Result<CellIntegrals> {
    if poly.len() < 3 {
        return Ok(CellIntegrals::default());
    }
    match m.kind() {
        Kind::UniformBox { lo, hi } => {
            // Constant density: exact polygon moments (Green's theorem).
            let vol = (hi[0] - lo[0]) * (hi[1] - lo[1]);
            let mom = polygon_moments(poly);
            Ok(CellIntegrals {
                mass: mom.area / vol,
                first: [mom.x / vol, mom.y / vol],
                second_radial: (mom.xx + mom.yy) / vol,
            })
        }
        Kind::GaussianNd { mean, cov } if mean.len() == 2 => {
            Ok(gaussian_polygon_integrals(mean, cov, poly))
        }
        _ => Err(Error::Unsupported(
            "polygon integrals are defined for 2D gaussianNd and box measures".into(),
        )),
    }
}

struct PolyMoments {
    area: f64,
    x: f64,
    y: f64,
    xx: f64,
    yy: f64,
}

/// Exact area and moments of a simple polygon (sign-normalized).
fn polygon_moments(poly: &[Pt]) -> PolyMoments {
    let n = poly.len();
    let (mut a2, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        let cr = x0 * y1 - x1 * y0;
        a2 += cr;
        sx += (x0 + x1) * cr;
        sy += (y0 + y1) * cr;
        sxx += (x0 * x0 + x0 * x1 + x1 * x1) * cr;
        syy += (y0 * y0 + y0 * y1 + y1 * y1) * cr;
    }
    let s = if a2 >= 0.0 { 1.0 } else { -1.0 };
    PolyMoments {
        area: s * a2 / 2.0,
        x: s * sx / 6.0,
        y: s * sy / 6.0,
        xx: s * sxx / 12.0,
        yy: s * syy / 12.0,
    }
}

/// Horizontal slice of a convex polygon at height y: the [xl, xr] interval.
fn slice_at(poly: &[Pt], y: f64) -> Option<(f64, f64)> {
    let n = poly.len();
    let mut xl = f64::INFINITY;
    let mut xr = f64::NEG_INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] - y) * (b[1] - y) <= 0.0 && a[1] != b[1] {
            let x = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            xl = xl.min(x);
            xr = xr.max(x);
        }
    }
    if xl <= xr {
        Some((xl, xr))
    } else {
        None
    }
}

/// Gaussian integrals over a convex polygon by y-slicing: the conditional
/// law of x given y is Gaussian, so the inner integral is closed-form and
/// only the outer y-integral needs (adaptive) quadrature.
fn gaussian_polygon_integrals(mean: &[f64], cov: &[Vec<f64>], poly: &[Pt]) -> CellIntegrals {
    let (m1, m2) = (mean[0], mean[1]);
    let s22 = cov[1][1];
    let sy = s22.sqrt();
    let slope = cov[0][1] / s22;
    let sc = (cov[0][0] - cov[0][1] * cov[0][1] / s22).sqrt();

    let mut ys: Vec<f64> = poly.iter().map(|p| p[1]).collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    // Component extractor: 0 -> mass, 1 -> x-moment, 2 -> y-moment, 3 -> |xi|^2.
    let integrand = |y: f64, comp: usize| -> f64 {
        let Some((xl, xr)) = slice_at(poly, y) else {
            return 0.0;
        };
        let fy = crate::special::normal_pdf((y - m2) / sy) / sy;
        let mc = m1 + slope * (y - m2);
        let cm = gaussian_cell(mc, sc, xl, xr);
        fy * match comp {
            0 => cm.mass,
            1 => cm.first,
            2 => y * cm.mass,
            _ => cm.second + y * y * cm.mass,
        }
    };

    let scale = 1.0 + m1 * m1 + m2 * m2 + cov[0][0] + cov[1][1];
    let mut vals = [0.0; 4];
    for (comp, v) in vals.iter_mut().enumerate() {
        let tol = 1e-13 * if comp == 3 { scale } else { 1.0 };
        let mut total = 0.0;
        for w in ys.windows(2) {
            total += quad::integrate(|y| integrand(y, comp), w[0], w[1], tol);
        }
        *v = total;
    }
    CellIntegrals {
        mass: vals[0],
        first: [vals[1], vals[2]],
        second_radial: vals[3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> Vec<Pt> {
        rect_polygon(&[0.0, 0.0], &[1.0, 1.0])
    }

    #[test]
    fn clipping_square() {
        // Keep x <= 0.5.
        let half = clip_halfplane(&unit_square(), [1.0, 0.0], 0.5);
        let m = polygon_moments(&half);
        assert_relative_eq!(m.area, 0.5, max_relative = 1e-14);
        assert_relative_eq!(m.x, 0.125, max_relative = 1e-14);
        // Clip everything away.
        assert!(clip_halfplane(&unit_square(), [1.0, 0.0], -1.0).is_empty());
    }

    #[test]
    fn polygon_moment_formulas() {
        let m = polygon_moments(&unit_square());
        assert_relative_eq!(m.area, 1.0, max_relative = 1e-14);
        assert_relative_eq!(m.x, 0.5, max_relative = 1e-14);
        assert_relative_eq!(m.xx, 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(m.yy, 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn voronoi_cells_partition_box() {
        let b = Measure::uniform_box(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let x = Quantizer::new(vec![vec![0.2, 0.3], vec![0.7, 0.6], vec![0.4, 0.9]]).unwrap();
        let cells = cell_integrals_2d(&b, &x).unwrap();
        let mass: f64 = cells.iter().map(|c| c.mass).sum();
        assert_relative_eq!(mass, 1.0, max_relative = 1e-12);
        let fx: f64 = cells.iter().map(|c| c.first[0]).sum();
        assert_relative_eq!(fx, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_cell_integrals_total() {
        let g = Measure::gaussian_nd(vec![0.3, -0.2], vec![vec![1.0, 0.4], vec![0.4, 2.0]])
            .unwrap();
        let x = Quantizer::new(vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-1.0, 1.0]]).unwrap();
        let cells = cell_integrals_2d(&g, &x).unwrap();
        let mass: f64 = cells.iter().map(|c| c.mass).sum();
        assert_relative_eq!(mass, 1.0, max_relative = 1e-10);
        let fx: f64 = cells.iter().map(|c| c.first[0]).sum();
        let fy: f64 = cells.iter().map(|c| c.first[1]).sum();
        assert_relative_eq!(fx, 0.3, epsilon = 1e-10);
        assert_relative_eq!(fy, -0.2, epsilon = 1e-10);
        let r2: f64 = cells.iter().map(|c| c.second_radial).sum();
        // E|X|^2 = |mean|^2 + tr(cov).
        assert_relative_eq!(r2, 0.09 + 0.04 + 3.0, max_relative = 1e-10);
    }

    #[test]
    fn distortion_2d_single_center() {
        // K = 1 at the mean: distortion = tr(cov).
        let g = Measure::gaussian_nd(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        let x = Quantizer::new(vec![vec![0.0, 0.0]]).unwrap();
        assert_relative_eq!(distortion_2d(&g, &x).unwrap(), 2.0, max_relative = 1e-10);
        // Off-mean center: D = tr(cov) + |c - mean|^2.
        let x2 = Quantizer::new(vec![vec![0.5, -0.5]]).unwrap();
        assert_relative_eq!(distortion_2d(&g, &x2).unwrap(), 2.5, max_relative = 1e-10);
    }

    #[test]
    fn facet_between_neighbors() {
        let x = Quantizer::new(vec![vec![0.25, 0.5], vec![0.75, 0.5]]).unwrap();
        let (a, b, boxed) = facet_segment(&x, 0, 1, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(boxed);
        assert_relative_eq!(a[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(b[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!((a[1] - b[1]).abs(), 1.0, max_relative = 1e-14);
        // Non-neighbors: three collinear centers, outer pair shares no facet.
        let x3 =
            Quantizer::new(vec![vec![0.1, 0.5], vec![0.5, 0.5], vec![0.9, 0.5]]).unwrap();
        assert!(facet_segment(&x3, 0, 2, &[0.0, 0.0], &[1.0, 1.0]).is_none());
    }
}
