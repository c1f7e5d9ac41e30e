//! Quantization geometry: nearest-center assignment, Voronoi weights,
//! distortion and its gradient.
//!
//! Evaluation methods: exact closed forms in 1D (via cell moments), exact
//! sums for empirical measures, Monte Carlo for analytic measures in any
//! dimension, and semi-analytic quadrature over clipped Voronoi polygons for
//! analytic measures in the plane.

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::plane;
use crate::stream::Stream;

/// Ordered K-tuple of pairwise-distinct points in R^d; stored sorted
/// ascending when d = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    points: Vec<Vec<f64>>,
}

impl Quantizer {
    pub fn new(mut points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidQuantizer("no points".into()));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidQuantizer("inconsistent dimensions".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuantizer("non-finite coordinate".into()));
        }
        if d == 1 {
            points.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidQuantizer(format!(
                        "points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Quantizer { points })
    }

    /// Construct preserving row order (no 1D re-sort): used by perturbation
    /// oracles where each row must keep its identity. Still enforces
    /// finiteness and pairwise distinctness.
    pub(crate) fn from_rows_unsorted(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() || points[0].is_empty() {
            return Err(Error::InvalidQuantizer("empty grid".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuantizer("non-finite coordinate".into()));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidQuantizer(format!(
                        "points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Quantizer { points })
    }

    /// 1D convenience constructor.
    pub fn from_1d(xs: Vec<f64>) -> Result<Self> {
        Self::new(xs.into_iter().map(|x| vec![x]).collect())
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Ascending coordinates in 1D.
    pub fn coords_1d(&self) -> Vec<f64> {
        debug_assert_eq!(self.dim(), 1);
        self.points.iter().map(|p| p[0]).collect()
    }

    /// Voronoi cut points (midpoints of consecutive centers) in 1D; length K-1.
    pub fn cuts_1d(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[0][0] + w[1][0]))
            .collect()
    }

    /// Index of the nearest center and the squared distance; ties go to the
    /// lowest index.
    pub fn nearest(&self, xi: &[f64]) -> (usize, f64) {
        let mut best = (0, sq_dist(&self.points[0], xi));
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = sq_dist(p, xi);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Largest Euclidean norm among the centers (radius estimate).
    pub fn max_norm(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Smallest pairwise distance between centers.
    pub fn min_separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.k() {
            for j in (i + 1)..self.k() {
                m = m.min(sq_dist(&self.points[i], &self.points[j]).sqrt());
            }
        }
        m
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// How to evaluate distortion-type integrals against a measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMethod {
    /// Closed forms per Voronoi interval via cell moments (1D analytic).
    Exact1d,
    /// Exact sums over the atoms of an empirical measure.
    Empirical,
    /// Sample average over `n` draws from the given stream (analytic, any d).
    MonteCarlo { n: usize, stream: Stream },
    /// Semi-analytic quadrature over clipped Voronoi polygons (analytic, d=2).
    Quadrature2d,
}

/// Default Monte Carlo sample size.
pub const MC_DEFAULT_N: usize = 100_000;

/// Distortion value together with a standard error when it is a Monte Carlo
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

fn check_pairing(m: &Measure, method: &EvalMethod) -> Result<()> {
    match method {
        EvalMethod::Exact1d => {
            if m.dim() != 1 || m.is_empirical() {
                return Err(Error::Unsupported(
                    "exact1d evaluation needs a 1D analytic measure".into(),
                ));
            }
        }
        EvalMethod::Empirical => {
            if !m.is_empirical() {
                return Err(Error::Unsupported(
                    "empirical evaluation needs an empirical measure".into(),
                ));
            }
        }
        EvalMethod::MonteCarlo { n, .. } => {
            if m.is_empirical() {
                return Err(Error::Unsupported(
                    "monte carlo evaluation is for analytic measures".into(),
                ));
            }
            if *n == 0 {
                return Err(Error::Domain("monte carlo needs n >= 1".into()));
            }
        }
        EvalMethod::Quadrature2d => {
            if m.dim() != 2 || m.is_empirical() {
                return Err(Error::Unsupported(
                    "quadrature2d evaluation needs a 2D analytic measure".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Quadratic distortion D(x) = integral of min_i |xi - x_i|^2 dmu.
pub fn distortion(x: &Quantizer, m: &Measure, method: &EvalMethod) -> Result<f64> {
    Ok(distortion_estimate(x, m, method)?.value)
}

/// Distortion with a standard error for Monte Carlo evaluations.
pub fn distortion_estimate(
    x: &Quantizer,
    m: &Measure,
    method: &EvalMethod,
) -> Result<DistortionEstimate> {
    check_pairing(m, method)?;
    match method {
        EvalMethod::Exact1d => {
            let xs = x.coords_1d();
            let cuts = x.cuts_1d();
            let mut d = 0.0;
            for i in 0..x.k() {
                let a = if i == 0 { f64::NEG_INFINITY } else { cuts[i - 1] };
                let b = if i == x.k() - 1 { f64::INFINITY } else { cuts[i] };
                let cm = m.cell_moments(a, b)?;
                d += cm.second - 2.0 * xs[i] * cm.first + xs[i] * xs[i] * cm.mass;
            }
            Ok(DistortionEstimate { value: d.max(0.0), std_error: None })
        }
        EvalMethod::Empirical => {
            let atoms = m.atoms().unwrap();
            let d: f64 = atoms.iter().map(|a| x.nearest(a).1).sum::<f64>() / atoms.len() as f64;
            Ok(DistortionEstimate { value: d, std_error: None })
        }
        EvalMethod::MonteCarlo { n, stream } => {
            let draws = m.sample(*n, *stream);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for xi in &draws {
                let v = x.nearest(xi).1;
                sum += v;
                sum2 += v * v;
            }
            let nf = *n as f64;
            let mean = sum / nf;
            let var = (sum2 / nf - mean * mean).max(0.0);
            Ok(DistortionEstimate {
                value: mean,
                std_error: Some((var / nf).sqrt()),
            })
        }
        EvalMethod::Quadrature2d => Ok(DistortionEstimate {
            value: plane::distortion_2d(m, x)?,
            std_error: None,
        }),
    }
}

/// Quantization error e(x) = sqrt(D(x)).
pub fn quantization_error(x: &Quantizer, m: &Measure, method: &EvalMethod) -> Result<f64> {
    Ok(distortion(x, m, method)?.sqrt())
}

/// Gradient of the distortion: row i is 2 * integral over V_i of (x_i - xi) dmu.
pub fn gradient(x: &Quantizer, m: &Measure, method: &EvalMethod) -> Result<Vec<Vec<f64>>> {
    check_pairing(m, method)?;
    let (k, d) = (x.k(), x.dim());
    match method {
        EvalMethod::Exact1d => {
            let xs = x.coords_1d();
            let cuts = x.cuts_1d();
            let mut g = vec![vec![0.0; 1]; k];
            for i in 0..k {
                let a = if i == 0 { f64::NEG_INFINITY } else { cuts[i - 1] };
                let b = if i == k - 1 { f64::INFINITY } else { cuts[i] };
                let cm = m.cell_moments(a, b)?;
                g[i][0] = 2.0 * (xs[i] * cm.mass - cm.first);
            }
            Ok(g)
        }
        EvalMethod::Empirical => {
            let atoms = m.atoms().unwrap();
            let mut g = vec![vec![0.0; d]; k];
            for a in atoms {
                let (i, _) = x.nearest(a);
                for c in 0..d {
                    g[i][c] += x.point(i)[c] - a[c];
                }
            }
            let nf = atoms.len() as f64;
            for row in &mut g {
                for v in row {
                    *v *= 2.0 / nf;
                }
            }
            Ok(g)
        }
        EvalMethod::MonteCarlo { n, stream } => {
            let draws = m.sample(*n, *stream);
            let mut g = vec![vec![0.0; d]; k];
            for a in &draws {
                let (i, _) = x.nearest(a);
                for c in 0..d {
                    g[i][c] += x.point(i)[c] - a[c];
                }
            }
            for row in &mut g {
                for v in row {
                    *v *= 2.0 / *n as f64;
                }
            }
            Ok(g)
        }
        EvalMethod::Quadrature2d => {
            let cells = plane::cell_integrals_2d(m, x)?;
            let mut g = vec![vec![0.0; d]; k];
            for i in 0..k {
                for c in 0..d {
                    g[i][c] = 2.0 * (x.point(i)[c] * cells[i].mass - cells[i].first[c]);
                }
            }
            Ok(g)
        }
    }
}

/// Tag recording how Voronoi weights were computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMethod {
    Exact1d,
    Empirical,
    MonteCarlo(usize),
    Quadrature2d,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiWeights {
    pub weights: Vec<f64>,
    pub method: WeightMethod,
}

/// Measure of each Voronoi cell (lowest-index tie-breaking).
pub fn voronoi_weights(x: &Quantizer, m: &Measure, method: &EvalMethod) -> Result<VoronoiWeights> {
    check_pairing(m, method)?;
    let k = x.k();
    match method {
        EvalMethod::Exact1d => {
            let cuts = x.cuts_1d();
            let mut w = vec![0.0; k];
            for i in 0..k {
                let a = if i == 0 { f64::NEG_INFINITY } else { cuts[i - 1] };
                let b = if i == k - 1 { f64::INFINITY } else { cuts[i] };
                w[i] = m.cell_moments(a, b)?.mass;
            }
            Ok(VoronoiWeights { weights: w, method: WeightMethod::Exact1d })
        }
        EvalMethod::Empirical => {
            let atoms = m.atoms().unwrap();
            let mut w = vec![0.0; k];
            for a in atoms {
                w[x.nearest(a).0] += 1.0;
            }
            for v in &mut w {
                *v /= atoms.len() as f64;
            }
            Ok(VoronoiWeights { weights: w, method: WeightMethod::Empirical })
        }
        EvalMethod::MonteCarlo { n, stream } => {
            let draws = m.sample(*n, *stream);
            let mut w = vec![0.0; k];
            for a in &draws {
                w[x.nearest(a).0] += 1.0;
            }
            for v in &mut w {
                *v /= *n as f64;
            }
            Ok(VoronoiWeights { weights: w, method: WeightMethod::MonteCarlo(*n) })
        }
        EvalMethod::Quadrature2d => {
            let cells = plane::cell_integrals_2d(m, x)?;
            Ok(VoronoiWeights {
                weights: cells.iter().map(|c| c.mass).collect(),
                method: WeightMethod::Quadrature2d,
            })
        }
    }
}
