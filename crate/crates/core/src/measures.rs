//! Probability measures: analytic families (uniform, Gaussian, Laplace,
//! exponential in 1D; Gaussian and box-uniform in d dimensions) and empirical
//! point clouds.
//!
//! Every measure exposes the evaluations the rest of the crate needs:
//! density, CDF/quantile (1D), reproducible sampling, and exact interval
//! moments ("cell moments") used by the closed-form distortion calculus.

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_pdf, normal_quantile};
use crate::stream::Stream;
use rand::Rng;

/// Truncation probability for the effective support of unbounded measures.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Tail descriptor attached to a measure for radius-bound evaluation.
/// Parameters are trusted inputs; nothing verifies them against the density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Density eventually dominated by tau * exp(-theta |x|^kappa).
    HyperExponential {
        theta: f64,
        kappa: f64,
        c: f64,
        tau: f64,
        a: f64,
    },
    /// Density eventually dominated by tau * |x|^(-c) (c > d + p for W_p use).
    Polynomial { c: f64, tau: f64, beta: f64, a: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Uniform1d { a: f64, b: f64 },
    Gaussian1d { mean: f64, sd: f64 },
    Laplace1d { loc: f64, scale: f64 },
    Exponential1d { rate: f64, shift: f64 },
    GaussianNd { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    Empirical { points: Vec<Vec<f64>> },
}

/// Exact moments of a measure restricted to an interval (a, b]:
/// mass, first moment and second moment of the restriction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellMoments {
    pub mass: f64,
    pub first: f64,
    pub second: f64,
}

impl std::ops::Add for CellMoments {
    type Output = CellMoments;
    fn add(self, o: CellMoments) -> CellMoments {
        CellMoments {
            mass: self.mass + o.mass,
            first: self.first + o.first,
            second: self.second + o.second,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    kind: Kind,
    tail: Option<Tail>,
    /// Cached Cholesky factor of the covariance (GaussianNd only).
    chol: Option<Vec<Vec<f64>>>,
    /// Cached ascending sort of 1D empirical atoms.
    sorted: Option<Vec<f64>>,
}

impl Measure {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Domain(format!("uniform needs a < b, got [{a}, {b}]")));
        }
        Ok(Self::from_kind(Kind::Uniform1d { a, b }))
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(Error::Domain(format!("gaussian needs sd > 0, got {sd}")));
        }
        Ok(Self::from_kind(Kind::Gaussian1d { mean, sd }))
    }

    pub fn laplace(loc: f64, scale: f64) -> Result<Self> {
        if !(loc.is_finite() && scale.is_finite() && scale > 0.0) {
            return Err(Error::Domain(format!("laplace needs scale > 0, got {scale}")));
        }
        Ok(Self::from_kind(Kind::Laplace1d { loc, scale }))
    }

    pub fn exponential(rate: f64, shift: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0 && shift.is_finite()) {
            return Err(Error::Domain(format!("exponential needs rate > 0, got {rate}")));
        }
        Ok(Self::from_kind(Kind::Exponential1d { rate, shift }))
    }

    pub fn gaussian_nd(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::Domain("gaussianNd: mean/covariance shape mismatch".into()));
        }
        for i in 0..d {
            for j in 0..d {
                if !cov[i][j].is_finite() || (cov[i][j] - cov[j][i]).abs() > 1e-12 {
                    return Err(Error::Domain("gaussianNd: covariance not symmetric".into()));
                }
            }
        }
        let chol = cholesky(&cov)
            .ok_or_else(|| Error::Domain("gaussianNd: covariance not positive definite".into()))?;
        Ok(Measure {
            kind: Kind::GaussianNd { mean, cov },
            tail: None,
            chol: Some(chol),
            sorted: None,
        })
    }

    pub fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Domain("box: lo/hi shape mismatch".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::Domain("box: needs lo < hi coordinatewise".into()));
        }
        Ok(Self::from_kind(Kind::UniformBox { lo, hi }))
    }

    pub fn empirical(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("empirical: needs at least one point".into()));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::Domain("empirical: inconsistent dimensions".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("empirical: non-finite coordinate".into()));
        }
        let sorted = if d == 1 {
            let mut s: Vec<f64> = points.iter().map(|p| p[0]).collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Some(s)
        } else {
            None
        };
        Ok(Measure {
            kind: Kind::Empirical { points },
            tail: None,
            chol: None,
            sorted,
        })
    }

    fn from_kind(kind: Kind) -> Self {
        Measure { kind, tail: None, chol: None, sorted: None }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Uniform1d { .. }
            | Kind::Gaussian1d { .. }
            | Kind::Laplace1d { .. }
            | Kind::Exponential1d { .. } => 1,
            Kind::GaussianNd { mean, .. } => mean.len(),
            Kind::UniformBox { lo, .. } => lo.len(),
            Kind::Empirical { points } => points[0].len(),
        }
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self.kind, Kind::Empirical { .. })
    }

    pub fn is_analytic(&self) -> bool {
        !self.is_empirical()
    }

    /// Raw point list of an empirical measure.
    pub fn atoms(&self) -> Option<&[Vec<f64>]> {
        match &self.kind {
            Kind::Empirical { points } => Some(points),
            _ => None,
        }
    }

    /// Ascending atoms of a 1D empirical measure.
    pub fn atoms_sorted_1d(&self) -> Option<&[f64]> {
        self.sorted.as_deref()
    }

    /// Density at a point. Unsupported for empirical measures.
    pub fn pdf(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim() {
            return Err(Error::Domain(format!(
                "pdf: point dimension {} != measure dimension {}",
                xi.len(),
                self.dim()
            )));
        }
        match &self.kind {
            Kind::Uniform1d { a, b } => {
                Ok(if xi[0] >= *a && xi[0] <= *b { 1.0 / (b - a) } else { 0.0 })
            }
            Kind::Gaussian1d { mean, sd } => Ok(normal_pdf((xi[0] - mean) / sd) / sd),
            Kind::Laplace1d { loc, scale } => {
                Ok((-(xi[0] - loc).abs() / scale).exp() / (2.0 * scale))
            }
            Kind::Exponential1d { rate, shift } => {
                let t = xi[0] - shift;
                Ok(if t >= 0.0 { rate * (-rate * t).exp() } else { 0.0 })
            }
            Kind::GaussianNd { mean, .. } => {
                let l = self.chol.as_ref().unwrap();
                let d = mean.len();
                // Solve L z = xi - mean; density = exp(-|z|^2/2) / ((2pi)^{d/2} det L).
                let mut z = vec![0.0; d];
                for i in 0..d {
                    let mut s = xi[i] - mean[i];
                    for j in 0..i {
                        s -= l[i][j] * z[j];
                    }
                    z[i] = s / l[i][i];
                }
                let q: f64 = z.iter().map(|v| v * v).sum();
                let det_l: f64 = (0..d).map(|i| l[i][i]).product();
                Ok((-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powf(d as f64 / 2.0) * det_l))
            }
            Kind::UniformBox { lo, hi } => {
                let inside = xi.iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| x >= a && x <= b);
                let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                Ok(if inside { 1.0 / vol } else { 0.0 })
            }
            Kind::Empirical { .. } => {
                Err(Error::Unsupported("pdf of an empirical measure".into()))
            }
        }
    }

    /// CDF of a 1D measure (right-continuous for empirical).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::Unsupported("cdf only defined in 1D".into()));
        }
        Ok(match &self.kind {
            Kind::Uniform1d { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Kind::Gaussian1d { mean, sd } => normal_cdf((x - mean) / sd),
            Kind::Laplace1d { loc, scale } => {
                let t = (x - loc) / scale;
                if t < 0.0 {
                    0.5 * t.exp()
                } else {
                    1.0 - 0.5 * (-t).exp()
                }
            }
            Kind::Exponential1d { rate, shift } => {
                let t = x - shift;
                if t < 0.0 {
                    0.0
                } else {
                    -(-rate * t).exp_m1()
                }
            }
            Kind::Empirical { .. } => {
                let s = self.sorted.as_ref().unwrap();
                let cnt = s.partition_point(|&v| v <= x);
                cnt as f64 / s.len() as f64
            }
            _ => unreachable!("dim()==1 covers all other kinds"),
        })
    }

    /// Generalized-inverse quantile, left-continuous: inf { x : F(x) >= p }.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::Unsupported("quantile only defined in 1D".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile needs p in (0,1), got {p}")));
        }
        Ok(match &self.kind {
            Kind::Uniform1d { a, b } => a + p * (b - a),
            Kind::Gaussian1d { mean, sd } => mean + sd * normal_quantile(p),
            Kind::Laplace1d { loc, scale } => {
                if p < 0.5 {
                    loc + scale * (2.0 * p).ln()
                } else {
                    loc - scale * (2.0 * (1.0 - p)).ln()
                }
            }
            Kind::Exponential1d { rate, shift } => shift - (-p).ln_1p() / rate,
            Kind::Empirical { .. } => {
                let s = self.sorted.as_ref().unwrap();
                let n = s.len();
                let idx = ((p * n as f64).ceil() as usize).max(1) - 1;
                s[idx.min(n - 1)]
            }
            _ => unreachable!(),
        })
    }

    /// Draw n i.i.d. points; deterministic given the stream.
    pub fn sample(&self, n: usize, stream: Stream) -> Vec<Vec<f64>> {
        let mut rng = stream.rng();
        let d = self.dim();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let p: Vec<f64> = match &self.kind {
                Kind::Uniform1d { a, b } => vec![a + (b - a) * rng.gen::<f64>()],
                Kind::Gaussian1d { mean, sd } => {
                    vec![mean + sd * normal_quantile(open_unit(&mut rng))]
                }
                Kind::Laplace1d { .. } | Kind::Exponential1d { .. } => {
                    vec![self.quantile(open_unit(&mut rng)).unwrap()]
                }
                Kind::GaussianNd { mean, .. } => {
                    let l = self.chol.as_ref().unwrap();
                    let z: Vec<f64> =
                        (0..d).map(|_| normal_quantile(open_unit(&mut rng))).collect();
                    (0..d)
                        .map(|i| mean[i] + (0..=i).map(|j| l[i][j] * z[j]).sum::<f64>())
                        .collect()
                }
                Kind::UniformBox { lo, hi } => lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
                    .collect(),
                Kind::Empirical { points } => points[rng.gen_range(0..points.len())].clone(),
            };
            out.push(p);
        }
        out
    }

    /// Exact moments over the interval (a, b]; endpoints may be infinite.
    /// Closed forms for the analytic 1D families, summation for empirical.
    pub fn cell_moments(&self, a: f64, b: f64) -> Result<CellMoments> {
        if self.dim() != 1 {
            return Err(Error::Unsupported("cell_moments only defined in 1D".into()));
        }
        if a.is_nan() || b.is_nan() || a > b {
            return Err(Error::Domain(format!("cell_moments needs a <= b, got ({a}, {b})")));
        }
        if a == b {
            return Ok(CellMoments::default());
        }
        Ok(match &self.kind {
            Kind::Uniform1d { a: lo, b: hi } => {
                let u = a.max(*lo);
                let v = b.min(*hi);
                if u >= v {
                    CellMoments::default()
                } else {
                    let den = hi - lo;
                    CellMoments {
                        mass: (v - u) / den,
                        first: (v * v - u * u) / (2.0 * den),
                        second: (v * v * v - u * u * u) / (3.0 * den),
                    }
                }
            }
            Kind::Gaussian1d { mean, sd } => gaussian_cell(*mean, *sd, a, b),
            Kind::Laplace1d { loc, scale } => {
                // Split at the location so each side is a pure exponential arc.
                let mut cm = CellMoments::default();
                if a < *loc {
                    cm = cm + laplace_left(*loc, *scale, a, b.min(*loc));
                }
                if b > *loc {
                    cm = cm + laplace_right(*loc, *scale, a.max(*loc), b);
                }
                cm
            }
            Kind::Exponential1d { rate, shift } => {
                let u = a.max(*shift);
                let v = b;
                if u >= v {
                    CellMoments::default()
                } else {
                    exponential_cell(*rate, *shift, u, v)
                }
            }
            Kind::Empirical { .. } => {
                let s = self.sorted.as_ref().unwrap();
                let n = s.len() as f64;
                let start = s.partition_point(|&v| v <= a);
                let end = s.partition_point(|&v| v <= b);
                let mut cm = CellMoments::default();
                for &x in &s[start..end] {
                    cm.mass += 1.0;
                    cm.first += x;
                    cm.second += x * x;
                }
                cm.mass /= n;
                cm.first /= n;
                cm.second /= n;
                cm
            }
            _ => unreachable!(),
        })
    }

    /// Mean vector (exact for analytic kinds, average for empirical).
    pub fn mean(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Uniform1d { a, b } => vec![0.5 * (a + b)],
            Kind::Gaussian1d { mean, .. } => vec![*mean],
            Kind::Laplace1d { loc, .. } => vec![*loc],
            Kind::Exponential1d { rate, shift } => vec![shift + 1.0 / rate],
            Kind::GaussianNd { mean, .. } => mean.clone(),
            Kind::UniformBox { lo, hi } => {
                lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect()
            }
            Kind::Empirical { points } => {
                let d = points[0].len();
                let mut m = vec![0.0; d];
                for p in points {
                    for i in 0..d {
                        m[i] += p[i];
                    }
                }
                for v in &mut m {
                    *v /= points.len() as f64;
                }
                m
            }
        }
    }

    /// E|X|^2 (exact where closed-form, else via cell moments / sums).
    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            Kind::GaussianNd { mean, cov } => {
                mean.iter().map(|v| v * v).sum::<f64>()
                    + (0..mean.len()).map(|i| cov[i][i]).sum::<f64>()
            }
            Kind::UniformBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| (b * b * b - a * a * a) / (3.0 * (b - a)))
                .sum(),
            Kind::Empirical { points } => {
                points
                    .iter()
                    .map(|p| p.iter().map(|v| v * v).sum::<f64>())
                    .sum::<f64>()
                    / points.len() as f64
            }
            _ => {
                self.cell_moments(f64::NEG_INFINITY, f64::INFINITY)
                    .expect("1D analytic")
                    .second
            }
        }
    }

    /// Effective support [lo, hi] of a 1D measure for quadrature and
    /// truncation: exact for bounded support, 1e-12 quantiles otherwise.
    pub fn support_1d(&self) -> Result<(f64, f64)> {
        if self.dim() != 1 {
            return Err(Error::Unsupported("support_1d only defined in 1D".into()));
        }
        Ok(match &self.kind {
            Kind::Uniform1d { a, b } => (*a, *b),
            Kind::Exponential1d { rate, shift } => {
                (*shift, shift - (SUPPORT_EPS as f64).ln() / rate)
            }
            Kind::Empirical { .. } => {
                let s = self.sorted.as_ref().unwrap();
                (s[0], s[s.len() - 1])
            }
            _ => (
                self.quantile(SUPPORT_EPS)?,
                self.quantile(1.0 - SUPPORT_EPS)?,
            ),
        })
    }

    /// Axis-aligned effective support box of any measure.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.kind {
            Kind::UniformBox { lo, hi } => (lo.clone(), hi.clone()),
            Kind::GaussianNd { mean, cov } => {
                // Truncate at ~9 marginal standard deviations: residual mass
                // far below every tolerance in the crate.
                let r: Vec<f64> = (0..mean.len()).map(|i| 9.0 * cov[i][i].sqrt()).collect();
                (
                    mean.iter().zip(&r).map(|(m, r)| m - r).collect(),
                    mean.iter().zip(&r).map(|(m, r)| m + r).collect(),
                )
            }
            Kind::Empirical { points } => {
                let d = points[0].len();
                let mut lo = vec![f64::INFINITY; d];
                let mut hi = vec![f64::NEG_INFINITY; d];
                for p in points {
                    for i in 0..d {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                (lo, hi)
            }
            _ => {
                let (a, b) = self.support_1d().expect("1D");
                (vec![a], vec![b])
            }
        }
    }
}

/// Draw from the open interval (0, 1): protects inverse-CDF maps from p = 0.
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

pub(crate) fn gaussian_cell(mean: f64, sd: f64, a: f64, b: f64) -> CellMoments {
    let za = (a - mean) / sd;
    let zb = (b - mean) / sd;
    let phi = |z: f64| if z.is_finite() { normal_pdf(z) } else { 0.0 };
    let zphi = |z: f64| if z.is_finite() { z * normal_pdf(z) } else { 0.0 };
    let cdf = |z: f64| {
        if z == f64::NEG_INFINITY {
            0.0
        } else if z == f64::INFINITY {
            1.0
        } else {
            normal_cdf(z)
        }
    };
    let mass = cdf(zb) - cdf(za);
    let dphi = phi(za) - phi(zb);
    CellMoments {
        mass,
        first: mean * mass + sd * dphi,
        second: mean * mean * mass + 2.0 * mean * sd * dphi
            + sd * sd * (mass + zphi(za) - zphi(zb)),
    }
}

/// Laplace moments over [a, b] with b <= loc (rising exponential side).
fn laplace_left(loc: f64, scale: f64, a: f64, b: f64) -> CellMoments {
    // With t = (x - loc)/scale <= 0: density exp(t)/(2 scale) dx = exp(t)/2 dt.
    let e = |t: f64| if t == f64::NEG_INFINITY { 0.0 } else { t.exp() };
    let te = |t: f64| if t == f64::NEG_INFINITY { 0.0 } else { (t - 1.0) * t.exp() };
    let t2e = |t: f64| {
        if t == f64::NEG_INFINITY {
            0.0
        } else {
            (t * t - 2.0 * t + 2.0) * t.exp()
        }
    };
    let (ta, tb) = ((a - loc) / scale, (b - loc) / scale);
    let i0 = 0.5 * (e(tb) - e(ta));
    let i1 = 0.5 * (te(tb) - te(ta));
    let i2 = 0.5 * (t2e(tb) - t2e(ta));
    CellMoments {
        mass: i0,
        first: loc * i0 + scale * i1,
        second: loc * loc * i0 + 2.0 * loc * scale * i1 + scale * scale * i2,
    }
}

/// Laplace moments over [a, b] with a >= loc (decaying exponential side).
fn laplace_right(loc: f64, scale: f64, a: f64, b: f64) -> CellMoments {
    let e = |t: f64| if t == f64::INFINITY { 0.0 } else { (-t).exp() };
    let te = |t: f64| if t == f64::INFINITY { 0.0 } else { (t + 1.0) * (-t).exp() };
    let t2e = |t: f64| {
        if t == f64::INFINITY {
            0.0
        } else {
            (t * t + 2.0 * t + 2.0) * (-t).exp()
        }
    };
    let (ta, tb) = ((a - loc) / scale, (b - loc) / scale);
    let i0 = 0.5 * (e(ta) - e(tb));
    let i1 = 0.5 * (te(ta) - te(tb));
    let i2 = 0.5 * (t2e(ta) - t2e(tb));
    CellMoments {
        mass: i0,
        first: loc * i0 + scale * i1,
        second: loc * loc * i0 + 2.0 * loc * scale * i1 + scale * scale * i2,
    }
}

/// Exponential(rate, shift) moments over [a, b] with a >= shift.
fn exponential_cell(rate: f64, shift: f64, a: f64, b: f64) -> CellMoments {
    let e = |t: f64| if t == f64::INFINITY { 0.0 } else { (-t).exp() };
    let te = |t: f64| if t == f64::INFINITY { 0.0 } else { (t + 1.0) * (-t).exp() };
    let t2e = |t: f64| {
        if t == f64::INFINITY {
            0.0
        } else {
            (t * t + 2.0 * t + 2.0) * (-t).exp()
        }
    };
    let (ta, tb) = (rate * (a - shift), rate * (b - shift));
    let i0 = e(ta) - e(tb);
    let i1 = te(ta) - te(tb);
    let i2 = t2e(ta) - t2e(tb);
    CellMoments {
        mass: i0,
        first: shift * i0 + i1 / rate,
        second: shift * shift * i0 + 2.0 * shift * i1 / rate + i2 / (rate * rate),
    }
}

/// Cholesky factorization of a symmetric matrix; None if not positive definite.
pub(crate) fn cholesky(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = m.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Parse the CLI distribution grammar:
/// `uniform:a,b`, `gauss:m,sigma`, `laplace:m,b`, `exp:lambda[,shift]`,
/// `gaussNd:meanCsv;covCsv`, `box:loCsv;hiCsv`, `empirical:path.csv`.
pub fn parse_spec(spec: &str) -> Result<Measure> {
    let (name, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("distribution spec '{spec}' missing ':'")))?;
    let nums = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number '{t}' in spec '{spec}'")))
            })
            .collect()
    };
    match name {
        "uniform" => {
            let v = nums(rest)?;
            if v.len() != 2 {
                return Err(Error::Config("uniform:a,b takes two numbers".into()));
            }
            Measure::uniform(v[0], v[1])
        }
        "gauss" => {
            let v = nums(rest)?;
            if v.len() != 2 {
                return Err(Error::Config("gauss:m,sigma takes two numbers".into()));
            }
            Measure::gaussian(v[0], v[1])
        }
        "laplace" => {
            let v = nums(rest)?;
            if v.len() != 2 {
                return Err(Error::Config("laplace:m,b takes two numbers".into()));
            }
            Measure::laplace(v[0], v[1])
        }
        "exp" => {
            let v = nums(rest)?;
            match v.as_slice() {
                [rate] => Measure::exponential(*rate, 0.0),
                [rate, shift] => Measure::exponential(*rate, *shift),
                _ => Err(Error::Config("exp:lambda[,shift] takes one or two numbers".into())),
            }
        }
        "gaussNd" => {
            let (m, c) = rest
                .split_once(';')
                .ok_or_else(|| Error::Config("gaussNd:meanCsv;covCsv needs ';'".into()))?;
            let mean = nums(m)?;
            let flat = nums(c)?;
            let d = mean.len();
            if flat.len() != d * d {
                return Err(Error::Config(format!(
                    "gaussNd covariance needs {} entries, got {}",
                    d * d,
                    flat.len()
                )));
            }
            let cov: Vec<Vec<f64>> = flat.chunks(d).map(|r| r.to_vec()).collect();
            Measure::gaussian_nd(mean, cov)
        }
        "box" => {
            let (l, h) = rest
                .split_once(';')
                .ok_or_else(|| Error::Config("box:loCsv;hiCsv needs ';'".into()))?;
            Measure::uniform_box(nums(l)?, nums(h)?)
        }
        "empirical" => {
            let text = std::fs::read_to_string(rest.trim())?;
            let mut points = Vec::new();
            for line in text.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                points.push(nums(line)?);
            }
            Measure::empirical(points)
        }
        _ => Err(Error::Config(format!("unknown distribution '{name}'"))),
    }
}
