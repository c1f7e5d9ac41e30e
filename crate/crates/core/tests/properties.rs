//! Property-based and statistical end-to-end tests: measure calculus
//! identities, solver invariants, transport regularity, and the
//! quantizer-distance bound on empirical optima.

use proptest::prelude::*;
use quantlab::harness::{self, ExperimentConfig, ExperimentId, SolverSpec};
use quantlab::measures::Measure;
use quantlab::quantizer::{self, EvalMethod, Quantizer};
use quantlab::solvers::{self, InitStrategy, SolveMethod, SolverConfig};
use quantlab::stream::Stream;
use quantlab::wasserstein::{w_p_1d, w_p_sorted};
use rand::Rng;

fn analytic_1d(id: u8, p1: f64, p2: f64) -> Measure {
    match id % 4 {
        0 => Measure::uniform(p1.min(p2) - 0.1, p1.max(p2) + 0.1).unwrap(),
        1 => Measure::gaussian(p1, 0.2 + p2.abs()).unwrap(),
        2 => Measure::laplace(p1, 0.2 + p2.abs()).unwrap(),
        _ => Measure::exponential(0.2 + p2.abs(), p1).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Partial moments are additive over adjacent intervals and the mass of
    /// an interval is the CDF difference of its endpoints.
    #[test]
    fn cell_moments_additive_and_match_cdf(
        id in 0u8..4,
        p1 in -2.0f64..2.0,
        p2 in -2.0f64..2.0,
        a in -3.0f64..3.0,
        len1 in 0.01f64..2.0,
        len2 in 0.01f64..2.0,
    ) {
        let m = analytic_1d(id, p1, p2);
        let (b, c) = (a + len1, a + len1 + len2);
        let left = m.cell_moments(a, b).unwrap();
        let right = m.cell_moments(b, c).unwrap();
        let whole = m.cell_moments(a, c).unwrap();
        prop_assert!((left.mass + right.mass - whole.mass).abs() < 1e-12);
        prop_assert!((left.first + right.first - whole.first).abs() < 1e-12);
        prop_assert!((left.second + right.second - whole.second).abs() < 1e-12);
        let dcdf = m.cdf(c).unwrap() - m.cdf(a).unwrap();
        prop_assert!((whole.mass - dcdf).abs() < 1e-12, "mass {} vs dF {}", whole.mass, dcdf);
    }

    /// The quantile is the generalized inverse of the CDF:
    /// F(Q(p)) >= p and F(Q(p) - eps) <= p.
    #[test]
    fn quantile_generalized_inverse(
        id in 0u8..4,
        p1 in -2.0f64..2.0,
        p2 in -2.0f64..2.0,
        p in 0.001f64..0.999,
    ) {
        let m = analytic_1d(id, p1, p2);
        let q = m.quantile(p).unwrap();
        prop_assert!(m.cdf(q).unwrap() >= p - 1e-10);
        prop_assert!(m.cdf(q - 1e-6).unwrap() <= p + 1e-10);
    }

    /// The exact distortion gradient matches central finite differences.
    #[test]
    fn gradient_matches_finite_differences(
        seed in 0u64..50,
        k in 2usize..6,
    ) {
        let m = Measure::gaussian(0.0, 1.0).unwrap();
        let mut rng = Stream::new(seed).rng();
        let mut coords: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for i in 1..k {
            if coords[i] - coords[i - 1] < 0.1 {
                coords[i] = coords[i - 1] + 0.1;
            }
        }
        let x = Quantizer::from_1d(coords.clone()).unwrap();
        let grad = quantizer::gradient(&x, &m, &EvalMethod::Exact1d).unwrap();
        let h = 1e-5;
        for i in 0..k {
            let mut up = coords.clone();
            let mut dn = coords.clone();
            up[i] += h;
            dn[i] -= h;
            // Skip perturbations that break sortedness.
            if up.windows(2).any(|w| w[0] >= w[1]) || dn.windows(2).any(|w| w[0] >= w[1]) {
                continue;
            }
            let du = quantizer::distortion(
                &Quantizer::from_1d(up).unwrap(), &m, &EvalMethod::Exact1d).unwrap();
            let dd = quantizer::distortion(
                &Quantizer::from_1d(dn).unwrap(), &m, &EvalMethod::Exact1d).unwrap();
            let fd = (du - dd) / (2.0 * h);
            prop_assert!((grad[i][0] - fd).abs() < 1e-7,
                "coord {i}: exact {} vs fd {}", grad[i][0], fd);
        }
    }

    /// Quantization error is 1-Lipschitz in the measure for W2:
    /// |e_mu(x) - e_nu(x)| <= W2(mu, nu).
    #[test]
    fn error_lipschitz_in_w2(seed in 0u64..40, n in 4usize..40, k in 1usize..5) {
        let mut rng = Stream::new(seed).rng();
        let pts = |rng: &mut rand_chacha::ChaCha12Rng, n: usize| -> Vec<Vec<f64>> {
            (0..n).map(|_| vec![rng.gen_range(-3.0..3.0)]).collect()
        };
        let mu = Measure::empirical(pts(&mut rng, n)).unwrap();
        let nu = Measure::empirical(pts(&mut rng, n)).unwrap();
        let coords: Vec<f64> = (0..k).map(|i| -2.0 + 4.0 * i as f64 / k as f64).collect();
        let x = Quantizer::from_1d(coords).unwrap();
        let e_mu = quantizer::quantization_error(&x, &mu, &EvalMethod::Empirical).unwrap();
        let e_nu = quantizer::quantization_error(&x, &nu, &EvalMethod::Empirical).unwrap();
        let w2 = w_p_sorted(&mu, &nu, 2).unwrap().distance;
        prop_assert!((e_mu - e_nu).abs() <= w2 + 1e-9,
            "|{e_mu} - {e_nu}| > W2 = {w2}");
    }
}

/// Optimal error is nonincreasing in the level K.
#[test]
fn optimal_error_monotone_in_level() {
    for m in [
        Measure::uniform(0.0, 1.0).unwrap(),
        Measure::gaussian(0.5, 1.3).unwrap(),
        Measure::laplace(0.0, 0.7).unwrap(),
    ] {
        let cfg = SolverConfig {
            method: SolveMethod::Newton,
            init: InitStrategy::Quantile,
            tol: 1e-12,
            max_iter: 500,
        };
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let d = solvers::solve(&m, k, &cfg, Stream::new(2)).unwrap().distortion;
            assert!(d <= prev + 1e-12, "K={k}: {d} > {prev}");
            prev = d;
        }
    }
}

/// Solved centers of a planar uniform box stay inside the box.
#[test]
fn solved_centers_in_support_box() {
    let m = Measure::uniform_box(vec![-1.0, 0.0], vec![2.0, 1.5]).unwrap();
    let cfg = SolverConfig {
        method: SolveMethod::Lloyd,
        init: InitStrategy::SamplePp,
        tol: 1e-9,
        max_iter: 500,
    };
    let r = solvers::solve(&m, 5, &cfg, Stream::new(9)).unwrap();
    for p in r.quantizer.points() {
        assert!((-1.0..=2.0).contains(&p[0]) && (0.0..=1.5).contains(&p[1]), "{p:?}");
    }
}

/// Consistency: the empirical optimum's target distortion approaches the
/// optimal distortion as n grows (medians over seeds).
#[test]
fn pollard_consistency() {
    let cfg = ExperimentConfig {
        experiment: ExperimentId::Consistency,
        dist: "gauss:0,1".into(),
        k: vec![3],
        n: vec![32, 512, 8192],
        seeds: 11,
        base_seed: 77,
        solver: SolverSpec::default(),
        output: None,
    };
    let out = harness::run_experiment(&cfg).unwrap();
    let med = |n: usize| {
        let mut v: Vec<f64> = out
            .rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| r.performance)
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    assert!(med(512) < med(32), "{} !< {}", med(512), med(32));
    assert!(med(8192) < med(512), "{} !< {}", med(8192), med(512));
    // Performance is nonnegative: the reference optimum is global.
    for r in &out.rows {
        assert!(r.performance >= -1e-12);
    }
}

/// Strong unimodality: Newton lands on the same stationary grid from
/// different starting points (log-concave densities, sorted grids).
#[test]
fn strongly_unimodal_unique_optimum() {
    for m in [Measure::gaussian(0.0, 1.0).unwrap(), Measure::laplace(0.3, 0.8).unwrap()] {
        let k = 4;
        let base = SolverConfig {
            method: SolveMethod::Newton,
            init: InitStrategy::Quantile,
            tol: 1e-12,
            max_iter: 500,
        };
        let ref_grid = solvers::solve(&m, k, &base, Stream::new(1)).unwrap().quantizer;
        for seed in 0..5u64 {
            let cfg = SolverConfig {
                method: SolveMethod::Newton,
                init: InitStrategy::SamplePp,
                tol: 1e-12,
                max_iter: 500,
            };
            let r = solvers::solve(&m, k, &cfg, Stream::new(seed)).unwrap();
            // 1e-5: Newton stalls slightly short of full precision on the
            // Laplace density kink, but all starts land on the same grid.
            for (a, b) in r.quantizer.coords_1d().iter().zip(ref_grid.coords_1d()) {
                assert!((a - b).abs() < 1e-5, "seed {seed}: {a} vs {b}");
            }
        }
    }
}

/// Kolmogorov-Smirnov check of the samplers at level 0.01.
#[test]
fn sampling_matches_cdf() {
    let n = 20_000usize;
    // KS critical value at alpha = 0.01: 1.6276 / sqrt(n).
    let crit = 1.6276 / (n as f64).sqrt();
    for (i, m) in [
        Measure::uniform(-1.0, 2.0).unwrap(),
        Measure::gaussian(0.3, 1.7).unwrap(),
        Measure::laplace(-0.4, 0.9).unwrap(),
        Measure::exponential(1.3, -0.2).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let mut draws: Vec<f64> = m
            .sample(n, Stream::new(1000 + i as u64))
            .into_iter()
            .map(|p| p[0])
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (j, x) in draws.iter().enumerate() {
            let f = m.cdf(*x).unwrap();
            ks = ks.max((f - j as f64 / n as f64).abs());
            ks = ks.max(((j + 1) as f64 / n as f64 - f).abs());
        }
        assert!(ks < crit, "dist {i}: KS statistic {ks} >= {crit}");
    }
}

/// Quantizer-distance bound: squared distance of the empirical optimum to
/// the reference optimum stays below (8/lambda*)(e* W2 + W2^2) for n >= 2^8.
#[test]
fn quantizer_distance_bound_uniform() {
    let cfg = ExperimentConfig {
        experiment: ExperimentId::Thm22Distance,
        dist: "uniform:0,1".into(),
        k: vec![2, 4],
        n: vec![256, 1024, 4096],
        seeds: 20,
        base_seed: 5,
        solver: SolverSpec::default(),
        output: None,
    };
    let out = harness::run_experiment(&cfg).unwrap();
    assert_eq!(out.rows.len(), 2 * 3 * 20);
    for r in &out.rows {
        assert!(
            r.slack >= 0.0,
            "K={} n={} seed={}: slack {}",
            r.k,
            r.n,
            r.seed,
            r.slack
        );
    }
}

/// W1 <= W2 on empirical pairs and against analytic measures.
#[test]
fn transport_order_in_p() {
    let mut rng = Stream::new(3).rng();
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..32).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
        let mu = Measure::empirical(pts).unwrap();
        let g = Measure::gaussian(0.0, 1.0).unwrap();
        let w1 = w_p_1d(&mu, &g, 1).unwrap().distance;
        let w2 = w_p_1d(&mu, &g, 2).unwrap().distance;
        assert!(w1 <= w2 + 1e-10, "{w1} > {w2}");
    }
}
