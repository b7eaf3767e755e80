//! Shared fixtures and property checks for the integration suites.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use incomedist::binning::{build_log_bins, ccdf_value, empirical_ccdf};
use incomedist::gompertz::GompertzParams;
use incomedist::inequality::{gini, lorenz_curve};
use incomedist::ingest::{normalize_incomes, NormalizedSample, SampleEntry, WeightedIncome};
use incomedist::model::TwoClassModel;
use incomedist::pareto::{ParetoLikelihood, ParetoParams};

pub type PropResult = Result<(), String>;

/// `n` unit-weight draws from a pure Pareto law above `x_t`.
pub fn pareto_tail(n: usize, alpha: f64, x_t: f64, seed: u64) -> Vec<SampleEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            SampleEntry {
                x: x_t * u.powf(-1.0 / alpha),
                multiplicity: 1.0,
            }
        })
        .collect()
}

/// Maximizer of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

fn entries_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..50.0, 0.1f64..20.0), 1..120)
}

fn to_sample(pairs: &[(f64, f64)]) -> NormalizedSample {
    NormalizedSample::from_entries(
        pairs
            .iter()
            .map(|&(x, multiplicity)| SampleEntry { x, multiplicity })
            .collect(),
    )
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> PropResult
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// `F` is non-increasing, `F + 𝓕 = 100` exactly, and equals the brute-force
/// count at every abscissa.
pub fn prop_ccdf_monotone_and_complement() -> PropResult {
    run(256, (entries_strategy(), 0.005f64..0.5, 1.01f64..1.5), |(pairs, x_min, ratio)| {
        let sample = to_sample(&pairs);
        let x_max = sample.max_x().unwrap().max(2.0 * x_min);
        let grid = build_log_bins(x_min, ratio, x_max).unwrap();
        let ccdf = empirical_ccdf(&sample, &grid).unwrap();
        for w in ccdf.points().windows(2) {
            prop_assert!(w[0].f >= w[1].f);
        }
        for p in ccdf.points() {
            prop_assert!((0.0..=100.0).contains(&p.f));
            prop_assert_eq!(p.f + p.cumulative, 100.0);
            let brute = ccdf_value(&sample, p.x);
            prop_assert!((p.f - brute).abs() <= 1e-12 * 100.0, "{} vs {}", p.f, brute);
        }
        Ok(())
    })
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    -(f(x + h) - f(x - h)) / (2.0 * h)
}

/// `-dG/dx` and `-dP/dx` by central differences (step 1e-6) match the
/// densities within 1e-6 relative.
pub fn prop_density_matches_ccdf_derivative() -> PropResult {
    run(256, (1.0f64..2.0, 0.1f64..1.0, -6.0f64..1.4), |(a, b, exponent)| {
        let g = GompertzParams::new(a, b).unwrap();
        let x = (a - exponent) / b;
        prop_assume!(x > 1e-3);
        let numeric = central_difference(|x| g.ccdf(x), x, 1e-6);
        let exact = g.density(x);
        prop_assert!((numeric / exact - 1.0).abs() < 1e-6, "x={} {} vs {}", x, numeric, exact);
        Ok(())
    })?;
    run(256, (1.1f64..4.0, 1.0f64..1000.0, 1.0f64..50.0), |(alpha, beta, x)| {
        let p = ParetoParams::new(alpha, beta).unwrap();
        let numeric = central_difference(|x| p.ccdf(x).unwrap(), x, 1e-6);
        let exact = p.density(x).unwrap();
        prop_assert!((numeric / exact - 1.0).abs() < 1e-6, "x={} {} vs {}", x, numeric, exact);
        Ok(())
    })?;
    run(
        256,
        (0.1f64..0.6, 1.5f64..3.5, 4.0f64..10.0, 0.05f64..3.0),
        |(b, alpha, x_t, offset)| {
            let gomp = GompertzParams::with_boundary_intercept(b).unwrap();
            let model = TwoClassModel::continuous(gomp, alpha, x_t, 0.0).unwrap();
            let h = 1e-6;
            for x in [x_t - offset, x_t + offset * x_t] {
                prop_assume!(x > 1e-3 && (x - x_t).abs() > 10.0 * h);
                let exponent = gomp.exponent(x);
                prop_assume!(x > x_t || exponent > -6.0);
                let numeric = central_difference(|x| model.ccdf(x), x, h);
                let exact = model.density(x);
                prop_assert!((numeric / exact - 1.0).abs() < 1e-6, "x={} {} vs {}", x, numeric, exact);
            }
            Ok(())
        },
    )
}

/// Lorenz curves are convex and below the diagonal; Gini is invariant
/// under income scaling and entry replication.
pub fn prop_lorenz_convex_and_invariant() -> PropResult {
    run(256, (entries_strategy(), 0.01f64..1000.0), |(pairs, c)| {
        prop_assume!(pairs.iter().any(|p| p.0 > 0.0));
        let sample = to_sample(&pairs);
        let curve = lorenz_curve(&sample).unwrap();
        let pts = curve.points();
        prop_assert_eq!(pts[0], (0.0, 0.0));
        prop_assert_eq!(*pts.last().unwrap(), (1.0, 1.0));
        for &(p, l) in pts {
            prop_assert!(l <= p + 1e-12);
        }
        for w in pts.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            prop_assert!(s2 >= s1 - 1e-9 * s2.abs().max(1.0));
        }
        let g = gini(&curve);
        prop_assert!((0.0..1.0).contains(&g));

        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(x, m)| (c * x, m)).collect();
        let g_scaled = gini(&lorenz_curve(&to_sample(&scaled)).unwrap());
        prop_assert!((g - g_scaled).abs() < 1e-12, "{} vs {}", g, g_scaled);

        let doubled: Vec<(f64, f64)> = pairs.iter().chain(pairs.iter()).copied().collect();
        let curve2 = lorenz_curve(&to_sample(&doubled)).unwrap();
        prop_assert_eq!(curve2.points().len(), pts.len());
        for (a, b) in pts.iter().zip(curve2.points()) {
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        prop_assert!((gini(&curve2) - g).abs() < 1e-12);

        let heavier: Vec<(f64, f64)> = pairs.iter().map(|&(x, m)| (x, 2.0 * m)).collect();
        let curve3 = lorenz_curve(&to_sample(&heavier)).unwrap();
        prop_assert_eq!(curve3.points(), pts);
        Ok(())
    })
}

/// Moving income from a richer to a poorer entry without changing ranks
/// does not raise the Gini.
pub fn prop_transfer_principle() -> PropResult {
    run(256, prop::collection::vec(0.0f64..100.0, 3..60), |mut xs| {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        prop_assume!(xs.len() >= 3 && xs.iter().sum::<f64>() > 0.0);
        let n = xs.len();
        let before = gini(&lorenz_curve(&NormalizedSample::from_values(xs.iter().copied())).unwrap());
        // Transfer from the richest to the poorest, keeping their order.
        let room = 0.25 * (xs[n - 1] - xs[n - 2]).min(xs[1] - xs[0]);
        prop_assume!(room > 0.0);
        xs[n - 1] -= room;
        xs[0] += room;
        let after = gini(&lorenz_curve(&NormalizedSample::from_values(xs.iter().copied())).unwrap());
        prop_assert!(after <= before + 1e-12, "{} > {}", after, before);
        Ok(())
    })
}

/// Rescaling tail values and threshold together leaves the MLE unchanged.
pub fn prop_mle_scale_equivariance() -> PropResult {
    run(256, (prop::collection::vec(1.0f64..30.0, 2..80), 0.5f64..5.0, 1e-3f64..1e3), |(ratios, x_t, c)| {
        prop_assume!(ratios.iter().any(|&r| r > 1.0));
        let tail: Vec<SampleEntry> = ratios.iter().map(|&r| SampleEntry { x: r * x_t, multiplicity: 1.0 }).collect();
        let scaled: Vec<SampleEntry> = tail.iter().map(|e| SampleEntry { x: c * e.x, ..*e }).collect();
        let a1 = ParetoLikelihood::new(&tail, x_t, 0.0).unwrap().mle();
        let a2 = ParetoLikelihood::new(&scaled, c * x_t, 0.0).unwrap().mle();
        prop_assert!((a1 / a2 - 1.0).abs() < 1e-12, "{} vs {}", a1, a2);
        Ok(())
    })
}

/// Closed-form MLE equals the numerical maximizer of the log-likelihood.
pub fn prop_mle_is_numeric_maximum() -> PropResult {
    run(256, (prop::collection::vec(1.0f64..20.0, 2..=50), 1.0f64..10.0), |(ratios, x_t)| {
        prop_assume!(ratios.iter().any(|&r| r > 1.01));
        let tail: Vec<SampleEntry> = ratios.iter().map(|&r| SampleEntry { x: r * x_t, multiplicity: 1.0 }).collect();
        let lik = ParetoLikelihood::new(&tail, x_t, 0.0).unwrap();
        let closed = lik.mle();
        let numeric = golden_max(|a| lik.log_likelihood(a), 1e-3, 10.0 * closed + 10.0, 1e-10);
        prop_assert!((closed - numeric).abs() < 1e-6 * closed.max(1.0), "{} vs {}", closed, numeric);
        Ok(())
    })
}

/// Multiplying raw incomes by `c` leaves the normalized values unchanged.
pub fn prop_ingest_scale_invariance() -> PropResult {
    run(256, (entries_strategy(), 1e-3f64..1e6), |(pairs, c)| {
        prop_assume!(pairs.iter().any(|p| p.0 > 0.0));
        let raw: Vec<WeightedIncome> = pairs.iter().map(|&(income, multiplicity)| WeightedIncome { income, multiplicity }).collect();
        let scaled: Vec<WeightedIncome> = raw.iter().map(|w| WeightedIncome { income: c * w.income, ..*w }).collect();
        let a = normalize_incomes(&raw).unwrap();
        let b = normalize_incomes(&scaled).unwrap();
        prop_assert!((a.weighted_mean() - 1.0).abs() < 1e-9);
        for (ea, eb) in a.entries().iter().zip(b.entries()) {
            prop_assert!((ea.x - eb.x).abs() <= 1e-12 * ea.x.max(1e-300));
        }
        prop_assert_eq!(a.total_population(), b.total_population());
        Ok(())
    })
}
