//! Estimators checked against independent closed forms and Monte Carlo.

mod common;

use common::{golden_max, pareto_tail};
use statrs::function::gamma::gamma_ur;

use incomedist::binning::{build_log_bins, empirical_ccdf};
use incomedist::bootstrap::{bootstrap_fit, BootstrapConfig};
use incomedist::gompertz::{boundary_intercept, GompertzParams};
use incomedist::inequality::{gini, lorenz_curve};
use incomedist::ingest::{NormalizedSample, SampleEntry};
use incomedist::model::{sample_model, TwoClassModel};
use incomedist::pareto::{fit_pareto_lsf, fit_pareto_mle, moments_of, ParetoLikelihood};

/// `S = n / α̂` chosen directly: `n - 1` points at `x_t` and one carrying
/// the whole log ratio.
fn tail_with(n: usize, x_t: f64, sum_log_ratio: f64) -> Vec<SampleEntry> {
    let mut tail = vec![SampleEntry { x: x_t, multiplicity: 1.0 }; n - 1];
    tail.push(SampleEntry {
        x: x_t * sum_log_ratio.exp(),
        multiplicity: 1.0,
    });
    tail
}

#[test]
fn likelihood_moments_match_incomplete_gamma() {
    // Weight α^n e^(-S α) on [1, ∞):
    // <α>  = (n+1)/S · Q(n+2, S)/Q(n+1, S)
    // <α²> = (n+1)(n+2)/S² · Q(n+3, S)/Q(n+1, S)
    for &(n, alpha_hat) in &[(2usize, 1.5), (5, 1.1), (20, 2.5), (60, 1.05), (100, 3.0)] {
        let s = n as f64 / alpha_hat;
        let lik = ParetoLikelihood::new(&tail_with(n, 7.4, s), 7.4, 0.0).unwrap();
        let m = lik.moments().unwrap();
        let nf = n as f64;
        let q1 = gamma_ur(nf + 1.0, s);
        let mean = (nf + 1.0) / s * gamma_ur(nf + 2.0, s) / q1;
        let second = (nf + 1.0) * (nf + 2.0) / (s * s) * gamma_ur(nf + 3.0, s) / q1;
        let std = (second - mean * mean).sqrt();
        assert!((m.mean / mean - 1.0).abs() < 1e-7, "n={n}: {} vs {mean}", m.mean);
        assert!((m.second / second - 1.0).abs() < 1e-7, "n={n}");
        assert!((m.std / std - 1.0).abs() < 1e-5, "n={n}: {} vs {std}", m.std);
    }
}

#[test]
fn prefactor_cancels_in_moments() {
    let tail = pareto_tail(200, 2.5, 7.4, 11);
    let gomp = GompertzParams::new(1.54, 0.33).unwrap();
    let with = ParetoLikelihood::with_gompertz(&tail, 7.4, &gomp).unwrap();
    let without = ParetoLikelihood::new(&tail, 7.4, 0.0).unwrap();
    assert!(with.ln_prefactor() > 0.0);
    let peak = with.mle();
    let (lo, hi) = (1.0, peak * 3.0);
    // Shift by each likelihood's own peak value; the prefactor is inside.
    let m_with = moments_of(|a| with.log_likelihood(a) - with.log_likelihood(peak), lo, hi).unwrap();
    let m_without = moments_of(|a| without.log_likelihood(a) - without.log_likelihood(peak), lo, hi).unwrap();
    assert!((m_with.mean - m_without.mean).abs() < 1e-9 * m_with.mean);
    assert!((m_with.std - m_without.std).abs() < 1e-7 * m_with.std);
    let m = with.moments().unwrap();
    assert!((m.mean - m_with.mean).abs() < 1e-7 * m.mean);
}

#[test]
fn mle_matches_numeric_maximum_on_large_tail() {
    let tail = pareto_tail(10_000, 2.5, 7.4, 3);
    let lik = ParetoLikelihood::new(&tail, 7.4, 0.0).unwrap();
    let numeric = golden_max(|a| lik.log_likelihood(a), 1.0, 10.0, 1e-10);
    assert!((lik.mle() - numeric).abs() < 1e-6);
}

#[test]
fn mle_on_1e5_tail_within_three_standard_errors() {
    let n = 100_000;
    let tail = pareto_tail(n, 2.5, 7.4, 2024);
    let fit = fit_pareto_mle(&tail, 7.4, 0.0, &GompertzParams::new(1.54, 0.33).unwrap()).unwrap();
    let se = 2.5 / (n as f64).sqrt();
    assert!((fit.alpha - 2.5).abs() < 3.0 * se, "{}", fit.alpha);
    // Likelihood width tends to α/√n.
    assert!((fit.delta_alpha / (fit.alpha / (n as f64).sqrt()) - 1.0).abs() < 0.01);
}

#[test]
fn lsf_on_binned_tail_within_tolerance() {
    // A single 10^5 tail scatters the unweighted log-log slope by about
    // 0.17, so the tolerance is applied to the average over 20 tails.
    let x_t = 7.4;
    let trials = 20;
    let mean: f64 = (0..trials)
        .map(|seed| {
            let sample = NormalizedSample::from_entries(pareto_tail(100_000, 2.68, x_t, seed));
            let grid = build_log_bins(0.01, 1.1, sample.max_x().unwrap()).unwrap();
            let ccdf = empirical_ccdf(&sample, &grid).unwrap();
            fit_pareto_lsf(&ccdf, x_t).unwrap().alpha
        })
        .sum::<f64>()
        / trials as f64;
    assert!((mean - 2.68).abs() < 0.15, "{mean}");
}

#[test]
fn exponential_approximation_bound() {
    let g = GompertzParams::new(1.54, 0.33).unwrap();
    let mut x = 0.0;
    while x < 40.0 {
        let e = g.exponent(x);
        if e <= -1.0 {
            let approx = 1.0 + e.exp();
            assert!((g.ccdf(x) - approx).abs() <= (2.0 * e).exp(), "x={x}");
        }
        x += 0.01;
    }
}

#[test]
fn bootstrap_std_of_mle_matches_analytic() {
    let n = 1000;
    let alpha = 2.5;
    let x_t = 7.4;
    let sample = NormalizedSample::from_entries(pareto_tail(n, alpha, x_t, 5));
    let mle = |s: &NormalizedSample| ParetoLikelihood::new(s.entries(), x_t, 0.0).map(|l| vec![l.mle()]);
    let result = bootstrap_fit(&sample, &BootstrapConfig::new(1000, 9), mle).unwrap();
    let analytic = alpha / (n as f64).sqrt();
    assert!((result.std[0] / analytic - 1.0).abs() < 0.25, "{} vs {analytic}", result.std[0]);
}

#[test]
fn bootstrap_converges_with_more_resamples() {
    let sample = NormalizedSample::from_entries(pareto_tail(500, 2.5, 7.4, 8));
    let x_t = 7.4;
    let mle = |s: &NormalizedSample| ParetoLikelihood::new(s.entries(), x_t, 0.0).map(|l| vec![l.mle()]);
    let reference = bootstrap_fit(&sample, &BootstrapConfig::new(40_000, 1), mle).unwrap();
    let diff = |resamples: usize| -> f64 {
        // Average over seeds to compare typical deviations.
        (10..20)
            .map(|seed| {
                let r = bootstrap_fit(&sample, &BootstrapConfig::new(resamples, seed), mle).unwrap();
                (r.std[0] - reference.std[0]).abs() + (r.mean[0] - reference.mean[0]).abs()
            })
            .sum::<f64>()
    };
    let coarse = diff(1_000);
    let fine = diff(10_000);
    let ratio = coarse / fine;
    // Expected √10 ≈ 3.2; allow for Monte Carlo scatter.
    assert!(ratio > 1.8, "{coarse} vs {fine}");
}

#[test]
fn gini_of_large_pareto_sample() {
    let sample = NormalizedSample::from_entries(pareto_tail(1_000_000, 2.5, 1.0, 99));
    let g = gini(&lorenz_curve(&sample).unwrap());
    assert!((g - 0.25).abs() < 0.01, "{g}");
}

#[test]
fn model_sample_reproduces_ccdf() {
    let gomp = GompertzParams::new(boundary_intercept(), 0.38).unwrap();
    let model = TwoClassModel::continuous(gomp, 2.75, 7.8, 0.0).unwrap();
    let sample = sample_model(&model, 200_000, 4);
    for &x in &[0.2, 1.0, 3.0, 7.8, 12.0] {
        let above = sample.entries().iter().filter(|e| e.x >= x).count() as f64;
        let empirical = 100.0 * above / 200_000.0;
        let expected = model.ccdf(x);
        let p = expected / 100.0;
        let se = 100.0 * (p * (1.0 - p) / 200_000.0).sqrt();
        assert!((empirical - expected).abs() < 5.0 * se + 1e-9, "x={x}: {empirical} vs {expected}");
    }
}
