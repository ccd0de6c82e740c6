use iago::criterion::{criterion_value, gauss_hermite, CriterionContext, VirtualBatchSize};
use iago::entropy::{minimizer_histogram, sample_paths, shannon_entropy, PathSet};
use iago::gp::{compute_posterior, BatchSize, CandidateGrid, CovarianceFamily, CovarianceSpec, GPPosterior, NoiseModel, Observation, ObservationSet};
use iago::rng::seeded;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// P(argmin = i) for independent normals: ∫ φᵢ(t) ∏_{j≠i} (1 − Φⱼ(t)) dt.
fn independent_minimizer_probabilities(mu: &[f64], sd: &[f64]) -> Vec<f64> {
    let n = std_normal();
    let smax = sd.iter().cloned().fold(0.0, f64::max);
    let lo = mu.iter().cloned().fold(f64::INFINITY, f64::min) - 12.0 * smax;
    let hi = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 12.0 * smax;
    (0..mu.len())
        .map(|i| {
            simpson(
                |t| {
                    let own = n.pdf((t - mu[i]) / sd[i]) / sd[i];
                    let rest: f64 =
                        (0..mu.len()).filter(|&j| j != i).map(|j| 1.0 - n.cdf((t - mu[j]) / sd[j])).product();
                    own * rest
                },
                lo,
                hi,
                20_000,
            )
        })
        .collect()
}

fn diagonal_posterior(mu: &[f64], sd: &[f64]) -> GPPosterior {
    let m = mu.len();
    let grid = CandidateGrid::linspace(0.0, 1.0, m).unwrap();
    let cov = DMatrix::from_fn(m, m, |i, j| if i == j { sd[i] * sd[i] } else { 0.0 });
    GPPosterior::from_parts(grid, DVector::from_column_slice(mu), cov).unwrap()
}

#[test]
fn minimizer_probabilities_match_independence_oracle() {
    let cases: [(&[f64], &[f64]); 4] = [
        (&[0.0, 0.5], &[1.0, 1.0]),
        (&[0.0, 0.3, -0.2], &[1.0, 0.5, 2.0]),
        (&[1.0, 0.0, 0.4, 0.2], &[0.3, 1.2, 0.8, 0.6]),
        (&[-1.0, 1.0, 0.0, 2.0], &[0.5, 0.5, 1.5, 3.0]),
    ];
    for (c, (mu, sd)) in cases.iter().enumerate() {
        let oracle = independent_minimizer_probabilities(mu, sd);
        assert!((oracle.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let paths = sample_paths(&diagonal_posterior(mu, sd), 200_000, 1000 + c as u64).unwrap();
        let got = minimizer_histogram(&paths);
        for (i, (p, q)) in got.probabilities.iter().zip(&oracle).enumerate() {
            assert!((p - q).abs() <= 0.01, "case {c} entry {i}: {p} vs oracle {q}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_stays_within_bounds(
        mu in prop::collection::vec(-2.0f64..2.0, 2..8),
        lengthscale in 0.05f64..2.0,
        seed in any::<u64>(),
    ) {
        let m = mu.len();
        let grid = CandidateGrid::linspace(0.0, 1.0, m).unwrap();
        let spec = CovarianceSpec::new(CovarianceFamily::Matern52, 1.0, vec![lengthscale]).unwrap();
        let prior = compute_posterior(&spec, &NoiseModel::noise_free(), &ObservationSet::new(), &grid).unwrap();
        let post = GPPosterior::from_parts(grid, DVector::from_vec(mu), prior.covariance().clone()).unwrap();
        let h = shannon_entropy(&minimizer_histogram(&sample_paths(&post, 500, seed).unwrap()));
        prop_assert!(h >= 0.0 && h <= (m as f64).ln() + 1e-12);
    }

    #[test]
    fn permuting_columns_permutes_histogram(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 5), 1..40), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..5).collect();
        let mut rng = seeded(seed);
        for i in (1..5).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let a = minimizer_histogram(&PathSet::from_rows(&rows, 0).unwrap());
        let b = minimizer_histogram(&PathSet::from_rows(&permuted, 0).unwrap());
        for (new, &old) in perm.iter().enumerate() {
            prop_assert_eq!(b.probabilities[new], a.probabilities[old]);
        }
        let (ha, hb) = (shannon_entropy(&a), shannon_entropy(&b));
        prop_assert!((ha - hb).abs() <= 1e-12);
    }
}

fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.ln() };
    term(p) + term(1.0 - p)
}

/// Expected posterior entropy of the 2-point minimizer after one observation
/// at `i` with noise variance `tau2`, by numerical integration over the
/// observed value.
fn two_point_oracle(mu: [f64; 2], cov: [[f64; 2]; 2], i: usize, tau2: f64) -> f64 {
    let n = std_normal();
    let s = cov[i][i] + tau2;
    let gain = [cov[0][i] / s, cov[1][i] / s];
    let c = |a: usize, b: usize| cov[a][b] - cov[a][i] * cov[b][i] / s;
    let diff_var = c(0, 0) + c(1, 1) - 2.0 * c(0, 1);
    let sd_y = s.sqrt();
    simpson(
        |y| {
            let m0 = mu[0] + gain[0] * (y - mu[i]);
            let m1 = mu[1] + gain[1] * (y - mu[i]);
            let p0 = n.cdf((m1 - m0) / diff_var.sqrt());
            binary_entropy(p0) * n.pdf((y - mu[i]) / sd_y) / sd_y
        },
        mu[i] - 12.0 * sd_y,
        mu[i] + 12.0 * sd_y,
        20_000,
    )
}

#[test]
fn two_point_criterion_matches_integration_oracle() {
    let rule = gauss_hermite(15).unwrap();
    let cases = [
        ([0.0, 0.2], [[1.0, 0.3], [0.3, 0.8]], 0.5, BatchSize::ONE),
        ([0.1, -0.1], [[0.5, -0.2], [-0.2, 1.5]], 2.0, BatchSize::finite(10).unwrap()),
        ([0.0, 0.0], [[1.0, 0.6], [0.6, 1.0]], 1.0, BatchSize::Infinite),
    ];
    for (c, (mu, cov, sigma2, k)) in cases.into_iter().enumerate() {
        let grid = CandidateGrid::linspace(0.0, 1.0, 2).unwrap();
        let post = GPPosterior::from_parts(
            grid,
            DVector::from_column_slice(&mu),
            DMatrix::from_fn(2, 2, |a, b| cov[a][b]),
        )
        .unwrap();
        let noise = NoiseModel::new(sigma2).unwrap();
        for i in 0..2 {
            let oracle = two_point_oracle(mu, cov, i, k.averaged_noise(sigma2));
            let got = criterion_value(&post, i, k, &noise, &rule, 100_000, 42 + c as u64).unwrap();
            assert!((got - oracle).abs() <= 0.03, "case {c} candidate {i}: {got} vs oracle {oracle}");
        }
    }
}

#[test]
fn information_gain_is_nonnegative_on_average() {
    let grid = CandidateGrid::linspace(0.0, 1.0, 8).unwrap();
    let spec = CovarianceSpec::new(CovarianceFamily::Matern52, 1.0, vec![0.3]).unwrap();
    let noise = NoiseModel::new(0.5).unwrap();
    let obs: ObservationSet =
        [(1, 0.3), (3, -0.4), (6, 0.1)].into_iter().map(|(i, v)| Observation::single(i, v)).collect();
    let post = compute_posterior(&spec, &noise, &obs, &grid).unwrap();
    let rule = gauss_hermite(15).unwrap();
    let seeds = 30;
    for k in [BatchSize::ONE, VirtualBatchSize::Infinite] {
        let mut diffs = vec![Vec::with_capacity(seeds); grid.len()];
        for seed in 0..seeds as u64 {
            let ctx = CriterionContext::new(&post, &rule, 1000, seed).unwrap();
            let profile = ctx.profile(k, &noise).unwrap();
            for (d, v) in diffs.iter_mut().zip(&profile.values) {
                d.push(v - ctx.base_entropy());
            }
        }
        for (i, d) in diffs.iter().enumerate() {
            let n = d.len() as f64;
            let mean = d.iter().sum::<f64>() / n;
            let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!(mean <= 2.0 * sd / n.sqrt(), "K={k} candidate {i}: mean change {mean}, sd {sd}");
        }
    }
}

#[test]
fn profile_argmin_ignores_constant_shift() {
    let grid = CandidateGrid::linspace(0.0, 1.0, 6).unwrap();
    let spec = CovarianceSpec::new(CovarianceFamily::Matern52, 1.0, vec![0.4]).unwrap();
    let noise = NoiseModel::new(1.0).unwrap();
    let post = compute_posterior(&spec, &noise, &[Observation::single(2, -0.5)].into_iter().collect(), &grid).unwrap();
    let rule = gauss_hermite(9).unwrap();
    let mut profile = CriterionContext::new(&post, &rule, 500, 3).unwrap().profile(BatchSize::ONE, &noise).unwrap();
    let before = iago::criterion::select_next(&profile).unwrap();
    for v in &mut profile.values {
        *v += 10.0;
    }
    assert_eq!(iago::criterion::select_next(&profile).unwrap(), before);
}
