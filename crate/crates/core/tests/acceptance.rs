//! Acceptance gate. Each criterion prints one `PASS`/`FAIL` line; the test
//! fails if any criterion does.
//!
//! Criteria 1, 2 and 8 run the committed configs under `configs/`.
//! Criterion 2 is the expensive one (150 optimization runs).

use std::path::PathBuf;
use std::time::Instant;

use iago::bench::{bench, criterion_noise_study, write_bench_outputs, BenchConfig, TRACES_FILE};
use iago::criterion::{gauss_hermite, CriterionContext, VirtualBatchSize};
use iago::entropy::{minimizer_histogram, sample_paths, shannon_entropy};
use iago::gp::{
    compute_posterior, fantasy_update, fuse_batch, BatchSize, CandidateGrid, CovarianceFamily, CovarianceSpec,
    GPPosterior, NoiseModel, Observation, ObservationSet,
};
use iago::rng::seeded;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn max_abs_diff(a: &GPPosterior, b: &GPPosterior) -> f64 {
    (a.mean() - b.mean()).amax().max((a.covariance() - b.covariance()).amax())
}

fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

struct RandomInstance {
    grid: CandidateGrid,
    spec: CovarianceSpec,
    noise: NoiseModel,
    obs: ObservationSet,
}

fn random_instance(rng: &mut impl Rng) -> RandomInstance {
    let m = rng.random_range(2..=10);
    let grid = CandidateGrid::linspace(0.0, 1.0, m).unwrap();
    let family = [CovarianceFamily::Matern52, CovarianceFamily::Matern32, CovarianceFamily::SquaredExponential]
        [rng.random_range(0..3)];
    let spec = CovarianceSpec::new(family, rng.random_range(0.2..3.0), vec![rng.random_range(0.05..1.5)]).unwrap();
    let noise = NoiseModel::new(rng.random_range(0.01..2.0)).unwrap();
    let obs = (0..rng.random_range(0..6))
        .map(|_| Observation {
            grid_index: rng.random_range(0..m),
            value: rng.random_range(-3.0..3.0),
            batch: BatchSize::finite(rng.random_range(1..=20)).unwrap(),
        })
        .collect();
    RandomInstance { grid, spec, noise, obs }
}

fn criterion_noise_reduction() -> Verdict {
    let config = BenchConfig::from_path(&config_path("criterion_noise.toml")).unwrap();
    let report = criterion_noise_study(&config).unwrap();
    let rho: Vec<(String, f64)> = report.entries.iter().map(|e| (e.virtual_batch.to_string(), e.rho)).collect();
    let order = rho.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>() == ["1", "10", "100", "inf"];
    let decreasing = rho.windows(2).all(|w| w[1].1 < w[0].1);
    let ratio = rho[3].1 / rho[0].1;
    let shown: Vec<String> = rho.iter().map(|(k, r)| format!("ρ({k})={r:.4}")).collect();
    verdict(
        order && decreasing && ratio <= 0.25,
        format!("{}; ρ(∞)/ρ(1)={ratio:.4} (need strictly decreasing and ≤ 0.25)", shown.join(" ")),
    )
}

fn policy_dominance() -> Verdict {
    let config = BenchConfig::from_path(&config_path("policy_comparison.toml")).unwrap();
    assert_eq!((config.runs, config.optimizer.budget, config.optimizer.actual_batch), (50, 600, 10));
    let outcome = bench(&config).unwrap();
    let x_true = outcome.grid.point(outcome.true_optimum_index)[0];
    let finals = |label: &str| -> (Vec<f64>, Vec<f64>) {
        outcome
            .runs
            .iter()
            .filter(|r| r.policy.label() == label)
            .filter_map(|r| r.completed())
            .map(|t| (t.last().entropy, (t.last().xhat[0] - x_true).abs()))
            .unzip()
    };
    let (h_iid, e_iid) = finals("IID");
    let (h_10, _) = finals("IAGO-10");
    let (h_inf, e_inf) = finals("IAGO-inf");
    let (h_iid, h_10, h_inf) = (median(&h_iid), median(&h_10), median(&h_inf));
    let (e_iid, e_inf) = (median(&e_iid), median(&e_inf));
    verdict(
        outcome.summary.failed_runs == 0 && h_inf < h_iid && h_inf <= h_10 && e_inf <= e_iid,
        format!(
            "median H: IAGO-inf={h_inf:.4} IAGO-10={h_10:.4} IID={h_iid:.4}; median |x̂−x*|: IAGO-inf={e_inf:.4} IID={e_iid:.4}; failed runs {}",
            outcome.summary.failed_runs
        ),
    )
}

fn reduction_identity() -> Verdict {
    let mut rng = seeded(301);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        let at = rng.random_range(0..inst.grid.len());
        let k = rng.random_range(1..=20);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(-4.0..4.0)).collect();
        let mut fused = inst.obs.clone();
        fused.push(fuse_batch(at, &raw).unwrap());
        let mut separate = inst.obs.clone();
        raw.iter().for_each(|&v| separate.push(Observation::single(at, v)));
        let a = compute_posterior(&inst.spec, &inst.noise, &fused, &inst.grid).unwrap();
        let b = compute_posterior(&inst.spec, &inst.noise, &separate, &inst.grid).unwrap();
        worst = worst.max(max_abs_diff(&a, &b));
    }
    verdict(worst <= 1e-8, format!("max abs diff {worst:.3e} over 100 instances (≤ 1e-8)"))
}

fn fantasy_oracle() -> Verdict {
    let mut rng = seeded(401);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 100 {
        let inst = random_instance(&mut rng);
        let at = rng.random_range(0..inst.grid.len());
        let batch = if rng.random_bool(0.2) {
            BatchSize::Infinite
        } else {
            BatchSize::finite(rng.random_range(1..=50)).unwrap()
        };
        let value = rng.random_range(-3.0..3.0);
        let base = compute_posterior(&inst.spec, &inst.noise, &inst.obs, &inst.grid).unwrap();
        if batch.is_infinite() && base.is_known(at) {
            continue;
        }
        let extra = Observation { grid_index: at, value, batch };
        let updated = fantasy_update(&base, at, value, extra.noise_variance(&inst.noise)).unwrap();
        let mut obs = inst.obs.clone();
        obs.push(extra);
        let full = compute_posterior(&inst.spec, &inst.noise, &obs, &inst.grid).unwrap();
        worst = worst.max(max_abs_diff(&updated, &full));
        done += 1;
    }
    verdict(worst <= 1e-8, format!("max abs diff {worst:.3e} over 100 instances (≤ 1e-8)"))
}

/// E[Z^d] for Z ~ N(0, 1): (d − 1)!! for even d, 0 for odd d.
fn normal_moment(d: u32) -> f64 {
    if d % 2 == 1 {
        0.0
    } else {
        (1..d).step_by(2).map(f64::from).product()
    }
}

fn quadrature_exactness() -> Verdict {
    let rule = gauss_hermite(15).unwrap();
    let mut worst_rel = 0.0f64;
    let mut worst_odd = 0.0f64;
    for d in 0..=29 {
        let got = rule.expect(|z| z.powi(d as i32));
        if d % 2 == 1 {
            worst_odd = worst_odd.max(got.abs());
        } else {
            let want = normal_moment(d);
            worst_rel = worst_rel.max((got - want).abs() / want);
        }
    }
    verdict(
        worst_rel <= 1e-9 && worst_odd <= 1e-12,
        format!("even moments max rel err {worst_rel:.3e} (≤ 1e-9); odd moments max abs {worst_odd:.3e} (≤ 1e-12)"),
    )
}

fn independent_minimizer_probabilities(mu: &[f64], sd: &[f64]) -> Vec<f64> {
    let n = Normal::new(0.0, 1.0).unwrap();
    let smax = sd.iter().cloned().fold(0.0, f64::max);
    let lo = mu.iter().cloned().fold(f64::INFINITY, f64::min) - 12.0 * smax;
    let hi = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 12.0 * smax;
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    (0..mu.len())
        .map(|i| {
            let f = |t: f64| {
                let rest: f64 =
                    (0..mu.len()).filter(|&j| j != i).map(|j| 1.0 - n.cdf((t - mu[j]) / sd[j])).product();
                n.pdf((t - mu[i]) / sd[i]) / sd[i] * rest
            };
            let inner: f64 =
                (1..steps).map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(lo + k as f64 * h)).sum();
            (f(lo) + f(hi) + inner) * h / 3.0
        })
        .collect()
}

fn entropy_estimator() -> Verdict {
    let mut rng = seeded(601);
    let mut worst = 0.0f64;
    let mut in_range = true;
    for case in 0..12 {
        let m = 2 + case % 3;
        let mu: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sd: Vec<f64> = (0..m).map(|_| rng.random_range(0.3..2.0)).collect();
        let grid = CandidateGrid::linspace(0.0, 1.0, m).unwrap();
        let cov = DMatrix::from_fn(m, m, |i, j| if i == j { sd[i] * sd[i] } else { 0.0 });
        let post = GPPosterior::from_parts(grid, DVector::from_vec(mu.clone()), cov).unwrap();
        let dist = minimizer_histogram(&sample_paths(&post, 200_000, 6000 + case as u64).unwrap());
        let oracle = independent_minimizer_probabilities(&mu, &sd);
        for (p, q) in dist.probabilities.iter().zip(&oracle) {
            worst = worst.max((p - q).abs());
        }
        let h = shannon_entropy(&dist);
        in_range &= (0.0..=(m as f64).ln()).contains(&h);
    }
    verdict(
        worst <= 0.01 && in_range,
        format!("max |p − oracle| {worst:.4} over 12 diagonal posteriors (≤ 0.01); entropy in [0, ln m]: {in_range}"),
    )
}

fn k_independence() -> Verdict {
    let grid = CandidateGrid::linspace(-1.0, 0.0, 21).unwrap();
    let spec = CovarianceSpec::new(CovarianceFamily::Matern52, 1.0, vec![0.2]).unwrap();
    let noise = NoiseModel::noise_free();
    let obs: ObservationSet =
        [(2, 0.4), (9, -0.3), (15, 0.1), (19, 0.8)].into_iter().map(|(i, v)| Observation::exact(i, v)).collect();
    let post = compute_posterior(&spec, &noise, &obs, &grid).unwrap();
    let rule = gauss_hermite(15).unwrap();
    let ctx = CriterionContext::new(&post, &rule, 1000, 77).unwrap();
    let ks = [VirtualBatchSize::ONE, VirtualBatchSize::finite(10).unwrap(), VirtualBatchSize::Infinite];
    let bits: Vec<Vec<u64>> = ks
        .iter()
        .map(|&k| ctx.profile(k, &noise).unwrap().values.iter().map(|v| v.to_bits()).collect())
        .collect();
    let identical = bits.windows(2).all(|w| w[0] == w[1]);
    verdict(identical, format!("profiles for K ∈ {{1, 10, inf}} bitwise identical: {identical}"))
}

fn determinism() -> Verdict {
    let mut config = BenchConfig::from_path(&config_path("policy_comparison.toml")).unwrap();
    config.runs = 2;
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            write_bench_outputs(&bench(&config).unwrap(), &config, dir.path()).unwrap();
            std::fs::read(dir.path().join(TRACES_FILE)).unwrap()
        })
        .collect();
    let same = outputs[0] == outputs[1];
    verdict(same && !outputs[0].is_empty(), format!("{} bytes of traces, byte-identical: {same}", outputs[0].len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("criterion-noise reduction", criterion_noise_reduction),
        ("policy dominance", policy_dominance),
        ("reduction identity", reduction_identity),
        ("fantasy-update oracle", fantasy_oracle),
        ("quadrature exactness", quadrature_exactness),
        ("entropy estimator", entropy_estimator),
        ("K-independence at zero noise", k_independence),
        ("bench determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{status} [{}] {name}: {} ({:.1}s)", i + 1, v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
