//! Policy comparison with the covariance known exactly: the objective is a
//! draw from the model prior and no hyperparameters are fitted. Separates
//! the behaviour of the sampling criterion from that of the refits.
//!
//! `cargo run --release -p iago --example known_model -- [noise_std] [replicates] [iterations]`

use iago::criterion::{criterion_profile, gauss_hermite, select_next, uniform_index};
use iago::entropy::{argmin, entropy_of_posterior, sample_paths};
use iago::gp::{
    compute_posterior, fuse_batch, BatchSize, CandidateGrid, CovarianceFamily, CovarianceSpec, NoiseModel,
    ObservationSet,
};
use iago::rng::{derive_seed, seeded};
use rand::Rng;
use rand_distr::StandardNormal;

const BATCH: usize = 10;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: f64| args.get(i).map_or(default, |s| s.parse().expect("numeric argument"));
    let noise_std = arg(0, 3.0);
    let replicates = arg(1, 16.0) as u64;
    let iterations = arg(2, 30.0) as usize;

    let grid = CandidateGrid::linspace(-1.0, 0.0, 51).unwrap();
    let spec = CovarianceSpec::new(CovarianceFamily::Matern52, 1.0, vec![0.2]).unwrap();
    let noise = NoiseModel::new(noise_std * noise_std).unwrap();
    let prior = compute_posterior(&spec, &noise, &ObservationSet::new(), &grid).unwrap();
    let rule = gauss_hermite(15).unwrap();
    let policies = [
        ("IID", None),
        ("IAGO-10", Some(BatchSize::finite(10).unwrap())),
        ("IAGO-inf", Some(BatchSize::Infinite)),
    ];

    println!("noise_std {noise_std}, {replicates} replicates, {} evaluations each", iterations * BATCH);
    for (label, virtual_batch) in policies {
        let (mut entropy, mut error) = (0.0, 0.0);
        for rep in 0..replicates {
            let truth = sample_paths(&prior, 1, derive_seed(rep, &[1])).unwrap().path(0).to_vec();
            let mut rng = seeded(derive_seed(rep, &[2]));
            let batch = |i: usize, rng: &mut iago::rng::SeedRng| {
                let values: Vec<f64> =
                    (0..BATCH).map(|_| truth[i] + noise_std * rng.sample::<f64, _>(StandardNormal)).collect();
                fuse_batch(i, &values).unwrap()
            };
            let mut obs: ObservationSet = (0..11).map(|j| batch(5 * j, &mut rng)).collect();
            let mut post = compute_posterior(&spec, &noise, &obs, &grid).unwrap();
            for it in 0..iterations {
                let next = match virtual_batch {
                    None => uniform_index(grid.len(), &mut rng),
                    Some(k) => {
                        let seed = derive_seed(rep, &[3, it as u64]);
                        select_next(&criterion_profile(&post, k, &noise, &rule, 1000, seed).unwrap()).unwrap()
                    }
                };
                obs.push(batch(next, &mut rng));
                post = compute_posterior(&spec, &noise, &obs, &grid).unwrap();
            }
            entropy += entropy_of_posterior(&post, 2000, derive_seed(rep, &[4])).unwrap();
            let xhat = argmin(post.mean().as_slice());
            error += (grid.point(xhat)[0] - grid.point(argmin(&truth))[0]).abs();
        }
        let r = replicates as f64;
        println!("{label:9} mean H {:.3}  mean |x̂ − x*| {:.3}", entropy / r, error / r);
    }
}
