//! Statistical harnesses for `predict` and `certify` against classifiers
//! whose smoothed behaviour is known exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smoothcert::bounds::{cohen_radius_binary, Radius};
use smoothcert::oracles::{exact_smoothed_prob, true_robust_radius, BernoulliClassifier, LinearModel};
use smoothcert::smoothing::{certify, predict, Certification, NoiseStream, Prediction, SmoothingParams};
use smoothcert::statfun::std_normal_cdf;

/// `alpha` plus three binomial standard deviations over `runs` trials.
fn slack(alpha: f64, runs: usize) -> f64 {
    alpha + 3.0 * (alpha * (1.0 - alpha) / runs as f64).sqrt()
}

/// A random 2-D linear model and a point at distance `sigma * z` from its
/// boundary, labelled 1.
fn linear_instance(rng: &mut ChaCha8Rng, sigma: f64, z: f64) -> (LinearModel<f64>, Vec<f64>) {
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let scale: f64 = rng.random_range(0.5..3.0);
    let w = vec![scale * angle.cos(), scale * angle.sin()];
    let b: f64 = rng.random_range(-1.0..1.0);
    let base: Vec<f64> = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
    let model = LinearModel::new(w.clone(), b).unwrap();
    let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
    let target = sigma * z;
    let shift = (target - model.score(&base) / norm) / norm;
    let x = vec![base[0] + shift * w[0], base[1] + shift * w[1]];
    (model, x)
}

#[test]
fn certify_rarely_overstates_the_true_radius() {
    let (alpha, runs, sigma) = (0.05, 600, 0.8);
    let params = SmoothingParams::new(sigma, 50, 1000, alpha).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = NoiseStream::new(2024);
    let mut unsound = 0;
    for run in 0..runs {
        let z = rng.random_range(0.3..2.5);
        let (model, x) = linear_instance(&mut rng, sigma, z);
        let truth = true_robust_radius(&model, &x).unwrap();
        match certify(&model, &params, &x, &noise, run as u64).unwrap() {
            Certification::Certified { label, radius, .. } => {
                if label != model.label_at(&x) || !radius.finite().is_some_and(|r| r <= truth) {
                    unsound += 1;
                }
            }
            Certification::Abstain => {}
        }
    }
    let rate = unsound as f64 / runs as f64;
    assert!(rate <= slack(alpha, runs), "unsound fraction {rate}");
}

#[test]
fn predict_rarely_returns_the_minority_label() {
    let (alpha, runs) = (0.05, 2000);
    let f = BernoulliClassifier::new(0.52, 0, 1).unwrap();
    let params = SmoothingParams::new(1.0, 1, 200, alpha).unwrap();
    let noise = NoiseStream::new(5);
    let wrong = (0..runs)
        .filter(|&run| predict(&f, &params, &[0.0], &noise, run as u64).unwrap() == Prediction::Label(1))
        .count();
    let rate = wrong as f64 / runs as f64;
    assert!(rate <= slack(alpha, runs), "wrong-label fraction {rate}");
}

#[test]
fn large_sample_certificates_approach_the_exact_radius() {
    let sigma = 0.5;
    let params = SmoothingParams::new(sigma, 100, 100_000, 0.001).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise = NoiseStream::new(7);
    let mut above = 0;
    for id in 0..100u64 {
        let z = rng.random_range(0.3..2.3);
        let (model, x) = linear_instance(&mut rng, sigma, z);
        let exact = exact_smoothed_prob(&model, &x, sigma).unwrap();
        let truth = true_robust_radius(&model, &x).unwrap();
        let exact_radius = cohen_radius_binary(exact.prob.value(), sigma).unwrap();
        assert!((exact_radius.to_scalar() - truth).abs() < 1e-9);
        let cert = certify(&model, &params, &x, &noise, id).unwrap();
        let (label, pa_lower, radius) = match cert {
            Certification::Certified { label, pa_lower, radius: Radius::Finite(r) } => (label, pa_lower, r),
            other => panic!("instance {id} at z = {z}: {other:?}"),
        };
        assert_eq!(label, exact.label);
        let gap = exact.prob.value() - pa_lower;
        assert!(gap < 0.01, "instance {id}: pa {} vs lower {pa_lower}", exact.prob.value());
        if gap < 0.0 {
            above += 1;
            assert!(radius > truth);
        } else {
            assert!(radius <= truth);
        }
        assert!((std_normal_cdf(radius / sigma) - pa_lower).abs() < 1e-10);
    }
    assert!(above <= 2, "{above} of 100 lower bounds exceeded the exact probability");
}

#[test]
fn smoothed_linear_vote_matches_the_base_label() {
    let model = LinearModel::new(vec![1.0, -2.0], 0.3).unwrap();
    let params = SmoothingParams::new(0.5, 1, 10_000, 0.01).unwrap();
    let noise = NoiseStream::new(3);
    let mut id = 0;
    let mut opposite = 0;
    for i in 0..10 {
        for j in 0..10 {
            let x = [-2.25 + 0.5 * i as f64, -2.25 + 0.5 * j as f64];
            assert!(model.score(&x).abs() > 1e-6);
            match predict(&model, &params, &x, &noise, id).unwrap() {
                Prediction::Label(l) if l != model.label_at(&x) => opposite += 1,
                _ => {}
            }
            id += 1;
        }
    }
    assert!(opposite <= 1, "{opposite} opposite labels");
}
