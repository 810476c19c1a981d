use geb_core::block::{hybrid_fit, Branch, TuningConfig};
use geb_core::io::read_signal_csv;
use geb_core::kde::KdeMode;
use geb_core::mixture::MixingDistribution;
use geb_core::regression::{mad_sigma, random_design_estimate, random_design_transform};
use geb_core::risk::{monte_carlo_risk, rate_fit, Estimator, ExperimentSpec, TruthSource};
use geb_core::rng::{normals, stream};
use geb_core::signals::{test_signal, SignalName};
use rand::Rng;

#[test]
fn doppler_matches_frozen_fixture() {
    let table = read_signal_csv(include_str!("fixtures/doppler_2048.csv").as_bytes()).unwrap();
    let (samples, _) = test_signal(SignalName::Doppler, 2048, 7.0).unwrap();
    assert_eq!(table.value.len(), 2048);
    for (a, b) in samples.iter().zip(&table.value) {
        assert!((a - b).abs() <= 1e-13, "{a} vs {b}");
    }
}

#[test]
fn mad_is_calibrated_on_pure_noise() {
    let n = 2048;
    let sigma = 2.5;
    let reps = 500;
    let inside = (0..reps)
        .filter(|&r| {
            let coef: Vec<f64> = normals(&mut stream(11, r), 1024)
                .into_iter()
                .map(|z| sigma * z / (n as f64).sqrt())
                .collect();
            let ratio = mad_sigma(&coef, n).unwrap() / sigma;
            (0.9..=1.1).contains(&ratio)
        })
        .count();
    assert!(inside as f64 >= 0.99 * reps as f64, "{inside}/{reps}");
}

#[test]
fn random_design_coefficient_variance() {
    let n = 512;
    let mut rng = stream(12, 0);
    let t: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
    let reps = 400;
    let mut sums = vec![0.0; 64];
    let mut squares = vec![0.0; 64];
    let mut delta = Vec::new();
    for r in 0..reps {
        let y = normals(&mut stream(13, r), n);
        let d = random_design_transform(&t, &y, 5).unwrap();
        for i in 1..64 {
            sums[i] += d.coefficients[i];
            squares[i] += d.coefficients[i] * d.coefficients[i];
        }
        delta = d.delta;
    }
    let active: Vec<usize> = (1..64).filter(|&i| delta[i] == 1).collect();
    let var: f64 = active
        .iter()
        .map(|&i| {
            let m = sums[i] / reps as f64;
            (squares[i] - reps as f64 * m * m) / (reps as f64 - 1.0)
        })
        .sum::<f64>()
        / active.len() as f64;
    // average of ~60 variances, each with relative sd sqrt(2/399)
    assert!((var * n as f64 - 1.0).abs() < 0.05, "N * var = {}", var * n as f64);
}

fn step(t: f64) -> f64 {
    if t <= 1.0 / 3.0 {
        1.0
    } else {
        -1.0
    }
}

// exact ∫ (fhat - step)^2 for a piecewise-constant fhat
fn step_error(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let (a, b) = (k as f64 / m, (k + 1) as f64 / m);
            let cut = (1.0 / 3.0f64).clamp(a, b);
            (cut - a) * (v - 1.0).powi(2) + (b - cut) * (v + 1.0).powi(2)
        })
        .sum()
}

#[test]
fn random_design_step_error_decreases_with_n() {
    let cfg = TuningConfig::default();
    let mut errors = Vec::new();
    for k in [10u32, 12, 14] {
        let n = 1usize << k;
        let reps = 12;
        let mut total = 0.0;
        for r in 0..reps {
            let mut rng = stream(14 + k as u64, r);
            let t: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
            let z = normals(&mut rng, n);
            let y: Vec<f64> = t.iter().zip(&z).map(|(&t, z)| step(t) + z).collect();
            let d = random_design_transform(&t, &y, k as i32 - 1).unwrap();
            let fit = random_design_estimate(&d, &cfg, 1.0).unwrap();
            total += step_error(fit.fhat.values());
        }
        errors.push(total / reps as f64);
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn random_design_zero_function() {
    let n = 4096;
    let mut rng = stream(15, 0);
    let t: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
    let y = normals(&mut rng, n);
    let d = random_design_transform(&t, &y, 11).unwrap();
    let fit = random_design_estimate(&d, &TuningConfig::default(), 1.0).unwrap();
    let n_eff: usize = d.effective_sizes.iter().sum();
    let bound = 3.0 * 66.0 / n as f64 * n_eff as f64 / 2048.0;
    assert!(fit.fhat.integral_sq() < bound);
    // coarse levels below n_star keep their coefficients, finer ones are thresholded
    assert!(fit.levels.iter().filter(|l| l.level >= 6).all(|l| l.branch == Branch::Threshold));
}

#[test]
fn mle_risk_is_count_times_variance() {
    let beta: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin()).collect();
    let eps = 0.3;
    let spec = ExperimentSpec::new(Estimator::Mle, TruthSource::Explicit { beta }, eps, 300, 16);
    let rep = monte_carlo_risk(&spec).unwrap();
    let expect = 256.0 * eps * eps;
    let se = rep.total_mse_se.unwrap();
    assert!((rep.totals.total_mse - expect).abs() <= 4.0 * se);
    assert!(rep.per_block.iter().all(|b| b.branch == Branch::Mle));
}

#[test]
fn mle_rate_slope_is_two() {
    let mut spec = ExperimentSpec::new(
        Estimator::Mle,
        TruthSource::BesovExtremal { alpha: 1.0, max_level: 5 },
        1.0,
        50,
        17,
    );
    spec.epsilon = vec![0.5, 0.25, 0.125, 0.0625, 0.03125];
    let fit = rate_fit(&spec).unwrap();
    assert!((fit.slope - 2.0).abs() <= 0.02, "{}", fit.slope);
}

#[test]
fn geb_compound_risk_for_normal_means() {
    let mut spec = ExperimentSpec::new(Estimator::GebHybrid, TruthSource::IidNormal { n: 4096, sd: 1.0 }, 1.0, 200, 18);
    // b0 small enough for the GEB branch at this n (see acceptance criterion 4)
    spec.tuning.b0 = 0.1;
    spec.tuning.kde_mode = KdeMode::Fourier;
    let rep = monte_carlo_risk(&spec).unwrap();
    let per = rep.totals.total_mse / 4096.0;
    assert!((0.5..=0.6).contains(&per), "{per}");
    assert_eq!(rep.per_block[0].branch, Branch::Geb);
    assert!((rep.totals.total_ideal - 2048.0).abs() < 1e-9);
}

#[test]
fn dense_two_point_prior_takes_geb_branch() {
    let cfg = TuningConfig::default();
    let n = 2048;
    let geb = (0..200)
        .filter(|&r| {
            let mut rng = stream(19, r);
            let z = normals(&mut rng, n);
            let x: Vec<f64> = z.iter().map(|z| if rng.random::<bool>() { 5.0 + z } else { *z }).collect();
            hybrid_fit(&x, &cfg).unwrap().branch == Branch::Geb
        })
        .count();
    assert!(geb >= 198, "{geb}");
}

#[test]
fn regret_is_nonnegative_in_expectation() {
    let mut rng = stream(20, 0);
    for c in 0..20 {
        let len = 128;
        let sparse = rng.random_range(0.0..1.0);
        let scale = rng.random_range(0.5..6.0);
        let beta: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < sparse {
                    scale * (rng.random::<f64>() - 0.5)
                } else {
                    0.0
                }
            })
            .collect();
        let estimator = [Estimator::GebHybrid, Estimator::SoftUniversal, Estimator::JamesStein][c % 3];
        let spec = ExperimentSpec::new(estimator, TruthSource::Explicit { beta }, 1.0, 500, 21 + c as u64);
        let rep = monte_carlo_risk(&spec).unwrap();
        let se = rep.total_mse_se.unwrap();
        assert!(
            rep.totals.total_mse >= rep.totals.total_ideal - 4.0 * se,
            "config {c}: mse {} ideal {} se {se}",
            rep.totals.total_mse,
            rep.totals.total_ideal
        );
        for b in &rep.per_block {
            for v in [b.bound_r_p, b.bound_r0].into_iter().flatten() {
                assert!(v.is_finite() && v >= 0.0);
            }
            assert_eq!(b.bound_r_p.is_some(), b.size >= 3);
        }
    }
}

#[test]
fn reports_are_reproducible() {
    let prior = MixingDistribution::new([(0.0, 0.7), (3.0, 0.3)]).unwrap();
    let mut spec = ExperimentSpec::new(Estimator::GebHybrid, TruthSource::IidPrior { n: 300, prior }, 0.5, 16, 22);
    spec.tuning.n_star = 100;
    let a = monte_carlo_risk(&spec).unwrap();
    let b = monte_carlo_risk(&ExperimentSpec { jobs: Some(3), ..spec.clone() }).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = monte_carlo_risk(&ExperimentSpec { seed: 23, ..spec }).unwrap();
    assert_ne!(a.totals.total_mse, c.totals.total_mse);
}
