//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails.

use geb_core::block::TuningConfig;
use geb_core::io::write_plot_csv;
use geb_core::kde::{KdeMode, KernelDensityEstimate};
use geb_core::mixture::{bayes_risk, mixture_summaries, MixingDistribution};
use geb_core::normal;
use geb_core::regression::{denoise_equispaced, random_design_estimate, random_design_transform, universal_soft_equispaced};
use geb_core::risk::{monte_carlo_risk, rate_fit, Estimator, ExperimentSpec, TruthSource};
use geb_core::rng::{normals, stream};
use geb_core::rule::{rule_risk, ScalarRule};
use geb_core::sequence::{estimate_sequence, BlockedSequence};
use geb_core::signals::{test_signal, SignalName};
use geb_core::wavelet::{dwt, idwt, WaveletBasis, WaveletName};
use geb_core::{kappa_hat, soft_threshold_risk};
use rand::Rng;
use std::fs::File;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(cond: bool, failures: &mut Vec<String>, what: String) {
    if !cond {
        failures.push(what);
    }
}

fn outcome(failures: Vec<String>, summary: String) -> Outcome {
    if failures.is_empty() {
        Outcome { pass: true, detail: summary }
    } else {
        Outcome {
            pass: false,
            detail: format!("{summary}; failed: {}", failures.join("; ")),
        }
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn random_mixing<R: Rng>(rng: &mut R) -> MixingDistribution {
    let k = rng.random_range(1..=8);
    MixingDistribution::normalized((0..k).map(|_| (rng.random_range(-5.0..5.0), rng.random_range(0.05..1.0)))).unwrap()
}

// 1. Oracle exactness.
fn oracle_exactness() -> Outcome {
    let mut fails = Vec::new();
    let grid = MixingDistribution::normal_grid(0.0, 1.0, 6.0, 201).unwrap();
    let r = bayes_risk(&grid).unwrap();
    check((r - 0.5).abs() <= 1e-3, &mut fails, format!("grid R* = {r}"));
    let mut rng = stream(101, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = random_mixing(&mut rng);
        let a = rule_risk(&ScalarRule::oracle(g.clone()), &g).unwrap();
        let b = bayes_risk(&g).unwrap();
        worst = worst.max((a - b).abs());
    }
    check(worst <= 1e-7, &mut fails, format!("max |rule_risk - R*| = {worst:e}"));
    outcome(fails, format!("R*(N(0,1) grid) = {r:.6}, max oracle gap {worst:.2e} over 50 G"))
}

// 2. Threshold-risk identity.
fn threshold_risk() -> Outcome {
    let mut fails = Vec::new();
    let draws = 1_000_000;
    let mut worst_z: f64 = 0.0;
    for (i, &mu) in [0.0, 1.0, 3.0, 10.0].iter().enumerate() {
        for (k, &lambda) in [0.0, 1.0, 2.0, 3.0].iter().enumerate() {
            let exact = soft_threshold_risk(mu, lambda).unwrap();
            let mut rng = stream(202, (4 * i + k) as u64);
            let losses: Vec<f64> = normals(&mut rng, draws)
                .into_iter()
                .map(|z| {
                    let x: f64 = mu + z;
                    let s = x.signum() * (x.abs() - lambda).max(0.0);
                    (s - mu) * (s - mu)
                })
                .collect();
            let (m, se) = mean_se(&losses);
            let z = (m - exact).abs() / se;
            worst_z = worst_z.max(z);
            check(z <= 4.0, &mut fails, format!("(mu, lambda) = ({mu}, {lambda}): exact {exact}, MC {m} ± {se}"));
            let bound = if lambda > 0.0 {
                (mu * mu + 4.0 * normal::pdf(lambda) / lambda.powi(3)).min(lambda * lambda + 1.0)
            } else {
                1.0
            };
            check(exact <= bound + 1e-12, &mut fails, format!("bound at ({mu}, {lambda}): {exact} > {bound}"));
        }
    }
    for lambda in [0.0, 1.0, 2.0, 3.0] {
        let mut prev = soft_threshold_risk(0.0, lambda).unwrap();
        for s in 1..=60 {
            let mu = s as f64 * 0.25;
            let r = soft_threshold_risk(mu, lambda).unwrap();
            let neg = soft_threshold_risk(-mu, lambda).unwrap();
            check(r >= prev - 1e-10, &mut fails, format!("not monotone at lambda {lambda}, mu {mu}"));
            check((r - neg).abs() < 1e-12, &mut fails, format!("not even at lambda {lambda}, mu {mu}"));
            prev = r;
        }
    }
    outcome(fails, format!("16 (mu, lambda) pairs, max |z| = {worst_z:.2}"))
}

// 3. Zero-signal pipeline.
fn zero_signal() -> Outcome {
    let mut fails = Vec::new();
    let n = 2048;
    let sigma = 1.0;
    let eps2 = sigma * sigma / n as f64;
    let basis = WaveletBasis::new(WaveletName::S8);
    let cfg = TuningConfig::default();
    let reps = 200;
    let mut raw = Vec::with_capacity(reps);
    let mut thresholded = Vec::with_capacity(reps);
    for r in 0..reps {
        let y = normals(&mut stream(303, r as u64), n);
        let out = denoise_equispaced(&y, &basis, &cfg, Some(sigma)).unwrap();
        let total: f64 = out.fhat.iter().map(|v| v * v).sum::<f64>() / n as f64;
        // levels -1..=5 are kept as observed
        let kept: f64 = out.coefficients[..64].iter().map(|v| v * v).sum();
        raw.push(total / eps2);
        thresholded.push((total - kept) / eps2);
    }
    let (raw_mean, raw_se) = mean_se(&raw);
    let (thr_mean, thr_se) = mean_se(&thresholded);
    // identity levels contribute exactly 64 eps^2 in expectation
    let adjusted = 64.0 + thr_mean;
    check((64.0..=66.0).contains(&adjusted), &mut fails, format!("adjusted mean {adjusted} eps^2"));
    outcome(
        fails,
        format!(
            "mean total = 64 + {thr_mean:.4} (± {thr_se:.4}) eps^2 = {adjusted:.4} eps^2; raw mean {raw_mean:.3} ± {raw_se:.3} eps^2"
        ),
    )
}

// 4. Compound optimality trend.
fn compound_trend() -> Outcome {
    let mut fails = Vec::new();
    let mut regrets = Vec::new();
    let mut lines = Vec::new();
    for k in 8..=13 {
        let n = 1usize << k;
        let mut spec = ExperimentSpec::new(Estimator::GebHybrid, TruthSource::IidNormal { n, sd: 1.0 }, 1.0, 200, 404);
        spec.tuning.b0 = 0.1;
        spec.tuning.kde_mode = KdeMode::Fourier;
        let rep = monte_carlo_risk(&spec).unwrap();
        let regret = rep.totals.total_mse / n as f64 - 0.5;
        let se = rep.total_mse_se.unwrap() / n as f64;
        check(regret > -3.0 * se, &mut fails, format!("n = {n}: regret {regret} below -3 SE"));
        lines.push(format!("{n}:{regret:.4}"));
        regrets.push((regret, se));
    }
    let (first, last) = (regrets[0].0, regrets[regrets.len() - 1].0);
    let drop = 1.0 - last / first;
    check(drop >= 0.30, &mut fails, format!("regret drop {:.1}%", 100.0 * drop));
    check(last <= 0.1, &mut fails, format!("regret at 8192 = {last}"));

    // default b0 = 2 stays in the threshold branch for this prior at these n
    let mut spec = ExperimentSpec::new(Estimator::GebHybrid, TruthSource::IidNormal { n: 8192, sd: 1.0 }, 1.0, 20, 404);
    spec.tuning.kde_mode = KdeMode::Fourier;
    let default = monte_carlo_risk(&spec).unwrap();
    outcome(
        fails,
        format!(
            "b0 = 0.1, regret by n [{}], drop {:.1}%; with b0 = 2 at n = 8192: branch {}, regret {:.3}",
            lines.join(" "),
            100.0 * drop,
            default.per_block[0].branch.as_str(),
            default.totals.total_mse / 8192.0 - 0.5
        ),
    )
}

// 5. kappa_hat calibration.
fn kappa_calibration() -> Outcome {
    let mut fails = Vec::new();
    let n = 256;
    let reps = 2000;
    let u = 0.1;
    let bound = (-(n as f64) * u * u).exp();
    let priors: [(&str, Vec<f64>); 3] = [
        ("delta0", vec![0.0; n]),
        ("delta2", vec![2.0; n]),
        ("mix0-5", (0..n).map(|i| if i % 2 == 0 { 0.0 } else { 5.0 }).collect()),
    ];
    let mut parts = Vec::new();
    for (p, (name, theta)) in priors.iter().enumerate() {
        let g = MixingDistribution::normalized(theta.iter().map(|&t| (t, 1.0))).unwrap();
        let target = mixture_summaries(&g, 2.0, 1.0).unwrap().kappa_tilde;
        let mut values = Vec::with_capacity(reps);
        for r in 0..reps {
            let z = normals(&mut stream(505 + p as u64, r as u64), n);
            let x: Vec<f64> = theta.iter().zip(&z).map(|(t, z)| t + z).collect();
            values.push(kappa_hat(&x).unwrap());
        }
        let (m, se) = mean_se(&values);
        check((m - target).abs() <= 4.0 * se, &mut fails, format!("{name}: mean {m} vs {target} (SE {se})"));
        let slack = 4.0 * (bound * (1.0 - bound) / reps as f64).sqrt();
        let up = values.iter().filter(|&&k| k - target > u).count() as f64 / reps as f64;
        let down = values.iter().filter(|&&k| target - k > u).count() as f64 / reps as f64;
        check(up <= bound + slack && down <= bound + slack, &mut fails, format!("{name}: tail {up}/{down} > {bound}"));
        parts.push(format!("{name}: {m:.4} vs {target:.4} (z {:.2}), tails {up:.4}/{down:.4}", (m - target) / se));
    }
    outcome(fails, format!("{}; exp(-n u^2) = {bound:.4}", parts.join(", ")))
}

// 6. Test-signal reproduction.
fn signal_reproduction() -> Outcome {
    let mut fails = Vec::new();
    let n = 2048;
    let basis = WaveletBasis::new(WaveletName::S8);
    let cfg = TuningConfig::default();
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let reps = 10;
    let mut parts = Vec::new();
    for (s, name) in SignalName::ALL.iter().enumerate() {
        let (f, sigma) = test_signal(*name, n, 7.0).unwrap();
        let (mut geb, mut soft) = (0.0, 0.0);
        for r in 0..reps {
            let z = normals(&mut stream(606 + s as u64, r as u64), n);
            let y: Vec<f64> = f.iter().zip(&z).map(|(f, z)| f + sigma * z).collect();
            let out = denoise_equispaced(&y, &basis, &cfg, None).unwrap();
            let base = universal_soft_equispaced(&y, &basis, out.sigma, cfg.n_star).unwrap();
            let mse = |e: &[f64]| e.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
            geb += mse(&out.fhat) / reps as f64;
            soft += mse(&base) / reps as f64;
            if r == 0 {
                let file = File::create(dir.join(format!("{name}.csv"))).unwrap();
                write_plot_csv(file, &f, &y, &out.fhat).unwrap();
            }
        }
        let ratio = geb / soft;
        check(ratio <= 1.5, &mut fails, format!("{name}: GEB/soft = {ratio}"));
        parts.push(format!("{name} {geb:.4}/{soft:.4} = {ratio:.3}"));
    }
    outcome(fails, format!("GEB/universal-soft MSE: {}", parts.join(", ")))
}

// 7. Exact invariants.
fn exact_invariants() -> Outcome {
    let mut fails = Vec::new();
    let mut rng = stream(707, 0);
    // scale equivariance with a dense level so the GEB branch is exercised
    let n = 1024;
    let mut flat: Vec<f64> = normals(&mut rng, n);
    for v in flat[512..].iter_mut() {
        *v *= 4.0;
    }
    let cfg = TuningConfig::default();
    let base = estimate_sequence(&BlockedSequence::dyadic(&flat, 1.0).unwrap(), &cfg).unwrap();
    let geb_levels = base.fits.iter().filter(|f| f.branch == geb_core::Branch::Geb).count();
    check(geb_levels > 0, &mut fails, "no GEB level in equivariance check".into());
    let mut worst_equiv: f64 = 0.0;
    for c in [0.001, 3.7, 250.0] {
        let scaled: Vec<f64> = flat.iter().map(|v| c * v).collect();
        let est = estimate_sequence(&BlockedSequence::dyadic(&scaled, c).unwrap(), &cfg).unwrap();
        for (a, b) in est.flatten().iter().zip(base.flatten()) {
            worst_equiv = worst_equiv.max((a - c * b).abs() / (c * b.abs()).max(c));
        }
    }
    check(worst_equiv <= 1e-10, &mut fails, format!("equivariance error {worst_equiv:e}"));

    let mut worst_pr: f64 = 0.0;
    let mut worst_parseval: f64 = 0.0;
    for name in [WaveletName::Haar, WaveletName::D4, WaveletName::S8] {
        let basis = WaveletBasis::new(name);
        for i in 0..100 {
            let len = 1usize << (1 + i % 12);
            let x = normals(&mut rng, len);
            let c = dwt(&x, &basis).unwrap();
            let back = idwt(&c, &basis).unwrap();
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            worst_pr = worst_pr.max(x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
            let ex: f64 = x.iter().map(|v| v * v).sum::<f64>() / len as f64;
            let ec: f64 = c.iter().map(|v| v * v).sum();
            worst_parseval = worst_parseval.max((ex - ec).abs() / ex.max(1.0));
        }
    }
    check(worst_pr <= 1e-10, &mut fails, format!("reconstruction error {worst_pr:e}"));
    check(worst_parseval <= 1e-10, &mut fails, format!("Parseval error {worst_parseval:e}"));

    let mut worst_kde: f64 = 0.0;
    for &m in &[3usize, 64, 700, 4096] {
        let xs: Vec<f64> = normals(&mut rng, m).into_iter().map(|v| 2.0 * v).collect();
        let d = KernelDensityEstimate::fit(&xs, KdeMode::Direct).unwrap();
        let f = KernelDensityEstimate::fit(&xs, KdeMode::Fourier).unwrap();
        for i in 0..=400 {
            let x = -12.0 + 0.06 * i as f64;
            let (a, b) = (d.eval(x), f.eval(x));
            worst_kde = worst_kde.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
        }
    }
    check(worst_kde <= 1e-8, &mut fails, format!("kde direct/fourier gap {worst_kde:e}"));

    let mut spec = ExperimentSpec::new(
        Estimator::GebHybrid,
        TruthSource::TestSignal {
            name: SignalName::Bumps,
            n: 1024,
            snr: 7.0,
            wavelet: WaveletName::S8,
        },
        0.0,
        12,
        42,
    );
    spec.epsilon.clear();
    let runs: Vec<_> = [None, Some(1), Some(2), Some(5)]
        .into_iter()
        .map(|jobs| {
            let s = ExperimentSpec { jobs, ..spec.clone() };
            serde_json::to_string(&monte_carlo_risk(&s).unwrap()).unwrap()
        })
        .collect();
    check(runs.windows(2).all(|w| w[0] == w[1]), &mut fails, "reruns differ across jobs".into());
    outcome(
        fails,
        format!(
            "equivariance {worst_equiv:.1e}, reconstruction {worst_pr:.1e}, Parseval {worst_parseval:.1e}, kde {worst_kde:.1e}, reruns identical across jobs {{default,1,2,5}}"
        ),
    )
}

// 8. Rate behaviour.
fn rate_behaviour() -> Outcome {
    let mut fails = Vec::new();
    let mut spec = ExperimentSpec::new(
        Estimator::GebHybrid,
        TruthSource::BesovExtremal { alpha: 1.0, max_level: 12 },
        1.0,
        100,
        808,
    );
    spec.epsilon = (4..=9).map(|k| 2f64.powi(-k)).collect();
    spec.tuning.kde_mode = KdeMode::Fourier;
    let fit = rate_fit(&spec).unwrap();
    let target = 2.0 / 1.5 - 0.15;
    check(fit.slope >= target, &mut fails, format!("slope {}", fit.slope));
    outcome(fails, format!("slope {:.4} (needs >= {target:.4})", fit.slope))
}

// 9. Random design sanity.
fn random_design() -> Outcome {
    let mut fails = Vec::new();
    let cfg = TuningConfig::default();
    let mut rng = stream(909, 0);
    let t: Vec<f64> = (0..1000).map(|_| 1.0 - rng.random::<f64>()).collect();
    let c = -2.75;
    let data = random_design_transform(&t, &vec![c; t.len()], 8).unwrap();
    let fit = random_design_estimate(&data, &cfg, 0.0).unwrap();
    let const_err = fit.fhat.values().iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
    check(const_err <= 1e-12, &mut fails, format!("constant recovery error {const_err:e}"));

    let n = 4096;
    let eps2 = 1.0 / n as f64;
    let reps = 100;
    let mut energies = Vec::with_capacity(reps);
    let mut effective = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut rng = stream(910, r as u64);
        let t: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        let y = normals(&mut rng, n);
        let data = random_design_transform(&t, &y, 11).unwrap();
        let fit = random_design_estimate(&data, &cfg, 1.0).unwrap();
        energies.push(fit.fhat.integral_sq());
        effective.push(data.effective_sizes.iter().sum::<usize>() as f64);
    }
    let (energy, energy_se) = mean_se(&energies);
    let n_eff = effective.iter().sum::<f64>() / reps as f64;
    let bound = 3.0 * 66.0 * eps2 * n_eff / 2048.0;
    check(energy <= bound, &mut fails, format!("mean integral {energy} > {bound}"));
    outcome(
        fails,
        format!(
            "constant error {const_err:.1e}; zero f: mean ∫f̂² = {energy:.3e} ± {energy_se:.1e}, bound {bound:.3e} (n_eff {n_eff:.0})"
        ),
    )
}

#[test]
fn acceptance_criteria() {
    // start on a fresh line after the harness prefix
    println!();
    type Criterion = (usize, &'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        (1, "oracle exactness", 10, oracle_exactness),
        (2, "threshold-risk identity", 30, threshold_risk),
        (3, "zero-signal pipeline", 120, zero_signal),
        (4, "compound optimality trend", 600, compound_trend),
        (5, "kappa-hat calibration", 60, kappa_calibration),
        (6, "test-signal reproduction", 120, signal_reproduction),
        (7, "exact invariants", 600, exact_invariants),
        (8, "rate behaviour", 600, rate_behaviour),
        (9, "random design sanity", 120, random_design),
    ];
    let mut all = true;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let pass = out.pass && in_time;
        all &= pass;
        println!(
            "criterion {id} [{}] {name}: {} ({:.1}s, limit {limit}s{})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
    }
    assert!(all, "acceptance criteria failed");
}
