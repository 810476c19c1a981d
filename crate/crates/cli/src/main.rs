//! `geb-shrink`: wavelet denoising, oracle computations and risk experiments.

// NaN must fail range checks, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod specs;

use clap::{Parser, Subcommand};
use config::{ConfigFile, Format, TuningArgs};
use error::{CliError, CliResult};
use geb_core::io::{
    format_f64, read_design_csv, read_signal_csv, write_coefficients_csv, write_plot_csv, write_risk_report_csv,
    write_signal_csv,
};
use geb_core::regression::{denoise_equispaced, mad_sigma, random_design_estimate, random_design_transform, LevelSummary};
use geb_core::rng::{normals, stream};
use geb_core::{
    bayes_risk, delta, delta_star, mixture_summaries, monte_carlo_risk, r0, r_p, rate_fit, test_signal, tuning, Estimator,
    ExperimentSpec, RateFit, RiskReport, TruthSource, TuningConfig, WaveletBasis,
};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "geb-shrink", version, about = "General empirical Bayes wavelet shrinkage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Denoise a signal read from CSV.
    Denoise(DenoiseArgs),
    /// Run the experiment described by a key = value spec file.
    Simulate(SimulateArgs),
    /// Print oracle quantities of a prior.
    Oracle(OracleArgs),
    /// Run a Monte Carlo risk experiment given on the command line.
    Risk(RiskArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Design {
    Equispaced,
    Random,
}

#[derive(Debug, clap::Args)]
struct DenoiseArgs {
    /// Input CSV: index,value[,truth] (equispaced) or t,value (random design)
    #[arg(long, short)]
    input: PathBuf,
    /// Output file; stdout when absent
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the observed coefficients (j,k,value,delta) here
    #[arg(long)]
    coefficients: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "equispaced")]
    design: Design,
    /// Finest level J of the random-design transform [default: log2(N) - 1]
    #[arg(long)]
    levels: Option<i32>,
    /// haar, d4 or s8 [default: s8]
    #[arg(long)]
    wavelet: Option<String>,
    /// Known noise level; estimated from the finest level when absent
    #[arg(long)]
    sigma: Option<f64>,
    #[command(flatten)]
    tuning: TuningArgs,
    /// key = value settings file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// key = value experiment spec (estimator, truth, epsilon, replicates, seed and tuning keys)
    #[arg(long)]
    spec: PathBuf,
    /// Directory for report files
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it
    #[arg(long, env = "GEB_SHRINK_THREADS")]
    jobs: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct OracleArgs {
    /// Prior: loc:weight,... | point:x | normal:sd[:points] | uniform:lo:hi[:points]
    #[arg(long, allow_hyphen_values = true)]
    prior: String,
    /// Block size for the tuning constants and bound functionals
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Debug, clap::Args)]
struct RiskArgs {
    /// geb-hybrid, soft-universal, hard-universal, james-stein, mle or oracle-truth
    #[arg(long)]
    estimator: Option<String>,
    /// besov:alpha:J | signal:name:N:snr[:wavelet] | normal:n:sd | prior:n:<prior> | explicit:<file>
    #[arg(long, allow_hyphen_values = true)]
    truth: Option<String>,
    /// Noise level, or a comma list of at least 4 levels for a rate fit
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "GEB_SHRINK_THREADS")]
    jobs: Option<usize>,
    /// Wavelet for signal truths without one [default: s8]
    #[arg(long)]
    wavelet: Option<String>,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Denoise(a) => denoise(a),
        Command::Simulate(a) => simulate(a),
        Command::Oracle(a) => oracle(a),
        Command::Risk(a) => risk(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| CliError::usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn open(path: &Path, flag: &str) -> CliResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::flag(flag, format!("cannot read {}: {e}", path.display())))
}

fn level_table(levels: &[LevelSummary]) -> String {
    let mut out = String::from("level  size  branch       kappa_hat      b\n");
    for l in levels {
        let (k, b) = l
            .diagnostics
            .map(|d| (format!("{:.6}", d.kappa_hat), format!("{:.6}", d.b)))
            .unwrap_or_else(|| ("-".into(), "-".into()));
        out.push_str(&format!("{:>5}  {:>4}  {:<11}  {:>9}  {:>9}\n", l.level, l.size, l.branch.as_str(), k, b));
    }
    out
}

fn levels_json(levels: &[LevelSummary]) -> serde_json::Value {
    serde_json::to_value(levels).unwrap_or(serde_json::Value::Null)
}

fn denoise(a: DenoiseArgs) -> CliResult<()> {
    let file = ConfigFile::load(a.config.as_deref())?;
    let cfg = a.tuning.resolve(&file)?;
    let wavelet = config::wavelet(&file, a.wavelet.clone())?;
    let sigma = file.pick("sigma", a.sigma)?;
    if let Some(s) = sigma {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(CliError::flag("sigma", "must be nonnegative and finite"));
        }
    }
    let format = file.pick("format", a.format)?.unwrap_or(Format::Csv);
    let summary = match a.design {
        Design::Equispaced => denoise_equispaced_cmd(&a, &cfg, wavelet, sigma, format)?,
        Design::Random => denoise_random_cmd(&a, &file, &cfg, sigma, format)?,
    };
    // the summary goes to stdout only when the data went to a file
    if a.output.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn denoise_equispaced_cmd(
    a: &DenoiseArgs,
    cfg: &TuningConfig,
    wavelet: geb_core::WaveletName,
    sigma: Option<f64>,
    format: Format,
) -> CliResult<String> {
    let table = read_signal_csv(open(&a.input, "input")?).map_err(|e| CliError::flag("input", e))?;
    let n = table.value.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(CliError::flag(
            "input",
            format!("signal length must be a power of two (dyadic) >= 2, got {n}"),
        ));
    }
    let basis = WaveletBasis::new(wavelet);
    let out = denoise_equispaced(&table.value, &basis, cfg, sigma)?;
    let mut w = sink(a.output.as_deref())?;
    match format {
        Format::Csv => write_signal_csv(&mut w, &table.value, table.truth.as_deref(), Some(&out.fhat))?,
        Format::Json => {
            let doc = json!({
                "wavelet": wavelet.to_string(),
                "sigma": out.sigma,
                "epsilon": out.epsilon,
                "levels": levels_json(&out.levels),
                "value": table.value,
                "fhat": out.fhat,
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&doc).unwrap_or_default())?;
        }
    }
    w.flush()?;
    if let Some(p) = &a.coefficients {
        write_coefficients_csv(sink(Some(p))?, &out.coefficients, None)?;
    }
    let summary = format!("sigma_hat = {}\n{}", format_f64(out.sigma), level_table(&out.levels));
    Ok(summary)
}

fn denoise_random_cmd(
    a: &DenoiseArgs,
    file: &ConfigFile,
    cfg: &TuningConfig,
    sigma: Option<f64>,
    format: Format,
) -> CliResult<String> {
    let (t, y) = read_design_csv(open(&a.input, "input")?).map_err(|e| CliError::flag("input", e))?;
    if t.is_empty() {
        return Err(CliError::flag("input", "no observations"));
    }
    let levels = match file.pick("levels", a.levels)? {
        Some(j) => j,
        None => ((t.len() as f64).log2().round() as i32 - 1).max(0),
    };
    if !(0..=24).contains(&levels) {
        return Err(CliError::flag("levels", "must lie in 0..=24"));
    }
    let data = random_design_transform(&t, &y, levels).map_err(|e| CliError::flag("input", e))?;
    let sigma = match sigma {
        Some(s) => s,
        None => {
            let finest: Vec<f64> = geb_core::sequence::level_range(levels)
                .filter(|&i| data.delta[i] == 1)
                .map(|i| data.coefficients[i])
                .collect();
            if finest.is_empty() {
                return Err(CliError::flag("sigma", "cannot be estimated: the finest level has no usable coefficients"));
            }
            mad_sigma(&finest, t.len())?
        }
    };
    let fit = random_design_estimate(&data, cfg, sigma)?;
    let fhat: Vec<f64> = t.iter().map(|&x| fit.fhat.eval(x)).collect();
    let mut w = sink(a.output.as_deref())?;
    match format {
        Format::Csv => {
            writeln!(w, "t,value,fhat")?;
            for i in 0..t.len() {
                writeln!(w, "{},{},{}", format_f64(t[i]), format_f64(y[i]), format_f64(fhat[i]))?;
            }
        }
        Format::Json => {
            let doc = json!({
                "sigma": sigma,
                "levels": levels_json(&fit.levels),
                "cells": fit.fhat.values(),
                "fhat": fhat,
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&doc).unwrap_or_default())?;
        }
    }
    w.flush()?;
    if let Some(p) = &a.coefficients {
        write_coefficients_csv(sink(Some(p))?, &data.coefficients, Some(&data.delta))?;
    }
    let summary = format!("sigma_hat = {}\n{}", format_f64(sigma), level_table(&fit.levels));
    Ok(summary)
}

fn oracle(a: OracleArgs) -> CliResult<()> {
    let file = ConfigFile::load(a.config.as_deref())?;
    let cfg = a.tuning.resolve(&file)?;
    let g = specs::parse_prior(&a.prior)?;
    let s = mixture_summaries(&g, 2.0, 1.0)?;
    let mut rows: Vec<(&str, f64)> = vec![
        ("bayes_risk", bayes_risk(&g)?),
        ("kappa", s.kappa),
        ("kappa_tilde", s.kappa_tilde),
        ("mu_2", s.mu_p),
        ("tail_at_1", s.tail_at_x),
    ];
    if let Some(n) = a.n {
        if n < 3 {
            return Err(CliError::flag("n", "must be at least 3"));
        }
        let t = tuning(n, &cfg).map_err(|e| CliError::flag("rho0", e))?;
        rows.extend([
            ("rho", t.rho),
            ("b", t.b),
            ("lambda", t.lambda),
            ("delta", delta(t.rho, &g)?),
            ("delta_star", delta_star(n, t.rho)?),
            ("r_2", r_p(n, s.mu_p, 2.0)?),
            ("r0", r0(n, &g)?),
        ]);
    }
    let mut out = std::io::stdout().lock();
    match file.pick("format", a.format)?.unwrap_or(Format::Csv) {
        Format::Csv => {
            writeln!(out, "quantity,value")?;
            for (k, v) in rows {
                writeln!(out, "{k},{}", format_f64(v))?;
            }
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                rows.into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&map).unwrap_or_default())?;
        }
    }
    Ok(())
}

/// Experiment settings gathered from flags and a config or spec file.
struct ExperimentInputs<'a> {
    estimator: Option<String>,
    truth: Option<String>,
    epsilon: Option<String>,
    replicates: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    wavelet: Option<String>,
    tuning: &'a TuningArgs,
}

fn build_spec(inputs: ExperimentInputs<'_>, file: &ConfigFile) -> CliResult<ExperimentSpec> {
    let cfg = inputs.tuning.resolve(file)?;
    let wavelet = config::wavelet(file, inputs.wavelet)?;
    let estimator = match file.pick::<String>("estimator", inputs.estimator)? {
        Some(e) => Estimator::parse(&e).map_err(|e| CliError::flag("estimator", e))?,
        None => Estimator::GebHybrid,
    };
    let truth_text = file
        .pick::<String>("truth", inputs.truth)?
        .ok_or_else(|| CliError::flag("truth", "is required"))?;
    let truth = specs::parse_truth(&truth_text, wavelet)?;
    let epsilon = match file.pick::<String>("epsilon", inputs.epsilon)? {
        Some(list) => specs::parse_list("epsilon", &list)?,
        None => Vec::new(),
    };
    if epsilon.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(CliError::flag("epsilon", "noise levels must be positive"));
    }
    if epsilon.len() > 1 && epsilon.len() < 4 {
        return Err(CliError::flag("epsilon", "a rate fit needs at least 4 noise levels"));
    }
    let replicates = file.pick("replicates", inputs.replicates)?.unwrap_or(100);
    if replicates == 0 {
        return Err(CliError::flag("replicates", "must be at least 1"));
    }
    let spec = ExperimentSpec {
        estimator,
        truth,
        epsilon,
        replicates,
        seed: file.pick("seed", inputs.seed)?.unwrap_or(1),
        tuning: cfg,
        jobs: config::jobs(file, inputs.jobs)?,
    };
    spec.validate()?;
    Ok(spec)
}

enum Outcome {
    Report(RiskReport),
    Rate(RateFit),
}

fn run_spec(spec: &ExperimentSpec) -> CliResult<Outcome> {
    Ok(if spec.epsilon.len() > 1 {
        Outcome::Rate(rate_fit(spec)?)
    } else {
        Outcome::Report(monte_carlo_risk(spec)?)
    })
}

fn write_outcome<W: Write>(mut w: W, outcome: &Outcome, format: Format) -> CliResult<()> {
    match (outcome, format) {
        (Outcome::Report(r), Format::Csv) => write_risk_report_csv(&mut w, r)?,
        (Outcome::Report(r), Format::Json) => {
            writeln!(w, "{}", serde_json::to_string_pretty(r).unwrap_or_default())?;
        }
        (Outcome::Rate(f), Format::Csv) => {
            writeln!(w, "epsilon,total_mse")?;
            for (e, r) in &f.points {
                writeln!(w, "{},{}", format_f64(*e), format_f64(*r))?;
            }
            writeln!(w, "slope,{}", format_f64(f.slope))?;
            writeln!(w, "intercept,{}", format_f64(f.intercept))?;
        }
        (Outcome::Rate(f), Format::Json) => {
            writeln!(w, "{}", serde_json::to_string_pretty(f).unwrap_or_default())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn risk(a: RiskArgs) -> CliResult<()> {
    let file = ConfigFile::load(a.config.as_deref())?;
    let spec = build_spec(
        ExperimentInputs {
            estimator: a.estimator,
            truth: a.truth,
            epsilon: a.epsilon,
            replicates: a.replicates,
            seed: a.seed,
            jobs: a.jobs,
            wavelet: a.wavelet,
            tuning: &a.tuning,
        },
        &file,
    )?;
    let format = file.pick("format", a.format)?.unwrap_or(Format::Json);
    let outcome = run_spec(&spec)?;
    write_outcome(sink(a.output.as_deref())?, &outcome, format)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.spec)
        .map_err(|e| CliError::flag("spec", format!("cannot read {}: {e}", a.spec.display())))?;
    let file = ConfigFile::parse(&text).map_err(|e| CliError::flag("spec", e))?;
    let tuning_args = TuningArgs::default();
    let spec = build_spec(
        ExperimentInputs {
            estimator: None,
            truth: None,
            epsilon: None,
            replicates: None,
            seed: a.seed,
            jobs: a.jobs,
            wavelet: None,
            tuning: &tuning_args,
        },
        &file,
    )?;
    let dir = a
        .out_dir
        .or_else(|| file.raw("out-dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::flag("out-dir", e))?;
    let outcome = run_spec(&spec)?;
    let stem = match outcome {
        Outcome::Report(_) => "report",
        Outcome::Rate(_) => "rate",
    };
    write_outcome(sink(Some(&dir.join(format!("{stem}.json"))))?, &outcome, Format::Json)?;
    write_outcome(sink(Some(&dir.join(format!("{stem}.csv"))))?, &outcome, Format::Csv)?;
    if let TruthSource::TestSignal { name, n, snr, wavelet } = &spec.truth {
        let (f, sigma) = test_signal(*name, *n, *snr)?;
        let sigma = match spec.epsilon.as_slice() {
            [e] => e * (*n as f64).sqrt(),
            _ => sigma,
        };
        let z = normals(&mut stream(spec.seed, 0), *n);
        let y: Vec<f64> = f.iter().zip(&z).map(|(f, z)| f + sigma * z).collect();
        let out = denoise_equispaced(&y, &WaveletBasis::new(*wavelet), &spec.tuning, Some(sigma))?;
        write_plot_csv(sink(Some(&dir.join("plot.csv")))?, &f, &y, &out.fhat)?;
    }
    match &outcome {
        Outcome::Report(r) => println!(
            "total_mse = {} (se {}), total_ideal = {}, replicates = {}",
            format_f64(r.totals.total_mse),
            r.total_mse_se.map(format_f64).unwrap_or_else(|| "-".into()),
            format_f64(r.totals.total_ideal),
            r.replicates
        ),
        Outcome::Rate(f) => println!("slope = {}", format_f64(f.slope)),
    }
    println!("wrote {}", dir.display());
    Ok(())
}
