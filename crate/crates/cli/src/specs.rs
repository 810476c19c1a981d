//! Text forms of priors and truth sources.
//!
//! Priors: `loc:weight,loc:weight,...`, `point:x`, `normal:sd[:points]`,
//! `uniform:lo:hi[:points]`.
//!
//! Truths: `besov:alpha:J`, `signal:name:N:snr[:wavelet]`, `normal:n:sd`,
//! `prior:n:<prior>`, `explicit:<coefficient csv>`.

use crate::error::{CliError, CliResult};
use geb_core::io::read_coefficients_csv;
use geb_core::{MixingDistribution, TruthSource, WaveletName};

fn num<T: std::str::FromStr>(flag: &str, s: &str) -> CliResult<T> {
    s.trim()
        .parse()
        .map_err(|_| CliError::flag(flag, format!("'{s}' is not a valid number")))
}

pub fn parse_prior(s: &str) -> CliResult<MixingDistribution> {
    let flag = "prior";
    let parts: Vec<&str> = s.split(':').collect();
    let g = match parts.as_slice() {
        ["point", x] => MixingDistribution::point_mass(num(flag, x)?),
        ["normal", sd] => {
            let sd: f64 = num(flag, sd)?;
            MixingDistribution::normal_grid(0.0, sd, 10.0 * sd, 401)
        }
        ["normal", sd, points] => {
            let sd: f64 = num(flag, sd)?;
            MixingDistribution::normal_grid(0.0, sd, 10.0 * sd, num(flag, points)?)
        }
        ["uniform", lo, hi] => MixingDistribution::uniform_grid(num(flag, lo)?, num(flag, hi)?, 401),
        ["uniform", lo, hi, points] => {
            MixingDistribution::uniform_grid(num(flag, lo)?, num(flag, hi)?, num(flag, points)?)
        }
        _ => {
            let atoms = s
                .split(',')
                .map(|pair| {
                    // split at the last ':' so negative locations need no escaping
                    let (l, w) = pair
                        .rsplit_once(':')
                        .ok_or_else(|| CliError::flag(flag, format!("'{pair}' is not loc:weight")))?;
                    Ok((num::<f64>(flag, l)?, num::<f64>(flag, w)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            MixingDistribution::new(atoms)
        }
    };
    g.map_err(|e| CliError::flag(flag, e))
}

pub fn parse_truth(s: &str, default_wavelet: WaveletName) -> CliResult<TruthSource> {
    let flag = "truth";
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let parts: Vec<&str> = rest.split(':').collect();
    Ok(match (kind, parts.as_slice()) {
        ("besov", [alpha, j]) => TruthSource::BesovExtremal {
            alpha: num(flag, alpha)?,
            max_level: num(flag, j)?,
        },
        ("signal", [name, n, snr, wavelet @ ..]) if wavelet.len() <= 1 => TruthSource::TestSignal {
            name: name.parse().map_err(|e| CliError::flag(flag, e))?,
            n: num(flag, n)?,
            snr: num(flag, snr)?,
            wavelet: match wavelet.first() {
                Some(w) => w.parse().map_err(|e| CliError::flag(flag, e))?,
                None => default_wavelet,
            },
        },
        ("normal", [n, sd]) => TruthSource::IidNormal {
            n: num(flag, n)?,
            sd: num(flag, sd)?,
        },
        ("prior", [n, ..]) => {
            let prior_text = rest.split_once(':').map(|p| p.1).unwrap_or("");
            TruthSource::IidPrior {
                n: num(flag, n)?,
                prior: parse_prior(prior_text)?,
            }
        }
        ("explicit", _) if !rest.is_empty() => {
            let file = std::fs::File::open(rest).map_err(|e| CliError::flag(flag, format!("{rest}: {e}")))?;
            let (beta, _) = read_coefficients_csv(file).map_err(|e| CliError::flag(flag, e))?;
            TruthSource::Explicit { beta }
        }
        _ => {
            return Err(CliError::flag(
                flag,
                format!("cannot parse '{s}' (expected besov:alpha:J, signal:name:N:snr[:wavelet], normal:n:sd, prior:n:<prior> or explicit:<file>)"),
            ))
        }
    })
}

pub fn parse_list(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|v| num(flag, v)).collect()
}
