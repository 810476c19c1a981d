//! CSV text formats. Reals are written with 17 significant digits so that
//! every `f64` round-trips exactly.

use crate::error::{GebError, Result};
use crate::sequence::{finest_level, level_range, RiskReport};
use std::io::{Read, Write};

/// `x` with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Columns of a signal file: `index,value[,truth]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalTable {
    pub index: Vec<usize>,
    pub value: Vec<f64>,
    pub truth: Option<Vec<f64>>,
}

fn csv_err(e: csv::Error) -> GebError {
    GebError::invalid(format!("csv: {e}"))
}

fn parse_num(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| GebError::invalid(format!("line {line}: '{field}' is not a number")))
}

/// Read a signal file. A header row naming `value` (and optionally `index`,
/// `truth`) is honoured; without one the columns are positional: `value`,
/// `index,value` or `index,value,truth`.
pub fn read_signal_csv<R: Read>(reader: R) -> Result<SignalTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>().map_err(csv_err)?;
    let Some(first) = records.first() else {
        return Ok(SignalTable::default());
    };
    let has_header = first.get(0).is_some_and(|f| f.parse::<f64>().is_err());
    let (cols, body) = if has_header {
        let find = |name: &str| first.iter().position(|h| h.eq_ignore_ascii_case(name));
        let value = find("value").ok_or_else(|| GebError::invalid("signal header lacks a 'value' column"))?;
        ((find("index"), value, find("truth")), &records[1..])
    } else {
        let cols = match first.len() {
            1 => (None, 0, None),
            2 => (Some(0), 1, None),
            _ => (Some(0), 1, Some(2)),
        };
        (cols, &records[..])
    };
    let (ic, vc, tc) = cols;
    let mut table = SignalTable {
        truth: tc.map(|_| Vec::with_capacity(body.len())),
        ..Default::default()
    };
    for (row, rec) in body.iter().enumerate() {
        let line = row + 1 + usize::from(has_header);
        let get = |c: usize| rec.get(c).ok_or_else(|| GebError::invalid(format!("line {line}: missing column {}", c + 1)));
        table.value.push(parse_num(get(vc)?, line)?);
        table.index.push(match ic {
            Some(c) => {
                let f = get(c)?;
                f.parse::<usize>().map_err(|_| GebError::invalid(format!("line {line}: bad index '{f}'")))?
            }
            None => row,
        });
        if let (Some(c), Some(t)) = (tc, table.truth.as_mut()) {
            t.push(parse_num(get(c)?, line)?);
        }
    }
    Ok(table)
}

/// Read a random-design file with columns `t,value` (header optional).
pub fn read_design_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut t = Vec::new();
    let mut y = Vec::new();
    let mut columns = (0, 1);
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if row == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            let find = |name: &str| rec.iter().position(|h| h.eq_ignore_ascii_case(name));
            columns = (
                find("t").ok_or_else(|| GebError::invalid("design header lacks a 't' column"))?,
                find("value").or_else(|| find("y")).ok_or_else(|| GebError::invalid("design header lacks a 'value' column"))?,
            );
            continue;
        }
        let field = |c: usize| rec.get(c).ok_or_else(|| GebError::invalid(format!("line {}: missing column {}", row + 1, c + 1)));
        t.push(parse_num(field(columns.0)?, row + 1)?);
        y.push(parse_num(field(columns.1)?, row + 1)?);
    }
    Ok((t, y))
}

/// Write `index,value[,truth][,fhat]`.
pub fn write_signal_csv<W: Write>(writer: W, value: &[f64], truth: Option<&[f64]>, fhat: Option<&[f64]>) -> Result<()> {
    let n = value.len();
    if truth.is_some_and(|t| t.len() != n) || fhat.is_some_and(|f| f.len() != n) {
        return Err(GebError::invalid("signal columns differ in length"));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["index", "value"];
    truth.is_some().then(|| header.push("truth"));
    fhat.is_some().then(|| header.push("fhat"));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..n {
        let mut rec = vec![i.to_string(), format_f64(value[i])];
        if let Some(t) = truth {
            rec.push(format_f64(t[i]));
        }
        if let Some(f) = fhat {
            rec.push(format_f64(f[i]));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| GebError::invalid(format!("write failed: {e}")))
}

/// Coefficient dump `j,k,value,delta` of a flat dyadic vector, `k` starting at 1.
/// `delta` defaults to 1 everywhere.
pub fn write_coefficients_csv<W: Write>(writer: W, coefficients: &[f64], delta: Option<&[u8]>) -> Result<()> {
    let top = finest_level(coefficients.len())?;
    if delta.is_some_and(|d| d.len() != coefficients.len()) {
        return Err(GebError::invalid("delta must match the coefficients in length"));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["j", "k", "value", "delta"]).map_err(csv_err)?;
    for j in -1..=top {
        for (k, i) in level_range(j).enumerate() {
            let d = delta.map_or(1, |d| d[i]);
            w.write_record([j.to_string(), (k + 1).to_string(), format_f64(coefficients[i]), d.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| GebError::invalid(format!("write failed: {e}")))
}

/// Read a coefficient dump back into flat layout with its indicators.
pub fn read_coefficients_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<u8>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let j: i32 = field(0).parse().map_err(|_| GebError::invalid("bad level"))?;
        let k: usize = field(1).parse().map_err(|_| GebError::invalid("bad position"))?;
        let v = parse_num(field(2), rows.len() + 2)?;
        let d: u8 = field(3).parse().map_err(|_| GebError::invalid("bad delta"))?;
        if !(-1..=30).contains(&j) || k == 0 || k > level_range(j).len() {
            return Err(GebError::invalid(format!("coefficient ({j}, {k}) out of range")));
        }
        rows.push((level_range(j).start + k - 1, v, d));
    }
    let len = rows.len();
    finest_level(len)?;
    let mut coef = vec![f64::NAN; len];
    let mut delta = vec![0u8; len];
    for (i, v, d) in rows {
        if i >= len {
            return Err(GebError::invalid("coefficient dump is not a complete dyadic layout"));
        }
        coef[i] = v;
        delta[i] = d;
    }
    if coef.iter().any(|v| v.is_nan()) {
        return Err(GebError::invalid("coefficient dump has gaps"));
    }
    Ok((coef, delta))
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

/// Per-block table of a risk report followed by a `total` row.
pub fn write_risk_report_csv<W: Write>(writer: W, report: &RiskReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["block", "size", "branch", "empirical_mse", "ideal_risk", "bound_r_p", "bound_r0"])
        .map_err(csv_err)?;
    for b in &report.per_block {
        w.write_record([
            b.block_id.to_string(),
            b.size.to_string(),
            b.branch.as_str().to_string(),
            format_f64(b.empirical_mse),
            format_f64(b.ideal_risk),
            opt(b.bound_r_p),
            opt(b.bound_r0),
        ])
        .map_err(csv_err)?;
    }
    let size: usize = report.per_block.iter().map(|b| b.size).sum();
    w.write_record([
        "total".to_string(),
        size.to_string(),
        String::new(),
        format_f64(report.totals.total_mse),
        format_f64(report.totals.total_ideal),
        String::new(),
        String::new(),
    ])
    .map_err(csv_err)?;
    w.flush().map_err(|e| GebError::invalid(format!("write failed: {e}")))
}

/// Plot data `t,signal,noisy,reconstruction` at `t_i = i/N`.
pub fn write_plot_csv<W: Write>(writer: W, signal: &[f64], noisy: &[f64], reconstruction: &[f64]) -> Result<()> {
    let n = signal.len();
    if noisy.len() != n || reconstruction.len() != n {
        return Err(GebError::invalid("plot columns differ in length"));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "signal", "noisy", "reconstruction"]).map_err(csv_err)?;
    for i in 0..n {
        w.write_record([
            format_f64((i + 1) as f64 / n as f64),
            format_f64(signal[i]),
            format_f64(noisy[i]),
            format_f64(reconstruction[i]),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| GebError::invalid(format!("write failed: {e}")))
}
