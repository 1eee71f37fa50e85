//! CSV schemas for sweep and complexity tables.
//!
//! Reals are written with 12 significant digits (`%.12g` style), counts as
//! plain integers. Column order is fixed.

use std::io::{Read, Write};

use crate::driver::{Scheme, ThetaKind};
use crate::error::{Error, Result};
use crate::stats::{ComplexityRow, SizeStats, SweepStats};

pub const SWEEP_COLUMNS: [&str; 12] = [
    "n",
    "scheme",
    "theta_mode",
    "epsilon_frac",
    "bits",
    "instances",
    "degenerate_count",
    "p_good_mean",
    "p_good_std",
    "p_bad_mean",
    "p_bad_std",
    "expected_calls_per_iter",
];

pub const COMPLEXITY_COLUMNS: [&str; 9] = [
    "n",
    "N0",
    "Pc",
    "complexity_truncated",
    "complexity_closed",
    "classical",
    "grover",
    "weighted_complexity",
    "asymptotic_estimate",
];

/// Formats `x` with 12 significant digits, trailing zeros trimmed; fixed
/// notation for decimal exponents in `[-5, 12)`, scientific otherwise.
pub fn fmt_real(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn parse_scheme(s: &str) -> Result<Scheme> {
    match s {
        "l2" => Ok(Scheme::L2),
        "any" => Ok(Scheme::Any),
        _ => Err(Error::Format(format!("unknown scheme {s:?}"))),
    }
}

fn parse_theta(s: &str) -> Result<ThetaKind> {
    match s {
        "ideal" => Ok(ThetaKind::Ideal),
        "epsilon" => Ok(ThetaKind::Epsilon),
        _ => Err(Error::Format(format!("unknown theta mode {s:?}"))),
    }
}

pub fn write_sweep_csv<W: Write>(stats: &SweepStats, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for r in &stats.rows {
        w.write_record([
            r.n.to_string(),
            stats.scheme.name().into(),
            stats.theta.name().into(),
            fmt_real(stats.epsilon_fraction),
            stats.bits.to_string(),
            r.instances.to_string(),
            r.degenerate_count.to_string(),
            fmt_real(r.p_good_mean),
            fmt_real(r.p_good_std),
            fmt_real(r.p_bad_mean),
            fmt_real(r.p_bad_std),
            fmt_real(r.expected_calls_per_iteration()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sweep CSV back; every row must share one configuration.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<SweepStats> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_COLUMNS {
        return Err(Error::Format(format!(
            "sweep header {header:?} does not match {SWEEP_COLUMNS:?}"
        )));
    }
    let mut stats: Option<SweepStats> = None;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "row {}: bad {} {:?}",
                    line + 1,
                    SWEEP_COLUMNS[i],
                    field(i)
                ))
            })
        };
        let int = |i: usize| -> Result<usize> {
            field(i).parse::<usize>().map_err(|_| {
                Error::Format(format!(
                    "row {}: bad {} {:?}",
                    line + 1,
                    SWEEP_COLUMNS[i],
                    field(i)
                ))
            })
        };
        let scheme = parse_scheme(field(1))?;
        let theta = parse_theta(field(2))?;
        let epsilon_fraction = num(3)?;
        let bits = int(4)? as u32;
        let row = SizeStats {
            n: int(0)?,
            instances: int(5)?,
            degenerate_count: int(6)?,
            p_good_mean: num(7)?,
            p_good_std: num(8)?,
            p_bad_mean: num(9)?,
            p_bad_std: num(10)?,
        };
        match &mut stats {
            None => {
                stats = Some(SweepStats {
                    scheme,
                    theta,
                    epsilon_fraction,
                    bits,
                    rows: vec![row],
                })
            }
            Some(s) => {
                if s.scheme != scheme
                    || s.theta != theta
                    || s.epsilon_fraction != epsilon_fraction
                    || s.bits != bits
                {
                    return Err(Error::Format(format!(
                        "row {} mixes sweep configurations",
                        line + 1
                    )));
                }
                if s.row(row.n).is_some() {
                    return Err(Error::Format(format!("duplicate row for n = {}", row.n)));
                }
                s.rows.push(row);
            }
        }
    }
    stats.ok_or_else(|| Error::Format("sweep CSV has no rows".into()))
}

pub fn write_complexity_csv<W: Write>(rows: &[ComplexityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPLEXITY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            fmt_real(r.n0),
            fmt_real(r.pc),
            fmt_real(r.complexity),
            fmt_real(r.complexity_closed),
            fmt_real(r.classical),
            fmt_real(r.grover),
            fmt_real(r.weighted_complexity),
            fmt_real(r.asymptotic_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}
