use super::SimRecord;
use crate::{Error, Result};
use std::fs;
use std::path::Path;

pub const CSV_HEADER: &str = "snr_db,ser,avg_visited_nodes,avg_radius_restarts,avg_wall_ms,trials,symbol_errors,symbols_total";

/// Formats `x` with 6 significant digits in the style of C's `%g`.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_csv(records: &[SimRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            format_g(r.snr_db),
            format_g(r.ser),
            format_g(r.avg_visited_nodes),
            format_g(r.avg_radius_restarts),
            format_g(r.avg_wall_ms),
            r.trials,
            r.symbol_errors,
            r.symbols_total
        ));
    }
    out
}

pub fn write_csv(records: &[SimRecord], path: &Path) -> Result<()> {
    fs::write(path, render_csv(records)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_csv(text: &str) -> Result<Vec<SimRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::Config(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Config(format!("malformed CSV row {}: '{line}'", i + 1));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 8 {
                return Err(bad());
            }
            let real = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
            let count = |k: usize| f[k].parse::<u64>().map_err(|_| bad());
            Ok(SimRecord {
                snr_db: real(0)?,
                ser: real(1)?,
                avg_visited_nodes: real(2)?,
                avg_radius_restarts: real(3)?,
                avg_wall_ms: real(4)?,
                trials: count(5)?,
                symbol_errors: count(6)?,
                symbols_total: count(7)?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<SimRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}
