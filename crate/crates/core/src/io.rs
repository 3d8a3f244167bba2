//! CSV emission and parsing for run artifacts.
//!
//! All files are comma-separated UTF-8 with a header row and LF line endings.
//! Floating values carry 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::engine::{AgentSnapshot, RunRecord, Tallies};
use crate::error::{Error, Result};

pub const PRICES_HEADER: &str = "t,p1,p2,p_avg";
pub const AVALANCHES_HEADER: &str = "t,size";
pub const BOOKS_HEADER: &str = "t,nb1,na1,nt1,pl1,omega1,nb2,na2,nt2,pl2,omega2";
pub const AGENTS_HEADER: &str = "id,character,money,q1,q2,wealth";
pub const TALLIES_HEADER: &str = "group,buy,sell,slots";
pub const PDF_HEADER: &str = "series,center,density,gaussian,qgaussian";

/// Formats with 9 significant digits in plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

pub fn prices_csv(record: &RunRecord) -> String {
    let mut out = format!("{PRICES_HEADER}\n");
    for r in &record.rows {
        let _ = writeln!(out, "{},{},{},{}", r.t, fmt_sig(r.p1), fmt_sig(r.p2), fmt_sig(r.p_avg));
    }
    out
}

pub fn avalanches_csv(record: &RunRecord) -> String {
    let mut out = format!("{AVALANCHES_HEADER}\n");
    for r in &record.rows {
        let _ = writeln!(out, "{},{}", r.t, r.avalanche_size);
    }
    out
}

pub fn books_csv(record: &RunRecord) -> String {
    let mut out = format!("{BOOKS_HEADER}\n");
    for r in &record.rows {
        let _ = write!(out, "{}", r.t);
        for b in &r.books {
            let _ = write!(out, ",{},{},{},{},{}", b.n_b, b.n_a, b.n_t, opt(b.p_last), b.omega);
        }
        out.push('\n');
    }
    out
}

pub fn agents_csv(agents: &[AgentSnapshot]) -> String {
    let mut out = format!("{AGENTS_HEADER}\n");
    for a in agents {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            a.id,
            a.character.as_str(),
            fmt_sig(a.money),
            a.q1,
            a.q2,
            fmt_sig(a.wealth)
        );
    }
    out
}

pub fn tallies_csv(t: &Tallies) -> String {
    let mut out = format!("{TALLIES_HEADER}\n");
    for (name, g) in [("fundamentalist", &t.fundamentalists), ("chartist", &t.chartists)] {
        let _ = writeln!(out, "{name},{},{},{}", g.buy, g.sell, g.slots);
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a headed CSV whose header must equal `header`, returning the data
/// rows split into fields.
fn read_table(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == header => {}
        Some((_, h)) => return Err(parse_err(1, format!("expected header `{header}`, found `{h}`"))),
        None => return Err(parse_err(1, "empty file".into())),
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != width {
            return Err(parse_err(
                i + 1,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, raw: &str, name: &str) -> Result<T> {
    raw.parse::<T>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid {name} `{raw}`"),
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceTable {
    pub t: Vec<u64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p_avg: Vec<f64>,
}

pub fn read_prices(path: &Path) -> Result<PriceTable> {
    let mut out = PriceTable::default();
    for (line, f) in read_table(path, PRICES_HEADER)? {
        out.t.push(field(path, line, &f[0], "t")?);
        out.p1.push(field(path, line, &f[1], "p1")?);
        out.p2.push(field(path, line, &f[2], "p2")?);
        out.p_avg.push(field(path, line, &f[3], "p_avg")?);
    }
    Ok(out)
}

pub fn read_avalanches(path: &Path) -> Result<Vec<usize>> {
    read_table(path, AVALANCHES_HEADER)?
        .into_iter()
        .map(|(line, f)| field(path, line, &f[1], "size"))
        .collect()
}

pub fn read_tallies(path: &Path) -> Result<Tallies> {
    let mut out = Tallies::default();
    for (line, f) in read_table(path, TALLIES_HEADER)? {
        let group = match f[0].as_str() {
            "fundamentalist" => &mut out.fundamentalists,
            "chartist" => &mut out.chartists,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("unknown group `{other}`"),
                })
            }
        };
        group.buy = field(path, line, &f[1], "buy")?;
        group.sell = field(path, line, &f[2], "sell")?;
        group.slots = field(path, line, &f[3], "slots")?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(500.0), "500.000000");
        assert_eq!(fmt_sig(503.3), "503.300000");
        assert_eq!(fmt_sig(240_000.0), "240000.000");
        assert_eq!(fmt_sig(-0.0123456789), "-0.0123456789");
        assert_eq!(fmt_sig(1.0), "1.00000000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.5e12), "1500000000000");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prices.csv");
        std::fs::write(&path, "t,p1,p2,p_avg\n0,1,2,1.5\n1,1,oops,1.5\n").unwrap();
        match read_prices(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&path, "t,p1\n").unwrap();
        assert!(matches!(read_prices(&path), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&path, "t,p1,p2,p_avg\n0,1,2\n").unwrap();
        assert!(matches!(read_prices(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_prices(&dir.path().join("prices.csv")),
            Err(Error::MissingInput(_))
        ));
    }
}
