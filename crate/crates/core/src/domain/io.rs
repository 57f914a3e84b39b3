//! Text formats for peak lists and spin systems.
//!
//! Both are tab-separated, one record per line, `#` comments ignored, and
//! `-` for a missing value. Peak lines are
//! `peak_id spectrum_id H N [C] [phase]`; spin lines are
//! `system_id N HN CA CB CA_prev CB_prev`. Numbers are written in Rust's
//! shortest round-trip form, so write-then-read is exact.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{Peak, Phase, Role, SpinSystem};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), io::Error>> {
    reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
        }
        Err(e) => Some(Err(e)),
    })
}

fn fields(line: &str) -> Vec<&str> {
    line.split(['\t', ' ']).filter(|s| !s.is_empty()).collect()
}

fn parse_ppm(line: usize, field: &str, what: &str) -> Result<f64, ParseError> {
    let v: f64 = field.parse().map_err(|_| syntax(line, format!("bad {what} value {field:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(syntax(line, format!("non-finite {what} value {field:?}")))
    }
}

fn parse_optional_ppm(line: usize, field: &str, what: &str) -> Result<Option<f64>, ParseError> {
    if field == "-" {
        Ok(None)
    } else {
        parse_ppm(line, field, what).map(Some)
    }
}

pub fn parse_peak_list(text: &str) -> Result<Vec<Peak>, ParseError> {
    read_peak_list(text.as_bytes())
}

pub fn read_peak_list<R: BufRead>(reader: R) -> Result<Vec<Peak>, ParseError> {
    let mut peaks = Vec::new();
    for item in content_lines(reader) {
        let (no, line) = item?;
        let f = fields(&line);
        if !(4..=6).contains(&f.len()) {
            return Err(syntax(no, format!("expected 4 to 6 fields, found {}", f.len())));
        }
        let c = match f.get(4) {
            Some(s) => parse_optional_ppm(no, s, "C")?,
            None => None,
        };
        let phase = match f.get(5) {
            Some(s) => s.parse::<Phase>().map_err(|e| syntax(no, e.to_string()))?,
            None => Phase::Unknown,
        };
        peaks.push(Peak {
            peak_id: f[0].to_string(),
            spectrum_id: f[1].to_string(),
            h: parse_ppm(no, f[2], "H")?,
            n: parse_ppm(no, f[3], "N")?,
            c,
            phase,
        });
    }
    Ok(peaks)
}

pub fn write_peak_list<W: Write>(mut w: W, peaks: &[Peak]) -> io::Result<()> {
    writeln!(w, "# peak_id\tspectrum_id\tH\tN\tC\tphase")?;
    for p in peaks {
        let c = p.c.map_or_else(|| "-".to_string(), |c| c.to_string());
        writeln!(w, "{}\t{}\t{}\t{}\t{}\t{}", p.peak_id, p.spectrum_id, p.h, p.n, c, p.phase.as_i8())?;
    }
    Ok(())
}

pub fn parse_spin_systems(text: &str) -> Result<Vec<SpinSystem>, ParseError> {
    read_spin_systems(text.as_bytes())
}

pub fn read_spin_systems<R: BufRead>(reader: R) -> Result<Vec<SpinSystem>, ParseError> {
    let mut spins = Vec::new();
    for item in content_lines(reader) {
        let (no, line) = item?;
        let f = fields(&line);
        if f.len() != 7 {
            return Err(syntax(no, format!("expected 7 fields, found {}", f.len())));
        }
        let mut shifts = BTreeMap::new();
        for (role, field) in Role::SPIN_COLUMNS.into_iter().zip(&f[1..]) {
            if let Some(v) = parse_optional_ppm(no, field, role.name())? {
                shifts.insert(role, v);
            }
        }
        spins.push(SpinSystem { system_id: f[0].to_string(), shifts });
    }
    Ok(spins)
}

pub fn write_spin_systems<W: Write>(mut w: W, spins: &[SpinSystem]) -> io::Result<()> {
    writeln!(w, "# system_id\tN\tHN\tCA\tCB\tCA_prev\tCB_prev")?;
    for s in spins {
        write!(w, "{}", s.system_id)?;
        for role in Role::SPIN_COLUMNS {
            match s.get(role) {
                Some(v) => write!(w, "\t{v}")?,
                None => write!(w, "\t-")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}
